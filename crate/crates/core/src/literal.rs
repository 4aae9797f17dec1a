//! Literal similarity: exact dates, numbers within a relative tolerance,
//! and strings through a pluggable provider above a threshold.
//!
//! The finished [`LiteralSimTable`] is the set of fixed input scores for the
//! alignment rules; it never changes during a run.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::kg::{EntityId, KnowledgeGraph};
use crate::value::{Date, LiteralValue};
use crate::FxMap;

/// Relative tolerance for number equality.
pub const NUMBER_REL_TOL: f64 = 1e-9;

pub fn match_dates(a: &Date, b: &Date) -> f64 {
    if a.same_instant(b) {
        1.0
    } else {
        0.0
    }
}

pub fn match_numbers(a: f64, b: f64) -> f64 {
    if !a.is_finite() || !b.is_finite() {
        return 0.0;
    }
    let diff = if a > b { a - b } else { b - a };
    let scale = abs(a).max(abs(b));
    if diff <= NUMBER_REL_TOL * scale {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

/// Case-folds and collapses whitespace runs to single spaces.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

type Gram = [char; 3];

/// Sorted character 3-gram multiset of the normalized string. Strings
/// shorter than three characters form a single padded gram.
pub fn trigrams(s: &str) -> Vec<Gram> {
    let chars: Vec<char> = normalize(s).chars().collect();
    let mut grams: Vec<Gram> = if chars.len() < 3 {
        if chars.is_empty() {
            Vec::new()
        } else {
            let mut g = ['\0'; 3];
            g[..chars.len()].copy_from_slice(&chars);
            alloc::vec![g]
        }
    } else {
        chars.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
    };
    grams.sort_unstable();
    grams
}

/// Multiset Jaccard `Σ min / Σ max` of two sorted gram lists.
pub fn gram_jaccard(a: &[Gram], b: &[Gram]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    gram_jaccard(&trigrams(a), &trigrams(b))
}

/// Similarity of two typed literals; different types never match.
pub fn literal_similarity(a: &LiteralValue, b: &LiteralValue) -> f64 {
    match (a, b) {
        (LiteralValue::Date(x), LiteralValue::Date(y)) => match_dates(x, y),
        (LiteralValue::Number(x), LiteralValue::Number(y)) => match_numbers(*x, *y),
        (LiteralValue::String(x), LiteralValue::String(y)) => trigram_jaccard(x, y),
        _ => 0.0,
    }
}

/// Source of string similarities.
#[derive(Debug, Clone)]
pub enum StringProvider {
    /// Character 3-gram Jaccard over normalized strings.
    BuiltinTrigram,
    /// Rows of `(literal1, literal2, score)` produced offline.
    Precomputed { name: String, rows: Vec<(String, String, f64)> },
}

impl StringProvider {
    pub fn name(&self) -> &str {
        match self {
            StringProvider::BuiltinTrigram => "builtin_trigram",
            StringProvider::Precomputed { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LiteralSimTable {
    scores: FxMap<(EntityId, EntityId), f64>,
    provider_name: String,
    theta_s: f64,
    skipped_rows: usize,
}

impl LiteralSimTable {
    pub fn empty(theta_s: f64) -> Self {
        LiteralSimTable {
            provider_name: "none".into(),
            theta_s,
            ..Default::default()
        }
    }

    /// Score of `(kg1 literal, kg2 literal)`; 0 when absent.
    pub fn get(&self, a: EntityId, b: EntityId) -> f64 {
        self.scores.get(&(a, b)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn provider_name(&self) -> &str {
        &self.provider_name
    }

    pub fn theta_s(&self) -> f64 {
        self.theta_s
    }

    /// Precomputed rows that referenced unknown literals or bad scores.
    pub fn skipped_rows(&self) -> usize {
        self.skipped_rows
    }

    /// All pairs sorted by ids.
    pub fn pairs(&self) -> Vec<(EntityId, EntityId, f64)> {
        let mut v: Vec<_> = self.scores.iter().map(|(&(a, b), &s)| (a, b, s)).collect();
        v.sort_by_key(|x| (x.0, x.1));
        v
    }

    pub fn insert(&mut self, a: EntityId, b: EntityId, score: f64) {
        let slot = self.scores.entry((a, b)).or_insert(0.0);
        *slot = slot.max(score);
    }
}

/// String literals of a KG as `(id, text)`.
pub fn string_literals(kg: &KnowledgeGraph) -> Vec<(EntityId, &str)> {
    kg.entity_ids()
        .filter_map(|id| {
            kg.entity(id)
                .literal
                .as_ref()
                .and_then(LiteralValue::as_str)
                .map(|s| (id, s))
        })
        .collect()
}

/// Top-`top_k` string matches per KG1 string with score `>= theta_s`.
pub fn build_string_table(
    kg1_strings: &[(EntityId, &str)],
    kg2_strings: &[(EntityId, &str)],
    provider: &StringProvider,
    theta_s: f64,
    top_k: usize,
) -> LiteralSimTable {
    let mut table = LiteralSimTable {
        provider_name: provider.name().into(),
        theta_s,
        ..Default::default()
    };
    match provider {
        StringProvider::BuiltinTrigram => {
            for (a, matches) in trigram_matches(kg1_strings, kg2_strings, theta_s, top_k) {
                for (b, s) in matches {
                    table.insert(a, b, s);
                }
            }
        }
        StringProvider::Precomputed { rows, .. } => {
            let left: FxMap<&str, EntityId> = kg1_strings.iter().map(|&(id, s)| (s, id)).collect();
            let right: FxMap<&str, EntityId> = kg2_strings.iter().map(|&(id, s)| (s, id)).collect();
            let mut per_left: FxMap<EntityId, Vec<(EntityId, f64)>> = FxMap::default();
            for (l1, l2, score) in rows {
                let resolved = (
                    left.get(crate::value::strip_literal_syntax(l1)),
                    right.get(crate::value::strip_literal_syntax(l2)),
                );
                match resolved {
                    (Some(&a), Some(&b)) if (0.0..=1.0).contains(score) => {
                        if *score >= theta_s && *score > 0.0 {
                            per_left.entry(a).or_default().push((b, *score));
                        }
                    }
                    _ => table.skipped_rows += 1,
                }
            }
            for (a, mut matches) in per_left {
                matches.sort_by(|x, y| crate::value::cmp_f64(y.1, x.1).then(x.0.cmp(&y.0)));
                matches.truncate(top_k);
                for (b, s) in matches {
                    table.insert(a, b, s);
                }
            }
        }
    }
    table
}

fn trigram_matches(
    left: &[(EntityId, &str)],
    right: &[(EntityId, &str)],
    theta_s: f64,
    top_k: usize,
) -> Vec<(EntityId, Vec<(EntityId, f64)>)> {
    let right_grams: Vec<Vec<Gram>> = right.iter().map(|(_, s)| trigrams(s)).collect();
    let mut index: FxMap<Gram, Vec<u32>> = FxMap::default();
    for (i, grams) in right_grams.iter().enumerate() {
        let mut distinct = grams.clone();
        distinct.dedup();
        for g in distinct {
            index.entry(g).or_default().push(i as u32);
        }
    }
    let one = |&(a, text): &(EntityId, &str)| -> (EntityId, Vec<(EntityId, f64)>) {
        let grams = trigrams(text);
        let mut distinct = grams.clone();
        distinct.dedup();
        let mut candidates: Vec<u32> = distinct
            .iter()
            .filter_map(|g| index.get(g))
            .flatten()
            .copied()
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let mut matches: Vec<(EntityId, f64)> = candidates
            .into_iter()
            .filter_map(|j| {
                let other = &right_grams[j as usize];
                let (lo, hi) = if grams.len() < other.len() {
                    (grams.len(), other.len())
                } else {
                    (other.len(), grams.len())
                };
                // Jaccard is at most |smaller| / |larger|
                if (lo as f64) < theta_s * hi as f64 {
                    return None;
                }
                let s = gram_jaccard(&grams, other);
                (s >= theta_s && s > 0.0).then_some((right[j as usize].0, s))
            })
            .collect();
        matches.sort_by(|x, y| crate::value::cmp_f64(y.1, x.1).then(x.0.cmp(&y.0)));
        matches.truncate(top_k);
        (a, matches)
    };
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        left.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        left.iter().map(one).collect()
    }
}

/// `(year, month, day)` bucket for date matching.
type DayKey = (i32, u8, u8);

/// Full literal table for two KGs: exact date and number matches at 1,
/// plus string matches from `provider`.
pub fn build_literal_table(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    provider: &StringProvider,
    theta_s: f64,
    top_k: usize,
) -> LiteralSimTable {
    let mut table = build_string_table(
        &string_literals(kg1),
        &string_literals(kg2),
        provider,
        theta_s,
        top_k,
    );

    let mut dates2: FxMap<DayKey, Vec<(EntityId, &Date)>> = FxMap::default();
    let mut numbers2: Vec<(f64, EntityId)> = Vec::new();
    for id in kg2.entity_ids() {
        match &kg2.entity(id).literal {
            Some(LiteralValue::Date(d)) => dates2.entry((d.year, d.month, d.day)).or_default().push((id, d)),
            Some(LiteralValue::Number(n)) => numbers2.push((*n, id)),
            _ => {}
        }
    }
    numbers2.sort_by(|a, b| crate::value::cmp_f64(a.0, b.0).then(a.1.cmp(&b.1)));

    for id in kg1.entity_ids() {
        match &kg1.entity(id).literal {
            Some(LiteralValue::Date(d)) => {
                for &(other, od) in dates2.get(&(d.year, d.month, d.day)).into_iter().flatten() {
                    if match_dates(d, od) == 1.0 {
                        table.insert(id, other, 1.0);
                    }
                }
            }
            Some(LiteralValue::Number(n)) => {
                let window = 2.0 * NUMBER_REL_TOL * abs(*n);
                let start = numbers2.partition_point(|(x, _)| *x < *n - window);
                for &(x, other) in numbers2[start..].iter().take_while(|(x, _)| *x <= *n + window) {
                    if match_numbers(*n, x) == 1.0 {
                        table.insert(id, other, 1.0);
                    }
                }
            }
            _ => {}
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Term;

    fn date(s: &str) -> Date {
        Date::parse(s).unwrap()
    }

    #[test]
    fn dates_exact() {
        assert_eq!(match_dates(&date("1986-03-28"), &date("1986-03-28")), 1.0);
        assert_eq!(match_dates(&date("1986-03-28"), &date("1986-03-29")), 0.0);
        let d = LiteralValue::Date(date("1986-03-28"));
        let s = LiteralValue::String("1986-03-28".into());
        assert_eq!(literal_similarity(&d, &s), 0.0);
    }

    #[test]
    fn numbers_relative() {
        assert_eq!(match_numbers(1.0, 1.0 + 1e-12), 1.0);
        assert_eq!(match_numbers(1.0, 1.1), 0.0);
        assert_eq!(match_numbers(0.0, 0.0), 1.0);
        assert_eq!(match_numbers(0.0, 1e-300), 0.0);
        assert_eq!(match_numbers(f64::NAN, f64::NAN), 0.0);
        assert_eq!(match_numbers(f64::INFINITY, f64::INFINITY), 0.0);
        assert_eq!(match_numbers(1e20, 1e20 + 1e10), 1.0);
    }

    #[test]
    fn trigram_cases() {
        assert_eq!(trigram_jaccard("Lady Gaga", "Lady Gaga"), 1.0);
        assert_eq!(trigram_jaccard("Lady Gaga", "lady   gaga"), 1.0);
        assert!((trigram_jaccard("abcd", "abce") - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(trigram_jaccard("ab", "ab"), 1.0);
        assert_eq!(trigram_jaccard("ab", "abc"), 0.0);
        assert_eq!(trigram_jaccard("", ""), 0.0);
        // multiset: repeated grams count
        assert!((trigram_jaccard("aaaa", "aaa") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn string_table_threshold_and_topk() {
        let l = [(EntityId(0), "abcd"), (EntityId(1), "Lady Gaga")];
        let r = [
            (EntityId(10), "abce"),
            (EntityId(11), "lady gaga"),
            (EntityId(12), "Lady Gaga!"),
        ];
        let t = build_string_table(&l, &r, &StringProvider::BuiltinTrigram, 0.7, 10);
        assert_eq!(t.get(EntityId(0), EntityId(10)), 0.0);
        assert_eq!(t.get(EntityId(1), EntityId(11)), 1.0);
        let s = t.get(EntityId(1), EntityId(12));
        assert!((0.7..1.0).contains(&s), "{s}");
        let t1 = build_string_table(&l, &r, &StringProvider::BuiltinTrigram, 0.7, 1);
        assert_eq!(t1.len(), 1);
        assert_eq!(t1.provider_name(), "builtin_trigram");
    }

    #[test]
    fn precomputed_rows_resolve_and_skip() {
        let l = [(EntityId(0), "Paris"), (EntityId(1), "Rome")];
        let r = [(EntityId(5), "Paris, France"), (EntityId(6), "Roma")];
        let provider = StringProvider::Precomputed {
            name: "sidecar".into(),
            rows: alloc::vec![
                ("Paris".into(), "Paris, France".into(), 0.91),
                ("\"Rome\"".into(), "Roma".into(), 0.88),
                ("Rome".into(), "Paris, France".into(), 0.2),
                ("Berlin".into(), "Roma".into(), 0.9),
                ("Rome".into(), "Roma".into(), 1.5),
            ],
        };
        let t = build_string_table(&l, &r, &provider, 0.7, 10);
        assert_eq!(t.get(EntityId(0), EntityId(5)), 0.91);
        assert_eq!(t.get(EntityId(1), EntityId(6)), 0.88);
        assert_eq!(t.get(EntityId(1), EntityId(5)), 0.0);
        assert_eq!(t.skipped_rows(), 2);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn full_table_types() {
        let mut kg1 = KnowledgeGraph::new();
        let mut kg2 = KnowledgeGraph::new();
        for (kg, name, born, h) in [
            (&mut kg1, "Lady Gaga", "1986-03-28", "1.55"),
            (&mut kg2, "lady gaga", "1986-03-28T00:00:00", "1.5500000000001"),
        ] {
            kg.add_triple("x", "name", Term::Literal(LiteralValue::infer(name)));
            kg.add_triple("x", "born", Term::Literal(LiteralValue::infer(born)));
            kg.add_triple("x", "height", Term::Literal(LiteralValue::infer(h)));
            kg.add_triple("x", "other", Term::Literal(LiteralValue::infer("1986-03-29")));
        }
        let t = build_literal_table(&kg1, &kg2, &StringProvider::BuiltinTrigram, 0.7, 10);
        let lit = |kg: &KnowledgeGraph, raw: &str| kg.lookup_literal(&LiteralValue::infer(raw)).unwrap();
        assert_eq!(t.get(lit(&kg1, "Lady Gaga"), lit(&kg2, "lady gaga")), 1.0);
        assert_eq!(t.get(lit(&kg1, "1986-03-28"), lit(&kg2, "1986-03-28T00:00:00")), 1.0);
        assert_eq!(t.get(lit(&kg1, "1.55"), lit(&kg2, "1.5500000000001")), 1.0);
        assert_eq!(t.get(lit(&kg1, "1986-03-29"), lit(&kg2, "1986-03-29")), 1.0);
        assert_eq!(t.get(lit(&kg1, "1986-03-28"), lit(&kg2, "1986-03-29")), 0.0);
        assert_eq!(t.len(), 4);
    }
}
