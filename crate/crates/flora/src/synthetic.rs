//! Seeded synthetic alignment benchmarks.
//!
//! KG1 is a random multigraph with uniquely valued attributes; KG2 is the
//! same graph under scrambled entity and relation labels. Optional noise
//! drops triples independently on each side and injects dangling entities
//! that exist on one side only.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use flora_core::kg::{KnowledgeGraph, Term};
use flora_core::literal::trigram_jaccard;
use flora_core::value::LiteralValue;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub entities: usize,
    pub relations: usize,
    pub relational_triples: usize,
    pub attribute_triples: usize,
    /// Probability that a triple is left out of a side, per side.
    pub drop_fraction: f64,
    /// Extra one-sided entities per side, as a fraction of `entities`.
    pub dangling_fraction: f64,
    /// Keep dangling entities of the two sides from sharing any
    /// `(relation, neighbour)` fact.
    pub isolate_dangling: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            entities: 200,
            relations: 12,
            relational_triples: 1000,
            attribute_triples: 300,
            drop_fraction: 0.0,
            dangling_fraction: 0.0,
            isolate_dangling: true,
            seed: 7,
        }
    }
}

pub type Row = (String, String, String);

#[derive(Debug, Clone, Default)]
pub struct SyntheticPair {
    pub rel1: Vec<Row>,
    pub attr1: Vec<Row>,
    pub rel2: Vec<Row>,
    pub attr2: Vec<Row>,
    /// Counterparts of shared entities that occur in both KGs.
    pub gold: Vec<(String, String)>,
    pub dangling1: Vec<String>,
    pub dangling2: Vec<String>,
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ren", "tas", "vo", "zu", "bel", "dor", "fin", "gar", "hul", "is", "jor", "kel", "lum", "mar",
    "nob", "or", "pex", "quin", "ros", "sil", "tor", "ul", "vek", "wim", "yar", "zen", "ath", "bri", "cor", "dun",
    "eth", "fal", "gil", "hor", "ith", "jun", "kra",
];

struct Literals {
    rng: ChaCha8Rng,
    names: Vec<String>,
    used: HashSet<String>,
}

impl Literals {
    fn name(&mut self) -> String {
        loop {
            let words = self.rng.gen_range(2..=3);
            let mut parts = Vec::new();
            for _ in 0..words {
                let n = self.rng.gen_range(2..=3);
                let w: String = (0..n).map(|_| *SYLLABLES.choose(&mut self.rng).unwrap()).collect();
                let mut c = w.chars();
                let first = c.next().unwrap().to_uppercase().collect::<String>();
                parts.push(first + c.as_str());
            }
            let s = parts.join(" ");
            // far from every earlier name, so string matches are unambiguous
            if !self.used.contains(&s) && self.names.iter().all(|o| trigram_jaccard(o, &s) < 0.5) {
                self.used.insert(s.clone());
                self.names.push(s.clone());
                return format!("\"{s}\"");
            }
        }
    }

    fn date(&mut self) -> String {
        loop {
            let s = format!(
                "{:04}-{:02}-{:02}",
                self.rng.gen_range(1700..2020),
                self.rng.gen_range(1..=12),
                self.rng.gen_range(1..=28)
            );
            if self.used.insert(s.clone()) {
                return format!("\"{s}\"");
            }
        }
    }

    fn number(&mut self) -> String {
        loop {
            let s = self.rng.gen_range(1_000..10_000_000u32).to_string();
            if self.used.insert(s.clone()) {
                return format!("\"{s}\"");
            }
        }
    }

    /// One value for attribute `a` (0: name, 1: date, 2: number).
    fn value(&mut self, a: usize) -> String {
        match a {
            0 => self.name(),
            1 => self.date(),
            _ => self.number(),
        }
    }
}

const ATTRIBUTES: [&str; 3] = ["name", "inception", "population"];
const ATTRIBUTES2: [&str; 3] = ["P1476", "P571", "P1082"];

/// Up to `count` distinct random `(head, relation, tail)` edges with
/// `tail` in `0..n` and `h != t`. Heads come from `heads` when given.
/// Edges whose `(relation, tail)` is in `avoid` are rejected.
fn random_edges(
    rng: &mut ChaCha8Rng,
    n: usize,
    heads: &[usize],
    relations: usize,
    count: usize,
    avoid: &HashSet<(usize, usize)>,
) -> Vec<(usize, usize, usize)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && guard < count * 100 {
        guard += 1;
        let h = if heads.is_empty() {
            rng.gen_range(0..n)
        } else {
            *heads.choose(rng).unwrap()
        };
        let t = rng.gen_range(0..n);
        let r = rng.gen_range(0..relations);
        if h != t && !avoid.contains(&(r, t)) && seen.insert((h, r, t)) {
            out.push((h, r, t));
        }
    }
    out
}

impl SyntheticSpec {
    pub fn generate(&self) -> SyntheticPair {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut lits = Literals {
            rng: ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15),
            names: Vec::new(),
            used: HashSet::new(),
        };
        let n = self.entities;
        let n_dangling = (self.dangling_fraction * n as f64).round() as usize;

        // labels: KG1 e{i}, KG2 Q{shuffled}, dangling get fresh labels on their side
        let mut q_ids: Vec<usize> = (0..n + n_dangling).map(|i| 1000 + i * 7).collect();
        q_ids.shuffle(&mut rng);
        let label1 = |i: usize| format!("e{i}");
        let label2: Vec<String> = q_ids.iter().map(|q| format!("Q{q}")).collect();
        let mut rel_perm: Vec<usize> = (0..self.relations).collect();
        rel_perm.shuffle(&mut rng);
        let rel1 = |r: usize| format!("r{r}");
        let rel2 = |r: usize| format!("P{}", 100 + rel_perm[r]);

        let edges = random_edges(&mut rng, n, &[], self.relations, self.relational_triples, &HashSet::new());
        let mut attrs = Vec::with_capacity(self.attribute_triples);
        for _ in 0..self.attribute_triples {
            let e = rng.gen_range(0..n);
            let a = rng.gen_range(0..ATTRIBUTES.len());
            attrs.push((e, a, lits.value(a)));
        }

        let mut pair = SyntheticPair::default();
        let keep = |rng: &mut ChaCha8Rng| self.drop_fraction <= 0.0 || rng.gen::<f64>() >= self.drop_fraction;
        for &(h, r, t) in &edges {
            if keep(&mut rng) {
                pair.rel1.push((label1(h), rel1(r), label1(t)));
            }
            if keep(&mut rng) {
                pair.rel2.push((label2[h].clone(), rel2(r), label2[t].clone()));
            }
        }
        for (e, a, v) in &attrs {
            if keep(&mut rng) {
                pair.attr1.push((label1(*e), ATTRIBUTES[*a].into(), v.clone()));
            }
            if keep(&mut rng) {
                pair.attr2.push((label2[*e].clone(), ATTRIBUTES2[*a].into(), v.clone()));
            }
        }

        if n_dangling > 0 {
            let per = self.relational_triples / n.max(1);
            let attr_per = (self.attribute_triples as f64 / n.max(1) as f64).ceil() as usize;
            // KG1 dangling: e{n..}; KG2 dangling: the unused Q labels
            let mut used: HashSet<(usize, usize)> = HashSet::new();
            for side in 0..2 {
                let avoid = if self.isolate_dangling { used.clone() } else { HashSet::new() };
                for i in 0..n_dangling {
                    let label = if side == 0 {
                        label1(n + i)
                    } else {
                        label2[n + i].clone()
                    };
                    for (_, r, t) in random_edges(&mut rng, n, &[n + i], self.relations, per.max(1), &avoid) {
                        used.insert((r, t));
                        if side == 0 {
                            pair.rel1.push((label.clone(), rel1(r), label1(t)));
                        } else {
                            pair.rel2.push((label.clone(), rel2(r), label2[t].clone()));
                        }
                    }
                    for _ in 0..attr_per {
                        let a = rng.gen_range(0..ATTRIBUTES.len());
                        let v = lits.value(a);
                        if side == 0 {
                            pair.attr1.push((label.clone(), ATTRIBUTES[a].into(), v));
                        } else {
                            pair.attr2.push((label.clone(), ATTRIBUTES2[a].into(), v));
                        }
                    }
                    if side == 0 {
                        pair.dangling1.push(label);
                    } else {
                        pair.dangling2.push(label);
                    }
                }
            }
        }

        let present = |rows: &[&[Row]]| -> HashSet<String> {
            rows.iter()
                .flat_map(|rs| rs.iter())
                .flat_map(|(h, _, t)| [h.clone(), t.clone()])
                .collect()
        };
        let in1 = present(&[&pair.rel1, &pair.attr1]);
        let in2 = present(&[&pair.rel2, &pair.attr2]);
        pair.gold = (0..n)
            .filter(|&i| in1.contains(&label1(i)) && in2.contains(&label2[i]))
            .map(|i| (label1(i), label2[i].clone()))
            .collect();
        pair
    }
}

fn fill(kg: &mut KnowledgeGraph, rel: &[Row], attr: &[Row]) {
    for (h, r, t) in rel {
        kg.add_triple(h, r, Term::Entity(t));
    }
    for (h, r, t) in attr {
        kg.add_triple(h, r, Term::Literal(LiteralValue::infer(t)));
    }
}

fn write_rows(path: &Path, rows: &[Row]) -> io::Result<()> {
    let mut s = String::new();
    for (h, r, t) in rows {
        s.push_str(&format!("{h}\t{r}\t{t}\n"));
    }
    fs::write(path, s)
}

impl SyntheticPair {
    pub fn build(&self) -> (KnowledgeGraph, KnowledgeGraph) {
        let mut kg1 = KnowledgeGraph::new();
        let mut kg2 = KnowledgeGraph::new();
        fill(&mut kg1, &self.rel1, &self.attr1);
        fill(&mut kg2, &self.rel2, &self.attr2);
        (kg1, kg2)
    }

    /// Writes the OpenEA layout (`rel_triples_1`, ..., `ent_links`).
    pub fn write_openea(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_rows(&dir.join("rel_triples_1"), &self.rel1)?;
        write_rows(&dir.join("rel_triples_2"), &self.rel2)?;
        write_rows(&dir.join("attr_triples_1"), &self.attr1)?;
        write_rows(&dir.join("attr_triples_2"), &self.attr2)?;
        let mut s = String::new();
        for (a, b) in &self.gold {
            s.push_str(&format!("{a}\t{b}\n"));
        }
        fs::write(dir.join("ent_links"), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let spec = SyntheticSpec::default();
        let a = spec.generate();
        assert_eq!(a.rel1.len(), 1000);
        assert_eq!(a.attr1.len(), 300);
        assert_eq!(a.rel2.len(), 1000);
        let b = spec.generate();
        assert_eq!(a.rel2, b.rel2);
        assert_eq!(a.gold, b.gold);
        let (kg1, kg2) = a.build();
        assert_eq!(kg1.triple_count(), kg2.triple_count());
    }

    #[test]
    fn dangling_are_one_sided() {
        let spec = SyntheticSpec {
            dangling_fraction: 0.2,
            ..SyntheticSpec::default()
        };
        let p = spec.generate();
        assert_eq!(p.dangling1.len(), 40);
        assert_eq!(p.dangling2.len(), 40);
        let (kg1, kg2) = p.build();
        for d in &p.dangling1 {
            assert!(kg1.lookup_entity(d).is_some() && kg2.lookup_entity(d).is_none());
        }
        assert!(p.gold.iter().all(|(a, _)| !p.dangling1.contains(a)));
    }
}
