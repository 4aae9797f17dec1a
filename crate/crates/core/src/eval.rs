//! Alignment quality against gold links.
//!
//! Classification metrics use set semantics over label pairs. Ranking
//! metrics give tied candidates the best rank of their tie block, and only
//! score sources that have a gold target.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kg::{EntityKind, KnowledgeGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Classification {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// Harmonic mean of precision and recall, computed from counts so that
/// equal P and R give exactly that value.
fn f1(correct: usize, predicted: usize, gold: usize) -> f64 {
    if correct == 0 {
        0.0
    } else {
        2.0 * correct as f64 / (predicted + gold) as f64
    }
}

/// Precision, recall and F1 of `predicted` against `gold`. Duplicate pairs
/// count once.
pub fn classification_metrics<S: AsRef<str>>(predicted: &[(S, S)], gold: &[(S, S)]) -> Result<Classification> {
    let gold: BTreeSet<(&str, &str)> = gold.iter().map(|(a, b)| (a.as_ref(), b.as_ref())).collect();
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let pred: BTreeSet<(&str, &str)> = predicted.iter().map(|(a, b)| (a.as_ref(), b.as_ref())).collect();
    let correct = pred.intersection(&gold).count();
    let precision = if pred.is_empty() {
        0.0
    } else {
        correct as f64 / pred.len() as f64
    };
    let recall = correct as f64 / gold.len() as f64;
    Ok(Classification {
        precision,
        recall,
        f1: f1(correct, pred.len(), gold.len()),
        correct,
        predicted: pred.len(),
        gold: gold.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ranking {
    /// `(K, Hit@K)` in the order the cutoffs were given.
    pub hit_at: Vec<(usize, f64)>,
    pub mrr: f64,
    /// Sources scored (those with a gold target).
    pub sources: usize,
    /// Ranked sources without a gold target.
    pub excluded: usize,
}

impl Ranking {
    pub fn hit(&self, k: usize) -> Option<f64> {
        self.hit_at.iter().find(|x| x.0 == k).map(|x| x.1)
    }
}

/// Optimistic 1-based rank of `target` in a score list, or `None`.
fn rank_of<S: AsRef<str>>(list: &[(S, f64)], target: &str) -> Option<usize> {
    let score = list.iter().find(|(c, _)| c.as_ref() == target)?.1;
    Some(1 + list.iter().filter(|(_, s)| *s > score).count())
}

/// Hit@K and MRR. `lists` maps each source to its scored candidates; a
/// gold source without a list counts as a miss.
pub fn ranking_metrics<S: AsRef<str> + Ord>(
    lists: &BTreeMap<S, Vec<(S, f64)>>,
    gold: &[(S, S)],
    ks: &[usize],
) -> Result<Ranking> {
    let targets: BTreeMap<&str, &str> = gold.iter().map(|(a, b)| (a.as_ref(), b.as_ref())).collect();
    if targets.is_empty() {
        return Err(Error::EmptyGold);
    }
    let excluded = lists.keys().filter(|s| !targets.contains_key(s.as_ref())).count();
    let by_source: BTreeMap<&str, &Vec<(S, f64)>> = lists.iter().map(|(k, v)| (k.as_ref(), v)).collect();
    let ranks: Vec<Option<usize>> = targets
        .iter()
        .map(|(src, tgt)| by_source.get(src).and_then(|l| rank_of(l, tgt)))
        .collect();
    let n = ranks.len() as f64;
    let mrr = ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / n;
    let hit_at = ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count() as f64 / n))
        .collect();
    Ok(Ranking {
        hit_at,
        mrr,
        sources: ranks.len(),
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Category {
    Class,
    Relation,
    Instance,
    Uncategorized,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Class => "class",
            Category::Relation => "relation",
            Category::Instance => "instance",
            Category::Uncategorized => "uncategorized",
        }
    }
}

pub fn categorize(label: &str, kg: &KnowledgeGraph) -> Category {
    if kg.lookup_relation(label).is_some() {
        return Category::Relation;
    }
    match kg.lookup_entity(label) {
        Some(e) if kg.entity(e).kind == EntityKind::Class => Category::Class,
        Some(_) => Category::Instance,
        None => Category::Uncategorized,
    }
}

/// Classification metrics per category of the KG1 label. Categories with
/// no gold pairs are omitted.
pub fn per_category<S: AsRef<str>>(
    predicted: &[(S, S)],
    gold: &[(S, S)],
    kg1: &KnowledgeGraph,
) -> BTreeMap<Category, Classification> {
    let split = |pairs: &[(S, S)]| {
        let mut m: BTreeMap<Category, Vec<(String, String)>> = BTreeMap::new();
        for (a, b) in pairs {
            m.entry(categorize(a.as_ref(), kg1))
                .or_default()
                .push((a.as_ref().into(), b.as_ref().into()));
        }
        m
    };
    let pred = split(predicted);
    let gold = split(gold);
    gold.iter()
        .filter_map(|(c, g)| {
            let p = pred.get(c).map_or(&[][..], Vec::as_slice);
            classification_metrics(p, g).ok().map(|m| (*c, m))
        })
        .collect()
}
