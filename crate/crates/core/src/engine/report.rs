use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{Config, EntityEntry, MatchStore, Origin};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::value::cmp_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RelOp {
    /// KG1 relation is a subrelation of the KG2 relation.
    Sub,
    Sup,
    Eqv,
}

impl RelOp {
    pub fn as_str(self) -> &'static str {
        match self {
            RelOp::Sub => "SUB",
            RelOp::Sup => "SUP",
            RelOp::Eqv => "EQV",
        }
    }

    pub fn parse(s: &str) -> Option<RelOp> {
        match s {
            "SUB" => Some(RelOp::Sub),
            "SUP" => Some(RelOp::Sup),
            "EQV" => Some(RelOp::Eqv),
            _ => None,
        }
    }

    fn classify(score12: f64, score21: f64, threshold: f64) -> Option<RelOp> {
        match (score12 >= threshold, score21 >= threshold) {
            (true, true) => Some(RelOp::Eqv),
            (true, false) => Some(RelOp::Sub),
            (false, true) => Some(RelOp::Sup),
            (false, false) => None,
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntityMatch {
    pub left: EntityId,
    pub right: EntityId,
    pub label1: String,
    pub label2: String,
    pub score: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelationMatch {
    pub left: RelationId,
    pub right: RelationId,
    pub label1: String,
    pub label2: String,
    /// KG1 relation within the KG2 relation.
    pub score12: f64,
    /// KG2 relation within the KG1 relation.
    pub score21: f64,
    pub op: Option<RelOp>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationStats {
    pub iteration: usize,
    pub entity_delta: f64,
    pub relation_delta: f64,
    /// Sum of all stored entity scores.
    pub total_entity_score: f64,
    /// Sum over entries retained by the maximum assignment.
    pub retained_entity_score: f64,
}

impl IterationStats {
    pub fn delta(&self) -> f64 {
        self.entity_delta + self.relation_delta
    }
}

/// Result of an alignment run. Entity matches are one-to-one; the full
/// store stays available for ranking and explanations.
#[derive(Debug, Clone)]
pub struct AlignmentReport {
    entities: Vec<EntityMatch>,
    relations: Vec<RelationMatch>,
    config: Config,
    iterations: Vec<IterationStats>,
    converged: bool,
    store: MatchStore,
}

impl AlignmentReport {
    pub(crate) fn build(
        kg1: &KnowledgeGraph,
        kg2: &KnowledgeGraph,
        store: MatchStore,
        config: Config,
        iterations: Vec<IterationStats>,
        converged: bool,
    ) -> Self {
        let entities = one_to_one(kg1, kg2, &store, config.theta_e);
        let mut relations: Vec<RelationMatch> = store
            .relation_pairs()
            .into_iter()
            .filter(|(r1, _)| !r1.is_inverse())
            .map(|(r1, r2)| {
                let (s12, s21) = (store.sub12(r1, r2), store.sub21(r2, r1));
                RelationMatch {
                    left: r1,
                    right: r2,
                    label1: kg1.relation_label(r1).into(),
                    label2: kg2.relation_label(r2).into(),
                    score12: s12,
                    score21: s21,
                    op: RelOp::classify(s12, s21, config.rel_report_threshold),
                }
            })
            .collect();
        relations.sort_by(|a, b| a.label1.cmp(&b.label1).then_with(|| a.label2.cmp(&b.label2)));
        AlignmentReport {
            entities,
            relations,
            config,
            iterations,
            converged,
            store,
        }
    }

    /// Reported entity matches, by descending score then labels.
    pub fn entity_matches(&self) -> &[EntityMatch] {
        &self.entities
    }

    /// Every relation pair with a positive score in some direction, by labels.
    pub fn relation_matches(&self) -> &[RelationMatch] {
        &self.relations
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.config.rng_seed
    }

    pub fn iterations(&self) -> &[IterationStats] {
        &self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn store(&self) -> &MatchStore {
        &self.store
    }

    pub fn find(&self, left: EntityId, right: EntityId) -> Option<&EntityMatch> {
        self.entities.iter().find(|m| m.left == left && m.right == right)
    }

    /// Stored KG2 counterparts of `left` with positive score (pruned ones
    /// included), best first, ties by KG2 label.
    pub fn ranking(&self, kg2: &KnowledgeGraph, left: EntityId) -> Vec<(EntityId, f64)> {
        let mut v: Vec<(EntityId, f64)> = self
            .store
            .row(left)
            .iter()
            .map(|&r| (r, self.store.raw_score(left, r)))
            .filter(|x| x.1 > 0.0)
            .collect();
        v.sort_by(|a, b| cmp_f64(b.1, a.1).then_with(|| kg2.cmp_entities(a.0, b.0)));
        v
    }
}

/// Greedy injective selection over retained non-literal pairs scoring
/// above `theta_e`: highest score first, ties by `(label1, label2)`.
fn one_to_one(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, store: &MatchStore, theta_e: f64) -> Vec<EntityMatch> {
    let mut cands: Vec<(EntityId, EntityId, &EntityEntry)> = store
        .entity_pairs()
        .into_iter()
        .filter(|(l, r, e)| e.active && e.score > theta_e && !kg1.is_literal(*l) && !kg2.is_literal(*r))
        .collect();
    cands.sort_by(|a, b| {
        cmp_f64(b.2.score, a.2.score)
            .then_with(|| kg1.cmp_entities(a.0, b.0))
            .then_with(|| kg2.cmp_entities(a.1, b.1))
    });
    let mut used1 = hashbrown::HashSet::<EntityId, rustc_hash::FxBuildHasher>::default();
    let mut used2 = hashbrown::HashSet::<EntityId, rustc_hash::FxBuildHasher>::default();
    let mut out = Vec::new();
    for (l, r, e) in cands {
        if used1.contains(&l) || used2.contains(&r) {
            continue;
        }
        used1.insert(l);
        used2.insert(r);
        out.push(EntityMatch {
            left: l,
            right: r,
            label1: kg1.entity_label(l).into(),
            label2: kg2.entity_label(r).into(),
            score: e.score,
            origin: e.origin,
        });
    }
    out
}
