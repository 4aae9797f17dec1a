use alloc::vec::Vec;

use crate::fis::hmean;
use crate::functionality::FunEstimate;
use crate::kg::{EntityId, RelationId};
use crate::FxMap;

/// One aligned position of an entity-alignment rule: fact `r1(h1, t)` in
/// KG1 paired with `r2(h2, t')` in KG2.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchedFact {
    pub relation1: RelationId,
    pub head1: EntityId,
    pub relation2: RelationId,
    pub head2: EntityId,
    pub head_score: f64,
    pub rel_score: f64,
}

impl MatchedFact {
    pub fn evidence(&self) -> f64 {
        self.head_score * self.rel_score
    }
}

/// The firing of one entity-alignment rule together with all premise values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RuleInstance {
    pub left: EntityId,
    pub right: EntityId,
    pub facts: Vec<MatchedFact>,
    /// `fun(R)` in KG1.
    pub fun_list1: FunEstimate,
    /// `fun(R, H)` in KG1.
    pub fun_local1: FunEstimate,
    pub fun_list2: FunEstimate,
    pub fun_local2: FunEstimate,
    pub strength: f64,
}

impl RuleInstance {
    /// `min(hmean(heads), hmean(relations), four functionalities)` recomputed
    /// from the recorded premises.
    pub fn recompute_strength(&self) -> f64 {
        rule_strength(
            &self.facts,
            [self.fun_list1.value, self.fun_local1.value, self.fun_list2.value, self.fun_local2.value],
        )
    }
}

pub(crate) fn rule_strength(facts: &[MatchedFact], funs: [f64; 4]) -> f64 {
    if facts.is_empty() {
        return 0.0;
    }
    let heads: Vec<f64> = facts.iter().map(|f| f.head_score).collect();
    let rels: Vec<f64> = facts.iter().map(|f| f.rel_score).collect();
    funs.iter()
        .copied()
        .fold(hmean(&heads).min(hmean(&rels)), f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Origin {
    /// Training pair, fixed at 1.
    Seed,
    /// Literal similarity, fixed.
    Literal,
    /// Derived by the entity-alignment rule.
    Rule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityEntry {
    pub score: f64,
    pub origin: Origin,
    /// Retained by the last maximum assignment (always true for fixed
    /// entries and when pruning is off).
    pub active: bool,
    pub best: Option<RuleInstance>,
}

impl EntityEntry {
    pub fn is_fixed(&self) -> bool {
        self.origin != Origin::Rule
    }
}

/// Sparse entity-equivalence and relation-subsumption scores.
#[derive(Debug, Clone, Default)]
pub struct MatchStore {
    entities: FxMap<(EntityId, EntityId), EntityEntry>,
    rows: FxMap<EntityId, Vec<EntityId>>,
    cols: FxMap<EntityId, Vec<EntityId>>,
    rel_sub_12: FxMap<(RelationId, RelationId), f64>,
    rel_sub_21: FxMap<(RelationId, RelationId), f64>,
    bootstrap: Option<f64>,
}

impl MatchStore {
    pub fn new(theta_r: f64) -> Self {
        MatchStore {
            bootstrap: Some(theta_r),
            ..Default::default()
        }
    }

    pub fn insert_fixed(&mut self, left: EntityId, right: EntityId, score: f64, origin: Origin) {
        let new = !self.entities.contains_key(&(left, right));
        let entry = self.entities.entry((left, right)).or_insert(EntityEntry {
            score: 0.0,
            origin,
            active: true,
            best: None,
        });
        // seeds win over literal scores
        if origin == Origin::Seed || entry.origin == Origin::Rule {
            entry.origin = origin;
        }
        entry.score = if origin == Origin::Seed { 1.0 } else { entry.score.max(score) };
        entry.best = None;
        entry.active = true;
        if new {
            self.link(left, right);
        }
    }

    fn link(&mut self, left: EntityId, right: EntityId) {
        self.rows.entry(left).or_default().push(right);
        self.cols.entry(right).or_default().push(left);
    }

    /// Raises a rule-derived score. Fixed entries are untouched. Returns the
    /// increase.
    pub fn raise(&mut self, instance: RuleInstance) -> f64 {
        let key = (instance.left, instance.right);
        let strength = instance.strength;
        match self.entities.get_mut(&key) {
            Some(e) if e.is_fixed() => 0.0,
            Some(e) => {
                if strength > e.score {
                    let d = strength - e.score;
                    e.score = strength;
                    e.best = Some(instance);
                    d
                } else {
                    // equal strength with more evidence: keep the fuller explanation
                    let fuller = e.best.as_ref().is_none_or(|b| instance.facts.len() > b.facts.len());
                    if strength == e.score && fuller {
                        e.best = Some(instance);
                    }
                    0.0
                }
            }
            None => {
                if strength.is_nan() || strength <= 0.0 {
                    return 0.0;
                }
                self.entities.insert(
                    key,
                    EntityEntry {
                        score: strength,
                        origin: Origin::Rule,
                        active: true,
                        best: Some(instance),
                    },
                );
                self.link(key.0, key.1);
                strength
            }
        }
    }

    pub fn entry(&self, left: EntityId, right: EntityId) -> Option<&EntityEntry> {
        self.entities.get(&(left, right))
    }

    /// Score used as rule evidence: 0 for pruned or absent pairs.
    #[inline]
    pub fn score(&self, left: EntityId, right: EntityId) -> f64 {
        match self.entities.get(&(left, right)) {
            Some(e) if e.active => e.score,
            _ => 0.0,
        }
    }

    /// Stored score regardless of pruning.
    pub fn raw_score(&self, left: EntityId, right: EntityId) -> f64 {
        self.entities.get(&(left, right)).map_or(0.0, |e| e.score)
    }

    /// Active KG2 counterparts of a KG1 entity with positive score.
    pub fn matches_of_left(&self, left: EntityId) -> impl Iterator<Item = (EntityId, f64)> + '_ {
        self.rows
            .get(&left)
            .into_iter()
            .flatten()
            .filter_map(move |&r| {
                let s = self.score(left, r);
                (s > 0.0).then_some((r, s))
            })
    }

    /// Active KG1 counterparts of a KG2 entity with positive score.
    pub fn matches_of_right(&self, right: EntityId) -> impl Iterator<Item = (EntityId, f64)> + '_ {
        self.cols
            .get(&right)
            .into_iter()
            .flatten()
            .filter_map(move |&l| {
                let s = self.score(l, right);
                (s > 0.0).then_some((l, s))
            })
    }

    /// All stored KG2 counterparts of a KG1 entity, pruned ones included.
    pub fn row(&self, left: EntityId) -> &[EntityId] {
        self.rows.get(&left).map_or(&[], Vec::as_slice)
    }

    pub fn col(&self, right: EntityId) -> &[EntityId] {
        self.cols.get(&right).map_or(&[], Vec::as_slice)
    }

    /// Every stored entity pair, sorted by ids.
    pub fn entity_pairs(&self) -> Vec<(EntityId, EntityId, &EntityEntry)> {
        let mut v: Vec<_> = self.entities.iter().map(|(&(a, b), e)| (a, b, e)).collect();
        v.sort_by_key(|x| (x.0, x.1));
        v
    }

    pub fn entity_len(&self) -> usize {
        self.entities.len()
    }

    /// Sum of all stored entity scores, pruned ones included.
    pub fn total_entity_score(&self) -> f64 {
        self.entity_pairs().iter().map(|x| x.2.score).sum()
    }

    /// Sum over active entries only.
    pub fn retained_entity_score(&self) -> f64 {
        self.entity_pairs()
            .iter()
            .filter(|x| x.2.active)
            .map(|x| x.2.score)
            .sum()
    }

    /// `sim(r, r')`: θ_r before the first subrelation step, then the larger
    /// of the two subsumption directions.
    #[inline]
    pub fn rel_sim(&self, r1: RelationId, r2: RelationId) -> f64 {
        if let Some(theta) = self.bootstrap {
            return theta;
        }
        self.sub12(r1, r2).max(self.sub21(r2, r1))
    }

    /// Degree to which KG1's `r1` is a subrelation of KG2's `r2`.
    pub fn sub12(&self, r1: RelationId, r2: RelationId) -> f64 {
        self.rel_sub_12.get(&(r1, r2)).copied().unwrap_or(0.0)
    }

    /// Degree to which KG2's `r2` is a subrelation of KG1's `r1`.
    pub fn sub21(&self, r2: RelationId, r1: RelationId) -> f64 {
        self.rel_sub_21.get(&(r2, r1)).copied().unwrap_or(0.0)
    }

    pub(crate) fn raise_sub12(&mut self, r1: RelationId, r2: RelationId, v: f64) -> f64 {
        raise_map(&mut self.rel_sub_12, (r1, r2), v)
    }

    pub(crate) fn raise_sub21(&mut self, r2: RelationId, r1: RelationId, v: f64) -> f64 {
        raise_map(&mut self.rel_sub_21, (r2, r1), v)
    }

    pub fn in_bootstrap(&self) -> bool {
        self.bootstrap.is_some()
    }

    pub(crate) fn end_bootstrap(&mut self) {
        self.bootstrap = None;
    }

    /// Relation pairs with a positive score in either direction, as
    /// `(kg1 relation, kg2 relation)` sorted by ids.
    pub fn relation_pairs(&self) -> Vec<(RelationId, RelationId)> {
        let mut v: Vec<_> = self
            .rel_sub_12
            .iter()
            .filter(|(_, &s)| s > 0.0)
            .map(|(&k, _)| k)
            .chain(
                self.rel_sub_21
                    .iter()
                    .filter(|(_, &s)| s > 0.0)
                    .map(|(&(r2, r1), _)| (r1, r2)),
            )
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Keeps only entries maximal in both their row and their column
    /// (ties all kept). Fixed entries stay active.
    pub fn max_assignment(&mut self) {
        let mut row_max: FxMap<EntityId, f64> = FxMap::default();
        let mut col_max: FxMap<EntityId, f64> = FxMap::default();
        for (&(l, r), e) in &self.entities {
            let rm = row_max.entry(l).or_insert(0.0);
            *rm = rm.max(e.score);
            let cm = col_max.entry(r).or_insert(0.0);
            *cm = cm.max(e.score);
        }
        for (&(l, r), e) in self.entities.iter_mut() {
            e.active = e.is_fixed() || (e.score >= row_max[&l] && e.score >= col_max[&r]);
        }
    }

    /// Marks every entry active.
    pub fn clear_pruning(&mut self) {
        for e in self.entities.values_mut() {
            e.active = true;
        }
    }
}

fn raise_map(map: &mut FxMap<(RelationId, RelationId), f64>, key: (RelationId, RelationId), v: f64) -> f64 {
    if v.is_nan() || v <= 0.0 {
        return 0.0;
    }
    let slot = map.entry(key).or_insert(0.0);
    if v > *slot {
        let d = v - *slot;
        *slot = v;
        d
    } else {
        0.0
    }
}
