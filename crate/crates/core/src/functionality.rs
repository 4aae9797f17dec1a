//! Global and local functionality of relations and relation lists.
//!
//! For a list `R = (r1..rn)` with heads `H = (h1..hn)`, `R(H, t)` holds when
//! every `ri(hi, t)` is a fact. Positions bind distinct facts, so a relation
//! repeated `m` times at a tail with `n` heads contributes `C(n, m)` head
//! combinations. The global value `|{H}| / |{(H, t)}|` is enumerated exactly
//! when the pair count is small and otherwise estimated as the mean of
//! `1 / |{t' : R(H, t')}|` over uniformly drawn pairs, which is unbiased for
//! that ratio.

use alloc::vec::Vec;

use hashbrown::HashSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxBuildHasher;
use spin::RwLock;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::FxMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FunMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunEstimate {
    pub value: f64,
    pub mode: FunMode,
    pub sample_count: u32,
}

impl FunEstimate {
    pub fn exact(value: f64) -> Self {
        FunEstimate {
            value,
            mode: FunMode::Exact,
            sample_count: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunOptions {
    /// Largest `(H, t)` pair count that is enumerated exactly.
    pub exact_cap: u64,
    /// Number of sampled pairs above the cap.
    pub budget: u32,
    pub seed: u64,
}

impl Default for FunOptions {
    fn default() -> Self {
        FunOptions {
            exact_cap: 1000,
            budget: 50,
            seed: 0,
        }
    }
}

/// Canonically ordered `(relation, head)` positions.
///
/// Entries are sorted by relation label, then head label; identical
/// `(relation, head)` entries collapse into one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationList {
    entries: Vec<(RelationId, EntityId)>,
}

impl RelationList {
    pub fn new(kg: &KnowledgeGraph, entries: impl IntoIterator<Item = (RelationId, EntityId)>) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_by(|a, b| {
            kg.cmp_relations(a.0, b.0)
                .then_with(|| kg.cmp_entities(a.1, b.1))
        });
        entries.dedup();
        RelationList { entries }
    }

    pub fn entries(&self) -> &[(RelationId, EntityId)] {
        &self.entries
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn heads(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `fun(r)`: distinct heads over distinct pairs. A relation without facts is 1.
pub fn global_fun(kg: &KnowledgeGraph, relation: RelationId) -> FunEstimate {
    let facts = kg.facts_of(relation);
    if facts.is_empty() {
        return FunEstimate::exact(1.0);
    }
    let heads: HashSet<EntityId, FxBuildHasher> = facts.iter().map(|f| f.0).collect();
    FunEstimate::exact(heads.len() as f64 / facts.len() as f64)
}

/// `fun(r, h) = 1 / |{t : r(h, t)}|`.
pub fn local_fun(kg: &KnowledgeGraph, relation: RelationId, head: EntityId) -> Result<FunEstimate> {
    let n = kg.tails_of(head, relation).len();
    if n == 0 {
        return Err(Error::NoFacts {
            relation: kg.relation_label(relation).into(),
            head: kg.entity_label(head).into(),
        });
    }
    Ok(FunEstimate::exact(1.0 / n as f64))
}

/// `fun(R, H) = 1 / |{t : R(H, t)}|`, by intersecting per-position tail sets.
pub fn local_fun_list(kg: &KnowledgeGraph, list: &RelationList) -> Result<FunEstimate> {
    if list.is_empty() {
        return Err(Error::EmptyList);
    }
    let k = common_tails(kg, list.entries());
    if k == 0 {
        return Err(Error::EmptyIntersection);
    }
    Ok(FunEstimate::exact(1.0 / k as f64))
}

/// `|{t : R(H, t)}|` for positions given as `(relation, head)`.
fn common_tails(kg: &KnowledgeGraph, positions: &[(RelationId, EntityId)]) -> usize {
    let mut lists: Vec<&[EntityId]> = positions.iter().map(|&(r, h)| kg.tails_of(h, r)).collect();
    lists.sort_by_key(|l| l.len());
    let (first, rest) = lists.split_first().expect("non-empty positions");
    first
        .iter()
        .filter(|&&t| {
            rest.iter()
                .all(|l| l.binary_search_by(|p| kg.cmp_entities(*p, t)).is_ok())
        })
        .count()
}

/// `fun(R)` for a multiset of relations.
///
/// Unsupported lists (no tail carries every relation) are 1.
pub fn global_fun_list(
    kg: &KnowledgeGraph,
    relations: &[RelationId],
    opts: &FunOptions,
) -> Result<FunEstimate> {
    if relations.is_empty() {
        return Err(Error::EmptyList);
    }
    if relations.len() == 1 {
        return Ok(global_fun(kg, relations[0]));
    }
    let groups = group_relations(kg, relations);
    let support = supporting_tails(kg, &groups);
    let total: u128 = support
        .iter()
        .fold(0u128, |acc, &(_, c)| acc.saturating_add(c));
    if total == 0 {
        return Ok(FunEstimate::exact(1.0));
    }
    if total <= opts.exact_cap as u128 {
        return Ok(FunEstimate::exact(exact_ratio(kg, &groups, &support, total)));
    }
    let seed = list_seed(opts.seed, &groups);
    Ok(sampled_ratio(kg, &groups, &support, total, opts.budget, seed))
}

/// `(relation, multiplicity)` in canonical relation order.
fn group_relations(kg: &KnowledgeGraph, relations: &[RelationId]) -> Vec<(RelationId, usize)> {
    let mut sorted = relations.to_vec();
    sorted.sort_by(|a, b| kg.cmp_relations(*a, *b));
    let mut groups: Vec<(RelationId, usize)> = Vec::new();
    for r in sorted {
        match groups.last_mut() {
            Some((last, m)) if *last == r => *m += 1,
            _ => groups.push((r, 1)),
        }
    }
    groups
}

/// Tails supporting every group, with their `Π C(n_{r,t}, m_r)` pair counts.
fn supporting_tails(kg: &KnowledgeGraph, groups: &[(RelationId, usize)]) -> Vec<(EntityId, u128)> {
    let pivot = groups
        .iter()
        .min_by_key(|(r, _)| kg.facts_of(*r).len())
        .map(|g| g.0)
        .expect("non-empty groups");
    let mut tails: Vec<EntityId> = kg.facts_of(pivot).iter().map(|f| f.1).collect();
    tails.sort_unstable();
    tails.dedup();
    tails
        .into_iter()
        .filter_map(|t| {
            let mut count: u128 = 1;
            for &(r, m) in groups {
                let n = kg.heads_of(r, t).len();
                if n < m {
                    return None;
                }
                count = count.saturating_mul(binomial(n as u64, m as u64));
            }
            Some((t, count))
        })
        .collect()
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn exact_ratio(
    kg: &KnowledgeGraph,
    groups: &[(RelationId, usize)],
    support: &[(EntityId, u128)],
    total: u128,
) -> f64 {
    let mut keys: HashSet<Vec<EntityId>, FxBuildHasher> = HashSet::default();
    for &(t, _) in support {
        let per_group: Vec<Vec<Vec<EntityId>>> = groups
            .iter()
            .map(|&(r, m)| combinations(kg.heads_of(r, t), m))
            .collect();
        let mut choice = alloc::vec![0usize; groups.len()];
        loop {
            let key: Vec<EntityId> = per_group
                .iter()
                .zip(&choice)
                .flat_map(|(combos, &i)| combos[i].iter().copied())
                .collect();
            keys.insert(key);
            // odometer over the cartesian product
            let mut pos = 0;
            loop {
                if pos == choice.len() {
                    break;
                }
                choice[pos] += 1;
                if choice[pos] < per_group[pos].len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos == choice.len() {
                break;
            }
        }
    }
    keys.len() as f64 / total as f64
}

/// All `m`-subsets of `items`, preserving order within each subset.
fn combinations(items: &[EntityId], m: usize) -> Vec<Vec<EntityId>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    let n = items.len();
    if m > n {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = m;
        while i > 0 && idx[i - 1] == n - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn sampled_ratio(
    kg: &KnowledgeGraph,
    groups: &[(RelationId, usize)],
    support: &[(EntityId, u128)],
    total: u128,
    budget: u32,
    seed: u64,
) -> FunEstimate {
    let budget = budget.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(support.len());
    let mut acc: u128 = 0;
    for &(_, c) in support {
        acc = acc.saturating_add(c);
        cumulative.push(acc);
    }
    let mut positions: Vec<(RelationId, EntityId)> = Vec::new();
    let mut sum = 0.0;
    for _ in 0..budget {
        let u = rng.gen_range(0..total);
        let slot = cumulative.partition_point(|&c| c <= u);
        let t = support[slot].0;
        positions.clear();
        for &(r, m) in groups {
            let heads = kg.heads_of(r, t);
            for i in rand::seq::index::sample(&mut rng, heads.len(), m) {
                positions.push((r, heads[i]));
            }
        }
        let k = common_tails(kg, &positions);
        debug_assert!(k >= 1);
        sum += 1.0 / k as f64;
    }
    FunEstimate {
        value: sum / budget as f64,
        mode: FunMode::Sampled,
        sample_count: budget,
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-list seed so a sampled value does not depend on call order.
fn list_seed(seed: u64, groups: &[(RelationId, usize)]) -> u64 {
    groups.iter().fold(splitmix64(seed), |acc, &(r, m)| {
        splitmix64(acc ^ ((r.0 as u64) << 20) ^ m as u64)
    })
}

/// Memoizing functionality oracle over one knowledge graph.
///
/// Safe for concurrent use; sampled entries are seeded per list, so the
/// cached value is the same whichever thread computes it first.
pub struct Functionality<'kg> {
    kg: &'kg KnowledgeGraph,
    opts: FunOptions,
    global_lists: RwLock<FxMap<Vec<RelationId>, FunEstimate>>,
}

impl<'kg> Functionality<'kg> {
    pub fn new(kg: &'kg KnowledgeGraph, opts: FunOptions) -> Self {
        Functionality {
            kg,
            opts,
            global_lists: RwLock::new(FxMap::default()),
        }
    }

    pub fn kg(&self) -> &'kg KnowledgeGraph {
        self.kg
    }

    pub fn options(&self) -> &FunOptions {
        &self.opts
    }

    /// `fun(R)` for the relations of `list`.
    pub fn global(&self, list: &RelationList) -> FunEstimate {
        let mut key: Vec<RelationId> = list.relations().collect();
        key.sort_unstable();
        if let Some(hit) = self.global_lists.read().get(&key) {
            return *hit;
        }
        let est = global_fun_list(self.kg, &key, &self.opts).unwrap_or(FunEstimate::exact(1.0));
        *self.global_lists.write().entry(key).or_insert(est)
    }

    /// `fun(R, H)`; zero when the positions share no tail.
    pub fn local(&self, list: &RelationList) -> FunEstimate {
        local_fun_list(self.kg, list).unwrap_or(FunEstimate::exact(0.0))
    }

    pub fn cached_lists(&self) -> usize {
        self.global_lists.read().len()
    }
}
