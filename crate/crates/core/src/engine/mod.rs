//! The alignment loop.
//!
//! Literal similarities and training pairs are fixed inputs. Each iteration
//! raises entity scores with the entity-alignment rule, keeps only
//! row-and-column maximal entity pairs as evidence (unless pruning is off),
//! and then raises relation subsumption scores from the retained pairs.
//! All score updates are max-merges, so an iteration's result does not
//! depend on evaluation order or thread count.

mod config;
mod report;
mod store;

use alloc::vec::Vec;

pub use config::Config;
pub use report::{AlignmentReport, EntityMatch, IterationStats, RelOp, RelationMatch};
pub use store::{EntityEntry, MatchStore, MatchedFact, Origin, RuleInstance};

use crate::error::Result;
use crate::functionality::{FunOptions, Functionality, RelationList};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::literal::LiteralSimTable;
use crate::FxMap;
use store::rule_strength;

/// Maps `f` over `items` in order, in parallel when `std` is enabled.
fn ordered_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        items.iter().map(f).collect()
    }
}

pub struct Aligner<'a> {
    kg1: &'a KnowledgeGraph,
    kg2: &'a KnowledgeGraph,
    config: Config,
    fun1: Functionality<'a>,
    fun2: Functionality<'a>,
    store: MatchStore,
    left_entities: Vec<EntityId>,
    stats: Vec<IterationStats>,
}

impl<'a> Aligner<'a> {
    /// Seeds the store with fixed literal similarities and training pairs.
    pub fn initialize(
        kg1: &'a KnowledgeGraph,
        kg2: &'a KnowledgeGraph,
        literals: &LiteralSimTable,
        seeds: &[(EntityId, EntityId)],
        config: Config,
    ) -> Result<Self> {
        config.validate()?;
        let opts = FunOptions {
            exact_cap: config.fun_exact_cap,
            budget: config.fun_budget,
            seed: config.rng_seed,
        };
        let mut store = MatchStore::new(config.theta_r);
        for (a, b, s) in literals.pairs() {
            store.insert_fixed(a, b, s, Origin::Literal);
        }
        for &(a, b) in seeds {
            store.insert_fixed(a, b, 1.0, Origin::Seed);
        }
        let left_entities = kg1.entity_ids().filter(|&e| !kg1.is_literal(e)).collect();
        Ok(Aligner {
            kg1,
            kg2,
            fun1: Functionality::new(kg1, opts),
            fun2: Functionality::new(kg2, FunOptions {
                seed: opts.seed ^ 0x5bd1_e995,
                ..opts
            }),
            config,
            store,
            left_entities,
            stats: Vec::new(),
        })
    }

    pub fn store(&self) -> &MatchStore {
        &self.store
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn stats(&self) -> &[IterationStats] {
        &self.stats
    }

    /// KG2 entities sharing counterpart facts with `t`, most shared first.
    ///
    /// A fact `r(h, t)` supports `t'` when some `r'(h', t')` exists with
    /// `score(h, h') > 0` and `sim(r, r') > 0`. Ties go to the higher best
    /// evidence, then to label order.
    pub fn candidate_search(&self, t: EntityId) -> Vec<(EntityId, usize)> {
        let kg2 = self.kg2;
        // t' -> (count, best evidence, last fact index counted)
        let mut tally: FxMap<EntityId, (usize, f64, usize)> = FxMap::default();
        for (i, &(r, h)) in self.kg1.facts_at(t).iter().enumerate() {
            for (h2, hs) in self.store.matches_of_left(h) {
                let facts2 = kg2.facts_at(h2);
                if facts2.len() > self.config.hub_cap {
                    continue;
                }
                // (q, x) at h2 means r' = q^-1 holds as r'(h2, x)
                for &(q, x) in facts2 {
                    if kg2.is_literal(x) {
                        continue;
                    }
                    let rs = self.store.rel_sim(r, q.inverse());
                    if rs.is_nan() || rs <= 0.0 {
                        continue;
                    }
                    let slot = tally.entry(x).or_insert((0, 0.0, usize::MAX));
                    if slot.2 != i {
                        slot.0 += 1;
                        slot.2 = i;
                    }
                    slot.1 = slot.1.max(hs * rs);
                }
            }
        }
        let mut out: Vec<(EntityId, usize, f64)> = tally.into_iter().map(|(x, (c, b, _))| (x, c, b)).collect();
        out.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then(crate::value::cmp_f64(b.2, a.2))
                .then_with(|| kg2.cmp_entities(a.0, b.0))
        });
        out.truncate(self.config.candidate_cap);
        out.into_iter().map(|(x, c, _)| (x, c)).collect()
    }

    /// Strongest firing of the entity-alignment rule for `(t, t')`.
    ///
    /// Incident facts of both sides are paired one-to-one, greedily by
    /// descending `score(h, h') * sim(r, r')`, up to `L_max` pairs; every
    /// prefix of that list is a candidate rule instance and the strongest
    /// one is returned (the longest on ties, so explanations carry all
    /// evidence that does not weaken the rule).
    pub fn evaluate_pair(&self, t: EntityId, t2: EntityId) -> RuleInstance {
        let facts1 = self.kg1.facts_at(t);
        let facts2 = self.kg2.facts_at(t2);
        let mut by_head2: FxMap<EntityId, Vec<usize>> = FxMap::default();
        for (j, &(_, h2)) in facts2.iter().enumerate() {
            by_head2.entry(h2).or_default().push(j);
        }
        let mut pairs: Vec<(f64, usize, usize, f64, f64)> = Vec::new();
        for (i, &(r, h)) in facts1.iter().enumerate() {
            for (h2, hs) in self.store.matches_of_left(h) {
                for &j in by_head2.get(&h2).into_iter().flatten() {
                    let rs = self.store.rel_sim(r, facts2[j].0);
                    if rs > 0.0 {
                        pairs.push((hs * rs, i, j, hs, rs));
                    }
                }
            }
        }
        pairs.sort_by(|a, b| crate::value::cmp_f64(b.0, a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used1 = alloc::vec![false; facts1.len()];
        let mut used2 = alloc::vec![false; facts2.len()];
        let mut matched: Vec<MatchedFact> = Vec::new();
        for (_, i, j, hs, rs) in pairs {
            if matched.len() >= self.config.l_max {
                break;
            }
            if used1[i] || used2[j] {
                continue;
            }
            used1[i] = true;
            used2[j] = true;
            matched.push(MatchedFact {
                relation1: facts1[i].0,
                head1: facts1[i].1,
                relation2: facts2[j].0,
                head2: facts2[j].1,
                head_score: hs,
                rel_score: rs,
            });
        }

        let mut best = RuleInstance {
            left: t,
            right: t2,
            facts: Vec::new(),
            fun_list1: crate::functionality::FunEstimate::exact(0.0),
            fun_local1: crate::functionality::FunEstimate::exact(0.0),
            fun_list2: crate::functionality::FunEstimate::exact(0.0),
            fun_local2: crate::functionality::FunEstimate::exact(0.0),
            strength: 0.0,
        };
        for k in 1..=matched.len() {
            let prefix = &matched[..k];
            let list1 = RelationList::new(self.kg1, prefix.iter().map(|m| (m.relation1, m.head1)));
            let list2 = RelationList::new(self.kg2, prefix.iter().map(|m| (m.relation2, m.head2)));
            let funs = [
                self.fun1.global(&list1),
                self.fun1.local(&list1),
                self.fun2.global(&list2),
                self.fun2.local(&list2),
            ];
            let strength = rule_strength(prefix, funs.map(|f| f.value));
            if strength > 0.0 && strength >= best.strength {
                best = RuleInstance {
                    left: t,
                    right: t2,
                    facts: prefix.to_vec(),
                    fun_list1: funs[0],
                    fun_local1: funs[1],
                    fun_list2: funs[2],
                    fun_local2: funs[3],
                    strength,
                };
            }
        }
        best
    }

    /// One pass of the entity-alignment rule over every non-literal KG1
    /// entity and its candidates. Returns the total score increase.
    pub fn entity_step(&mut self) -> f64 {
        let this = &*self;
        let firings: Vec<Vec<RuleInstance>> = ordered_map(&this.left_entities, |&t| {
            this.candidate_search(t)
                .into_iter()
                .map(|(t2, _)| this.evaluate_pair(t, t2))
                .filter(|inst| inst.strength > 0.0)
                .collect()
        });
        let mut delta = 0.0;
        for inst in firings.into_iter().flatten() {
            delta += self.store.raise(inst);
        }
        delta
    }

    /// Subsumption scores from the current entity scores, both directions.
    ///
    /// `r ⊆ r'` is `α` times the mean, over facts `r(h, t)`, of the best
    /// `min(score(h, h'), score(t, t'))` over facts `r'(h', t')`, capped at 1.
    /// Facts without a counterpart contribute 0.
    pub fn subrelation_step(&mut self) -> f64 {
        // sub(r^-1, r'^-1) = sub(r, r'), so forward relations suffice
        let rels1: Vec<RelationId> = self.kg1.forward_relation_ids().collect();
        let rels2: Vec<RelationId> = self.kg2.forward_relation_ids().collect();
        let alpha = self.config.alpha;
        let this = &*self;
        let forward: Vec<Vec<(RelationId, f64)>> = ordered_map(&rels1, |&r| {
            subsumption_scores(this.kg1, this.kg2, r, alpha, |h| this.store.matches_of_left(h).collect())
        });
        let backward: Vec<Vec<(RelationId, f64)>> = ordered_map(&rels2, |&r2| {
            subsumption_scores(this.kg2, this.kg1, r2, alpha, |h| this.store.matches_of_right(h).collect())
        });
        let mut delta = 0.0;
        for (&r, scores) in rels1.iter().zip(forward) {
            for (r2, v) in scores {
                delta += self.store.raise_sub12(r, r2, v);
                self.store.raise_sub12(r.inverse(), r2.inverse(), v);
            }
        }
        for (&r2, scores) in rels2.iter().zip(backward) {
            for (r, v) in scores {
                delta += self.store.raise_sub21(r2, r, v);
                self.store.raise_sub21(r2.inverse(), r.inverse(), v);
            }
        }
        self.store.end_bootstrap();
        delta
    }

    pub fn max_assignment(&mut self) {
        self.store.max_assignment();
    }

    /// One full iteration; returns its stats.
    pub fn iterate(&mut self) -> IterationStats {
        let entity_delta = self.entity_step();
        // prune first: relation scores never decrease, so evidence from
        // losing candidates would stay in them for good
        if self.config.pruning {
            self.max_assignment();
        }
        let relation_delta = self.subrelation_step();
        let stats = IterationStats {
            iteration: self.stats.len() + 1,
            entity_delta,
            relation_delta,
            total_entity_score: self.store.total_entity_score(),
            retained_entity_score: self.store.retained_entity_score(),
        };
        self.stats.push(stats.clone());
        stats
    }

    /// Iterates until the total increase drops below `epsilon` or
    /// `max_iters` is reached, then builds the report.
    pub fn run(mut self) -> AlignmentReport {
        let mut converged = false;
        while self.stats.len() < self.config.max_iters {
            let s = self.iterate();
            if s.entity_delta + s.relation_delta < self.config.epsilon {
                converged = true;
                break;
            }
        }
        AlignmentReport::build(self.kg1, self.kg2, self.store, self.config, self.stats, converged)
    }
}

/// `sub(r, r')` for every `r'` of `other` witnessed by at least one fact.
fn subsumption_scores<M>(
    kg: &KnowledgeGraph,
    other: &KnowledgeGraph,
    r: RelationId,
    alpha: f64,
    matches: M,
) -> Vec<(RelationId, f64)>
where
    M: Fn(EntityId) -> Vec<(EntityId, f64)>,
{
    let facts = kg.facts_of(r);
    if facts.is_empty() {
        return Vec::new();
    }
    let mut sums: FxMap<RelationId, f64> = FxMap::default();
    let mut best: FxMap<RelationId, f64> = FxMap::default();
    for &(h, t) in facts {
        best.clear();
        let tail_matches = matches(t);
        if tail_matches.is_empty() {
            continue;
        }
        for (h2, hs) in matches(h) {
            for &(t2, ts) in &tail_matches {
                let v = hs.min(ts);
                // relations r' with r'(h2, t2): scan the smaller fact list
                let (at_t2, at_h2) = (other.facts_at(t2), other.facts_at(h2));
                if at_t2.len() <= at_h2.len() {
                    for &(r2, x) in at_t2 {
                        if x == h2 {
                            let b = best.entry(r2).or_insert(0.0);
                            *b = b.max(v);
                        }
                    }
                } else {
                    for &(q, x) in at_h2 {
                        if x == t2 {
                            let b = best.entry(q.inverse()).or_insert(0.0);
                            *b = b.max(v);
                        }
                    }
                }
            }
        }
        for (&r2, &v) in best.iter() {
            *sums.entry(r2).or_insert(0.0) += v;
        }
    }
    let n = facts.len() as f64;
    let mut out: Vec<(RelationId, f64)> = sums
        .into_iter()
        .map(|(r2, s)| (r2, (alpha * s / n).clamp(0.0, 1.0)))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    out.sort_by_key(|x| x.0);
    out
}

/// Initializes and runs to completion.
pub fn align(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    literals: &LiteralSimTable,
    seeds: &[(EntityId, EntityId)],
    config: Config,
) -> Result<AlignmentReport> {
    Ok(Aligner::initialize(kg1, kg2, literals, seeds, config)?.run())
}
