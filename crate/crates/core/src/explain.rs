//! Justifications for reported entity matches.
//!
//! A rule-derived match is explained by its strongest rule instance: the
//! aligned fact positions with their head and relation scores, plus the four
//! functionality premises. Seeds and literal pairs explain themselves.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::engine::{AlignmentReport, MatchedFact, Origin, RuleInstance};
use crate::fis::hmean;
use crate::functionality::{FunEstimate, FunMode};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::value::cmp_f64;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evidence {
    pub relation1: String,
    pub relation2: String,
    /// Relation similarity used when the rule fired.
    pub relation_score: f64,
    /// Final subsumption scores, KG1 in KG2 and KG2 in KG1.
    pub sub12: f64,
    pub sub21: f64,
    pub head1: String,
    pub head2: String,
    pub head_is_literal: bool,
    pub head_score: f64,
}

impl Evidence {
    /// `head_score * relation_score`, the order evidence is listed in.
    pub fn contribution(&self) -> f64 {
        self.head_score * self.relation_score
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunPremise {
    pub value: f64,
    pub sampled: bool,
    pub samples: u32,
}

impl From<FunEstimate> for FunPremise {
    fn from(f: FunEstimate) -> Self {
        FunPremise {
            value: f.value,
            sampled: f.mode == FunMode::Sampled,
            samples: f.sample_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Explanation {
    pub label1: String,
    pub label2: String,
    pub score: f64,
    pub origin: Origin,
    /// Sorted by descending contribution; empty for seeds and literals.
    pub evidence: Vec<Evidence>,
    /// Functionality of the relation list in KG1, globally and for the
    /// matched heads; then the same for KG2.
    pub fun_list1: Option<FunPremise>,
    pub fun_local1: Option<FunPremise>,
    pub fun_list2: Option<FunPremise>,
    pub fun_local2: Option<FunPremise>,
    /// Firing strength of the recorded rule instance.
    pub strength: f64,
}

impl Explanation {
    /// Re-evaluates the entity-alignment rule on the recorded premises.
    pub fn recompute_strength(&self) -> f64 {
        match self.origin {
            Origin::Seed | Origin::Literal => self.score,
            Origin::Rule => {
                if self.evidence.is_empty() {
                    return 0.0;
                }
                let heads: Vec<f64> = self.evidence.iter().map(|e| e.head_score).collect();
                let rels: Vec<f64> = self.evidence.iter().map(|e| e.relation_score).collect();
                [self.fun_list1, self.fun_local1, self.fun_list2, self.fun_local2]
                    .iter()
                    .map(|f| f.map_or(0.0, |f| f.value))
                    .fold(hmean(&heads).min(hmean(&rels)), f64::min)
            }
        }
    }
}

/// Why a pair has no explanation.
#[derive(Debug, Clone, PartialEq)]
pub enum NotFound {
    UnknownEntity { kg: u8, label: String },
    /// No rule, seed or literal ever gave the pair a score.
    NeverScored,
    /// Scored, but not above the reporting threshold.
    BelowThreshold { score: f64, theta_e: f64 },
    /// Above the threshold but pruned or beaten in the one-to-one selection.
    NotRetained { score: f64 },
}

impl fmt::Display for NotFound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotFound::UnknownEntity { kg, label } => write!(f, "unknown entity {label:?} in KG{kg}"),
            NotFound::NeverScored => f.write_str("pair was never scored"),
            NotFound::BelowThreshold { score, theta_e } => {
                write!(f, "pair scored {score:.6}, not above theta_e = {theta_e}")
            }
            NotFound::NotRetained { score } => {
                write!(f, "pair scored {score:.6} but a competing pair was reported")
            }
        }
    }
}

fn evidence_line(
    report: &AlignmentReport,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    m: &MatchedFact,
) -> Evidence {
    let head_is_literal = kg1.is_literal(m.head1);
    let show = |kg: &KnowledgeGraph, e: EntityId| match &kg.entity(e).literal {
        Some(v) => v.to_string(),
        None => kg.entity_label(e).to_string(),
    };
    Evidence {
        relation1: kg1.relation_label(m.relation1).into(),
        relation2: kg2.relation_label(m.relation2).into(),
        relation_score: m.rel_score,
        sub12: report.store().sub12(m.relation1, m.relation2),
        sub21: report.store().sub21(m.relation2, m.relation1),
        head1: show(kg1, m.head1),
        head2: show(kg2, m.head2),
        head_is_literal,
        head_score: m.head_score,
    }
}

/// Builds the explanation of a rule instance.
pub fn explain_instance(
    report: &AlignmentReport,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    inst: &RuleInstance,
    score: f64,
) -> Explanation {
    let mut evidence: Vec<Evidence> = inst.facts.iter().map(|m| evidence_line(report, kg1, kg2, m)).collect();
    evidence.sort_by(|a, b| cmp_f64(b.contribution(), a.contribution()));
    Explanation {
        label1: kg1.entity_label(inst.left).into(),
        label2: kg2.entity_label(inst.right).into(),
        score,
        origin: Origin::Rule,
        evidence,
        fun_list1: Some(inst.fun_list1.into()),
        fun_local1: Some(inst.fun_local1.into()),
        fun_list2: Some(inst.fun_list2.into()),
        fun_local2: Some(inst.fun_local2.into()),
        strength: inst.strength,
    }
}

/// Explanation of a reported match given by labels.
pub fn explain(
    report: &AlignmentReport,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    label1: &str,
    label2: &str,
) -> Result<Explanation, NotFound> {
    let left = kg1.lookup_entity(label1).ok_or_else(|| NotFound::UnknownEntity {
        kg: 1,
        label: label1.into(),
    })?;
    let right = kg2.lookup_entity(label2).ok_or_else(|| NotFound::UnknownEntity {
        kg: 2,
        label: label2.into(),
    })?;
    let Some(m) = report.find(left, right) else {
        return Err(match report.store().entry(left, right) {
            None => NotFound::NeverScored,
            Some(e) if e.score <= report.config().theta_e => NotFound::BelowThreshold {
                score: e.score,
                theta_e: report.config().theta_e,
            },
            Some(e) => NotFound::NotRetained { score: e.score },
        });
    };
    let entry = report.store().entry(left, right).expect("reported pairs are stored");
    match (&entry.best, entry.origin) {
        (Some(inst), Origin::Rule) => Ok(explain_instance(report, kg1, kg2, inst, m.score)),
        _ => Ok(Explanation {
            label1: m.label1.clone(),
            label2: m.label2.clone(),
            score: m.score,
            origin: m.origin,
            evidence: Vec::new(),
            fun_list1: None,
            fun_local1: None,
            fun_list2: None,
            fun_local2: None,
            strength: m.score,
        }),
    }
}

/// Explanations for every reported match, in report order.
pub fn explain_all(report: &AlignmentReport, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Vec<Explanation> {
    report
        .entity_matches()
        .iter()
        .map(|m| explain(report, kg1, kg2, &m.label1, &m.label2).expect("reported pair"))
        .collect()
}

fn fmt_fun(f: &mut fmt::Formatter<'_>, name: &str, p: &Option<FunPremise>) -> fmt::Result {
    if let Some(p) = p {
        write!(f, " {name}={:.3}", p.value)?;
        if p.sampled {
            write!(f, "~{}", p.samples)?;
        }
    }
    Ok(())
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}  score {:.6}", self.label1, self.label2, self.score)?;
        match self.origin {
            Origin::Seed => return writeln!(f, "  (seed: training data, score 1)"),
            Origin::Literal => return writeln!(f, "  (literal similarity)"),
            Origin::Rule => writeln!(f)?,
        }
        for e in &self.evidence {
            let dir = if e.sub12 >= e.sub21 { "<=" } else { ">=" };
            writeln!(
                f,
                "  {} ~ {} [{:.3}, {} {:.3}/{:.3}]  {} = {} [{:.3}]",
                e.relation1, e.relation2, e.relation_score, dir, e.sub12, e.sub21, e.head1, e.head2, e.head_score
            )?;
        }
        f.write_str("  fun:")?;
        fmt_fun(f, "R1", &self.fun_list1)?;
        fmt_fun(f, "R1|H1", &self.fun_local1)?;
        fmt_fun(f, "R2", &self.fun_list2)?;
        fmt_fun(f, "R2|H2", &self.fun_local2)?;
        writeln!(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{align, Config};
    use crate::kg::Term;
    use crate::literal::{build_literal_table, LiteralSimTable, StringProvider};
    use crate::value::LiteralValue;

    fn singer() -> (KnowledgeGraph, KnowledgeGraph) {
        let mut kg1 = KnowledgeGraph::new();
        kg1.add_triple("Lady_Gaga", "birthDate", Term::Literal(LiteralValue::infer("1986-03-28")));
        kg1.add_triple("Lady_Gaga", "birthPlace", Term::Entity("New_York_City"));
        kg1.add_triple("New_York_City", "name", Term::Literal(LiteralValue::infer("\"New York City\"")));
        kg1.add_triple("Tony_Bennett", "birthPlace", Term::Entity("New_York_City"));
        kg1.add_triple("Tony_Bennett", "birthDate", Term::Literal(LiteralValue::infer("1926-08-03")));
        let mut kg2 = KnowledgeGraph::new();
        kg2.add_triple("Q19848", "P569", Term::Literal(LiteralValue::infer("1986-03-28")));
        kg2.add_triple("Q19848", "P19", Term::Entity("Q60"));
        kg2.add_triple("Q60", "label", Term::Literal(LiteralValue::infer("\"New York City\"")));
        kg2.add_triple("Q296729", "P19", Term::Entity("Q60"));
        kg2.add_triple("Q296729", "P569", Term::Literal(LiteralValue::infer("1926-08-03")));
        (kg1, kg2)
    }

    #[test]
    fn date_and_relational_evidence() {
        let (kg1, kg2) = singer();
        let t = build_literal_table(&kg1, &kg2, &StringProvider::BuiltinTrigram, 0.7, 10);
        let report = align(&kg1, &kg2, &t, &[], Config::default()).unwrap();
        let e = explain(&report, &kg1, &kg2, "Lady_Gaga", "Q19848").unwrap();
        assert_eq!(e.origin, Origin::Rule);
        assert_eq!(e.strength, e.score);
        assert!((e.recompute_strength() - e.score).abs() < 1e-12);
        let rels: Vec<(&str, &str)> = e.evidence.iter().map(|x| (x.relation1.as_str(), x.relation2.as_str())).collect();
        assert!(rels.contains(&("birthDate^-1", "P569^-1")), "{rels:?}");
        assert!(rels.contains(&("birthPlace^-1", "P19^-1")), "{rels:?}");
        let text = e.to_string();
        assert!(text.contains("1986-03-28"), "{text}");
        assert!(text.contains("birthPlace^-1 ~ P19^-1"), "{text}");
    }

    #[test]
    fn seed_and_not_found() {
        let (kg1, kg2) = singer();
        let seeds = [(kg1.lookup_entity("Lady_Gaga").unwrap(), kg2.lookup_entity("Q19848").unwrap())];
        let report = align(&kg1, &kg2, &LiteralSimTable::empty(0.7), &seeds, Config::default()).unwrap();
        let e = explain(&report, &kg1, &kg2, "Lady_Gaga", "Q19848").unwrap();
        assert_eq!((e.origin, e.score), (Origin::Seed, 1.0));
        assert!(e.to_string().contains("seed"));
        assert_eq!(explain(&report, &kg1, &kg2, "Lady_Gaga", "Q60"), Err(NotFound::NeverScored));
        assert!(matches!(
            explain(&report, &kg1, &kg2, "Nobody", "Q60"),
            Err(NotFound::UnknownEntity { kg: 1, .. })
        ));
    }

    #[test]
    fn one_literal_fact_single_line() {
        let mut kg1 = KnowledgeGraph::new();
        kg1.add_triple("x", "born", Term::Literal(LiteralValue::infer("1990-01-01")));
        let mut kg2 = KnowledgeGraph::new();
        kg2.add_triple("y", "P569", Term::Literal(LiteralValue::infer("1990-01-01")));
        let t = build_literal_table(&kg1, &kg2, &StringProvider::BuiltinTrigram, 0.7, 10);
        let report = align(&kg1, &kg2, &t, &[], Config::default()).unwrap();
        let e = explain(&report, &kg1, &kg2, "x", "y").unwrap();
        assert_eq!(e.evidence.len(), 1);
        let l = &e.evidence[0];
        let premises = [
            l.head_score,
            l.relation_score,
            e.fun_list1.unwrap().value,
            e.fun_local1.unwrap().value,
            e.fun_list2.unwrap().value,
            e.fun_local2.unwrap().value,
        ];
        assert_eq!(e.strength, premises.iter().copied().fold(1.0, f64::min));
        assert!(l.head_is_literal);
    }

    #[test]
    fn below_threshold_distinguished() {
        let mut kg1 = KnowledgeGraph::new();
        kg1.add_triple("x", "born", Term::Literal(LiteralValue::infer("1990-01-01")));
        let mut kg2 = KnowledgeGraph::new();
        kg2.add_triple("y", "P569", Term::Literal(LiteralValue::infer("1990-01-01")));
        let t = build_literal_table(&kg1, &kg2, &StringProvider::BuiltinTrigram, 0.7, 10);
        let config = Config { max_iters: 1, ..Config::default() };
        let report = align(&kg1, &kg2, &t, &[], config).unwrap();
        let err = explain(&report, &kg1, &kg2, "x", "y").unwrap_err();
        assert!(matches!(err, NotFound::BelowThreshold { .. }), "{err:?}");
    }
}
