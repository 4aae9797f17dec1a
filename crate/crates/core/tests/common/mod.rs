#![allow(dead_code)]

use flora_core::engine::Config;
use flora_core::kg::{KnowledgeGraph, Term};
use flora_core::literal::{build_literal_table, LiteralSimTable, StringProvider};
use flora_core::value::LiteralValue;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Pair {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    /// `(kg1 label, kg2 label)` for every entity kept on both sides.
    pub gold: Vec<(String, String)>,
}

const NAMES: &[&str] = &[
    "Amsterdam", "Brisbane", "Cordoba", "Dunedin", "Eindhoven", "Fukuoka", "Gdansk", "Hamburg",
    "Istanbul", "Jakarta", "Kingston", "Lusaka", "Montevideo", "Nairobi", "Oaxaca", "Pittsburgh",
    "Quito", "Reykjavik", "Salzburg", "Tbilisi",
];

/// Random KG and a relabelled copy with some relational facts dropped.
/// Every entity has a unique name literal on both sides when `named`.
pub fn random_pair(seed: u64, entities: usize, triples: usize, drop: f64, named: bool) -> Pair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = entities.min(NAMES.len());
    let mut kg1 = KnowledgeGraph::new();
    let mut kg2 = KnowledgeGraph::new();
    let mut perm: Vec<usize> = (0..entities).collect();
    perm.shuffle(&mut rng);
    for _ in 0..triples {
        let (h, t) = (rng.gen_range(0..entities), rng.gen_range(0..entities));
        if h == t {
            continue;
        }
        let r = rng.gen_range(0..3);
        kg1.add_triple(&format!("e{h}"), &format!("r{r}"), Term::Entity(&format!("e{t}")));
        if !rng.gen_bool(drop) {
            kg2.add_triple(&format!("Q{}", perm[h]), &format!("P{r}"), Term::Entity(&format!("Q{}", perm[t])));
        }
    }
    if named {
        for i in 0..entities {
            let name = format!("\"{}\"", NAMES[i]);
            kg1.add_triple(&format!("e{i}"), "name", Term::Literal(LiteralValue::infer(&name)));
            kg2.add_triple(&format!("Q{}", perm[i]), "label", Term::Literal(LiteralValue::infer(&name)));
        }
    }
    let gold = (0..entities)
        .map(|i| (format!("e{i}"), format!("Q{}", perm[i])))
        .filter(|(a, b)| kg1.lookup_entity(a).is_some() && kg2.lookup_entity(b).is_some())
        .collect();
    Pair { kg1, kg2, gold }
}

pub fn table(pair: &Pair, config: &Config) -> LiteralSimTable {
    build_literal_table(&pair.kg1, &pair.kg2, &StringProvider::BuiltinTrigram, config.theta_s, config.top_k)
}
