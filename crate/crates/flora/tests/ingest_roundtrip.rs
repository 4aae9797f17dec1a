use std::collections::BTreeSet;

use flora::ingest::{load_openea_dir, parse_triples, write_kg, KgCounts, TailMode};
use flora::synthetic::SyntheticSpec;
use flora_core::kg::KnowledgeGraph;
use proptest::prelude::*;

fn fact_set(kg: &KnowledgeGraph) -> BTreeSet<(String, String, String)> {
    kg.triples()
        .iter()
        .map(|t| {
            (
                kg.entity_label(t.head).to_string(),
                kg.relation_label(t.relation).to_string(),
                kg.entity_label(t.tail).to_string(),
            )
        })
        .collect()
}

fn reload(kg: &KnowledgeGraph) -> KnowledgeGraph {
    let (mut rel, mut attr) = (Vec::new(), Vec::new());
    write_kg(kg, &mut rel, &mut attr).unwrap();
    let mut back = KnowledgeGraph::new();
    parse_triples(std::str::from_utf8(&rel).unwrap(), TailMode::Relational, &mut back);
    parse_triples(std::str::from_utf8(&attr).unwrap(), TailMode::Attribute, &mut back);
    back
}

#[test]
fn synthetic_kg_survives_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticSpec::default().generate().write_openea(dir.path()).unwrap();
    let bundle = load_openea_dir(dir.path(), None).unwrap();
    for kg in [&bundle.kg1, &bundle.kg2] {
        let back = reload(kg);
        assert_eq!(KgCounts::of(kg), KgCounts::of(&back));
        assert_eq!(fact_set(kg), fact_set(&back));
    }
    assert_eq!(bundle.gold_entity_links.len(), 200);
}

#[test]
fn loading_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    SyntheticSpec { drop_fraction: 0.1, ..SyntheticSpec::default() }
        .generate()
        .write_openea(dir.path())
        .unwrap();
    let a = load_openea_dir(dir.path(), None).unwrap();
    let b = load_openea_dir(dir.path(), None).unwrap();
    let ids = |kg: &KnowledgeGraph| kg.entity_ids().map(|e| kg.entity_label(e).to_string()).collect::<Vec<_>>();
    assert_eq!(ids(&a.kg1), ids(&b.kg1));
    assert_eq!(ids(&a.kg2), ids(&b.kg2));
}

proptest! {
    #[test]
    fn mixed_triples_round_trip(
        rows in prop::collection::vec((0u8..6, 0u8..3, 0u8..6, any::<bool>(), "[a-z]{1,6}"), 1..25)
    ) {
        let mut text = String::new();
        for (h, r, t, literal, word) in &rows {
            if *literal {
                text.push_str(&format!("e{h}\tp{r}\t\"{word} {t}\"\n"));
            } else {
                text.push_str(&format!("e{h}\tr{r}\te{t}\n"));
            }
        }
        let mut kg = KnowledgeGraph::new();
        let report = parse_triples(&text, TailMode::Mixed, &mut kg);
        prop_assert!(report.malformed.is_empty());
        let back = reload(&kg);
        prop_assert_eq!(KgCounts::of(&kg), KgCounts::of(&back));
        prop_assert_eq!(fact_set(&kg), fact_set(&back));
    }
}
