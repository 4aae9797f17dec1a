//! In-memory knowledge graph with interned handles and inverse relations.
//!
//! Every declared relation `r` gets an inverse `r^-1` at handle `id ^ 1`.
//! Triples are stored once in their forward direction; the
//! `(head, relation) -> tails` index and the per-entity incident-fact
//! lists expose both directions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::value::{LiteralType, LiteralValue};
use crate::FxMap;

/// Label suffix that marks the synthesized inverse of a relation.
pub const INVERSE_SUFFIX: &str = "^-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelationId(pub u32);

impl RelationId {
    #[inline]
    pub fn inverse(self) -> RelationId {
        RelationId(self.0 ^ 1)
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    /// The declared (non-inverse) relation of the pair.
    #[inline]
    pub fn forward(self) -> RelationId {
        RelationId(self.0 & !1)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EntityKind {
    Instance,
    Class,
    Literal,
}

#[derive(Debug, Clone)]
pub struct Entity {
    pub label: String,
    pub kind: EntityKind,
    pub literal: Option<LiteralValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

/// Tail position of an inserted fact.
#[derive(Debug, Clone)]
pub enum Term<'a> {
    Entity(&'a str),
    Literal(LiteralValue),
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    entity_index: FxMap<String, EntityId>,
    literal_index: FxMap<(LiteralType, String), EntityId>,
    relation_labels: Vec<String>,
    relation_index: FxMap<String, RelationId>,
    triples: Vec<Triple>,
    triple_index: FxMap<Triple, usize>,
    tails: FxMap<(EntityId, RelationId), Vec<EntityId>>,
    incident: Vec<Vec<(RelationId, EntityId)>>,
    relation_facts: Vec<Vec<(EntityId, EntityId)>>,
    type_relation: Option<String>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tails of `label` facts become [`EntityKind::Class`].
    pub fn with_type_relation(label: impl Into<String>) -> Self {
        KnowledgeGraph {
            type_relation: Some(label.into()),
            ..Self::default()
        }
    }

    pub fn type_relation(&self) -> Option<&str> {
        self.type_relation.as_deref()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// Number of relation handles, inverses included.
    pub fn relation_count(&self) -> usize {
        self.relation_labels.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.index()]
    }

    pub fn entity_label(&self, id: EntityId) -> &str {
        &self.entities[id.index()].label
    }

    pub fn is_literal(&self, id: EntityId) -> bool {
        self.entities[id.index()].kind == EntityKind::Literal
    }

    pub fn relation_label(&self, id: RelationId) -> &str {
        &self.relation_labels[id.index()]
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.relation_labels.len() as u32).map(RelationId)
    }

    pub fn forward_relation_ids(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.relation_ids().filter(|r| !r.is_inverse())
    }

    /// Looks up a non-literal entity by label.
    pub fn lookup_entity(&self, label: &str) -> Option<EntityId> {
        self.entity_index.get(label).copied()
    }

    pub fn lookup_literal(&self, value: &LiteralValue) -> Option<EntityId> {
        self.literal_index
            .get(&(value.kind(), value.canonical()))
            .copied()
    }

    /// Accepts both forward labels and `label^-1`.
    pub fn lookup_relation(&self, label: &str) -> Option<RelationId> {
        self.relation_index.get(label).copied()
    }

    /// Adds `head -relation-> tail`, creating handles on first use.
    ///
    /// A relation label ending in [`INVERSE_SUFFIX`] is read as the inverse
    /// of its base relation. Re-adding a stored fact returns its existing id.
    pub fn add_triple(&mut self, head: &str, relation: &str, tail: Term<'_>) -> usize {
        let is_type = self.type_relation.as_deref() == Some(relation);
        let h = self.intern_entity(head);
        let t = match tail {
            Term::Entity(label) => {
                let id = self.intern_entity(label);
                if is_type {
                    self.entities[id.index()].kind = EntityKind::Class;
                }
                id
            }
            Term::Literal(value) => self.intern_literal(value),
        };
        let r = self.intern_relation(relation);
        self.add_fact(h, r, t)
    }

    /// Adds a fact between existing handles; inverse relations are normalized.
    pub fn add_fact(&mut self, head: EntityId, relation: RelationId, tail: EntityId) -> usize {
        let triple = if relation.is_inverse() {
            Triple {
                head: tail,
                relation: relation.inverse(),
                tail: head,
            }
        } else {
            Triple {
                head,
                relation,
                tail,
            }
        };
        if let Some(&id) = self.triple_index.get(&triple) {
            return id;
        }
        let id = self.triples.len();
        self.triples.push(triple);
        self.triple_index.insert(triple, id);
        self.index_view(triple.head, triple.relation, triple.tail);
        self.index_view(triple.tail, triple.relation.inverse(), triple.head);
        id
    }

    fn index_view(&mut self, head: EntityId, relation: RelationId, tail: EntityId) {
        let KnowledgeGraph {
            entities,
            relation_labels,
            tails,
            incident,
            relation_facts,
            ..
        } = self;
        let by_label = |a: &EntityId, b: &EntityId| cmp_entities(entities, *a, *b);
        let bucket = tails.entry((head, relation)).or_default();
        let pos = bucket
            .binary_search_by(|probe| by_label(probe, &tail))
            .unwrap_or_else(|p| p);
        bucket.insert(pos, tail);

        let facts = &mut incident[tail.index()];
        let pos = facts
            .binary_search_by(|&(r, h)| {
                relation_labels[r.index()]
                    .as_bytes()
                    .cmp(relation_labels[relation.index()].as_bytes())
                    .then_with(|| r.cmp(&relation))
                    .then_with(|| cmp_entities(entities, h, head))
            })
            .unwrap_or_else(|p| p);
        facts.insert(pos, (relation, head));
        relation_facts[relation.index()].push((head, tail));
    }

    fn intern_entity(&mut self, label: &str) -> EntityId {
        if let Some(&id) = self.entity_index.get(label) {
            return id;
        }
        let id = self.push_entity(Entity {
            label: label.to_string(),
            kind: EntityKind::Instance,
            literal: None,
        });
        self.entity_index.insert(label.to_string(), id);
        id
    }

    fn intern_literal(&mut self, value: LiteralValue) -> EntityId {
        let key = (value.kind(), value.canonical());
        if let Some(&id) = self.literal_index.get(&key) {
            return id;
        }
        let id = self.push_entity(Entity {
            label: key.1.clone(),
            kind: EntityKind::Literal,
            literal: Some(value),
        });
        self.literal_index.insert(key, id);
        id
    }

    fn push_entity(&mut self, entity: Entity) -> EntityId {
        let id = EntityId(self.entities.len() as u32);
        self.entities.push(entity);
        self.incident.push(Vec::new());
        id
    }

    fn intern_relation(&mut self, label: &str) -> RelationId {
        if let Some(&id) = self.relation_index.get(label) {
            return id;
        }
        let (base, inverse) = match label.strip_suffix(INVERSE_SUFFIX) {
            Some(base) if !base.is_empty() => (base, true),
            _ => (label, false),
        };
        let forward = match self.relation_index.get(base) {
            Some(&id) => id,
            None => {
                let id = RelationId(self.relation_labels.len() as u32);
                let inv_label = alloc::format!("{base}{INVERSE_SUFFIX}");
                self.relation_labels.push(base.to_string());
                self.relation_labels.push(inv_label.clone());
                self.relation_facts.push(Vec::new());
                self.relation_facts.push(Vec::new());
                self.relation_index.insert(base.to_string(), id);
                self.relation_index.insert(inv_label, id.inverse());
                id
            }
        };
        if inverse {
            forward.inverse()
        } else {
            forward
        }
    }

    /// All facts `r(h, tail)` as `(r, h)`, inverse views included, ordered by
    /// relation label then head label.
    pub fn incident_facts(&self, tail: EntityId) -> Result<&[(RelationId, EntityId)]> {
        self.incident
            .get(tail.index())
            .map(Vec::as_slice)
            .ok_or(Error::UnknownEntity(tail.0))
    }

    /// Like [`incident_facts`](Self::incident_facts) for ids known to be valid.
    #[inline]
    pub(crate) fn facts_at(&self, tail: EntityId) -> &[(RelationId, EntityId)] {
        &self.incident[tail.index()]
    }

    /// `{t | r(h, t)}` in label order; empty when there is no such fact.
    pub fn tails_of(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `{h | r(h, t)}` in label order.
    pub fn heads_of(&self, relation: RelationId, tail: EntityId) -> &[EntityId] {
        self.tails_of(tail, relation.inverse())
    }

    /// All `(h, t)` with `r(h, t)`, in insertion order.
    pub fn facts_of(&self, relation: RelationId) -> &[(EntityId, EntityId)] {
        self.relation_facts
            .get(relation.index())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        let triple = if relation.is_inverse() {
            Triple {
                head: tail,
                relation: relation.inverse(),
                tail: head,
            }
        } else {
            Triple {
                head,
                relation,
                tail,
            }
        };
        self.triple_index.contains_key(&triple)
    }

    pub fn cmp_entities(&self, a: EntityId, b: EntityId) -> Ordering {
        cmp_entities(&self.entities, a, b)
    }

    pub fn cmp_relations(&self, a: RelationId, b: RelationId) -> Ordering {
        self.relation_labels[a.index()]
            .as_bytes()
            .cmp(self.relation_labels[b.index()].as_bytes())
            .then_with(|| a.cmp(&b))
    }

    /// Number of facts whose tail is a literal.
    pub fn attribute_triple_count(&self) -> usize {
        self.triples
            .iter()
            .filter(|t| self.is_literal(t.tail))
            .count()
    }
}

fn cmp_entities(entities: &[Entity], a: EntityId, b: EntityId) -> Ordering {
    entities[a.index()]
        .label
        .as_bytes()
        .cmp(entities[b.index()].label.as_bytes())
        .then_with(|| a.cmp(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn labels(kg: &KnowledgeGraph, facts: &[(RelationId, EntityId)]) -> Vec<(String, String)> {
        facts
            .iter()
            .map(|&(r, h)| {
                (
                    kg.relation_label(r).to_string(),
                    kg.entity_label(h).to_string(),
                )
            })
            .collect()
    }

    #[test]
    fn duplicate_insert_is_noop() {
        let mut kg = KnowledgeGraph::new();
        let a = kg.add_triple("A", "capital", Term::Entity("B"));
        let b = kg.add_triple("A", "capital", Term::Entity("B"));
        assert_eq!(a, b);
        assert_eq!(kg.triple_count(), 1);
        // the inverse spelling is the same fact
        kg.add_triple("B", "capital^-1", Term::Entity("A"));
        assert_eq!(kg.triple_count(), 1);
    }

    #[test]
    fn inverse_views() {
        let mut kg = KnowledgeGraph::new();
        kg.add_triple("A", "capital", Term::Entity("B"));
        let a = kg.lookup_entity("A").unwrap();
        let b = kg.lookup_entity("B").unwrap();
        let cap = kg.lookup_relation("capital").unwrap();
        assert_eq!(kg.incident_facts(b).unwrap(), &[(cap, a)]);
        assert_eq!(kg.incident_facts(a).unwrap(), &[(cap.inverse(), b)]);
        assert_eq!(kg.relation_label(cap.inverse()), "capital^-1");
        assert_eq!(cap.inverse().inverse(), cap);
        assert_ne!(cap.inverse(), cap);
    }

    #[test]
    fn tails_counted() {
        let mut kg = KnowledgeGraph::new();
        for t in ["x", "y", "z"] {
            kg.add_triple("A", "capital", Term::Entity(t));
        }
        let a = kg.lookup_entity("A").unwrap();
        let cap = kg.lookup_relation("capital").unwrap();
        assert_eq!(kg.tails_of(a, cap).len(), 3);
    }

    #[test]
    fn incident_order_and_empty() {
        let mut kg = KnowledgeGraph::new();
        kg.add_triple("c", "q", Term::Entity("t"));
        kg.add_triple("b", "p", Term::Entity("t"));
        kg.add_triple("a", "p", Term::Entity("t"));
        kg.add_triple("lonely", "p", Term::Entity("a"));
        let t = kg.lookup_entity("t").unwrap();
        assert_eq!(
            labels(&kg, kg.incident_facts(t).unwrap()),
            vec![
                ("p".into(), "a".into()),
                ("p".into(), "b".into()),
                ("q".into(), "c".into())
            ]
        );
        assert!(kg.incident_facts(EntityId(99)).is_err());

        let mut kg = KnowledgeGraph::new();
        kg.add_triple("t", "q", Term::Entity("c"));
        let c = kg.lookup_entity("c").unwrap();
        assert_eq!(
            labels(&kg, kg.incident_facts(c).unwrap()),
            vec![("q".into(), "t".into())]
        );
    }

    #[test]
    fn isolated_entity_has_no_facts() {
        let mut kg = KnowledgeGraph::new();
        kg.add_triple("a", "p", Term::Entity("b"));
        // literal-free entity with only an outgoing fact sees the inverse view
        let a = kg.lookup_entity("a").unwrap();
        assert_eq!(kg.incident_facts(a).unwrap().len(), 1);
        let mut empty = KnowledgeGraph::new();
        assert!(empty.incident_facts(EntityId(0)).is_err());
        empty.add_triple("x", "p", Term::Entity("x"));
        // self loop: both views on the same entity
        assert_eq!(empty.incident_facts(EntityId(0)).unwrap().len(), 2);
    }

    #[test]
    fn literals_interned_by_type_and_form() {
        let mut kg = KnowledgeGraph::new();
        kg.add_triple("a", "height", Term::Literal(LiteralValue::infer("1.0")));
        kg.add_triple("b", "height", Term::Literal(LiteralValue::infer("1")));
        kg.add_triple("c", "name", Term::Literal(LiteralValue::infer("\"1x\"")));
        let one = kg.lookup_literal(&LiteralValue::Number(1.0)).unwrap();
        assert_eq!(kg.entity(one).kind, EntityKind::Literal);
        let h = kg.lookup_relation("height").unwrap();
        assert_eq!(kg.heads_of(h, one).len(), 2);
        assert_eq!(kg.attribute_triple_count(), 3);
        // literals never collide with instance labels
        assert!(kg.lookup_entity("1").is_none());
    }

    #[test]
    fn type_relation_marks_classes() {
        let mut kg = KnowledgeGraph::with_type_relation("type");
        kg.add_triple("a", "type", Term::Entity("Person"));
        kg.add_triple("a", "knows", Term::Entity("b"));
        let p = kg.lookup_entity("Person").unwrap();
        let b = kg.lookup_entity("b").unwrap();
        assert_eq!(kg.entity(p).kind, EntityKind::Class);
        assert_eq!(kg.entity(b).kind, EntityKind::Instance);
    }

    #[test]
    fn handles_deterministic_in_insertion_order() {
        let build = || {
            let mut kg = KnowledgeGraph::new();
            kg.add_triple("z", "r", Term::Entity("a"));
            kg.add_triple("m", "s", Term::Entity("z"));
            kg
        };
        let (k1, k2) = (build(), build());
        for id in k1.entity_ids() {
            assert_eq!(k1.entity_label(id), k2.entity_label(id));
        }
        assert_eq!(k1.lookup_relation("s"), Some(RelationId(2)));
    }
}
