//! Loading triple files, link files and OpenEA dataset directories.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use flora_core::engine::RelOp;
use flora_core::kg::{EntityId, EntityKind, KnowledgeGraph, Term};
use flora_core::value::LiteralValue;
use log::warn;

/// How the third column of a triple file is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Always an entity.
    Relational,
    /// Always a typed literal.
    Attribute,
    /// A literal when quoted (`"..."`, optionally with a `^^type` or `@lang`
    /// tag), otherwise an entity.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {malformed} of {lines} lines malformed (first: {first})", path.display())]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        lines: usize,
        first: Diagnostic,
    },
    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),
}

/// Outcome of reading one triple file.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    /// Non-blank lines seen.
    pub lines: usize,
    /// Well-formed lines (duplicates included).
    pub triples: usize,
    pub malformed: Vec<Diagnostic>,
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn is_quoted(s: &str) -> bool {
    s.starts_with('"') && s.len() > 1
}

/// Adds every well-formed `head<TAB>relation<TAB>tail` line of `text` to `kg`.
pub fn parse_triples(text: &str, mode: TailMode, kg: &mut KnowledgeGraph) -> ParseReport {
    let mut report = ParseReport::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            report.malformed.push(Diagnostic {
                line: i + 1,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
            continue;
        }
        if let Some(c) = cols.iter().position(|c| c.trim().is_empty()) {
            report.malformed.push(Diagnostic {
                line: i + 1,
                message: format!("empty column {}", c + 1),
            });
            continue;
        }
        let (h, r, t) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        let literal = match mode {
            TailMode::Relational => false,
            TailMode::Attribute => true,
            TailMode::Mixed => is_quoted(t),
        };
        let tail = if literal {
            Term::Literal(LiteralValue::infer(t))
        } else {
            Term::Entity(t)
        };
        kg.add_triple(h, r, tail);
        report.triples += 1;
    }
    report
}

/// Reads a triple file into `kg`. More than 1% malformed lines is fatal.
pub fn parse_triple_file(path: &Path, mode: TailMode, kg: &mut KnowledgeGraph) -> Result<ParseReport, IngestError> {
    let report = parse_triples(&read(path)?, mode, kg);
    if report.malformed.len() * 100 > report.lines {
        return Err(IngestError::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: report.malformed.len(),
            lines: report.lines,
            first: report.malformed[0].clone(),
        });
    }
    for d in report.malformed.iter().take(10) {
        warn!("{}: {d}", path.display());
    }
    Ok(report)
}

/// Label pairs with the diagnostics of skipped lines.
pub type Links = (Vec<(String, String)>, Vec<Diagnostic>);

/// Two-column link lines; malformed lines become diagnostics. Extra
/// columns (such as a score) are ignored.
pub fn parse_links(text: &str) -> Links {
    let mut links = Vec::new();
    let mut bad = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next().map(str::trim), cols.next().map(str::trim)) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => links.push((a.to_string(), b.to_string())),
            _ => bad.push(Diagnostic {
                line: i + 1,
                message: "expected `label1<TAB>label2`".into(),
            }),
        }
    }
    (links, bad)
}

pub fn read_links(path: &Path) -> Result<Links, IngestError> {
    Ok(parse_links(&read(path)?))
}

/// Per-KG sizes reported after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct KgCounts {
    pub entities: usize,
    pub relations: usize,
    pub relational_triples: usize,
    pub attribute_triples: usize,
}

impl KgCounts {
    pub fn of(kg: &KnowledgeGraph) -> Self {
        let attribute_triples = kg.attribute_triple_count();
        KgCounts {
            entities: kg.entity_ids().filter(|&e| !kg.is_literal(e)).count(),
            relations: kg.forward_relation_ids().count(),
            relational_triples: kg.triple_count() - attribute_triples,
            attribute_triples,
        }
    }
}

impl fmt::Display for KgCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} entities, {} relations, {} relational triples, {} attribute triples",
            self.entities, self.relations, self.relational_triples, self.attribute_triples
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatasetBundle {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub gold_entity_links: Vec<(String, String)>,
    pub gold_relation_links: Option<Vec<(String, RelOp, String)>>,
    pub seed_links: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl DatasetBundle {
    pub fn new(kg1: KnowledgeGraph, kg2: KnowledgeGraph) -> Self {
        DatasetBundle {
            kg1,
            kg2,
            ..Default::default()
        }
    }

    /// Seed links resolved to handles; unresolvable ones were dropped with a
    /// warning when loaded.
    pub fn seeds(&self) -> Vec<(EntityId, EntityId)> {
        self.seed_links
            .iter()
            .filter_map(|(a, b)| Some((self.kg1.lookup_entity(a)?, self.kg2.lookup_entity(b)?)))
            .collect()
    }

    fn warn(&mut self, message: String) {
        warn!("{message}");
        self.warnings.push(message);
    }

    /// Records a warning for every gold link whose labels do not resolve.
    pub fn check_gold(&mut self) {
        let missing: Vec<String> = self
            .gold_entity_links
            .iter()
            .filter(|(a, b)| self.kg1.lookup_entity(a).is_none() || self.kg2.lookup_entity(b).is_none())
            .map(|(a, b)| format!("gold link {a} -> {b} does not resolve"))
            .collect();
        if !missing.is_empty() {
            self.warn(format!("{} gold links do not resolve (first: {})", missing.len(), missing[0]));
        }
    }
}

fn require(dir: &Path, name: &str) -> Result<PathBuf, IngestError> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(IngestError::MissingFile(p))
    }
}

fn new_kg(type_relation: Option<&str>) -> KnowledgeGraph {
    match type_relation {
        Some(t) => KnowledgeGraph::with_type_relation(t),
        None => KnowledgeGraph::new(),
    }
}

/// Loads `rel_triples_{1,2}`, `attr_triples_{1,2}` and `ent_links`.
pub fn load_openea_dir(dir: &Path, type_relation: Option<&str>) -> Result<DatasetBundle, IngestError> {
    let names = ["rel_triples_1", "rel_triples_2", "attr_triples_1", "attr_triples_2", "ent_links"];
    let paths = names.map(|n| require(dir, n));
    let [r1, r2, a1, a2, links] = paths;
    let (r1, r2, a1, a2, links) = (r1?, r2?, a1?, a2?, links?);
    let mut kg1 = new_kg(type_relation);
    let mut kg2 = new_kg(type_relation);
    let mut bundle_warnings = Vec::new();
    for (kg, rel, attr) in [(&mut kg1, &r1, &a1), (&mut kg2, &r2, &a2)] {
        let rep = parse_triple_file(rel, TailMode::Relational, kg)?;
        if rep.triples == 0 {
            bundle_warnings.push(format!("{} has no triples", rel.display()));
        }
        parse_triple_file(attr, TailMode::Attribute, kg)?;
    }
    let mut bundle = DatasetBundle::new(kg1, kg2);
    for w in bundle_warnings {
        bundle.warn(w);
    }
    let (gold, bad) = read_links(&links)?;
    for d in bad {
        bundle.warn(format!("{}: {d}", links.display()));
    }
    bundle.gold_entity_links = gold;
    bundle.check_gold();
    Ok(bundle)
}

/// Attaches seed links from a two-column file; lines naming unknown
/// entities are skipped with a warning. Returns the number attached.
pub fn load_seed_links(path: &Path, bundle: &mut DatasetBundle) -> Result<usize, IngestError> {
    let (links, bad) = read_links(path)?;
    for d in bad {
        bundle.warn(format!("{}: {d}", path.display()));
    }
    let mut n = 0;
    for (a, b) in links {
        if bundle.kg1.lookup_entity(&a).is_none() {
            bundle.warn(format!("{}: seed entity {a:?} not in KG1", path.display()));
        } else if bundle.kg2.lookup_entity(&b).is_none() {
            bundle.warn(format!("{}: seed entity {b:?} not in KG2", path.display()));
        } else {
            bundle.seed_links.push((a, b));
            n += 1;
        }
    }
    Ok(n)
}

/// Relation gold links, `label1<TAB>op<TAB>label2` with op SUB, SUP or EQV.
pub fn parse_relation_links(text: &str) -> (Vec<(String, RelOp, String)>, Vec<Diagnostic>) {
    let mut links = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        match cols.as_slice() {
            [a, op, b, ..] if RelOp::parse(op).is_some() => {
                links.push((a.to_string(), RelOp::parse(op).unwrap(), b.to_string()))
            }
            _ => bad.push(Diagnostic {
                line: i + 1,
                message: "expected `label1<TAB>SUB|SUP|EQV<TAB>label2`".into(),
            }),
        }
    }
    (links, bad)
}

/// Writes the forward facts of `kg`: entity-valued ones to `relational`,
/// literal-valued ones to `attributes`.
pub fn write_kg(kg: &KnowledgeGraph, relational: &mut impl Write, attributes: &mut impl Write) -> io::Result<()> {
    for t in kg.triples() {
        let h = kg.entity_label(t.head);
        let r = kg.relation_label(t.relation);
        let tail = kg.entity(t.tail);
        match (&tail.literal, tail.kind) {
            (Some(v), _) => writeln!(attributes, "{h}\t{r}\t{v}")?,
            (None, EntityKind::Literal) => unreachable!("literal entities carry a value"),
            (None, _) => writeln!(relational, "{h}\t{r}\t{}", tail.label)?,
        }
    }
    Ok(())
}
