//! Text formats read and written by the command-line driver.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use flora_core::engine::{AlignmentReport, Config, IterationStats};
use flora_core::explain::Explanation;
use flora_core::kg::KnowledgeGraph;
use flora_core::literal::StringProvider;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ENTITY_FILE: &str = "entity_alignment.tsv";
pub const RELATION_FILE: &str = "relation_alignment.tsv";
pub const SCORES_FILE: &str = "scores.tsv";
pub const EXPLANATION_FILE: &str = "explanations.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Applies `key = value` lines to `config`. `#` starts a comment.
pub fn apply_config_text(text: &str, config: &mut Config) -> anyhow::Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", i + 1);
        };
        config
            .set(k.trim(), v.trim())
            .with_context(|| format!("line {}", i + 1))?;
    }
    Ok(())
}

pub fn config_text(config: &Config) -> String {
    let mut s = String::new();
    for (k, v) in config.entries() {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

/// `label1<TAB>label2<TAB>score`, scores to 6 decimals, in report order.
pub fn entity_tsv(report: &AlignmentReport) -> String {
    let mut s = String::new();
    for m in report.entity_matches() {
        let _ = writeln!(s, "{}\t{}\t{:.6}", m.label1, m.label2, m.score);
    }
    s
}

/// `label1<TAB>op<TAB>label2<TAB>score12<TAB>score21` for relation pairs
/// that reach the reporting threshold in some direction.
pub fn relation_tsv(report: &AlignmentReport) -> String {
    let mut s = String::new();
    for m in report.relation_matches() {
        if let Some(op) = m.op {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.6}\t{:.6}", m.label1, op, m.label2, m.score12, m.score21);
        }
    }
    s
}

/// Every stored non-literal entity pair with a positive score, grouped by
/// KG1 label and best first within a group. Used for ranking metrics.
pub fn scores_tsv(report: &AlignmentReport, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> String {
    let mut lefts: Vec<_> = kg1.entity_ids().filter(|&e| !kg1.is_literal(e)).collect();
    lefts.sort_by(|&a, &b| kg1.cmp_entities(a, b));
    let mut s = String::new();
    for l in lefts {
        for (r, score) in report.ranking(kg2, l) {
            if !kg2.is_literal(r) {
                let _ = writeln!(s, "{}\t{}\t{:.6}", kg1.entity_label(l), kg2.entity_label(r), score);
            }
        }
    }
    s
}

/// Scored pairs from an entity or scores TSV. The score column defaults
/// to 1 when absent.
pub fn parse_scored_pairs(text: &str) -> anyhow::Result<Vec<(String, String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let score = match cols.get(2) {
            Some(s) => s.trim().parse().with_context(|| format!("line {}: bad score", i + 1))?,
            None => 1.0,
        };
        match cols.as_slice() {
            [a, b, ..] => out.push((a.to_string(), b.to_string(), score)),
            _ => bail!("line {}: expected at least 2 columns", i + 1),
        }
    }
    Ok(out)
}

/// Similarity rows `literal1<TAB>literal2<TAB>score`. Rows that do not
/// parse are counted and skipped.
pub fn parse_similarity_file(name: &str, text: &str) -> (StringProvider, usize) {
    let mut rows = Vec::new();
    let mut bad = 0;
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match cols.as_slice() {
            [a, b, s] => match s.trim().parse::<f64>() {
                Ok(v) => rows.push((a.to_string(), b.to_string(), v)),
                Err(_) => bad += 1,
            },
            _ => bad += 1,
        }
    }
    (
        StringProvider::Precomputed {
            name: name.into(),
            rows,
        },
        bad,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest_file(role: &str, path: &Path) -> io::Result<InputDigest> {
    let mut f = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(InputDigest {
        role: role.into(),
        path: path.to_path_buf(),
        sha256: hex::encode(hasher.finalize()),
    })
}

/// What a run directory records about how it was produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub literal_provider: String,
    pub inputs: Vec<InputDigest>,
    pub counts: BTreeMap<String, usize>,
    pub timings_ms: BTreeMap<String, f64>,
    pub iterations: Vec<IterationStats>,
    pub converged: bool,
    pub entity_matches: usize,
    pub relation_matches: usize,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn config(&self) -> anyhow::Result<Config> {
        let mut c = Config::default();
        for (k, v) in &self.config {
            c.set(k, v)?;
        }
        Ok(c)
    }
}

/// One JSON record per line.
pub fn explanations_jsonl(explanations: &[Explanation]) -> anyhow::Result<String> {
    let mut s = String::new();
    for e in explanations {
        s.push_str(&serde_json::to_string(e)?);
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_explanations(text: &str) -> anyhow::Result<Vec<Explanation>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("record {}", i + 1)))
        .collect()
}

/// `key<TAB>value` lines; reals to 6 decimals.
pub fn metrics_text(metrics: &[(String, f64)]) -> String {
    let mut s = String::new();
    for (k, v) in metrics {
        if v.fract() == 0.0 && k.starts_with('n') {
            let _ = writeln!(s, "{k}\t{v}");
        } else {
            let _ = writeln!(s, "{k}\t{v:.6}");
        }
    }
    s
}
