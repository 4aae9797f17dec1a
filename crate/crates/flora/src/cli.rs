//! `flora align | eval | explain | generate`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 data error,
//! 3 explanation target not found.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use flora_core::engine::{align, Config};
use flora_core::eval::{classification_metrics, per_category, ranking_metrics};
use flora_core::explain::explain_all;
use flora_core::kg::KnowledgeGraph;
use flora_core::literal::StringProvider;
use log::info;

use crate::formats::{self, RunManifest};
use crate::ingest::{self, DatasetBundle, KgCounts, TailMode};
use crate::synthetic::SyntheticSpec;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
    NotFound(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
            Failure::NotFound(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Data(e) => write!(f, "data error: {e:#}"),
            Failure::NotFound(m) => write!(f, "not found: {m}"),
        }
    }
}

type Outcome = Result<(), Failure>;

fn data<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Data(e.into())
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

#[derive(Debug, Parser)]
#[command(name = "flora", version, about = "Unsupervised knowledge graph alignment")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, env = "FLORA_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align two knowledge graphs.
    Align(Box<AlignArgs>),
    /// Score an alignment against gold links.
    Eval(EvalArgs),
    /// Show why pairs in a run directory were matched.
    Explain(ExplainArgs),
    /// Write a synthetic benchmark in the OpenEA layout.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// KG1 triples; quoted tails are literals.
    #[arg(long, required_unless_present = "openea", conflicts_with = "openea")]
    pub kg1: Option<PathBuf>,
    #[arg(long, required_unless_present = "openea", conflicts_with = "openea")]
    pub kg2: Option<PathBuf>,
    /// Extra attribute-triple file for KG1; every tail is a literal.
    #[arg(long)]
    pub kg1_attr: Option<PathBuf>,
    #[arg(long)]
    pub kg2_attr: Option<PathBuf>,
    /// OpenEA dataset directory (rel_triples_1, attr_triples_1, ...).
    #[arg(long)]
    pub openea: Option<PathBuf>,
    /// Training links, `label1<TAB>label2`.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// Precomputed string similarities, `literal1<TAB>literal2<TAB>score`.
    #[arg(long)]
    pub sim_file: Option<PathBuf>,
    /// `key = value` config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "flora-out")]
    pub out_dir: PathBuf,
    /// Relation whose objects are classes.
    #[arg(long)]
    pub type_relation: Option<String>,
    /// Sets any config key, e.g. `--set theta_e=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub theta_r: Option<f64>,
    #[arg(long)]
    pub theta_s: Option<f64>,
    #[arg(long)]
    pub theta_e: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub l_max: Option<usize>,
    #[arg(long)]
    pub fun_budget: Option<u32>,
    #[arg(long)]
    pub rel_report_threshold: Option<f64>,
    /// Seed for every random choice (recorded as `rng_seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fun_exact_cap: Option<u64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub candidate_cap: Option<usize>,
    #[arg(long)]
    pub hub_cap: Option<usize>,
    /// Keep all candidate pairs as evidence between iterations.
    #[arg(long)]
    pub no_pruning: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted pairs (an entity alignment TSV).
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Run directory or scores file for ranking metrics.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    pub ks: Vec<usize>,
    /// KG1 triples, for the class/relation/instance breakdown.
    #[arg(long)]
    pub kg1: Option<PathBuf>,
    #[arg(long)]
    pub type_relation: Option<String>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
    #[arg(long, num_args = 2, value_names = ["LABEL1", "LABEL2"], required_unless_present = "all")]
    pub pair: Option<Vec<String>>,
    #[arg(long, conflicts_with = "pair")]
    pub all: bool,
    /// Print JSON records instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub entities: usize,
    #[arg(long, default_value_t = 1000)]
    pub relational_triples: usize,
    #[arg(long, default_value_t = 300)]
    pub attribute_triples: usize,
    #[arg(long, default_value_t = 0.0)]
    pub drop: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dangling: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("flora: cannot start worker pool: {e}");
            return 1;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Align(a) => cmd_align(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Generate(a) => cmd_generate(a),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("flora: {f}");
            f.exit_code()
        }
    }
}

fn build_config(args: &AlignArgs) -> Result<Config, Failure> {
    let mut c = Config::default();
    if let Some(p) = &args.config {
        let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).map_err(config_err)?;
        formats::apply_config_text(&text, &mut c)
            .with_context(|| p.display().to_string())
            .map_err(config_err)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))
            .map_err(config_err)?;
        c.set(k.trim(), v.trim()).map_err(config_err)?;
    }
    macro_rules! over {
        ($($field:ident),*) => {$( if let Some(v) = args.$field { c.$field = v; } )*};
    }
    over!(theta_r, theta_s, theta_e, alpha, epsilon, max_iters, l_max, fun_budget, rel_report_threshold,
          fun_exact_cap, top_k, candidate_cap, hub_cap);
    if let Some(s) = args.seed {
        c.rng_seed = s;
    }
    if args.no_pruning {
        c.pruning = false;
    }
    c.validate().map_err(config_err)?;
    Ok(c)
}

fn load_bundle(args: &AlignArgs, inputs: &mut Vec<formats::InputDigest>) -> Result<DatasetBundle, Failure> {
    let ty = args.type_relation.as_deref();
    let mut digest = |role: &str, p: &Path| -> Result<(), Failure> {
        inputs.push(formats::digest_file(role, p).with_context(|| format!("cannot read {}", p.display())).map_err(data)?);
        Ok(())
    };
    let mut bundle = if let Some(dir) = &args.openea {
        let b = ingest::load_openea_dir(dir, ty).map_err(data)?;
        for n in ["rel_triples_1", "rel_triples_2", "attr_triples_1", "attr_triples_2", "ent_links"] {
            digest(n, &dir.join(n))?;
        }
        b
    } else {
        let new = || match ty {
            Some(t) => KnowledgeGraph::with_type_relation(t),
            None => KnowledgeGraph::new(),
        };
        let (mut kg1, mut kg2) = (new(), new());
        let sides = [
            (&mut kg1, args.kg1.as_ref(), args.kg1_attr.as_ref(), "kg1"),
            (&mut kg2, args.kg2.as_ref(), args.kg2_attr.as_ref(), "kg2"),
        ];
        for (kg, main, attr, role) in sides {
            let main = main.ok_or_else(|| config_err(anyhow!("--{role} is required")))?;
            ingest::parse_triple_file(main, TailMode::Mixed, kg).map_err(data)?;
            digest(role, main)?;
            if let Some(a) = attr {
                ingest::parse_triple_file(a, TailMode::Attribute, kg).map_err(data)?;
                digest(&format!("{role}_attr"), a)?;
            }
        }
        DatasetBundle::new(kg1, kg2)
    };
    if let Some(s) = &args.seeds {
        let n = ingest::load_seed_links(s, &mut bundle).map_err(data)?;
        digest("seeds", s)?;
        info!("{n} seed links");
    }
    Ok(bundle)
}

fn ms(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let p = dir.join(name);
    fs::write(&p, contents).with_context(|| format!("cannot write {}", p.display())).map_err(data)
}

pub fn cmd_align(args: &AlignArgs) -> Outcome {
    let config = build_config(args)?;
    let mut timings = BTreeMap::new();
    let mut inputs = Vec::new();

    let t = Instant::now();
    let bundle = load_bundle(args, &mut inputs)?;
    timings.insert("load".to_string(), ms(t));
    let (c1, c2) = (KgCounts::of(&bundle.kg1), KgCounts::of(&bundle.kg2));
    info!("KG1: {c1}");
    info!("KG2: {c2}");

    let t = Instant::now();
    let provider = match &args.sim_file {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).map_err(data)?;
            inputs.push(formats::digest_file("sim_file", p).map_err(data)?);
            let (prov, bad) = formats::parse_similarity_file(&p.display().to_string(), &text);
            if bad > 0 {
                log::warn!("{}: {bad} unparsable similarity rows", p.display());
            }
            prov
        }
        None => StringProvider::BuiltinTrigram,
    };
    let table = crate::literal_table(&bundle.kg1, &bundle.kg2, &provider, &config);
    timings.insert("literal_similarity".to_string(), ms(t));
    info!("{} literal pairs via {}", table.len(), table.provider_name());
    let mut warnings = bundle.warnings.clone();
    if table.skipped_rows() > 0 {
        warnings.push(format!("{} similarity rows skipped", table.skipped_rows()));
    }

    let t = Instant::now();
    let report = align(&bundle.kg1, &bundle.kg2, &table, &bundle.seeds(), config.clone()).map_err(config_err)?;
    timings.insert("align".to_string(), ms(t));
    for s in report.iterations() {
        info!(
            "iteration {}: entity delta {:.6}, relation delta {:.6}",
            s.iteration, s.entity_delta, s.relation_delta
        );
    }

    let t = Instant::now();
    let explanations = explain_all(&report, &bundle.kg1, &bundle.kg2);
    timings.insert("explain".to_string(), ms(t));

    let out = &args.out_dir;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display())).map_err(data)?;
    write(out, formats::ENTITY_FILE, &formats::entity_tsv(&report))?;
    write(out, formats::RELATION_FILE, &formats::relation_tsv(&report))?;
    write(out, formats::SCORES_FILE, &formats::scores_tsv(&report, &bundle.kg1, &bundle.kg2))?;
    write(out, formats::EXPLANATION_FILE, &formats::explanations_jsonl(&explanations).map_err(data)?)?;
    write(out, formats::CONFIG_FILE, &formats::config_text(&config))?;

    let mut counts = BTreeMap::new();
    for (side, c) in [("kg1", c1), ("kg2", c2)] {
        counts.insert(format!("{side}_entities"), c.entities);
        counts.insert(format!("{side}_relations"), c.relations);
        counts.insert(format!("{side}_relational_triples"), c.relational_triples);
        counts.insert(format!("{side}_attribute_triples"), c.attribute_triples);
    }
    counts.insert("seed_links".into(), bundle.seed_links.len());
    counts.insert("literal_pairs".into(), table.len());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: config.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        seed: config.rng_seed,
        literal_provider: table.provider_name().into(),
        inputs,
        counts,
        timings_ms: timings,
        iterations: report.iterations().to_vec(),
        converged: report.converged(),
        entity_matches: report.entity_matches().len(),
        relation_matches: report.relation_matches().iter().filter(|m| m.op.is_some()).count(),
        warnings,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(data)?;
    write(out, formats::MANIFEST_FILE, &(json + "\n"))?;
    info!(
        "{} entity matches, {} relation alignments written to {}",
        manifest.entity_matches,
        manifest.relation_matches,
        out.display()
    );
    Ok(())
}

fn read_text(p: &Path) -> Result<String, Failure> {
    fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).map_err(data)
}

pub fn cmd_eval(args: &EvalArgs) -> Outcome {
    let pred: Vec<(String, String)> = formats::parse_scored_pairs(&read_text(&args.pred)?)
        .with_context(|| args.pred.display().to_string())
        .map_err(data)?
        .into_iter()
        .map(|(a, b, _)| (a, b))
        .collect();
    let (gold, bad) = ingest::parse_links(&read_text(&args.gold)?);
    if !bad.is_empty() {
        log::warn!("{}: {} malformed lines", args.gold.display(), bad.len());
    }
    let cls = classification_metrics(&pred, &gold)
        .with_context(|| args.gold.display().to_string())
        .map_err(data)?;
    let mut metrics: Vec<(String, f64)> = vec![
        ("precision".into(), cls.precision),
        ("recall".into(), cls.recall),
        ("f1".into(), cls.f1),
        ("n_pred".into(), cls.predicted as f64),
        ("n_gold".into(), cls.gold as f64),
        ("n_correct".into(), cls.correct as f64),
    ];
    if let Some(r) = &args.ranking {
        let path = if r.is_dir() { r.join(formats::SCORES_FILE) } else { r.clone() };
        let rows = formats::parse_scored_pairs(&read_text(&path)?)
            .with_context(|| path.display().to_string())
            .map_err(data)?;
        let mut lists: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (a, b, s) in rows {
            lists.entry(a).or_default().push((b, s));
        }
        let rank = ranking_metrics(&lists, &gold, &args.ks).map_err(data)?;
        for (k, h) in &rank.hit_at {
            metrics.push((format!("hit@{k}"), *h));
        }
        metrics.push(("mrr".into(), rank.mrr));
        metrics.push(("n_ranked_sources".into(), rank.sources as f64));
        metrics.push(("n_excluded_sources".into(), rank.excluded as f64));
    }
    if let Some(k) = &args.kg1 {
        let mut kg = match &args.type_relation {
            Some(t) => KnowledgeGraph::with_type_relation(t.as_str()),
            None => KnowledgeGraph::new(),
        };
        ingest::parse_triple_file(k, TailMode::Mixed, &mut kg).map_err(data)?;
        for (cat, m) in per_category(&pred, &gold, &kg) {
            let c = cat.as_str();
            metrics.push((format!("{c}.precision"), m.precision));
            metrics.push((format!("{c}.recall"), m.recall));
            metrics.push((format!("{c}.f1"), m.f1));
        }
    }
    let text = formats::metrics_text(&metrics);
    print!("{text}");
    if let Some(o) = &args.out {
        fs::write(o, &text).with_context(|| format!("cannot write {}", o.display())).map_err(data)?;
    }
    Ok(())
}

pub fn cmd_explain(args: &ExplainArgs) -> Outcome {
    let dir = &args.run_dir;
    let records = formats::parse_explanations(&read_text(&dir.join(formats::EXPLANATION_FILE))?).map_err(data)?;
    let selected: Vec<_> = if args.all {
        records.iter().collect()
    } else {
        let pair = args.pair.as_ref().expect("clap requires --pair without --all");
        let (l1, l2) = (&pair[0], &pair[1]);
        match records.iter().find(|e| &e.label1 == l1 && &e.label2 == l2) {
            Some(e) => vec![e],
            None => return Err(not_found(dir, l1, l2)?),
        }
    };
    for e in selected {
        if args.json {
            println!("{}", serde_json::to_string(e).map_err(data)?);
        } else {
            print!("{e}");
        }
    }
    Ok(())
}

/// Distinguishes never-scored pairs from ones that scored too low or lost
/// to a competitor, using the run's score list and config.
fn not_found(dir: &Path, l1: &str, l2: &str) -> Result<Failure, Failure> {
    let mut config = Config::default();
    formats::apply_config_text(&read_text(&dir.join(formats::CONFIG_FILE))?, &mut config).map_err(data)?;
    let scores = formats::parse_scored_pairs(&read_text(&dir.join(formats::SCORES_FILE))?).map_err(data)?;
    let msg = match scores.iter().find(|(a, b, _)| a == l1 && b == l2) {
        None => format!("{l1} / {l2}: never scored"),
        Some((_, _, s)) if *s <= config.theta_e => {
            format!("{l1} / {l2}: below theta_e (score {s:.6} <= {})", config.theta_e)
        }
        Some((_, _, s)) => format!("{l1} / {l2}: scored {s:.6} but not reported (a competing pair won)"),
    };
    Ok(Failure::NotFound(msg))
}

pub fn cmd_generate(args: &GenerateArgs) -> Outcome {
    let spec = SyntheticSpec {
        entities: args.entities,
        relational_triples: args.relational_triples,
        attribute_triples: args.attribute_triples,
        drop_fraction: args.drop,
        dangling_fraction: args.dangling,
        seed: args.seed,
        ..SyntheticSpec::default()
    };
    spec.generate().write_openea(&args.out_dir).map_err(data)?;
    info!("synthetic dataset written to {}", args.out_dir.display());
    Ok(())
}
