use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flora(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flora"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two single-file KGs sharing three named entities linked in a chain.
fn tiny(dir: &Path) {
    fs::write(
        dir.join("kg1.tsv"),
        "x\tname\t\"Zanzibar Province\"\ny\tname\t\"Stone Town\"\ny\tlocatedIn\tx\nz\tlocatedIn\ty\n\
         w\tname\t\"Lake Tanganyika\"\n",
    )
    .unwrap();
    fs::write(
        dir.join("kg2.tsv"),
        "x2\tlabel\t\"Zanzibar Province\"\ny2\tlabel\t\"Stone Town\"\ny2\tpartOf\tx2\nz2\tpartOf\ty2\n\
         v2\tlabel\t\"Mount Meru\"\n",
    )
    .unwrap();
    fs::write(dir.join("gold.tsv"), "x\tx2\ny\ty2\nz\tz2\n").unwrap();
}

#[test]
fn missing_required_input_is_a_usage_error() {
    let o = flora(&["align", "--kg1", "nowhere.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(flora(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = flora(&["align", "--kg1", "missing1.tsv", "--kg2", "missing2.tsv", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path());
    let (k1, k2) = (dir.path().join("kg1.tsv"), dir.path().join("kg2.tsv"));
    let o = flora(&["align", "--kg1", p(&k1), "--kg2", p(&k2), "--alpha", "0.5", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn align_eval_explain_on_a_tiny_pair() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path());
    let out = dir.path().join("run");
    let (k1, k2) = (dir.path().join("kg1.tsv"), dir.path().join("kg2.tsv"));
    let o = flora(&["align", "--kg1", p(&k1), "--kg2", p(&k2), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty(), "data goes to files only");
    for f in ["entity_alignment.tsv", "relation_alignment.tsv", "scores.tsv", "explanations.jsonl", "manifest.json", "config.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let ent = fs::read_to_string(out.join("entity_alignment.tsv")).unwrap();
    let rows: Vec<&str> = ent.lines().collect();
    assert_eq!(rows.len(), 3, "{ent}");
    assert!(fs::read_to_string(out.join("relation_alignment.tsv")).unwrap().contains("locatedIn\tEQV\tpartOf\t"));

    let gold = dir.path().join("gold.tsv");
    let e = flora(&["eval", "--pred", p(&out.join("entity_alignment.tsv")), "--gold", p(&gold), "--ranking", p(&out)]);
    assert!(e.status.success());
    let text = stdout(&e);
    assert!(text.contains("f1\t1.000000"), "{text}");
    assert!(text.contains("hit@1\t1.000000") && text.contains("hit@10\t1.000000"), "{text}");

    let x = flora(&["explain", "--run-dir", p(&out), "--pair", "z", "z2"]);
    assert!(x.status.success());
    assert!(stdout(&x).contains("locatedIn"));
    let all = flora(&["explain", "--run-dir", p(&out), "--all", "--json"]);
    assert_eq!(stdout(&all).lines().count(), rows.len());

    let missing = flora(&["explain", "--run-dir", p(&out), "--pair", "w", "v2"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("never scored"));
}

#[test]
fn eval_reports_partial_precision() {
    let dir = tempfile::tempdir().unwrap();
    let mut gold = String::new();
    let mut pred = String::new();
    for i in 0..10 {
        gold.push_str(&format!("a{i}\tb{i}\n"));
        let j = if i >= 8 { 17 - i } else { i };
        pred.push_str(&format!("a{i}\tb{j}\t0.9\n"));
    }
    fs::write(dir.path().join("gold"), gold).unwrap();
    fs::write(dir.path().join("pred"), pred).unwrap();
    let e = flora(&["eval", "--pred", p(&dir.path().join("pred")), "--gold", p(&dir.path().join("gold"))]);
    let text = stdout(&e);
    assert!(text.contains("precision\t0.800000") && text.contains("f1\t0.800000"), "{text}");
    assert!(text.contains("n_correct\t8"), "{text}");
}

#[test]
fn precomputed_similarity_file_replaces_trigrams() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("kg1.tsv"), "x\tname\t\"Big Apple\"\ny\tlocatedIn\tx\n").unwrap();
    fs::write(dir.path().join("kg2.tsv"), "x2\tlabel\t\"New York City\"\ny2\tpartOf\tx2\n").unwrap();
    fs::write(dir.path().join("sim.tsv"), "Big Apple\tNew York City\t0.93\n").unwrap();
    let (k1, k2) = (dir.path().join("kg1.tsv"), dir.path().join("kg2.tsv"));
    let plain = dir.path().join("plain");
    let o = flora(&["align", "--kg1", p(&k1), "--kg2", p(&k2), "--out-dir", p(&plain)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(plain.join("entity_alignment.tsv")).unwrap(), "");

    let with_sim = dir.path().join("sim");
    let sim = dir.path().join("sim.tsv");
    let o = flora(&["align", "--kg1", p(&k1), "--kg2", p(&k2), "--sim-file", p(&sim), "--out-dir", p(&with_sim)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ent = fs::read_to_string(with_sim.join("entity_alignment.tsv")).unwrap();
    assert_eq!(ent, "x\tx2\t0.930000\n");
    let manifest = fs::read_to_string(with_sim.join("manifest.json")).unwrap();
    assert!(manifest.contains("sim.tsv"), "{manifest}");
}

#[test]
fn recorded_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(flora(&["generate", "--out-dir", p(&data), "--entities", "80", "--relational-triples", "300", "--attribute-triples", "120", "--seed", "4"]).status.success());
    let first = dir.path().join("a");
    let o = flora(&["align", "--openea", p(&data), "--out-dir", p(&first), "--l-max", "6", "--seed", "9"]);
    assert!(o.status.success());
    let second = dir.path().join("b");
    let cfg = first.join("config.txt");
    let o = flora(&["align", "--openea", p(&data), "--out-dir", p(&second), "--config", p(&cfg)]);
    assert!(o.status.success());
    for f in ["entity_alignment.tsv", "relation_alignment.tsv", "scores.tsv", "config.txt"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}
