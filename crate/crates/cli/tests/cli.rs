use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use edgar_core::synth::ad_fixture;
use edgar_core::ResultMessage;
use tempfile::TempDir;

fn edgar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgar"))
        .args(args)
        .env("EDGAR_LOG", "error")
        .env_remove("EDGAR_STORE_PATH")
        .output()
        .expect("edgar runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Fixture inputs and an ingested store, shared by all tests.
fn ad() -> &'static (TempDir, String, String) {
    static AD: OnceLock<(TempDir, String, String)> = OnceLock::new();
    AD.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input");
        let store = dir.path().join("store");
        ad_fixture().write(&input).unwrap();
        let o = edgar(&[
            "ingest",
            "--input",
            input.to_str().unwrap(),
            "--out",
            store.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            dir,
            input.display().to_string(),
            store.display().to_string(),
        )
    })
}

fn store() -> &'static str {
    &ad().2
}

const AD_QUERY: [&str; 5] = [
    "query",
    "--template",
    "drug-treats-disease",
    "--curie",
    "MONDO:0004975",
];

#[test]
fn ingest_writes_manifest() {
    assert!(Path::new(store()).join("manifest.json").exists());
    let o = edgar(&[
        "--store",
        store(),
        "--format",
        "json",
        "expand",
        "--out",
        &format!("{}-again", store()),
    ]);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(manifest["expanded"], true);
}

fn write_bad_input(dir: &Path) {
    let input = &ad().1;
    for f in [
        "nodes.jsonl",
        "predicate_ontology.json",
        "category_ontology.json",
    ] {
        std::fs::copy(Path::new(input).join(f), dir.join(f)).unwrap();
    }
    let mut edges = std::fs::read_to_string(Path::new(input).join("edges.jsonl")).unwrap();
    edges.push_str(
        r#"{"subject":"CHEBI:8874","predicate":"biolink:treats","object":"MONDO:0000404"}"#,
    );
    edges.push('\n');
    std::fs::write(dir.join("edges.jsonl"), edges).unwrap();
}

#[test]
fn dangling_edge_fails_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    write_bad_input(dir.path());
    let input = dir.path().to_str().unwrap();
    let out = dir.path().join("store");
    let o = edgar(&["ingest", "--input", input, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("MONDO:0000404"), "{}", stderr(&o));

    let o = edgar(&[
        "ingest",
        "--lenient",
        "--input",
        input,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("skipped_dangling\t1"));
}

#[test]
fn tsv_header_and_sorted_rows() {
    let mut args = vec!["--store", store(), "--format", "tsv"];
    args.extend(AD_QUERY);
    let o = edgar(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("rank\tcurie\tname\tbest_p\tn_rules\tin_lookup")
    );
    let first: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(first[0], "1");
    // per-stage counts go to stderr
    assert!(stderr(&o).contains("lookup: n=14"));
}

#[test]
fn json_output_echoes_lookup() {
    let mut args = vec!["--store", store(), "--format", "json"];
    args.extend(AD_QUERY);
    let o = edgar(&args);
    let msg: ResultMessage = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(msg.meta.lookup_n, 14);
    assert!(msg
        .results
        .windows(2)
        .all(|w| w[0].best_p_raw <= w[1].best_p_raw));
}

#[test]
fn tiny_threshold_gives_empty_result() {
    let mut args = vec!["--store", store(), "--format", "json"];
    args.extend(AD_QUERY);
    args.extend(["--p0", "1e-300"]);
    let o = edgar(&args);
    assert_eq!(o.status.code(), Some(0));
    let msg: ResultMessage = serde_json::from_slice(&o.stdout).unwrap();
    assert!(msg.rules.is_empty() && msg.results.is_empty());
}

#[test]
fn exit_codes() {
    let o = edgar(&[
        "--store",
        store(),
        "query",
        "--template",
        "drug-treats-disease",
        "--curie",
        "MONDO:1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = edgar(&[
        "--store",
        store(),
        "query",
        "--template",
        "nope",
        "--curie",
        "MONDO:1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let mut args = vec!["--store", store()];
    args.extend(AD_QUERY);
    args.extend(["--p0", "0"]);
    assert_eq!(edgar(&args).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.json");
    std::fs::write(&q, r#"{"message":{"query_graph":{"nodes":{},"edges":{}}}}"#).unwrap();
    let o = edgar(&["--store", store(), "query", "--query", q.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).lines().count() >= 2, "{}", stderr(&o));

    let o = edgar(&["--store", "/nonexistent/store", "resolve", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn explain_physostigmine() {
    let mut args = vec!["--store", store(), "explain", "--candidate", "CHEBI:27953"];
    args.extend(&AD_QUERY[1..]);
    let o = edgar(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let first_rule = text.lines().nth(1).unwrap();
    assert!(
        first_rule.contains("neurotransmitter_agent"),
        "{first_rule}"
    );
    assert!(first_rule.contains("N=8000 K=242 n=14 k=8"));
    assert!(!text.contains("already a lookup answer"));
}

#[test]
fn explain_answer_and_unknown() {
    let mut args = vec!["--store", store(), "explain", "--candidate", "CHEBI:8874"];
    args.extend(&AD_QUERY[1..]);
    let o = edgar(&args);
    assert!(o.status.success());
    assert!(stdout(&o).contains("already a lookup answer"));

    let mut args = vec!["--store", store(), "explain", "--candidate", "CHEBI:2795"];
    args.extend(&AD_QUERY[1..]);
    let o = edgar(&args);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("did you mean"), "{}", stderr(&o));
}

#[test]
fn resolve_prints_matches() {
    let o = edgar(&["--store", store(), "resolve", "Alzheimer"]);
    assert_eq!(stdout(&o), "MONDO:0004975\tAlzheimer disease\tprefix\n");
    let o = edgar(&["--store", store(), "resolve", "PHYSOSTIGMINE"]);
    assert!(stdout(&o).starts_with("CHEBI:27953\tphysostigmine\texact"));
}

#[test]
fn synth_from_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"seed":5,"answer_count":10,"population":200,"planted_targets":[{"kind":"graph","fan_in":6,"overlap":5}]}"#,
    )
    .unwrap();
    let out = dir.path().join("g");
    let o = edgar(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["nodes.jsonl", "edges.jsonl", "truth.json", "query.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let store = dir.path().join("s");
    assert!(edgar(&[
        "ingest",
        "--input",
        out.to_str().unwrap(),
        "--out",
        store.to_str().unwrap()
    ])
    .status
    .success());
    let o = edgar(&[
        "--store",
        store.to_str().unwrap(),
        "--format",
        "json",
        "query",
        "--query",
        out.join("query.json").to_str().unwrap(),
    ]);
    let msg: ResultMessage = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(msg.rules.len(), 1);
    assert_eq!(msg.meta.novel_m, 1);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed":1,"answer_count":3,"planted_targets":[{"kind":"graph","fan_in":2,"overlap":3}]}"#).unwrap();
    let o = edgar(&[
        "synth",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
