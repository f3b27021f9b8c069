mod oracle;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use premsel_core::{Corpus, ScoreTable, Strategy, Tokenizer};

fn premsel(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_premsel"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(cwd: &Path, args: &[&str]) -> Output {
    let out = premsel(cwd, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/wiki")
}

fn built() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "build",
            "--source",
            fixture().to_str().unwrap(),
            "--out",
            "corpus",
            "--min-count",
            "2",
        ],
    );
    dir
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = premsel(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(premsel(dir.path(), &["stats", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        premsel(
            dir.path(),
            &["train", "--method", "bm25", "--corpus", "c", "--out", "m"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn strategy_mismatch_exits_1_naming_both() {
    let dir = built();
    ok(
        dir.path(),
        &[
            "train",
            "--method",
            "tfidf",
            "--corpus",
            "corpus",
            "--strategy",
            "char",
            "--out",
            "m",
        ],
    );
    let out = premsel(
        dir.path(),
        &[
            "evaluate",
            "--model",
            "m",
            "--corpus",
            "corpus",
            "--strategy",
            "tokenised",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("char") && err.contains("tokenised"), "{err}");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn missing_corpus_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = premsel(dir.path(), &["stats", "--corpus", "nowhere", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn stats_json_matches_hand_counts() {
    let dir = built();
    ok(dir.path(), &["stats", "--corpus", "corpus", "--out", "stats.json"]);
    let s = json(&dir.path().join("stats.json"));
    assert_eq!(s["total_entries"], 12);
    assert_eq!(s["node_count"], 10);
    assert_eq!(s["edge_count"], 14);
    assert_eq!(
        s["premise_count_histogram"],
        serde_json::json!({"1": 3, "2": 3, "5": 1})
    );
    assert_eq!(
        s["dependant_count_histogram"],
        serde_json::json!({"1": 5, "2": 1, "3": 1, "4": 1})
    );
    assert_eq!(
        s["max_premise_entry"],
        serde_json::json!({"id": "exponential_function_is_convex", "count": 5})
    );
}

#[test]
fn build_writes_report_and_manifest() {
    let dir = built();
    let report = json(&dir.path().join("corpus/build-report.json"));
    assert_eq!(report["pages_read"], 16);
    let manifest = json(&dir.path().join("corpus/manifest.json"));
    assert_eq!(manifest["subcommand"], "build");
    assert_eq!(manifest["flags"]["min_count"], 2);
    assert_eq!(manifest["outputs"].as_object().unwrap().len(), 1);
}

#[test]
fn invalid_corpus_exits_1_with_report_path() {
    let dir = built();
    let path = dir.path().join("corpus/theorems.json");
    let mut theorems = json(&path);
    theorems[0]["supporting_definitions"] = serde_json::json!(["definition:nothing_here"]);
    std::fs::write(&path, serde_json::to_string(&theorems).unwrap()).unwrap();
    let out = premsel(dir.path(), &["validate", "--corpus", "corpus", "--out", "v.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("v.json"));
    assert!(!json(&dir.path().join("v.json"))["issues"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn external_scores_match_oracle() {
    let dir = built();
    let corpus = Corpus::read_dir(&dir.path().join("corpus")).unwrap();
    let tok = Tokenizer::new(Strategy::TokenisedExpression);
    let docs: Vec<(String, Vec<String>)> = corpus
        .entries()
        .iter()
        .map(|e| (e.id.clone(), tok.tokens(&e.statement_text)))
        .collect();
    let model = oracle::OracleTfIdf::fit(&docs);
    let mut table = ScoreTable::default();
    for q in corpus.entries() {
        for c in corpus.entries() {
            if q.id != c.id {
                table.insert(&q.id, &c.id, model.cosine(&q.id, &c.id)).unwrap();
            }
        }
    }
    let mut file = std::fs::File::create(dir.path().join("scores.tsv")).unwrap();
    table.write(&mut file).unwrap();
    drop(file);

    ok(
        dir.path(),
        &[
            "evaluate",
            "--scores",
            "scores.tsv",
            "--method",
            "external-scores",
            "--corpus",
            "corpus",
            "--out",
            "r.json",
        ],
    );
    let report = json(&dir.path().join("r.json"));
    let (map, _) = oracle::map_all_entries(&corpus, 1, |a, b| model.cosine(a, b)).unwrap();
    assert!((report["map_score"].as_f64().unwrap() - map).abs() <= 1e-9);
    assert_eq!(report["missing_pair_scores"], 0);
    assert_eq!(report["config"]["method"], "external-scores");

    // same ranking as the built-in TF-IDF
    ok(
        dir.path(),
        &["train", "--method", "tfidf", "--corpus", "corpus", "--out", "m"],
    );
    ok(
        dir.path(),
        &["evaluate", "--model", "m", "--corpus", "corpus", "--out", "t.json"],
    );
    let tfidf = json(&dir.path().join("t.json"));
    assert!((tfidf["map_score"].as_f64().unwrap() - map).abs() <= 1e-9);
}

#[test]
fn scores_with_model_method_is_rejected() {
    let dir = built();
    std::fs::write(dir.path().join("s.tsv"), "").unwrap();
    let out = premsel(
        dir.path(),
        &[
            "evaluate", "--scores", "s.tsv", "--method", "tfidf", "--corpus", "corpus", "--out", "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_score_file_names_the_line() {
    let dir = built();
    std::fs::write(dir.path().join("s.tsv"), "a\tb\t0.5\nbroken line\n").unwrap();
    let out = premsel(
        dir.path(),
        &["evaluate", "--scores", "s.tsv", "--corpus", "corpus", "--out", "r.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'));
}

#[test]
fn export_pairs_layout() {
    let dir = built();
    ok(
        dir.path(),
        &[
            "--seed",
            "4",
            "export-pairs",
            "--corpus",
            "corpus",
            "--negative-ratio",
            "2",
            "--out",
            "pairs",
        ],
    );
    let pairs = dir.path().join("pairs");
    for name in ["train.tsv", "dev.tsv", "queries.tsv", "candidates.tsv", "manifest.json"] {
        assert!(pairs.join(name).exists(), "{name}");
    }
    let train = std::fs::read_to_string(pairs.join("train.tsv")).unwrap();
    for line in train.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 5, "{line}");
        assert!(fields[2] == "0" || fields[2] == "1");
    }
    let candidates = std::fs::read_to_string(pairs.join("candidates.tsv")).unwrap();
    assert_eq!(candidates.lines().count(), 12);
}

#[test]
fn replay_detects_tampered_output() {
    let dir = built();
    ok(
        dir.path(),
        &["hops", "--corpus", "corpus", "--k", "2", "--out", "hops.json"],
    );
    ok(dir.path(), &["replay", "--manifest", "hops.json.manifest.json"]);
    let manifest_path = dir.path().join("hops.json.manifest.json");
    let mut manifest = json(&manifest_path);
    manifest["outputs"]["hops.json"] = serde_json::json!("0000");
    std::fs::write(&manifest_path, serde_json::to_string(&manifest).unwrap()).unwrap();
    let out = premsel(dir.path(), &["replay", "--manifest", "hops.json.manifest.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hops.json"));
}

#[test]
fn hops_for_selected_ids() {
    let dir = built();
    ok(
        dir.path(),
        &[
            "hops",
            "--corpus",
            "corpus",
            "--k",
            "1",
            "--id",
            "definition:real_number",
            "--out",
            "h.json",
        ],
    );
    assert_eq!(
        json(&dir.path().join("h.json")),
        serde_json::json!({"definition:real_number": ["definition:set"]})
    );
    let out = premsel(
        dir.path(),
        &["hops", "--corpus", "corpus", "--k", "0", "--out", "h0.json"],
    );
    assert_eq!(out.status.code(), Some(1));
}
