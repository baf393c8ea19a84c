use std::path::Path;

use editcert::dataset::{synthetic_keyword_dataset, Example, LabeledDataset};
use editcert_cli::{run, EXIT_DATA, EXIT_GUARD, EXIT_OK, EXIT_USAGE};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Out {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let code = run(std::iter::once("editcert").chain(args.iter().copied()), &mut o, &mut e);
    Out {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_is_reproducible_and_reports_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.jsonl");
    synthetic_keyword_dataset(200, 1).write_jsonl(&data).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for m in [&a, &b] {
        let r = cli(&["train", "--data", s(&data), "--model", s(m), "--seed", "4"]);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let r = cli(&["train", "--data", "/nonexistent/x.jsonl", "--model", s(&a)]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("/nonexistent/x.jsonl"));
}

#[test]
fn malformed_rows_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.jsonl");
    std::fs::write(&data, "{\"text\": \"a\", \"label\": 0}\n{\"text\": 3}\n").unwrap();
    let r = cli(&["train", "--data", s(&data), "--model", s(&dir.path().join("m.json"))]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains(":2:"), "{}", r.stderr);
}

#[test]
fn certify_curve_and_summary_agree() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let test = dir.path().join("test.jsonl");
    synthetic_keyword_dataset(300, 2).write_jsonl(&train).unwrap();
    synthetic_keyword_dataset(20, 3).write_jsonl(&test).unwrap();
    let model = dir.path().join("m.json");
    assert_eq!(cli(&["train", "--data", s(&train), "--model", s(&model)]).code, EXIT_OK);
    let recs = dir.path().join("r.csv");
    let r = cli(&[
        "certify", "--data", s(&test), "--model", s(&model), "--out", s(&recs), "--n-pred", "100", "--n-cert", "400",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let records = editcert::report::load_records(&recs).unwrap();
    assert_eq!(records.len(), 20);
    let summary = editcert::report::summarize(&records, editcert::edit_metrics::EditOps::FULL).unwrap();
    assert!(r.stderr.contains(&format!("median_radius_dis\t{}", summary.median_radius)));
    assert!(r.stderr.contains(&format!("clean_accuracy\t{}", summary.clean_accuracy)));

    let c = cli(&["curve", "--records", s(&recs), "--thresholds", "0,1,1e9"]);
    assert_eq!(c.code, EXIT_OK);
    let rows: Vec<&str> = c.stdout.lines().collect();
    assert_eq!(rows[0], "log10_cc,certified_accuracy");
    assert_eq!(rows[1], format!("0,{}", summary.clean_accuracy));
    assert_eq!(rows[3], "1000000000,0");
}

#[test]
fn certify_rejects_empty_test_set_and_masking() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    synthetic_keyword_dataset(50, 2).write_jsonl(&train).unwrap();
    let model = dir.path().join("m.json");
    assert_eq!(cli(&["train", "--data", s(&train), "--model", s(&model)]).code, EXIT_OK);
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(cli(&["certify", "--data", s(&empty), "--model", s(&model)]).code, EXIT_DATA);
    let r = cli(&["certify", "--data", s(&train), "--model", s(&model), "--mechanism", "masking"]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn cardinality_table() {
    let r = cli(&["cardinality", "--length", "3", "--vocab-size", "2", "--radius", "1", "--kind", "hamming"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.stdout.lines().nth(1).unwrap().split('\t').nth(4), Some("4"));

    let r = cli(&["cardinality", "--text", "a b", "--vocab-size", "2", "--radius", "1"]);
    let exact = r.stdout.lines().find(|l| l.starts_with("lev-exact")).unwrap();
    assert_eq!(exact.split('\t').nth(4), Some("9"));

    let r = cli(&["cardinality", "--text", "a b", "--vocab-size", "3", "--radius", "40", "--kind", "lev-exact"]);
    assert_eq!(r.code, EXIT_GUARD);
    let r = cli(&["cardinality", "--length", "2", "--radius", "3", "--kind", "hamming"]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn textcrs_rows() {
    let r = cli(&["textcrs", "--n", "3"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.stdout.lines().nth(1).unwrap().split('\t').nth(3), Some("0"));
    let r = cli(&["textcrs", "--max-n", "5"]);
    let radii: Vec<&str> = r.stdout.lines().skip(1).map(|l| l.split('\t').nth(3).unwrap()).collect();
    assert_eq!(radii, ["1", "2", "0", "0", "0"]);
}

#[test]
fn attack_with_one_query_fails_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    synthetic_keyword_dataset(300, 5).write_jsonl(&train).unwrap();
    let test = dir.path().join("test.jsonl");
    synthetic_keyword_dataset(10, 6).write_jsonl(&test).unwrap();
    let model = dir.path().join("m.json");
    assert_eq!(cli(&["train", "--data", s(&train), "--model", s(&model)]).code, EXIT_OK);
    let report = dir.path().join("rep.json");
    let r = cli(&[
        "attack", "--data", s(&test), "--model", s(&model), "--max-queries", "1", "--out", s(&report),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let rep: editcert::attacks::AttackReport =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep.count(editcert::attacks::AttackStatus::Success), 0);
    assert_eq!(rep.count(editcert::attacks::AttackStatus::Timeout), 0);
    assert!(rep.outcomes.iter().all(|o| o.queries_used <= 1));

    let r = cli(&["transfer", "--source", s(&report), "--model", s(&model)]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stderr.contains("success\t0"));
}

#[test]
fn predict_votes() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let ds = LabeledDataset::new(
        (0..40)
            .map(|i| Example::new(if i % 2 == 0 { "good good fine" } else { "bad awful bad" }, usize::from(i % 2 == 0)))
            .collect(),
        2,
    )
    .unwrap();
    ds.write_jsonl(&train).unwrap();
    let model = dir.path().join("m.json");
    assert_eq!(cli(&["train", "--data", s(&train), "--model", s(&model), "--rate", "0.3"]).code, EXIT_OK);
    let r = cli(&["predict", "--model", s(&model), "--text", "good fine", "--n-pred", "50"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(r.stdout.lines().next(), Some("id,predicted,votes_0,votes_1"));
    let row: Vec<u64> = r.stdout.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[2] + row[3], 50);
}

#[test]
fn usage_errors() {
    assert_eq!(cli(&["certify"]).code, EXIT_USAGE);
    assert_eq!(cli(&["nonsense"]).code, EXIT_USAGE);
    assert_eq!(cli(&["textcrs", "--n", "3", "--ops", "xyz"]).code, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
}

#[test]
fn binary_exit_code() {
    let st = std::process::Command::new(env!("CARGO_BIN_EXE_editcert"))
        .args(["textcrs", "--kind", "sideways"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
    let st = std::process::Command::new(env!("CARGO_BIN_EXE_editcert"))
        .args(["textcrs", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&st.stdout).contains("2\tdeletion\t2\t2\t"));
}
