use std::path::Path;
use std::process::{Command, Output};

fn qproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qproj")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn gensynth(dir: &Path, extra: &[&str]) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["gensynth", "--queries", "40", "--out", out];
    args.extend_from_slice(extra);
    let o = qproj(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn paramcount_at_full_width() {
    let o = qproj(&["paramcount", "768", "256"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "layers\t2\nquantum\t6144\nclassical\t196864\nratio\t32.04\n"
    );
}

#[test]
fn oraclecheck_passes() {
    let o = qproj(&["oraclecheck", "8", "100"]);
    assert!(o.status.success());
    let dev: f64 = field(&stdout(&o), "max_deviation").parse().unwrap();
    assert!(dev <= 1e-10);
}

#[test]
fn gradcheck_passes_and_fails_by_tolerance() {
    for args in [
        vec!["gradcheck"],
        vec!["gradcheck", "--head", "classical", "--dims", "8", "4"],
        vec!["gradcheck", "--head", "none", "--dims", "5", "5"],
    ] {
        let o = qproj(&args);
        assert!(o.status.success(), "{args:?}: {}", stdout(&o));
        assert!(stdout(&o).ends_with("PASS\n"));
    }
    let o = qproj(&["gradcheck", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stdout(&o).ends_with("FAIL\n"));
}

#[test]
fn similarity_with_itself_is_one() {
    let dir = tempfile::tempdir().unwrap();
    gensynth(dir.path(), &[]);
    let store = p(dir.path(), "store.bin");
    let o = qproj(&["similarity", "--store", &store, "q00003", "q00003"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!((field(&text, "fidelity").parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!(field(&text, "log_fidelity").parse::<f64>().unwrap().abs() < 1e-9);
    assert!((field(&text, "cosine").parse::<f64>().unwrap() - 1.0).abs() < 1e-12);

    let o = qproj(&["similarity", "--store", &store, "q00003", "nope"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn full_pipeline_and_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gensynth(&d.join("a"), &["--format", "jsonl"]);
    gensynth(&d.join("b"), &["--format", "jsonl"]);
    for f in ["store.jsonl", "train.jsonl", "val.jsonl", "qrels.tsv"] {
        assert_eq!(
            std::fs::read(d.join("a").join(f)).unwrap(),
            std::fs::read(d.join("b").join(f)).unwrap()
        );
    }
    let data = d.join("a");
    let (store, train, val, qrels) = (
        p(&data, "store.jsonl"),
        p(&data, "train.jsonl"),
        p(&data, "val.jsonl"),
        p(&data, "qrels.tsv"),
    );

    let out = p(d, "runs");
    let o = qproj(&[
        "train", "--store", &store, "--train", &train, "--val", &val, "--qrels", &qrels, "--dims", "32", "16",
        "--epochs", "3", "--runs", "2", "--limit", "10", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("seed=42\t") && text.contains("\nseed=43\t") && text.contains("mean_ndcg@10="));
    let history = std::fs::read_to_string(d.join("runs/history-42.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 3);

    let model = p(d, "runs/model-42.json");
    let eval = |run: &str| {
        qproj(&[
            "evaluate", "--store", &store, "--model", &model, "--qrels", &qrels, "--out", run,
        ])
    };
    let (e1, e2) = (eval(&p(d, "run1.tsv")), eval(&p(d, "run2.tsv")));
    assert!(e1.status.success());
    assert_eq!(e1.stdout, e2.stdout);
    assert_eq!(
        std::fs::read(d.join("run1.tsv")).unwrap(),
        std::fs::read(d.join("run2.tsv")).unwrap()
    );
    let ndcg: f64 = field(&stdout(&e1), "ndcg@10").parse().unwrap();
    assert!((0.0..=1.0).contains(&ndcg));
    assert_eq!(stdout(&e1).lines().count(), 9);

    let compressed = p(d, "compressed.bin");
    let o = qproj(&["compress", "--store", &store, "--model", &model, "--out", &compressed]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "compressed 80 vectors to width 16\n");
    let o = qproj(&["similarity", "--store", &compressed, "q00000", "p00000"]);
    assert!(o.status.success());

    let enc = p(d, "angles.jsonl");
    assert!(qproj(&["encode", "--store", &store, "--out", &enc]).status.success());
    let first = std::fs::read_to_string(&enc).unwrap();
    let line: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(line["theta"].as_array().unwrap().len(), 32);
    let piped = qproj(&["encode", "--store", &store]);
    assert_eq!(piped.stdout, first.as_bytes());

    let o = qproj(&["gradcheck", "--model", &model]);
    assert!(o.status.success());
}

#[test]
fn errors_map_to_categories() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    assert_eq!(qproj(&["paramcount", "768"]).status.code(), Some(2));
    assert_eq!(qproj(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qproj(&["paramcount", "768", "500"]).status.code(), Some(5));
    assert_eq!(qproj(&["oraclecheck", "30", "1"]).status.code(), Some(5));

    let missing = p(d, "missing.bin");
    let o = qproj(&["encode", "--store", &missing]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));

    let bad = p(d, "bad.bin");
    std::fs::write(&bad, b"NOTMAGIC").unwrap();
    assert_eq!(qproj(&["encode", "--store", &bad]).status.code(), Some(4));
}

#[test]
fn failed_train_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gensynth(d, &[]);
    std::fs::write(d.join("broken.jsonl"), "{\"query\": 1}\n").unwrap();
    let out = p(d, "runs");
    let o = qproj(&[
        "train",
        "--store",
        &p(d, "store.bin"),
        "--train",
        &p(d, "broken.jsonl"),
        "--val",
        &p(d, "val.jsonl"),
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!d.join("runs").exists());

    let o = qproj(&[
        "train",
        "--store",
        &p(d, "store.bin"),
        "--train",
        &p(d, "train.jsonl"),
        "--val",
        &p(d, "val.jsonl"),
        "--dims",
        "16",
        "8",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert!(!d.join("runs").exists());
}
