use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn relgraph(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relgraph"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn relgraph_on_ikg_has_seven_edges() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = dir.path().join("vocab.txt");
    fs::write(&vocab, "ff_o\nfff_o\n").unwrap();
    let ikg = fixture("ikg.tsv");
    let spec = format!("custom:{}", vocab.display());
    let o = relgraph(
        &[
            "relgraph",
            "--input",
            ikg.to_str().unwrap(),
            "--vocab",
            &spec,
            "--no-inverse",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("relation_graph.json"));
    let edges = doc["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 7);
    assert!(edges
        .iter()
        .any(|e| e["type"] == "fffo" && e["src"] == "r1" && e["dst"] == "r3" && e["w"] == 3));
    let hash = doc["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 16);
    assert_eq!(json(&dir.path().join("run_config.json"))["config_hash"], hash);
}

#[test]
fn mining_an_empty_file_gives_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let o = relgraph(
        &["mine", "--input", empty.to_str().unwrap(), "--vocab", "v3+"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let tsv = fs::read_to_string(dir.path().join("occurrences.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1);
    assert!(tsv.starts_with("# config_hash: "));
}

#[test]
fn mine_writes_named_classes() {
    let dir = tempfile::tempdir().unwrap();
    let cyclic = fixture("cyclic.tsv");
    let o = relgraph(
        &[
            "mine",
            "--input",
            cyclic.to_str().unwrap(),
            "--vocab",
            "v3",
            "--no-inverse",
            "--mode",
            "existence",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let tsv = fs::read_to_string(dir.path().join("occurrences.tsv")).unwrap();
    for line in ["fffc\tr1\tr3\t1", "fffc\tr2\tr1\t1", "fffc\tr3\tr2\t1"] {
        assert!(tsv.lines().any(|l| l == line), "missing {line}");
    }
}

#[test]
fn verify_expressiveness_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = relgraph(&["verify", "--suite", "expressiveness"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS expressiveness"));
    assert_eq!(json(&dir.path().join("verify.json"))["passed"], true);
}

#[test]
fn usage_and_io_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&relgraph(&["verify", "--suite", "nonsense"], dir.path())), 1);
    assert_eq!(
        code(&relgraph(&["mine", "--input", "does/not/exist.tsv"], dir.path())),
        1
    );
    assert_eq!(code(&relgraph(&["mine"], dir.path())), 1);
    let ikg = fixture("ikg.tsv");
    let o = relgraph(
        &["relgraph", "--input", ikg.to_str().unwrap(), "--vocab", "v9"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("custom:FILE"));
}

#[test]
fn deterministic_training_is_byte_identical_and_evaluates() {
    let family = fixture("family.tsv");
    let args = [
        "train",
        "--input",
        family.to_str().unwrap(),
        "--dim",
        "6",
        "--relation-layers",
        "2",
        "--entity-layers",
        "2",
        "--steps",
        "15",
        "--lr",
        "0.005",
        "--seed",
        "4",
        "--deterministic",
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&relgraph(&args, a.path())), 0);
    assert_eq!(code(&relgraph(&args, b.path())), 0);
    for f in ["model.json", "metrics.jsonl", "run_config.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let metrics = fs::read_to_string(a.path().join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 15);

    let test = a.path().join("test.tsv");
    let first = fs::read_to_string(&family).unwrap().lines().next().unwrap().to_owned();
    fs::write(&test, first + "\n").unwrap();
    let checkpoint = a.path().join("model.json");
    let o = relgraph(
        &[
            "eval",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--input",
            family.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
        ],
        a.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&a.path().join("report.json"));
    assert_eq!(report["num_queries"], 2);
    assert_eq!(report["filtered"], true);
    let mrr = report["mrr"].as_f64().unwrap();
    assert!(mrr > 0.0 && mrr <= 1.0);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn eval_rejects_unknown_test_entities() {
    let dir = tempfile::tempdir().unwrap();
    let family = fixture("family.tsv");
    let train = relgraph(
        &[
            "train",
            "--input",
            family.to_str().unwrap(),
            "--dim",
            "4",
            "--relation-layers",
            "1",
            "--entity-layers",
            "1",
            "--steps",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(code(&train), 0);
    let test = dir.path().join("test.tsv");
    fs::write(&test, "Nobody\tson_of\tHomer\n").unwrap();
    let checkpoint = dir.path().join("model.json");
    let o = relgraph(
        &[
            "eval",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--input",
            family.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Nobody"));
}
