use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lexalign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexalign"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lexalign(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["make-toy", "--out-dir", "toy"]);
    ok(dir.path(), &["compile-vocab", "--vocab", "toy/vocab.tsv", "--out-dir", "sets"]);
    dir
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["compile-vocab", "train-ranker", "train-policy", "simplify", "evaluate", "ablate", "make-toy"] {
        let out = lexalign(dir.path(), &[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
    assert_eq!(lexalign(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(lexalign(dir.path(), &["simplify", "--band", "A"]).status.code(), Some(1));
    let bad = lexalign(dir.path(), &["train-policy", "--clip-epsilon", "-1", "--out-dir", "x"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lexalign(dir.path(), &["compile-vocab", "--vocab", "absent.tsv", "--out-dir", "sets"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.tsv"));
    assert!(!dir.path().join("sets").exists());
}

#[test]
fn compile_vocab_reports_and_is_stable() {
    let dir = toy_dir();
    let a = fs::read(dir.path().join("sets/A.cset")).unwrap();
    let stdout = ok(dir.path(), &["compile-vocab", "--vocab", "toy/vocab.tsv", "--band", "a", "--out-dir", "sets"]);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("band A: m = 26 (20 words, 6 phrases)"), "{stdout}");
    assert_eq!(fs::read(dir.path().join("sets/A.cset")).unwrap(), a);
}

#[test]
fn one_epoch_gives_one_log_row_and_simplify_checks_the_band() {
    let dir = toy_dir();
    let d = dir.path();
    ok(d, &["train-policy", "--band", "A", "--epochs", "1", "--rollouts", "16", "--out-dir", "run"]);
    let log = fs::read_to_string(d.join("run/trainlog_A.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert!(!d.join("run/trainlog_B.csv").exists());

    let mismatch = lexalign(
        d,
        &["simplify", "--checkpoint", "run/policy_A.ckpt", "--band", "B", "--input", "toy/eval_complex.txt", "--output", "o.txt"],
    );
    assert_eq!(mismatch.status.code(), Some(2));

    fs::write(d.join("empty.txt"), "").unwrap();
    ok(d, &["simplify", "--checkpoint", "run/policy_A.ckpt", "--band", "A", "--input", "empty.txt", "--output", "o.txt"]);
    assert_eq!(fs::read_to_string(d.join("o.txt")).unwrap(), "");

    let args = ["simplify", "--checkpoint", "run/policy_A.ckpt", "--band", "A", "--input", "toy/eval_complex.txt", "--seed", "4"];
    ok(d, &[&args[..], &["--output", "o1.txt"]].concat());
    ok(d, &[&args[..], &["--output", "o2.txt"]].concat());
    let o1 = fs::read_to_string(d.join("o1.txt")).unwrap();
    let inputs = fs::read_to_string(d.join("toy/eval_complex.txt")).unwrap();
    assert_eq!(o1.lines().count(), inputs.lines().count());
    assert_eq!(o1, fs::read_to_string(d.join("o2.txt")).unwrap());
}

#[test]
fn evaluate_writes_three_agreeing_rows() {
    let dir = toy_dir();
    let d = dir.path();
    fs::write(d.join("out.txt"), "the cat can look it up\nthe dog ran\n").unwrap();
    let table = ok(d, &["evaluate", "--outputs", "out.txt", "--constraints", "sets", "--out-prefix", "rep"]);
    let csv = fs::read_to_string(d.join("rep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(table, fs::read_to_string(d.join("rep.txt")).unwrap());
    for row in &rows {
        let line = table.lines().find(|l| l.split_whitespace().next() == Some(row[0])).unwrap();
        let cols: Vec<&str> = line.split_whitespace().collect();
        for i in 1..=2 {
            let a: f64 = row[i].parse().unwrap();
            let b: f64 = cols[i].parse().unwrap();
            assert!((a - b).abs() < 5e-7, "{row:?} vs {cols:?}");
        }
        assert_eq!(row[3], cols[3]);
    }

    fs::remove_file(d.join("sets/C.cset")).unwrap();
    let out = lexalign(d, &["evaluate", "--outputs", "out.txt", "--constraints", "sets", "--out-prefix", "rep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn no_kl_run_drifts_further_than_kl_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = ["train-policy", "--band", "B", "--epochs", "12", "--rollouts", "32", "--seed", "1"];
    ok(d, &[&common[..], &["--out-dir", "on"]].concat());
    ok(d, &[&common[..], &["--reference", "on/reference.ckpt", "--no-kl", "--out-dir", "off"]].concat());
    let final_kl = |p: &str| -> f64 {
        let log = fs::read_to_string(d.join(p)).unwrap();
        log.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap()
    };
    let (on, off) = (final_kl("on/trainlog_B.csv"), final_kl("off/trainlog_B.csv"));
    assert!(off > on, "no-KL {off} vs KL {on}");
}

#[test]
fn ablate_grid_shape_and_shared_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["ablate", "--seeds", "3,4", "--eval-draws", "1", "--epochs", "1", "--rollouts", "8", "--out", "grid.csv"]);
    let csv = fs::read_to_string(d.join("grid.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    let mut cells: Vec<(&str, &str)> = rows.iter().map(|r| (r[0], r[3])).collect();
    cells.sort();
    cells.dedup();
    assert_eq!(cells.len(), 12);
    assert!(rows.iter().all(|r| r[4] == "3;4"));
}

#[test]
fn evaluate_from_vocabulary_with_band_filter_and_stopwords() {
    let dir = toy_dir();
    let d = dir.path();
    fs::write(d.join("out.txt"), "the cat can look it up\nthe dog ran\n").unwrap();
    let base = ["evaluate", "--outputs", "out.txt"];
    ok(d, &[&base[..], &["--constraints", "sets", "--out-prefix", "from_sets"]].concat());
    ok(d, &[&base[..], &["--vocab", "toy/vocab.tsv", "--out-prefix", "from_vocab"]].concat());
    assert_eq!(
        fs::read_to_string(d.join("from_sets.csv")).unwrap(),
        fs::read_to_string(d.join("from_vocab.csv")).unwrap()
    );

    ok(d, &[&base[..], &["--vocab", "toy/vocab.tsv", "--band", "b", "--out-prefix", "only_b"]].concat());
    let csv = fs::read_to_string(d.join("only_b.csv")).unwrap();
    let bands: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(bands, ["B"]);

    let both = lexalign(d, &[&base[..], &["--vocab", "toy/vocab.tsv", "--constraints", "sets", "--out-prefix", "x"]].concat());
    assert_eq!(both.status.code(), Some(1));

    let objective_total = |p: &str| -> u64 {
        let csv = fs::read_to_string(d.join(p)).unwrap();
        csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<u64>().unwrap()).sum()
    };
    fs::write(d.join("stop.txt"), "cat\ndog\n").unwrap();
    ok(d, &[&base[..], &["--vocab", "toy/vocab.tsv", "--stopwords", "stop.txt", "--out-prefix", "stopped"]].concat());
    assert!(objective_total("stopped.csv") < objective_total("from_vocab.csv"));
}
