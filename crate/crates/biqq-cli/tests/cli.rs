//! End-to-end tests of the `biqq` binary: exit codes, determinism,
//! config precedence, and the shape of each subcommand's output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn biqq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biqq"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

/// Deterministic marker corpus: hate texts carry invented hate markers,
/// legitimate texts carry invented legitimate markers, filler is shared.
fn write_corpus(path: &Path, n: usize) {
    const FILLER: [&str; 12] = [
        "river", "stone", "light", "music", "garden", "window", "evening", "morning", "letter",
        "coffee", "travel", "story",
    ];
    const HATE: [&str; 3] = ["zorblax", "grimscut", "vexnar"];
    const LEGIT: [&str; 3] = ["suntide", "plover", "brightwing"];
    let mut body = String::new();
    for i in 0..n {
        let label = i % 2;
        let marks = if label == 1 { HATE } else { LEGIT };
        let mut words = Vec::new();
        for j in 0..6 {
            words.push(FILLER[(i * 5 + j * 3) % FILLER.len()]);
        }
        words.insert(i % 4, marks[i % 3]);
        words.insert((i + 2) % 6, marks[(i + 1) % 3]);
        body.push_str(&format!("{label}\t{}\n", words.join(" ")));
    }
    fs::write(path, body).unwrap();
}

struct TrainedRun {
    dir: tempfile::TempDir,
    out: PathBuf,
}

/// Fast two-epoch training run used by checkpoint-dependent tests.
fn train_small(extra: &[&str]) -> (TrainedRun, Output) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.tsv");
    write_corpus(&corpus, 60);
    let out = dir.path().join("run");
    let mut cmd = biqq();
    cmd.args([
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "7",
        "--set",
        "train.epochs=2",
        "--set",
        "train.patience=2",
        "--set",
        "model.embed_dim=16",
        "--set",
        "model.hidden=4",
        "--set",
        "model.mlp_dims=8",
    ]);
    cmd.args(extra);
    let output = cmd.output().unwrap();
    (TrainedRun { dir, out }, output)
}

#[test]
fn train_is_deterministic_under_a_fixed_seed() {
    let (run_a, out_a) = train_small(&[]);
    let (run_b, out_b) = train_small(&[]);
    assert_code(&out_a, 0);
    assert_code(&out_b, 0);
    let hist_a = fs::read(run_a.out.join("history.csv")).unwrap();
    let hist_b = fs::read(run_b.out.join("history.csv")).unwrap();
    assert_eq!(hist_a, hist_b, "same seed must reproduce history.csv");
    let ckpt_a = fs::read(run_a.out.join("best.ckpt")).unwrap();
    let ckpt_b = fs::read(run_b.out.join("best.ckpt")).unwrap();
    assert_eq!(ckpt_a, ckpt_b, "same seed must reproduce the checkpoint");
    assert!(run_a.out.join("config.resolved").exists());
    assert!(run_a.out.join("metrics_val.kv").exists());
    assert!(String::from_utf8(hist_a)
        .unwrap()
        .starts_with("epoch,train_loss,val_acc,val_macF1,val_MCC,val_gap"));
}

#[test]
fn eval_missing_checkpoint_exits_3_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.tsv");
    write_corpus(&corpus, 12);
    let out = biqq()
        .args([
            "eval",
            "--checkpoint",
            "missing.ckpt",
            "--corpus",
            corpus.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_code(&out, 3);
    assert!(
        stderr(&out).contains("missing.ckpt"),
        "stderr must name the path: {}",
        stderr(&out)
    );
}

#[test]
fn out_of_range_loss_blend_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.tsv");
    write_corpus(&corpus, 12);
    let out = biqq()
        .args([
            "train",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            dir.path().join("run").to_str().unwrap(),
            "--set",
            "loss.gamma=1.5",
        ])
        .output()
        .unwrap();
    assert_code(&out, 2);
    assert!(stderr(&out).contains("gamma"));
}

#[test]
fn unknown_config_key_exits_2() {
    let out = biqq()
        .args(["bench", "--set", "model.width=3", "--repeats", "1"])
        .output()
        .unwrap();
    assert_code(&out, 2);
    assert!(stderr(&out).contains("unknown config key"));
}

#[test]
fn command_line_overrides_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "loss.gamma = 0.25\nmodel.hidden = 12\n# comment\n").unwrap();
    let out = biqq()
        .args([
            "bench",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "loss.gamma=0.75",
            "--steps",
            "2",
            "--batch",
            "1",
            "--repeats",
            "1",
        ])
        .output()
        .unwrap();
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("loss.gamma = 0.75"), "override wins: {text}");
    assert!(text.contains("model.hidden = 12"), "file value kept: {text}");
}

#[test]
fn seed_env_var_is_a_fallback_only() {
    let out = biqq()
        .args(["bench", "--steps", "2", "--batch", "1", "--repeats", "1"])
        .env("BIQQ_SEED", "99")
        .output()
        .unwrap();
    assert_code(&out, 0);
    assert!(stdout(&out).contains("seed=99"), "{}", stdout(&out));

    let out = biqq()
        .args([
            "bench", "--steps", "2", "--batch", "1", "--repeats", "1", "--seed", "5",
        ])
        .env("BIQQ_SEED", "99")
        .output()
        .unwrap();
    assert_code(&out, 0);
    assert!(stdout(&out).contains("seed=5"), "{}", stdout(&out));
}

#[test]
fn augment_emits_ratio_times_corpus_size_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.tsv");
    write_corpus(&corpus, 10);
    let run = |out_dir: &Path| {
        let out = biqq()
            .args([
                "augment",
                "--corpus",
                corpus.to_str().unwrap(),
                "--method",
                "charswap",
                "--rate",
                "0.3",
                "--ratio",
                "0.5",
                "--seed",
                "11",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_code(&out, 0);
        fs::read(out_dir.join("augmented.tsv")).unwrap()
    };
    let first = run(&dir.path().join("a"));
    let second = run(&dir.path().join("b"));
    assert_eq!(first, second, "fixed seed must reproduce the file");
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 5, "ratio 0.5 of 10 examples");
    for line in text.lines() {
        assert!(line.split_once('\t').is_some(), "label<TAB>text: {line}");
    }
}

#[test]
fn attack_emits_texts_and_a_precision_line() {
    let (run, out) = train_small(&[]);
    assert_code(&out, 0);
    let corpus = run.dir.path().join("corpus.tsv");
    let out = biqq()
        .args([
            "attack",
            "--checkpoint",
            run.out.join("best.ckpt").to_str().unwrap(),
            "--corpus",
            corpus.to_str().unwrap(),
            "--method",
            "charswap",
            "--n",
            "10",
            "--rate",
            "0.4",
            "--seed",
            "9",
        ])
        .output()
        .unwrap();
    assert_code(&out, 0);
    let text = stdout(&out);
    let attack_lines: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("1\t"))
        .collect();
    assert_eq!(attack_lines.len(), 10, "ten labeled attack texts:\n{text}");
    assert!(
        text.lines().any(|l| l.starts_with("precision_hate=")),
        "precision line present:\n{text}"
    );
}

#[test]
fn attack_without_hate_sources_exits_3() {
    let (run, out) = train_small(&[]);
    assert_code(&out, 0);
    let legit_only = run.dir.path().join("legit.tsv");
    fs::write(&legit_only, "0\tcalm suntide morning by the river\n").unwrap();
    let out = biqq()
        .args([
            "attack",
            "--checkpoint",
            run.out.join("best.ckpt").to_str().unwrap(),
            "--corpus",
            legit_only.to_str().unwrap(),
            "--method",
            "charswap",
            "--n",
            "5",
        ])
        .output()
        .unwrap();
    assert_code(&out, 3);
    assert!(stderr(&out).contains("no hate-labeled examples"));
}

#[test]
fn eval_roundtrip_reads_the_training_checkpoint() {
    let (run, out) = train_small(&[]);
    assert_code(&out, 0);
    let corpus = run.dir.path().join("corpus.tsv");
    let metrics_dir = run.dir.path().join("m");
    let out = biqq()
        .args([
            "eval",
            "--checkpoint",
            run.out.join("best.ckpt").to_str().unwrap(),
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            metrics_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_code(&out, 0);
    let kv = fs::read_to_string(metrics_dir.join("metrics.kv")).unwrap();
    for key in ["accuracy=", "macro_f1=", "mcc=", "tp=", "fn="] {
        assert!(kv.contains(key), "metrics.kv missing {key}:\n{kv}");
    }
}

#[test]
fn hate_ratio_flag_subsamples_the_training_split() {
    let (_, out) = train_small(&["--hate-ratio", "0.25"]);
    assert_code(&out, 0);
    let text = stdout(&out);
    let note = text
        .lines()
        .find(|l| l.starts_with("hate-ratio 0.25: training split 48 -> "))
        .unwrap_or_else(|| panic!("subsample note:\n{text}"));
    let kept: usize = note
        .split(" -> ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(kept < 48, "subsampling must shrink the split: {note}");

    let (_, out) = train_small(&["--hate-ratio", "1.25"]);
    assert_code(&out, 2);
}

#[test]
fn train_accepts_augmentation_rules() {
    let (run, out) = train_small(&["--augment", "easydata:0.2:0.5"]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(
        text.contains("augmentation: 24 generated examples from 1 rule(s)"),
        "{text}"
    );
    assert!(run.out.join("best.ckpt").exists());

    let (_, out) = train_small(&["--augment", "nosuchmethod:0.2:0.5"]);
    assert_code(&out, 2);
}

#[test]
fn bench_reports_quarter_weights_and_normalized_times() {
    let run = || {
        let out = biqq()
            .args([
                "bench", "--steps", "4", "--batch", "1", "--repeats", "1", "--seed", "3",
            ])
            .output()
            .unwrap();
        assert_code(&out, 0);
        stdout(&out)
    };
    let text = run();
    let weight_of = |name: &str| -> u64 {
        let row = text
            .lines()
            .find(|l| l.trim_start().starts_with(name))
            .unwrap_or_else(|| panic!("row for {name}:\n{text}"));
        row.split_whitespace()
            .nth_back(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    let bilstm = weight_of("BiLSTM ");
    let quasi = weight_of("Bi-Quasi-LSTM");
    let quat = weight_of("Bi-Quaternion-LSTM");
    let biqq_w = weight_of("BiQQLSTM");
    assert_eq!(4 * quat, bilstm);
    assert_eq!(4 * biqq_w, quasi);
    let baseline_row = text
        .lines()
        .find(|l| l.trim_start().starts_with("BiLSTM "))
        .unwrap();
    assert!(baseline_row.trim_end().ends_with("1.00x"), "{baseline_row}");

    // Same seed: workload description and parameter counts reproduce.
    let again = run();
    let stable = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.starts_with("workload:") || l.starts_with("gate-weight footprint:"))
            .map(str::to_owned)
            .collect()
    };
    assert_eq!(stable(&text), stable(&again));
}
