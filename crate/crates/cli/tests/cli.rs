use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn metron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metron"))
        .args(args)
        .env_remove("METRON_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(dir: &TempDir, name: &str, lines: usize, noise: f64) -> PathBuf {
    let out = path(dir, name);
    ok(&metron(&[
        "generate",
        "--lines",
        &lines.to_string(),
        "--noise",
        &noise.to_string(),
        "--seed",
        "3",
        "-o",
        s(&out),
    ]));
    out
}

#[test]
fn train_and_predict_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, "iamb.jsonl", 40, 0.0);
    let model = path(&dir, "crf.json");
    let summary = ok(&metron(&[
        "train",
        "--model",
        "crf",
        "--features",
        "full64",
        "--mode",
        "s2s",
        "--epochs",
        "10",
        "--corpus",
        s(&data),
        "-o",
        s(&model),
    ]));
    assert!(summary.contains("\"objective\""));
    assert!(model.exists());

    let pred_a = path(&dir, "a.jsonl");
    let pred_b = path(&dir, "b.jsonl");
    ok(&metron(&[
        "predict",
        "--model-file",
        s(&model),
        "--input",
        s(&data),
        "-o",
        s(&pred_a),
    ]));
    ok(&metron(&[
        "predict",
        "--model-file",
        s(&model),
        "--input",
        s(&data),
        "-o",
        s(&pred_b),
    ]));
    let a = std::fs::read_to_string(&pred_a).unwrap();
    assert_eq!(a, std::fs::read_to_string(&pred_b).unwrap());
    let input = std::fs::read_to_string(&data).unwrap();
    assert_eq!(a.lines().count(), input.lines().count());
    for line in a.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["pred"], v["gold"][0], "{line}");
    }

    let report = ok(&metron(&[
        "evaluate",
        "--model-file",
        s(&model),
        "--input",
        s(&data),
    ]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["per_line_accuracy"], 100.0);
}

#[test]
fn config_rules() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, "iamb.jsonl", 12, 0.0);
    let model = path(&dir, "n.json");
    let out = metron(&[
        "train",
        "--model",
        "bilstm-crf",
        "--features",
        "full64",
        "--epochs",
        "1",
        "--word-hidden-dim",
        "4",
        "--corpus",
        s(&data),
        "-o",
        s(&model),
    ]);
    ok(&out);
    assert!(stderr(&out).contains("WARNING"));

    let out = metron(&[
        "train",
        "--model",
        "crf",
        "--word-boundaries",
        "--mode",
        "w2sp",
        "--corpus",
        s(&data),
        "-o",
        s(&path(&dir, "x.json")),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("ERROR:"));

    let out = metron(&["cv", "--model", "hmm", "--folds", "1", "--corpus", s(&data)]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("ERROR:"));
}

#[test]
fn model_files_are_checked() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, "iamb.jsonl", 12, 0.0);
    let model = path(&dir, "hmm.json");
    ok(&metron(&[
        "train",
        "--model",
        "hmm",
        "--corpus",
        s(&data),
        "-o",
        s(&model),
    ]));
    let out = metron(&[
        "dump-activations",
        "--model-file",
        s(&model),
        "--input",
        s(&data),
        "-o",
        s(&path(&dir, "a.csv")),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("hmm"));

    let out = metron(&[
        "predict",
        "--model-file",
        s(&model),
        "--model",
        "crf",
        "--input",
        s(&data),
        "-o",
        s(&path(&dir, "p.jsonl")),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("ERROR:"));
    ok(&metron(&[
        "evaluate",
        "--model-file",
        s(&model),
        "--model",
        "hmm",
        "--input",
        s(&data),
    ]));

    let garbage = path(&dir, "garbage.json");
    std::fs::write(&garbage, "{\"format_version\": 1}").unwrap();
    let out = metron(&[
        "predict",
        "--model-file",
        s(&garbage),
        "--input",
        s(&data),
        "-o",
        s(&path(&dir, "p")),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("ERROR:"));
}

#[test]
fn cross_validation_compare_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, "noisy.jsonl", 50, 0.3);
    let run = |report: &Path| {
        metron(&[
            "cv",
            "--model",
            "hmm",
            "--folds",
            "5",
            "--seed",
            "4",
            "--corpus",
            s(&data),
            "--compare",
            "model=crf,features=full64,epochs=5",
            "--report",
            s(report),
        ])
    };
    let (r1, r2) = (path(&dir, "r1.json"), path(&dir, "r2.json"));
    let out = run(&r1);
    ok(&out);
    ok(&run(&r2));
    assert!(stderr(&out).contains("t-test"));
    let a = std::fs::read_to_string(&r1).unwrap();
    assert_eq!(a, std::fs::read_to_string(&r2).unwrap());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["a"]["report"]["per_fold"].as_array().unwrap().len(), 5);
    assert_eq!(v["b"]["report"]["total_lines"], 50);
    assert!(v["ttest"]["p"].as_f64().unwrap() <= 1.0);
}

#[test]
fn syllabify_stats_and_ttest() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_metron"))
        .args(["syllabify", "--lang", "en"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"balloon\njungle\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "bal·loon\njun·gle\n");

    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, "iamb.jsonl", 25, 0.0);
    let csv = ok(&metron(&["stats", "--corpus", s(&data)]));
    let total: usize = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    let words: usize = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["words"]
                .as_array()
                .unwrap()
                .len()
        })
        .sum();
    assert_eq!(total, words);

    let t = ok(&metron(&["ttest", "--a", "1,2,3", "--b", "2,3,4"]));
    let v: serde_json::Value = serde_json::from_str(&t).unwrap();
    assert!((v["t"].as_f64().unwrap() + 1.2247).abs() < 1e-4);
    assert!((v["df"].as_f64().unwrap() - 4.0).abs() < 1e-4);
}

#[test]
fn dump_activations_rows() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, "iamb.jsonl", 12, 0.0);
    let model = path(&dir, "n.json");
    ok(&metron(&[
        "train",
        "--model",
        "bilstm-crf",
        "--epochs",
        "1",
        "--word-hidden-dim",
        "4",
        "--corpus",
        s(&data),
        "-o",
        s(&model),
    ]));
    let csv_path = path(&dir, "act.csv");
    ok(&metron(&[
        "dump-activations",
        "--model-file",
        s(&model),
        "--input",
        s(&data),
        "--line",
        "syn-00002",
        "-o",
        s(&csv_path),
    ]));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("+,-"));
    assert_eq!(rows.count(), 10);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let flag = path(&dir, "flag.jsonl");
    let env = path(&dir, "env.jsonl");
    ok(&metron(&[
        "generate",
        "--lines",
        "10",
        "--noise",
        "0.5",
        "--seed",
        "17",
        "-o",
        s(&flag),
    ]));
    let out = Command::new(env!("CARGO_BIN_EXE_metron"))
        .args(["generate", "--lines", "10", "--noise", "0.5", "-o", s(&env)])
        .env("METRON_SEED", "17")
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(std::fs::read(&flag).unwrap(), std::fs::read(&env).unwrap());
    let bad = Command::new(env!("CARGO_BIN_EXE_metron"))
        .args(["generate", "--lines", "10", "-o", s(&env)])
        .env("METRON_SEED", "seventeen")
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
