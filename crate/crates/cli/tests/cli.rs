//! End-to-end tests driving the compiled `musem` binary against generated
//! fixtures: a topic-clustered embedding table and a small labeled corpus.

use musem_core::checkpoint::save_checkpoint;
use musem_core::corpus::{demo_embedding_table, two_topic_corpus};
use musem_core::dataset::write_canonical;
use musem_core::model::ModelParams;
use musem_core::train::TrainConfig;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn musem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_musem"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited without a code")
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).expect("read json file");
    serde_json::from_str(&text).expect("parse json file")
}

struct Fixture {
    dir: TempDir,
    data: PathBuf,
    embeddings: PathBuf,
}

/// A corpus of `n` labeled pairs plus a matching embedding table, on disk.
fn fixture(n: usize, d: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().expect("tempdir");
    let data = dir.path().join("pairs.jsonl");
    let embeddings = dir.path().join("embeddings.txt");
    write_canonical(&data, &two_topic_corpus(n, seed)).expect("write corpus");
    demo_embedding_table(d, seed)
        .write(&embeddings)
        .expect("write embeddings");
    Fixture {
        dir,
        data,
        embeddings,
    }
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train(&self, checkpoint: &Path, extra: &[&str]) -> Output {
        let mut cmd = musem();
        cmd.arg("train")
            .arg("--data")
            .arg(&self.data)
            .arg("--embeddings")
            .arg(&self.embeddings)
            .arg("--checkpoint-out")
            .arg(checkpoint)
            .args(extra);
        cmd.output().expect("spawn musem train")
    }

    fn eval(&self, checkpoint: &Path, data: &Path) -> Output {
        musem()
            .arg("eval")
            .arg("--checkpoint")
            .arg(checkpoint)
            .arg("--data")
            .arg(data)
            .arg("--embeddings")
            .arg(&self.embeddings)
            .output()
            .expect("spawn musem eval")
    }
}

#[test]
fn train_writes_checkpoints_log_and_epoch_lines() {
    let fx = fixture(24, 8, 3);
    let ckpt = fx.path("ckpt.json");
    let out = fx.train(&ckpt, &["--epochs", "4", "--seed", "5"]);
    assert_success(&out);

    let epoch_lines: Vec<Value> = stdout(&out)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).expect("epoch line json"))
        .collect();
    assert_eq!(epoch_lines.len(), 4);
    assert_eq!(epoch_lines[0]["epoch"], 1);
    assert_eq!(epoch_lines[3]["epoch"], 4);
    for line in &epoch_lines {
        assert!(line["train_loss"].as_f64().expect("train_loss").is_finite());
        assert!(line["val_macro_f1"].as_f64().is_some());
    }

    let parsed = read_json(&ckpt);
    assert_eq!(parsed["format_version"], 1);
    assert_eq!(parsed["epoch"], 4);
    assert_eq!(parsed["config"]["seed"], 5);
    assert_eq!(parsed["config"]["d"], 8, "d should come from the table");
    assert_eq!(parsed["tensors"].as_array().expect("tensors").len(), 14);

    let best = read_json(&fx.path("ckpt.json.best"));
    let best_epoch = best["epoch"].as_u64().expect("best epoch");
    assert!((1..=4).contains(&best_epoch));

    let log_lines: Vec<Value> = std::fs::read_to_string(fx.path("ckpt.json.log"))
        .expect("read log")
        .lines()
        .map(|l| serde_json::from_str(l).expect("log line json"))
        .collect();
    assert_eq!(log_lines, epoch_lines, "log file must mirror stdout lines");
}

#[test]
fn training_runs_are_byte_identical() {
    let fx = fixture(24, 8, 3);
    // Same relative checkpoint name in separate directories keeps even the
    // printed paths identical.
    let run = |dir: &str| -> Output {
        let cwd = fx.path(dir);
        std::fs::create_dir_all(&cwd).expect("create run dir");
        let mut cmd = musem();
        cmd.current_dir(&cwd)
            .arg("train")
            .arg("--data")
            .arg(&fx.data)
            .arg("--embeddings")
            .arg(&fx.embeddings)
            .args(["--checkpoint-out", "ckpt.json"])
            .args(["--epochs", "3", "--seed", "11"]);
        cmd.output().expect("spawn musem train")
    };
    let out_a = run("a");
    let out_b = run("b");
    assert_success(&out_a);
    assert_success(&out_b);
    assert_eq!(out_a.stdout, out_b.stdout);
    for suffix in ["", ".best", ".log"] {
        let a = std::fs::read(fx.path(&format!("a/ckpt.json{suffix}"))).expect("read a");
        let b = std::fs::read(fx.path(&format!("b/ckpt.json{suffix}"))).expect("read b");
        assert_eq!(a, b, "artifact '{suffix}' differs between identical runs");
    }
}

#[test]
fn seed_resolution_prefers_flag_then_file_then_env() {
    let fx = fixture(8, 4, 1);
    let config = fx.path("config.json");
    std::fs::write(&config, r#"{"seed": 9, "epochs": 1}"#).expect("write config");

    let seed_of = |ckpt: &Path| read_json(ckpt)["config"]["seed"].as_u64().expect("seed");

    let ckpt = fx.path("flag.json");
    let mut cmd = musem();
    cmd.arg("train")
        .arg("--data")
        .arg(&fx.data)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--checkpoint-out")
        .arg(&ckpt)
        .arg("--config")
        .arg(&config)
        .args(["--seed", "13"])
        .env("MUSEM_SEED", "11");
    assert_success(&cmd.output().expect("train"));
    assert_eq!(seed_of(&ckpt), 13, "flag beats file and env");

    let ckpt = fx.path("file.json");
    let mut cmd = musem();
    cmd.arg("train")
        .arg("--data")
        .arg(&fx.data)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--checkpoint-out")
        .arg(&ckpt)
        .arg("--config")
        .arg(&config)
        .env("MUSEM_SEED", "11");
    assert_success(&cmd.output().expect("train"));
    assert_eq!(seed_of(&ckpt), 9, "file beats env");

    let ckpt = fx.path("env.json");
    let mut cmd = musem();
    cmd.arg("train")
        .arg("--data")
        .arg(&fx.data)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--checkpoint-out")
        .arg(&ckpt)
        .args(["--epochs", "1"])
        .env("MUSEM_SEED", "11");
    assert_success(&cmd.output().expect("train"));
    assert_eq!(seed_of(&ckpt), 11, "env beats the default");

    let ckpt = fx.path("default.json");
    let out = fx.train(&ckpt, &["--epochs", "1"]);
    assert_success(&out);
    assert_eq!(seed_of(&ckpt), 42);
}

#[test]
fn eval_reports_metrics_for_a_trained_checkpoint() {
    let fx = fixture(24, 8, 3);
    let ckpt = fx.path("ckpt.json");
    assert_success(&fx.train(&ckpt, &["--epochs", "10", "--seed", "5"]));

    let out = fx.eval(&ckpt, &fx.data);
    assert_success(&out);
    let report: Value = serde_json::from_str(&stdout(&out)).expect("metrics json");
    assert_eq!(report["n_examples"], 24);
    let macro_f1 = report["macro_f1"].as_f64().expect("macro_f1");
    let auc = report["auc"].as_f64().expect("auc");
    assert!((0.0..=1.0).contains(&macro_f1));
    assert!((0.0..=1.0).contains(&auc));
    let confusion = report["confusion"].as_array().expect("confusion");
    let row_sum = |r: usize| -> u64 {
        confusion[r]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .sum()
    };
    assert_eq!(row_sum(0), 12, "twelve congruent examples");
    assert_eq!(row_sum(1), 12, "twelve incongruent examples");
    assert_eq!(report["per_class"].as_array().expect("per_class").len(), 2);
}

#[test]
fn eval_on_single_class_data_fails_with_undefined_auc() {
    let fx = fixture(12, 6, 2);
    let ckpt = fx.path("ckpt.json");
    assert_success(&fx.train(&ckpt, &["--epochs", "1", "--seed", "4"]));

    let congruent_only: Vec<_> = two_topic_corpus(12, 2)
        .into_iter()
        .filter(|e| e.label == 0)
        .collect();
    let single = fx.path("single.jsonl");
    write_canonical(&single, &congruent_only).expect("write single-class data");

    let out = fx.eval(&ckpt, &single);
    assert_eq!(exit_code(&out), 1, "stderr:\n{}", stderr(&out));
    assert!(stderr(&out).contains("AUC undefined"), "{}", stderr(&out));
}

#[test]
fn predict_with_zero_parameters_splits_probability_evenly() {
    let fx = fixture(4, 4, 6);
    let config = TrainConfig {
        d: 4,
        hidden: 3,
        ..TrainConfig::default()
    };
    let params = ModelParams::zeros(
        config.variant,
        config.pooling,
        config.synthetic_first,
        config.d,
        config.hidden,
    );
    let ckpt = fx.path("zeros.json");
    save_checkpoint(&ckpt, &params, &config, 0).expect("save zeros checkpoint");

    let unlabeled = fx.path("unlabeled.jsonl");
    std::fs::write(
        &unlabeled,
        "{\"id\":\"a\",\"headline\":\"coach team\",\"body\":\"goal match season. coach won.\"}\n\
         {\"id\":\"b\",\"headline\":\"bond yield\",\"body\":\"market shares profit. index up.\"}\n",
    )
    .expect("write unlabeled data");

    let out = musem()
        .arg("predict")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--data")
        .arg(&unlabeled)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .output()
        .expect("spawn musem predict");
    assert_success(&out);

    let lines: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("prediction line"))
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["id"], "a");
    for line in &lines {
        assert_eq!(line["p_congruent"].as_f64(), Some(0.5));
        assert_eq!(line["p_incongruent"].as_f64(), Some(0.5));
        // Exactly even probabilities must break toward congruent.
        assert_eq!(line["predicted_label"], 0);
    }
}

#[test]
fn predict_is_deterministic_and_normalized_after_training() {
    let fx = fixture(24, 8, 3);
    let ckpt = fx.path("ckpt.json");
    assert_success(&fx.train(&ckpt, &["--epochs", "5", "--seed", "8"]));

    let run = || {
        let out = musem()
            .arg("predict")
            .arg("--checkpoint")
            .arg(&ckpt)
            .arg("--data")
            .arg(&fx.data)
            .arg("--embeddings")
            .arg(&fx.embeddings)
            .output()
            .expect("spawn musem predict");
        assert_success(&out);
        out.stdout
    };
    let first = run();
    assert_eq!(first, run(), "prediction output must be reproducible");

    for line in String::from_utf8_lossy(&first).lines() {
        let v: Value = serde_json::from_str(line).expect("prediction line");
        let p0 = v["p_congruent"].as_f64().expect("p_congruent");
        let p1 = v["p_incongruent"].as_f64().expect("p_incongruent");
        assert!((p0 + p1 - 1.0).abs() < 1e-12);
        assert!(p0 > 0.0 && p1 > 0.0);
        let label = v["predicted_label"].as_u64().expect("label");
        assert_eq!(label, u64::from(p1 > 0.5));
    }
}

#[test]
fn missing_input_paths_exit_two_and_name_the_path() {
    let fx = fixture(4, 4, 1);
    let out = fx.train(&fx.path("ckpt.json"), &["--epochs", "1"]);
    drop(out);

    let mut cmd = musem();
    cmd.arg("train")
        .arg("--data")
        .arg(&fx.data)
        .arg("--embeddings")
        .arg("/nonexistent/embeddings.txt")
        .arg("--checkpoint-out")
        .arg(fx.path("x.json"));
    let out = cmd.output().expect("train with bad embeddings");
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr(&out).contains("/nonexistent/embeddings.txt"),
        "{}",
        stderr(&out)
    );

    let out = fx.eval(&fx.path("missing-ckpt.json"), &fx.data);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr(&out).contains("missing-ckpt.json"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_config_file_keys_are_rejected() {
    let fx = fixture(4, 4, 1);
    let config = fx.path("config.json");
    std::fs::write(&config, r#"{"epochs": 1, "bogus": 7}"#).expect("write config");
    let mut cmd = musem();
    cmd.arg("train")
        .arg("--data")
        .arg(&fx.data)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--checkpoint-out")
        .arg(fx.path("ckpt.json"))
        .arg("--config")
        .arg(&config);
    let out = cmd.output().expect("train with bad config");
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn gradcheck_passes_and_the_corrupt_hook_trips_it() {
    let args = [
        "gradcheck",
        "--d",
        "4",
        "--hidden",
        "3",
        "--len",
        "3",
        "--variant",
        "diff",
        "--pooling",
        "avg",
    ];
    let out = musem().args(args).output().expect("spawn musem gradcheck");
    assert_success(&out);
    assert!(
        stdout(&out).contains("all parameters passed"),
        "{}",
        stdout(&out)
    );

    let out = musem()
        .args(args)
        .env("MUSEM_GRADCHECK_CORRUPT", "1")
        .output()
        .expect("spawn corrupted gradcheck");
    assert_eq!(exit_code(&out), 1, "stderr:\n{}", stderr(&out));
    assert!(
        stderr(&out).contains("gradient check failed"),
        "{}",
        stderr(&out)
    );
    assert!(stderr(&out).contains("W_cl"), "{}", stderr(&out));
}

#[test]
fn attention_dump_writes_normalized_heatmaps() {
    let fx = fixture(24, 8, 3);
    let ckpt = fx.path("ckpt.json");
    assert_success(&fx.train(&ckpt, &["--epochs", "2", "--seed", "5"]));

    let dump_dir = fx.path("dump");
    let out = musem()
        .arg("attention-dump")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--data")
        .arg(&fx.data)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--out-dir")
        .arg(&dump_dir)
        .output()
        .expect("spawn musem attention-dump");
    assert_success(&out);

    let record = read_json(&dump_dir.join("ex000.json"));
    let original = record["original_tokens"].as_array().expect("tokens").len();
    let synthetic = record["synthetic_tokens"].as_array().expect("tokens").len();
    assert!(original > 0 && synthetic > 0);

    let vector = |key: &str| -> Vec<f64> {
        record[key]
            .as_array()
            .expect("vector")
            .iter()
            .map(|v| v.as_f64().expect("entry"))
            .collect()
    };
    let c: Vec<Vec<f64>> = record["c"]
        .as_array()
        .expect("matrix")
        .iter()
        .map(|row| {
            row.as_array()
                .expect("row")
                .iter()
                .map(|v| v.as_f64().expect("cell"))
                .collect()
        })
        .collect();
    assert_eq!(c.len(), original);
    assert_eq!(c[0].len(), synthetic);

    let a_o = vector("a_o");
    assert_eq!(a_o.len(), original, "one weight per original token");
    let sum: f64 = a_o.iter().sum();
    assert!((sum - 1.0).abs() < 1e-10, "a_o sums to {sum}");

    let a_s = vector("a_s");
    assert_eq!(a_s.len(), synthetic, "one weight per synthetic token");
    let sum: f64 = a_s.iter().sum();
    assert!((sum - 1.0).abs() < 1e-10, "a_s sums to {sum}");

    assert_eq!(vector("m_a").len(), 8, "attended vector in embedding space");

    let csv = std::fs::read_to_string(dump_dir.join("ex000.csv")).expect("read csv");
    assert_eq!(
        csv.lines().count(),
        original + 1,
        "header plus one row per token"
    );
}

#[test]
fn identical_headline_pair_scores_its_diagonal_at_the_bias() {
    let fx = fixture(24, 8, 3);
    let ckpt = fx.path("ckpt.json");
    assert_success(&fx.train(&ckpt, &["--epochs", "3", "--seed", "5"]));

    let pair = fx.path("same.jsonl");
    std::fs::write(
        &pair,
        "{\"id\":\"same\",\"headline\":\"coach team goal\",\
         \"body\":\"coach team goal. season over.\",\
         \"synthetic_headline\":\"coach team goal\",\"label\":0}\n",
    )
    .expect("write pair");

    let dump_dir = fx.path("dump-same");
    let out = musem()
        .arg("attention-dump")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--data")
        .arg(&pair)
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--out-dir")
        .arg(&dump_dir)
        .output()
        .expect("spawn musem attention-dump");
    assert_success(&out);

    let bias = read_json(&ckpt)["tensors"]
        .as_array()
        .expect("tensors")
        .iter()
        .find(|t| t["name"] == "b_diff")
        .expect("b_diff tensor")["values"][0]
        .as_f64()
        .expect("bias value");

    // The diff feature of a word against itself is the zero vector, so every
    // diagonal score collapses to the bias exactly.
    let record = read_json(&dump_dir.join("same.json"));
    let c = record["c"].as_array().expect("c");
    for (i, row) in c.iter().enumerate() {
        assert_eq!(row[i].as_f64(), Some(bias), "diagonal entry {i}");
    }
}

#[test]
fn ingest_stats_counts_classes_and_clickbait_drops() {
    let fx = fixture(24, 4, 3);
    let out = musem()
        .arg("ingest-stats")
        .arg("--data")
        .arg(&fx.data)
        .output()
        .expect("spawn musem ingest-stats");
    assert_success(&out);
    let report: Value = serde_json::from_str(&stdout(&out)).expect("stats json");
    assert_eq!(report["total"], 24);
    assert_eq!(report["per_class"][0], 12);
    assert_eq!(report["per_class"][1], 12);
    assert_eq!(report["class_weights"][0].as_f64(), Some(1.0));
    assert_eq!(report["class_weights"][1].as_f64(), Some(1.0));
    assert_eq!(report["dropped_missing_truth"], 0);

    let instances = fx.path("instances.jsonl");
    let truth = fx.path("truth.jsonl");
    std::fs::write(
        &instances,
        "{\"id\":\"p1\",\"postText\":[\"Shock result\"],\"targetParagraphs\":[\"The match ended.\"]}\n\
         {\"id\":\"p2\",\"postText\":[\"Budget passed\"],\"targetParagraphs\":[\"It passed.\"]}\n\
         {\"id\":\"p3\",\"postText\":[\"No truth here\"],\"targetParagraphs\":[\"Dropped.\"]}\n",
    )
    .expect("write instances");
    std::fs::write(
        &truth,
        "{\"id\":\"p1\",\"truthClass\":\"clickbait\"}\n\
         {\"id\":\"p2\",\"truthClass\":\"no-clickbait\"}\n",
    )
    .expect("write truth");

    let canonical = fx.path("canon.jsonl");
    let out = musem()
        .arg("ingest-stats")
        .arg("--data")
        .arg(&instances)
        .args(["--format", "clickbait"])
        .arg("--truth")
        .arg(&truth)
        .arg("--emit-canonical")
        .arg(&canonical)
        .output()
        .expect("spawn clickbait ingest-stats");
    assert_success(&out);
    // The report comes first; --emit-canonical appends a status line.
    let text = stdout(&out);
    let report: Value = serde_json::Deserializer::from_str(&text)
        .into_iter()
        .next()
        .expect("stats json")
        .expect("stats json");
    assert_eq!(report["total"], 2);
    assert_eq!(report["per_class"][0], 1);
    assert_eq!(report["per_class"][1], 1);
    assert_eq!(report["dropped_missing_truth"], 1);

    let text = std::fs::read_to_string(&canonical).expect("read canonical");
    assert_eq!(text.lines().count(), 2);
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).expect("line");
    assert_eq!(first["label"], 1, "clickbait maps to incongruent");
}

#[test]
fn variant_and_pooling_flags_are_recorded_in_the_checkpoint() {
    let fx = fixture(8, 4, 1);
    let ckpt = fx.path("ckpt.json");
    let out = fx.train(
        &ckpt,
        &[
            "--epochs",
            "1",
            "--variant",
            "clubbed",
            "--pooling",
            "max",
            "--hidden",
            "5",
        ],
    );
    assert_success(&out);

    let parsed = read_json(&ckpt);
    assert_eq!(parsed["config"]["variant"], "clubbed");
    assert_eq!(parsed["config"]["pooling"], "max");
    assert_eq!(parsed["config"]["hidden"], 5);
    let names: Vec<&str> = parsed["tensors"]
        .as_array()
        .expect("tensors")
        .iter()
        .map(|t| t["name"].as_str().expect("name"))
        .collect();
    assert!(names.contains(&"theta_dpc"), "{names:?}");
    assert!(names.contains(&"b_dpc"), "{names:?}");

    let out = fx.eval(&ckpt, &fx.data);
    assert_success(&out);
}

#[test]
fn clickbait_format_requires_a_truth_file() {
    let fx = fixture(4, 4, 1);
    let mut cmd = musem();
    cmd.arg("train")
        .arg("--data")
        .arg(&fx.data)
        .args(["--format", "clickbait"])
        .arg("--embeddings")
        .arg(&fx.embeddings)
        .arg("--checkpoint-out")
        .arg(fx.path("ckpt.json"));
    let out = cmd.output().expect("train without truth");
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("--truth"), "{}", stderr(&out));
}
