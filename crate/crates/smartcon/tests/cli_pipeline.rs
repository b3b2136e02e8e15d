//! End-to-end runs of the `smartcon` binary: file formats, exit codes, and
//! byte-identical replay of the whole pipeline under fixed seeds.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_smartcon")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("smartcon-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    // one file per distinct body so configs in a test never collide
    let tag = body.len();
    let path = dir.join(format!("run-{tag}.cfg"));
    fs::write(&path, body).unwrap();
    path
}

const SMALL_ENV: &str = "\
sim.n_ues = 10
sim.duration_ms = 8000
sim.arrival_rate_per_ue = 4.0
sim.ul_fraction = 1.0
sim.sigma_step_db = 0.2
";

#[test]
fn pipeline_replays_byte_identically() {
    let dir = tmp_dir("replay");
    let cfg = write_config(&dir, SMALL_ENV);
    let cfg = cfg.to_str().unwrap();

    let mut artifacts: Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> = Vec::new();
    for round in 0..2 {
        let data = dir.join(format!("data{round}.csv"));
        let model = dir.join(format!("model{round}.ckpt"));
        let metrics = dir.join(format!("metrics{round}.csv"));
        let out = run(&[
            "gen-dataset",
            "--config",
            cfg,
            "--out",
            data.to_str().unwrap(),
            "--episodes",
            "2",
            "--seed",
            "5",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run(&[
            "train",
            "--config",
            cfg,
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
            "--epochs",
            "10",
            "--seed",
            "5",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run(&[
            "eval",
            "--config",
            cfg,
            "--policy",
            "smartcon",
            "--model",
            model.to_str().unwrap(),
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            metrics.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        artifacts.push((
            fs::read(&data).unwrap(),
            fs::read(&model).unwrap(),
            fs::read(&metrics).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "datasets differ");
    assert_eq!(artifacts[0].1, artifacts[1].1, "checkpoints differ");
    assert_eq!(artifacts[0].2, artifacts[1].2, "metrics differ");

    let dataset_text = String::from_utf8(artifacts[0].0.clone()).unwrap();
    assert!(dataset_text.starts_with(smartcon::DATASET_HEADER));
    let metrics_text = String::from_utf8(artifacts[0].2.clone()).unwrap();
    assert!(metrics_text.starts_with("policy,n_ues,seed,"));
    assert!(metrics_text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("smartcon,10,5,"));

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn eval_with_zero_traffic_reports_zero_throughput() {
    let dir = tmp_dir("zero");
    let cfg = write_config(
        &dir,
        "sim.n_ues = 5\nsim.duration_ms = 2000\nsim.arrival_rate_per_ue = 0.0\n",
    );
    let metrics = dir.join("metrics.csv");
    let out = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--policy",
        "static",
        "--out",
        metrics.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&metrics).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "static");
    assert_eq!(row[3], "0.000000"); // throughput
    assert_eq!(row[8], "0"); // consumed subframes
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn train_with_zero_epochs_writes_the_seeded_initialization() {
    let dir = tmp_dir("init");
    let cfg = write_config(&dir, SMALL_ENV);
    let data = dir.join("data.csv");
    let out = run(&[
        "gen-dataset",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--episodes",
        "1",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let model = dir.join("model.ckpt");
    let out = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epochs",
        "0",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());

    let ckpt = smartcon::load_checkpoint(&model).unwrap();
    let mut rng = smartcon::rng::stream(3, "gan-init", 0);
    let generator = smartcon::GeneratorParams::init(32, 1.0, 2.0, &mut rng);
    let discriminator = smartcon::DiscriminatorParams::init(32, &mut rng);
    assert_eq!(ckpt.generator, generator);
    assert_eq!(ckpt.discriminator, discriminator);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_writes_one_row_per_ue_count() {
    let dir = tmp_dir("sweep");
    let cfg = write_config(
        &dir,
        "sim.duration_ms = 2000\nsim.arrival_rate_per_ue = 3.0\n",
    );
    let metrics = dir.join("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--ues",
        "10..30",
        "--step",
        "10",
        "--policy",
        "threshold",
        "--out",
        metrics.to_str().unwrap(),
        "--seed",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&metrics).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, ues) in rows.iter().zip(["10", "20", "30"]) {
        assert!(row.starts_with(&format!("threshold,{ues},")), "{row}");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn check_grads_subcommand_passes() {
    let out = run(&["check-grads", "--seed", "1", "--seeds", "5"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gradients OK"), "{stderr}");
}

#[test]
fn failures_exit_nonzero_without_partial_outputs() {
    let dir = tmp_dir("fail");

    // malformed config names the key
    let cfg = write_config(&dir, "sim.n_ues = -3\n");
    let metrics = dir.join("metrics.csv");
    let out = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--policy",
        "static",
        "--out",
        metrics.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sim.n_ues"));
    assert!(!metrics.exists(), "failed run must not leave outputs");

    // smartcon without a model
    let cfg = write_config(&dir, SMALL_ENV);
    let out = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--policy",
        "smartcon",
        "--out",
        metrics.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--model"));

    // unreadable dataset
    let out = run(&[
        "train",
        "--dataset",
        dir.join("missing.csv").to_str().unwrap(),
        "--out",
        dir.join("m.ckpt").to_str().unwrap(),
        "--epochs",
        "1",
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(!dir.join("m.ckpt").exists());

    // unknown flag
    let out = run(&["eval", "--bogus"]);
    assert!(!out.status.success());

    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn checkpoint_hidden_size_must_match_config() {
    let dir = tmp_dir("hmismatch");
    let cfg = write_config(&dir, SMALL_ENV);
    let data = dir.join("data.csv");
    run(&[
        "gen-dataset",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--episodes",
        "1",
        "--seed",
        "2",
    ]);
    // train with H=8, evaluate with default H=32
    let small = write_config(&dir, &format!("{SMALL_ENV}gan.hidden = 8\n"));
    let model = dir.join("model8.ckpt");
    let out = run(&[
        "train",
        "--config",
        small.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epochs",
        "1",
        "--seed",
        "2",
    ]);
    assert!(out.status.success());
    let cfg32 = write_config(&dir, SMALL_ENV);
    let out = run(&[
        "eval",
        "--config",
        cfg32.to_str().unwrap(),
        "--policy",
        "smartcon",
        "--model",
        model.to_str().unwrap(),
        "--out",
        dir.join("m.csv").to_str().unwrap(),
        "--seed",
        "2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
    fs::remove_dir_all(&dir).unwrap();
}
