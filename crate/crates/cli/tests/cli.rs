use ffoptic::data::{to_idx_bytes, IdxData, RawImage, RAW_PIXELS, RAW_SIDE};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn ffoptic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffoptic"))
        .args(args)
        .output()
        .expect("spawn ffoptic")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON value")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has a line");
    serde_json::from_str(line).expect("last stderr line is JSON")
}

/// Writes a small MNIST-shaped pool: each class is a bar at its own row band.
fn synthetic_mnist(dir: &Path, n: usize) {
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 10) as u8;
        let mut px = [0u8; RAW_PIXELS];
        let r0 = 2 + 2 * y as usize;
        for r in r0..r0 + 3 {
            for c in 4..RAW_SIDE - 4 {
                px[r * RAW_SIDE + c] = 200 + ((i * 7 + c) % 50) as u8;
            }
        }
        // a little per-sample jitter
        px[(i * 13) % RAW_PIXELS] = 255;
        images.push(RawImage(Box::new(px)));
        labels.push(y);
    }
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("train-images-idx3-ubyte"), to_idx_bytes(&IdxData::Images(images))).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), to_idx_bytes(&IdxData::Labels(labels))).unwrap();
}

#[test]
fn unknown_arch_is_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = ffoptic(&["train", "--arch", "resnet", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "ConfigError");
    assert!(e["message"].as_str().unwrap().contains("resnet"));
}

#[test]
fn unknown_override_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = ffoptic(&["train", "--out", out_dir.to_str().unwrap(), "--momentum", "0.9"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "ConfigError");
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = ffoptic(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "UsageError");
}

#[test]
fn missing_data_reports_io() {
    let dir = tempfile::tempdir().unwrap();
    let out = ffoptic(&["prepare", "--mnist-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "Io");
}

#[test]
fn prepare_writes_split_indices() {
    let dir = tempfile::tempdir().unwrap();
    let mnist = dir.path().join("mnist");
    synthetic_mnist(&mnist, 6000);
    let split = dir.path().join("split.json");
    let v = stdout_json(&ffoptic(&[
        "prepare",
        "--mnist-dir",
        mnist.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        split.to_str().unwrap(),
    ]));
    assert_eq!(v["train"], 4000);
    assert_eq!(v["val"], 1000);
    assert_eq!(v["test"], 1000);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&split).unwrap()).unwrap();
    assert_eq!(written["train"].as_array().unwrap().len(), 4000);
}

#[test]
fn train_eval_sweep_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mnist = dir.path().join("mnist");
    synthetic_mnist(&mnist, 200);
    let run = dir.path().join("run");
    let config = dir.path().join("tiny.conf");
    std::fs::write(
        &config,
        format!(
            "# tiny digital run\narch = ffa3\nn_train = 60\nn_val = 20\nn_test = 20\nepochs = 2\nbatch_size = 16\nmnist_dir = {}\ncache_dir =\n",
            mnist.display()
        ),
    )
    .unwrap();
    let trained = stdout_json(&ffoptic(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--alphas",
        "0.01,1,100",
    ]));
    assert_eq!(trained["arch"], "ffa3");
    assert_eq!(trained["parameters"], 3 * 26 + 2048 * 10 + 10);
    assert_eq!(trained["flops"], 194_560);
    for f in ["model.ckpt", "report.json", "report.confusion.csv", "report.sweep.csv"] {
        assert!(run.join(f).exists(), "{f} missing");
    }

    let ckpt = run.join("model.ckpt");
    let eval = stdout_json(&ffoptic(&[
        "eval",
        "--ckpt",
        ckpt.to_str().unwrap(),
        "--split",
        "test",
        "--report",
        dir.path().join("eval").to_str().unwrap(),
    ]));
    assert_eq!(eval["accuracy"], trained["test_accuracy"]);
    assert_eq!(eval["config_hash"], trained["config_hash"]);

    let sweep = stdout_json(&ffoptic(&[
        "sweep",
        "--ckpt",
        ckpt.to_str().unwrap(),
        "--report",
        dir.path().join("sweep").to_str().unwrap(),
    ]));
    assert_eq!(sweep["best_alpha"], trained["best_alpha"]);
    assert_eq!(sweep["points"].as_array().unwrap().len(), 3);

    let mut bytes = std::fs::read(&ckpt).unwrap();
    let n = bytes.len();
    bytes[n - 5] ^= 0x20;
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, bytes).unwrap();
    let out = ffoptic(&[
        "eval",
        "--ckpt",
        bad.to_str().unwrap(),
        "--report",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "CorruptFile");
}

#[test]
fn fiber_selfcheck_passes_on_a_small_fiber() {
    let v = stdout_json(&ffoptic(&["fiber", "selfcheck", "--modes", "15"]));
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 4);
    assert!(checks.iter().all(|c| c["passed"] == true), "{v}");
}
