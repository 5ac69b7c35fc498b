use clap::{Parser, Subcommand};
use ffoptic::data::{make_splits, Mnist, SplitSpec};
use ffoptic::fiber::{run_selfcheck, FiberGeometry, OpticsConfig};
use ffoptic::pipeline::{
    confusion_csv, emit_report, evaluate_checkpoint, load_checkpoint, run_experiment, save_checkpoint,
    sweep_checkpoint, Dataset, ExperimentConfig, Split,
};
use ffoptic::{Error, Result};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ffoptic", version, about = "Forward-forward training with simulated fiber stages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the MNIST files and write the seeded split indices.
    Prepare {
        #[arg(long, default_value = "data/mnist")]
        mnist_dir: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Where to write the split indices as JSON; stdout gets a summary either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one architecture and write a checkpoint and report.
    ///
    /// Any config key can follow as `--key value` (e.g. `--epochs 10
    /// --optics-dz 0.005`); these override the config file.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        arch: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint on one split.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Output path stem; writes `<stem>.json` and `<stem>.confusion.csv`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
    },
    /// Refit a checkpoint's ridge readout over a regularization grid.
    Sweep {
        #[arg(long)]
        ckpt: PathBuf,
        /// Comma-separated, ascending.
        #[arg(long)]
        alphas: Option<String>,
        /// Output path stem; writes `<stem>.json` and `<stem>.sweep.csv`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
    },
    /// Fiber simulator diagnostics.
    Fiber {
        #[command(subcommand)]
        command: FiberCommand,
    },
}

#[derive(Subcommand, Debug)]
enum FiberCommand {
    /// Run the physics validation checks.
    Selfcheck {
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        dz: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
}

/// Applies `--key value` and `--key=value` pairs.
fn apply_overrides(cfg: &mut ExperimentConfig, args: &[String]) -> Result<()> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --key, found '{a}'")))?;
        match key.split_once('=') {
            Some((k, v)) => cfg.set(k, v)?,
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("missing value for --{key}")))?;
                cfg.set(key, v)?;
            }
        }
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Prepare { mnist_dir, seed, out } => {
            let mnist = Mnist::load_train(&mnist_dir)?;
            let spec = SplitSpec { seed, ..SplitSpec::default() };
            let splits = make_splits(mnist.len(), &spec)?;
            if let Some(out) = &out {
                write_json(out, &serde_json::to_value(&splits)?)?;
            }
            Ok(json!({
                "pool": mnist.len(),
                "seed": seed,
                "train": splits.train.len(),
                "val": splits.val.len(),
                "test": splits.test.len(),
                "out": out,
            }))
        }
        Command::Train {
            config,
            arch,
            out,
            overrides,
        } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(a) = &arch {
                cfg.set("arch", a)?;
            }
            apply_overrides(&mut cfg, &overrides)?;
            let outcome = run_experiment(&cfg)?;
            std::fs::create_dir_all(&out)?;
            let ckpt = out.join("model.ckpt");
            save_checkpoint(&ckpt, &outcome.checkpoint)?;
            emit_report(&outcome.report, &out.join("report"))?;
            let r = &outcome.report;
            Ok(json!({
                "arch": r.arch,
                "test_accuracy": r.metrics.test.accuracy,
                "val_accuracy": r.metrics.val.accuracy,
                "best_alpha": r.best_alpha,
                "parameters": r.parameter_count,
                "flops": r.flops.count,
                "transform_calls": r.transform_calls,
                "checkpoint": ckpt,
                "config_hash": r.config_hash,
            }))
        }
        Command::Eval {
            ckpt,
            split,
            report,
            mnist_dir,
        } => {
            let split: Split = split.parse()?;
            let mut ck = load_checkpoint(&ckpt)?;
            if let Some(d) = mnist_dir {
                ck.config.mnist_dir = d;
            }
            let ds = Dataset::load(&ck.config)?;
            let m = evaluate_checkpoint(&ck, &ds, split)?;
            let value = json!({
                "split": format!("{split:?}").to_lowercase(),
                "config_hash": ck.config.hash(),
                "accuracy": m.accuracy,
                "confusion": m.confusion,
            });
            write_json(&with_ext(&report, ".json"), &value)?;
            std::fs::write(with_ext(&report, ".confusion.csv"), confusion_csv(&m))?;
            Ok(value)
        }
        Command::Sweep {
            ckpt,
            alphas,
            report,
            mnist_dir,
        } => {
            let mut ck = load_checkpoint(&ckpt)?;
            if let Some(d) = mnist_dir {
                ck.config.mnist_dir = d;
            }
            let mut cfg = ck.config.clone();
            if let Some(a) = &alphas {
                cfg.set("alphas", a)?;
                cfg.validate()?;
            }
            let ds = Dataset::load(&ck.config)?;
            let sweep = sweep_checkpoint(&ck, &ds, &cfg.alphas)?;
            let value = json!({
                "config_hash": ck.config.hash(),
                "best_alpha": sweep.best_alpha(),
                "points": sweep.points,
            });
            write_json(&with_ext(&report, ".json"), &value)?;
            std::fs::write(with_ext(&report, ".sweep.csv"), sweep.to_csv())?;
            Ok(value)
        }
        Command::Fiber {
            command: FiberCommand::Selfcheck { modes, dz, grid },
        } => {
            let geom = FiberGeometry::default();
            let mut cfg = OpticsConfig::default();
            cfg.mode_count = modes.unwrap_or(cfg.mode_count);
            cfg.dz = dz.unwrap_or(cfg.dz);
            cfg.grid = grid.unwrap_or(cfg.grid);
            let report = run_selfcheck(&geom, &cfg)?;
            if !report.passed() {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                println!("{}", serde_json::to_string(&report)?);
                return Err(Error::Config(format!("selfcheck failed: {}", failed.join(", "))));
            }
            Ok(serde_json::to_value(&report)?)
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_line("UsageError", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
