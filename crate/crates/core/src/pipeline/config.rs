//! Flat `key = value` experiment configuration.

use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::fiber::{FiberGeometry, OpticsConfig};
use crate::hashing::sha256_hex;
use crate::net::FfTrainConfig;
use crate::readout::default_alpha_grid;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable naming the persistent cache directory.
pub const CACHE_DIR_ENV: &str = "FFOPTIC_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Two conv blocks and a softmax layer trained end to end.
    Ebp2,
    /// Three forward-forward blocks and a ridge readout.
    Ffa3,
    /// Two forward-forward blocks with a fixed transform after each.
    Ffa2Optics,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Ebp2 => "ebp2",
            Architecture::Ffa3 => "ffa3",
            Architecture::Ffa2Optics => "ffa2_optics",
        }
    }

    pub fn conv_layers(self) -> usize {
        match self {
            Architecture::Ffa3 => 3,
            Architecture::Ebp2 | Architecture::Ffa2Optics => 2,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ebp2" => Ok(Architecture::Ebp2),
            "ffa3" => Ok(Architecture::Ffa3),
            "ffa2_optics" => Ok(Architecture::Ffa2Optics),
            other => Err(Error::Config(format!("unknown architecture '{other}'"))),
        }
    }
}

/// What sits between the blocks of `ffa2_optics`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HookKind {
    Fiber,
    Identity,
}

impl HookKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HookKind::Fiber => "fiber",
            HookKind::Identity => "identity",
        }
    }
}

impl FromStr for HookKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fiber" => Ok(HookKind::Fiber),
            "identity" => Ok(HookKind::Identity),
            other => Err(Error::Config(format!("unknown optics hook '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticsSettings {
    pub hook: HookKind,
    pub dz: f64,
    pub modes: usize,
    pub grid: usize,
    /// Launch waist in units of the fundamental mode waist.
    pub w0_factor: f64,
    pub power: f64,
    /// Self-phase of a lone fundamental mode at unit power, radians.
    pub phase: f64,
    pub coupling: f64,
    /// Also transform the last block's output.
    pub after_last: bool,
}

impl Default for OpticsSettings {
    fn default() -> Self {
        Self {
            hook: HookKind::Fiber,
            dz: 1e-2,
            modes: 91,
            grid: 64,
            w0_factor: 8.0,
            power: 1.0,
            phase: std::f64::consts::PI,
            coupling: 0.5,
            after_last: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub arch: Architecture,
    pub split: SplitSpec,
    pub init_seed: u64,
    pub negatives_seed: u64,
    pub disorder_seed: u64,
    pub theta: f64,
    pub dilation: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optics: OpticsSettings,
    pub alphas: Vec<f64>,
    /// Stage indices (1-based) feeding the readout; `None` picks the default.
    pub taps: Option<Vec<usize>>,
    /// Not part of the config hash.
    pub mnist_dir: PathBuf,
    /// Not part of the config hash.
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            arch: Architecture::Ffa3,
            split: SplitSpec::default(),
            init_seed: 1,
            negatives_seed: 2,
            disorder_seed: 1,
            theta: 2.0,
            dilation: 4,
            learning_rate: 1e-2,
            batch_size: 64,
            epochs: 60,
            optics: OpticsSettings::default(),
            alphas: default_alpha_grid(),
            taps: None,
            mnist_dir: PathBuf::from("data/mnist"),
            cache_dir: std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for '{key}': '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid value for '{key}': '{v}'"))),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn for_arch(arch: Architecture) -> Self {
        Self {
            arch,
            ..Self::default()
        }
    }

    /// Applies one `key = value` assignment. Dashes in keys are read as underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "arch" => self.arch = v.parse()?,
            "split_seed" | "seed" => self.split.seed = parse_num(&key, v)?,
            "n_train" => self.split.n_train = parse_num(&key, v)?,
            "n_val" => self.split.n_val = parse_num(&key, v)?,
            "n_test" => self.split.n_test = parse_num(&key, v)?,
            "init_seed" => self.init_seed = parse_num(&key, v)?,
            "negatives_seed" => self.negatives_seed = parse_num(&key, v)?,
            "disorder_seed" => self.disorder_seed = parse_num(&key, v)?,
            "theta" => self.theta = parse_num(&key, v)?,
            "dilation" => self.dilation = parse_num(&key, v)?,
            "learning_rate" => self.learning_rate = parse_num(&key, v)?,
            "batch_size" => self.batch_size = parse_num(&key, v)?,
            "epochs" => self.epochs = parse_num(&key, v)?,
            "optics_hook" => self.optics.hook = v.parse()?,
            "optics_dz" => self.optics.dz = parse_num(&key, v)?,
            "optics_modes" => self.optics.modes = parse_num(&key, v)?,
            "optics_grid" => self.optics.grid = parse_num(&key, v)?,
            "optics_w0" => self.optics.w0_factor = parse_num(&key, v)?,
            "optics_power" => self.optics.power = parse_num(&key, v)?,
            "optics_phase" => self.optics.phase = parse_num(&key, v)?,
            "optics_coupling" => self.optics.coupling = parse_num(&key, v)?,
            "optics_after_last" => self.optics.after_last = parse_bool(&key, v)?,
            "alphas" => self.alphas = parse_list(&key, v)?,
            "taps" => {
                self.taps = if v == "auto" {
                    None
                } else {
                    Some(parse_list(&key, v)?)
                }
            }
            "mnist_dir" => self.mnist_dir = PathBuf::from(v),
            "cache_dir" => self.cache_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text of every hashed key, one per line, in a fixed order.
    pub fn canonical_text(&self) -> String {
        let o = &self.optics;
        let taps = self.taps.as_deref().map_or("auto".to_string(), join);
        let lines = [
            ("arch", self.arch.to_string()),
            ("split_seed", self.split.seed.to_string()),
            ("n_train", self.split.n_train.to_string()),
            ("n_val", self.split.n_val.to_string()),
            ("n_test", self.split.n_test.to_string()),
            ("init_seed", self.init_seed.to_string()),
            ("negatives_seed", self.negatives_seed.to_string()),
            ("disorder_seed", self.disorder_seed.to_string()),
            ("theta", self.theta.to_string()),
            ("dilation", self.dilation.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("optics_hook", o.hook.as_str().to_string()),
            ("optics_dz", o.dz.to_string()),
            ("optics_modes", o.modes.to_string()),
            ("optics_grid", o.grid.to_string()),
            ("optics_w0", o.w0_factor.to_string()),
            ("optics_power", o.power.to_string()),
            ("optics_phase", o.phase.to_string()),
            ("optics_coupling", o.coupling.to_string()),
            ("optics_after_last", o.after_last.to_string()),
            ("alphas", join(&self.alphas)),
            ("taps", taps),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_text().as_bytes())
    }

    /// Stage indices feeding the readout.
    pub fn readout_taps(&self) -> Vec<usize> {
        if let Some(t) = &self.taps {
            return t.clone();
        }
        match self.arch {
            Architecture::Ffa3 => vec![2, 3],
            Architecture::Ebp2 | Architecture::Ffa2Optics => vec![1, 2],
        }
    }

    /// Whether stage `k` (1-based) is followed by the fiber transform.
    pub fn fiber_after(&self, k: usize) -> bool {
        self.arch == Architecture::Ffa2Optics
            && self.optics.hook == HookKind::Fiber
            && (k < self.arch.conv_layers() || self.optics.after_last)
    }

    pub fn optical_stages(&self) -> usize {
        (1..=self.arch.conv_layers()).filter(|&k| self.fiber_after(k)).count()
    }

    pub fn train_config(&self, seed: u64) -> FfTrainConfig {
        FfTrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
        }
    }

    pub fn optics_config(&self, geom: &FiberGeometry) -> OpticsConfig {
        let o = &self.optics;
        OpticsConfig {
            grid: o.grid,
            dz: o.dz,
            w0: o.w0_factor * geom.mode_waist(),
            mode_count: o.modes,
            seed: self.disorder_seed,
            coupling_strength: o.coupling,
            power_scale: o.power,
            ..OpticsConfig::calibrated(geom, o.phase)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.split.n_train == 0 || self.split.n_val == 0 || self.split.n_test == 0 {
            return Err(Error::Config("split counts must be positive".into()));
        }
        if self.dilation == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("dilation, batch_size and epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !self.theta.is_finite() {
            return Err(Error::Config("learning_rate must be positive and theta finite".into()));
        }
        if self.alphas.is_empty() || self.alphas.windows(2).any(|w| !(w[0] < w[1])) || self.alphas[0] < 0.0 {
            return Err(Error::Config("alphas must be a non-empty ascending list of non-negative values".into()));
        }
        let taps = self.readout_taps();
        let layers = self.arch.conv_layers();
        if taps.is_empty() || taps.iter().any(|&t| t == 0 || t > layers) {
            return Err(Error::Config(format!("taps must be non-empty and within 1..={layers}")));
        }
        if taps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("taps must be strictly ascending".into()));
        }
        if self.arch == Architecture::Ebp2 && taps != [1, 2] {
            return Err(Error::Config("ebp2 reads both stages; taps must be 1,2".into()));
        }
        if self.optical_stages() > 0 {
            let geom = FiberGeometry::default();
            self.optics_config(&geom).validate(&geom)?;
        }
        Ok(())
    }
}
