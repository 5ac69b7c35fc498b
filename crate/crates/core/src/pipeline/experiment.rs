//! End-to-end runs of the three architectures.

use super::cache::{StageCache, StageData};
use super::checkpoint::{Checkpoint, Model};
use super::config::{Architecture, ExperimentConfig};
use super::hooks::{CountingHook, FiberHook};
use super::report::{estimate_flops, reference_row, Report, SplitMetrics};
use crate::data::{draw_negative_class, embed_marked, embed_neutral, make_splits, pad_to_canvas, Canvas, Mnist};
use crate::error::{Error, Result, ResultExt};
use crate::fiber::{FiberGeometry, FiberSystem};
use crate::hashing::Hasher;
use crate::net::{
    train_baseline_ebp, train_ff_layer, Adam, EbpNet, FFLayerParams, IdentityHook, PairSource, StageHook,
    StoredPairs, EBP_FEATURES, LAYER_PARAMS,
};
use crate::readout::{evaluate, predict, sweep_regularization, FeatureMatrix, Metrics, RidgePath, SweepResult};
use crate::FEATURES;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::borrow::Cow;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

/// Which split to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }
}

/// Padded canvases and labels of the three splits.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<Canvas>,
    pub train_labels: Vec<usize>,
    pub val: Vec<Canvas>,
    pub val_labels: Vec<usize>,
    pub test: Vec<Canvas>,
    pub test_labels: Vec<usize>,
}

impl Dataset {
    pub fn from_mnist(mnist: &Mnist, cfg: &ExperimentConfig) -> Result<Self> {
        let splits = make_splits(mnist.len(), &cfg.split)?;
        let take = |idx: &[usize]| -> (Vec<Canvas>, Vec<usize>) {
            idx.iter()
                .map(|&i| (pad_to_canvas(&mnist.images[i]), mnist.labels[i] as usize))
                .unzip()
        };
        let (train, train_labels) = take(&splits.train);
        let (val, val_labels) = take(&splits.val);
        let (test, test_labels) = take(&splits.test);
        Ok(Self {
            train,
            train_labels,
            val,
            val_labels,
            test,
            test_labels,
        })
    }

    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let mnist = Mnist::load_train(&cfg.mnist_dir).stage("loading MNIST")?;
        Self::from_mnist(&mnist, cfg)
    }

    pub fn labels(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train_labels,
            Split::Val => &self.val_labels,
            Split::Test => &self.test_labels,
        }
    }

    fn neutral(canvases: &[Canvas]) -> Result<FeatureMatrix> {
        let rows: Vec<Vec<f64>> = canvases.iter().map(|c| embed_neutral(c).0).collect();
        table(rows)
    }
}

fn table(rows: Vec<Vec<f64>>) -> Result<FeatureMatrix> {
    if rows.is_empty() {
        return FeatureMatrix::new(0, FEATURES, Vec::new());
    }
    FeatureMatrix::from_rows(&rows)
}

/// splitmix64 finalizer over `seed ^ salt`, for deriving independent seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Wrong class shown with training sample `index` in `epoch`.
pub fn negative_class(seed: u64, epoch: usize, index: usize, true_class: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(mix(seed, epoch as u64), index as u64));
    draw_negative_class(true_class, &mut rng)
}

/// Stage-0 tables: positives, the fixed (epoch-0) negatives and neutral
/// embeddings of every split.
pub fn stage_zero(ds: &Dataset, negatives_seed: u64) -> Result<StageData> {
    let pos = ds
        .train
        .iter()
        .zip(&ds.train_labels)
        .map(|(c, &y)| embed_marked(c, y, y).pixels.0)
        .collect();
    let neg = ds
        .train
        .iter()
        .zip(&ds.train_labels)
        .enumerate()
        .map(|(i, (c, &y))| embed_marked(c, y, negative_class(negatives_seed, 0, i, y)).pixels.0)
        .collect();
    Ok(StageData {
        train_pos: table(pos)?,
        train_neg: table(neg)?,
        train_neutral: Dataset::neutral(&ds.train)?,
        val_neutral: Dataset::neutral(&ds.val)?,
        test_neutral: Dataset::neutral(&ds.test)?,
    })
}

/// First-block pairs with a fresh wrong label every epoch.
struct ResampledPairs<'a> {
    ds: &'a Dataset,
    pos: &'a FeatureMatrix,
    seed: u64,
}

impl PairSource for ResampledPairs<'_> {
    fn len(&self) -> usize {
        self.pos.rows()
    }

    fn pair(&self, epoch: usize, index: usize) -> (Cow<'_, [f64]>, Cow<'_, [f64]>) {
        let y = self.ds.train_labels[index];
        let neg = negative_class(self.seed, epoch, index, y);
        let n = embed_marked(&self.ds.train[index], y, neg).pixels.0;
        (Cow::Borrowed(self.pos.row(index)), Cow::Owned(n))
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub checkpoint: Checkpoint,
}

/// Builds (or loads) the seeded fiber for `cfg`, if any stage uses it.
pub fn fiber_for(cfg: &ExperimentConfig) -> Result<Option<Arc<FiberSystem>>> {
    if cfg.optical_stages() == 0 {
        return Ok(None);
    }
    let geom = FiberGeometry::default();
    let ocfg = cfg.optics_config(&geom);
    let sys = match &cfg.cache_dir {
        Some(dir) => FiberSystem::build_cached(&geom, &ocfg, &dir.join("fiber")),
        None => FiberSystem::build(&geom, &ocfg),
    }
    .stage("building fiber")?;
    Ok(Some(Arc::new(sys)))
}

/// Identity of the data and hooks a stage lineage is computed from.
fn lineage(cfg: &ExperimentConfig, hooks: &[&dyn StageHook]) -> String {
    let mut h = Hasher::new();
    h.u64(cfg.split.seed)
        .u64(cfg.split.n_train as u64)
        .u64(cfg.split.n_val as u64)
        .u64(cfg.split.n_test as u64)
        .u64(cfg.negatives_seed)
        .u64(cfg.init_seed)
        .u64(cfg.arch.conv_layers() as u64);
    for hook in hooks {
        h.str(&hook.name());
    }
    h.finish_hex()
}

fn stage_tag(lineage: &str, layers: &[FFLayerParams]) -> String {
    let mut h = Hasher::new();
    h.str(lineage);
    for l in layers {
        h.f64s(&l.params()).u64(l.dilation as u64).f64(l.theta);
    }
    h.finish_hex()
}

fn stage_cache(cfg: &ExperimentConfig, lineage: &str) -> StageCache {
    StageCache::new(cfg.cache_dir.as_ref().map(|d| d.join("stages").join(&lineage[..16])))
}

/// Loads stage `k` from the cache or computes and stores it. A stale slot is
/// recomputed and overwritten.
fn next_stage(
    k: usize,
    prev: &StageData,
    layers: &[FFLayerParams],
    hook: &dyn StageHook,
    with_pairs: bool,
    lineage: &str,
    cache: &StageCache,
) -> Result<StageData> {
    let tag = stage_tag(lineage, layers);
    match cache.load(k, &tag) {
        Ok(Some(d)) if !with_pairs || d.has_pairs() => return Ok(d),
        Ok(_) | Err(Error::CacheStale { .. }) => {}
        Err(e) => return Err(e),
    }
    let layer = layers.last().expect("at least one layer");
    let data = prev.advance(layer, hook, with_pairs)?;
    cache.store(k, &tag, &data)?;
    Ok(data)
}

fn concat_taps(stages: &[(usize, FeatureMatrix)]) -> Result<FeatureMatrix> {
    let mut it = stages.iter();
    let first = it.next().ok_or_else(|| Error::Config("no readout taps".into()))?.1.clone();
    it.try_fold(first, |acc, (_, m)| acc.hconcat(m))
}

struct ReadoutFeatures {
    train: FeatureMatrix,
    val: FeatureMatrix,
    test: FeatureMatrix,
}

impl ReadoutFeatures {
    fn get(&self, split: Split) -> &FeatureMatrix {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Trained blocks, their logs and the tapped readout features.
struct FfTrunk {
    layers: Vec<FFLayerParams>,
    losses: Vec<Vec<f64>>,
    features: ReadoutFeatures,
}

fn tapped(taps: &[usize], k: usize, d: &StageData, keep: &mut [Vec<(usize, FeatureMatrix)>; 3]) {
    if taps.contains(&k) {
        keep[0].push((k, d.train_neutral.clone()));
        keep[1].push((k, d.val_neutral.clone()));
        keep[2].push((k, d.test_neutral.clone()));
    }
}

fn finish_taps(keep: [Vec<(usize, FeatureMatrix)>; 3]) -> Result<ReadoutFeatures> {
    let [tr, va, te] = keep;
    Ok(ReadoutFeatures {
        train: concat_taps(&tr)?,
        val: concat_taps(&va)?,
        test: concat_taps(&te)?,
    })
}

fn hooks_for<'a>(cfg: &ExperimentConfig, fiber: Option<&'a dyn StageHook>) -> Result<Vec<&'a dyn StageHook>> {
    (1..=cfg.arch.conv_layers())
        .map(|k| match (cfg.fiber_after(k), fiber) {
            (true, Some(f)) => Ok(f),
            (true, None) => Err(Error::Config("fiber stage configured without a fiber".into())),
            (false, _) => Ok(&IdentityHook as &dyn StageHook),
        })
        .collect()
}

fn train_trunk(cfg: &ExperimentConfig, ds: &Dataset, hooks: &[&dyn StageHook]) -> Result<FfTrunk> {
    let n_layers = cfg.arch.conv_layers();
    let taps = cfg.readout_taps();
    let lin = lineage(cfg, hooks);
    let cache = stage_cache(cfg, &lin);
    let s0 = stage_zero(ds, cfg.negatives_seed)?;
    let mut keep: [Vec<(usize, FeatureMatrix)>; 3] = Default::default();
    let mut layers: Vec<FFLayerParams> = Vec::with_capacity(n_layers);
    let mut losses = Vec::with_capacity(n_layers);
    let mut prev = s0;
    for k in 1..=n_layers {
        let ctx = format!("block {k}");
        let seed = mix(cfg.init_seed, k as u64);
        let init = FFLayerParams::init(seed, cfg.dilation, cfg.theta);
        let mut adam = Adam::new(LAYER_PARAMS, cfg.learning_rate);
        let tcfg = cfg.train_config(mix(seed, 0xA5));
        let (layer, log) = if k == 1 {
            let src = ResampledPairs {
                ds,
                pos: &prev.train_pos,
                seed: cfg.negatives_seed,
            };
            train_ff_layer(&init, &src, &mut adam, &tcfg)
        } else {
            let src = StoredPairs {
                pos: (0..prev.train_pos.rows()).map(|i| prev.train_pos.row(i)).collect(),
                neg: (0..prev.train_neg.rows()).map(|i| prev.train_neg.row(i)).collect(),
            };
            train_ff_layer(&init, &src, &mut adam, &tcfg)
        }
        .stage(&format!("training {ctx}"))?;
        layers.push(layer);
        losses.push(log.epoch_losses);
        let next = next_stage(k, &prev, &layers, hooks[k - 1], k < n_layers, &lin, &cache)
            .stage(&format!("caching stage {k}"))?;
        tapped(&taps, k, &next, &mut keep);
        prev = next;
    }
    Ok(FfTrunk {
        layers,
        losses,
        features: finish_taps(keep)?,
    })
}

/// Readout features of frozen blocks, read from the stage cache when present.
fn trunk_features(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    layers: &[FFLayerParams],
    hooks: &[&dyn StageHook],
) -> Result<ReadoutFeatures> {
    let taps = cfg.readout_taps();
    let lin = lineage(cfg, hooks);
    let cache = stage_cache(cfg, &lin);
    let mut keep: [Vec<(usize, FeatureMatrix)>; 3] = Default::default();
    let mut prev = stage_zero(ds, cfg.negatives_seed)?;
    for k in 1..=layers.len() {
        let tag = stage_tag(&lin, &layers[..k]);
        let next = match cache.load(k, &tag) {
            Ok(Some(d)) => d,
            Ok(None) | Err(Error::CacheStale { .. }) => prev.advance(&layers[k - 1], hooks[k - 1], false)?,
            Err(e) => return Err(e),
        };
        tapped(&taps, k, &next, &mut keep);
        prev = next;
    }
    finish_taps(keep)
}

fn split_metrics(f: impl Fn(Split) -> Result<Metrics>) -> Result<SplitMetrics> {
    Ok(SplitMetrics {
        train: f(Split::Train)?,
        val: f(Split::Val)?,
        test: f(Split::Test)?,
    })
}

fn ebp_inputs(canvases: &[Canvas]) -> Vec<Vec<f64>> {
    canvases.iter().map(|c| embed_neutral(c).0).collect()
}

fn ebp_metrics(net: &EbpNet, canvases: &[Canvas], labels: &[usize]) -> Result<Metrics> {
    let pred: Vec<usize> = ebp_inputs(canvases)
        .par_iter()
        .map(|x| net.predict(x))
        .collect::<Result<_>>()?;
    evaluate(&pred, labels)
}

fn canvases(ds: &Dataset, split: Split) -> &[Canvas] {
    match split {
        Split::Train => &ds.train,
        Split::Val => &ds.val,
        Split::Test => &ds.test,
    }
}

/// Runs `cfg` on an already loaded dataset.
pub fn run_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Outcome> {
    cfg.validate()?;
    let start = Instant::now();
    let fiber = fiber_for(cfg)?;
    let counted = fiber.as_ref().map(|s| CountingHook::new(FiberHook::new(s.clone())));
    let (model, metrics, sweep, losses) = match cfg.arch {
        Architecture::Ebp2 => {
            let data = ebp_inputs(&ds.train);
            let pairs: Vec<(&[f64], usize)> = data.iter().map(|x| &x[..]).zip(ds.train_labels.iter().copied()).collect();
            let init = EbpNet::init(mix(cfg.init_seed, 1), cfg.dilation);
            let mut adam = Adam::new(EbpNet::N_PARAMS, cfg.learning_rate);
            let (net, log) = train_baseline_ebp(&init, &pairs, &mut adam, &cfg.train_config(mix(cfg.init_seed, 0xA5)))
                .stage("training ebp2")?;
            let metrics = split_metrics(|s| ebp_metrics(&net, canvases(ds, s), ds.labels(s)))?;
            (Model::Ebp(net), metrics, None, vec![log.epoch_losses])
        }
        Architecture::Ffa3 | Architecture::Ffa2Optics => {
            let hooks = hooks_for(cfg, counted.as_ref().map(|h| h as &dyn StageHook))?;
            let trunk = train_trunk(cfg, ds, &hooks)?;
            let f = &trunk.features;
            let path = RidgePath::new(&f.train, &ds.train_labels).stage("fitting readout")?;
            let sweep = sweep_regularization(&path, &f.train, &ds.train_labels, &f.val, &ds.val_labels, &cfg.alphas)
                .stage("sweeping readout")?;
            let readout = path.model(sweep.best_alpha())?;
            let metrics = split_metrics(|s| evaluate(&predict(&readout, f.get(s))?, ds.labels(s)))?;
            (
                Model::ForwardForward {
                    layers: trunk.layers,
                    readout,
                },
                metrics,
                Some(sweep),
                trunk.losses,
            )
        }
    };
    let mut checkpoint = Checkpoint::new(cfg.clone(), model);
    if let Some(sys) = &fiber {
        let geom = FiberGeometry::default();
        let key = FiberSystem::cache_path(&geom, &sys.config, &PathBuf::new());
        checkpoint.fiber_cache_key = Some(key.display().to_string());
        checkpoint.fiber_fingerprint = Some(sys.fingerprint().to_string());
    }
    let readout_dim = match &checkpoint.model {
        Model::Ebp(_) => EBP_FEATURES,
        Model::ForwardForward { readout, .. } => readout.dim,
    };
    let report = Report {
        arch: cfg.arch,
        config_hash: cfg.hash(),
        config: cfg.canonical_text(),
        metrics,
        parameter_count: checkpoint.trainable_parameter_count(),
        flops: estimate_flops(cfg.arch.conv_layers(), readout_dim),
        readout_taps: cfg.readout_taps(),
        best_alpha: sweep.as_ref().map(|s| s.best_alpha()),
        sweep,
        transform_calls: counted.as_ref().map_or(0, |h| h.calls()),
        optical_stages: cfg.optical_stages(),
        fiber_fingerprint: checkpoint.fiber_fingerprint.clone(),
        layer_losses: losses,
        reference: reference_row(cfg.arch),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome { report, checkpoint })
}

/// Loads MNIST and runs `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ds = Dataset::load(cfg)?;
    run_on(cfg, &ds)
}

/// Expected fixed-transform calls of an uncached run: at each optical stage
/// every training sample's positive and negative (when a later block trains
/// on them) plus one neutral view of every sample. Epoch count does not enter.
pub fn expected_transform_calls(cfg: &ExperimentConfig) -> u64 {
    let n_layers = cfg.arch.conv_layers();
    let s = &cfg.split;
    (1..=n_layers)
        .filter(|&k| cfg.fiber_after(k))
        .map(|k| {
            let pairs = if k < n_layers { 2 * s.n_train } else { 0 };
            (pairs + s.n_train + s.n_val + s.n_test) as u64
        })
        .sum()
}

fn checked_fiber(ckpt: &Checkpoint) -> Result<Option<Arc<FiberSystem>>> {
    let fiber = fiber_for(&ckpt.config)?;
    if let (Some(sys), Some(fp)) = (&fiber, &ckpt.fiber_fingerprint) {
        if sys.fingerprint() != fp {
            return Err(Error::Config("rebuilt fiber does not match the checkpoint fingerprint".into()));
        }
    }
    Ok(fiber)
}

/// Accuracy and confusion of a checkpoint on one split.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, ds: &Dataset, split: Split) -> Result<Metrics> {
    match &ckpt.model {
        Model::Ebp(net) => ebp_metrics(net, canvases(ds, split), ds.labels(split)),
        Model::ForwardForward { layers, readout } => {
            let fiber = checked_fiber(ckpt)?;
            let hook = fiber.map(FiberHook::new);
            let hooks = hooks_for(&ckpt.config, hook.as_ref().map(|h| h as &dyn StageHook))?;
            let f = trunk_features(&ckpt.config, ds, layers, &hooks)?;
            evaluate(&predict(readout, f.get(split))?, ds.labels(split))
        }
    }
}

/// Refits the readout of a forward-forward checkpoint over `alphas`.
pub fn sweep_checkpoint(ckpt: &Checkpoint, ds: &Dataset, alphas: &[f64]) -> Result<SweepResult> {
    let Model::ForwardForward { layers, .. } = &ckpt.model else {
        return Err(Error::Config("regularization sweeps need a ridge readout".into()));
    };
    let fiber = checked_fiber(ckpt)?;
    let hook = fiber.map(FiberHook::new);
    let hooks = hooks_for(&ckpt.config, hook.as_ref().map(|h| h as &dyn StageHook))?;
    let f = trunk_features(&ckpt.config, ds, layers, &hooks)?;
    let path = RidgePath::new(&f.train, &ds.train_labels)?;
    sweep_regularization(&path, &f.train, &ds.train_labels, &f.val, &ds.val_labels, alphas)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::SplitSpec;
    use crate::net::forward_stack;
    use crate::pipeline::config::HookKind;
    use rand::Rng;

    /// Ten classes of noisy bars at class-specific positions.
    pub(crate) fn synthetic(n_train: usize, n_val: usize, n_test: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |n: usize| -> (Vec<Canvas>, Vec<usize>) {
            (0..n)
                .map(|i| {
                    let y = i % 10;
                    let mut c = Canvas::zeros();
                    for v in c.0.iter_mut().skip(32) {
                        *v = rng.random_range(0.0..0.1);
                    }
                    let (r0, c0) = (4 + 2 * y, 4 + (7 * y) % 20);
                    for r in r0..r0 + 3 {
                        for col in c0..c0 + 8 {
                            c.0[r * 32 + col] = rng.random_range(0.6..1.0);
                        }
                    }
                    (c, y)
                })
                .unzip()
        };
        let (train, train_labels) = make(n_train);
        let (val, val_labels) = make(n_val);
        let (test, test_labels) = make(n_test);
        Dataset {
            train,
            train_labels,
            val,
            val_labels,
            test,
            test_labels,
        }
    }

    pub(crate) fn small_cfg(arch: Architecture) -> ExperimentConfig {
        let mut c = ExperimentConfig::for_arch(arch);
        c.split = SplitSpec {
            seed: 7,
            n_train: 60,
            n_val: 20,
            n_test: 20,
        };
        c.epochs = 2;
        c.batch_size = 16;
        c.learning_rate = 1e-2;
        c.optics.modes = 6;
        c.optics.dz = 0.05;
        c.optics.grid = 32;
        c.cache_dir = None;
        c
    }

    fn data(c: &ExperimentConfig) -> Dataset {
        synthetic(c.split.n_train, c.split.n_val, c.split.n_test, 11)
    }

    #[test]
    fn negatives_are_wrong_and_deterministic() {
        for i in 0..200 {
            let y = i % 10;
            let n = negative_class(3, 1, i, y);
            assert_ne!(n, y);
            assert_eq!(n, negative_class(3, 1, i, y));
        }
        let a: Vec<usize> = (0..50).map(|i| negative_class(3, 0, i, 0)).collect();
        let b: Vec<usize> = (0..50).map(|i| negative_class(3, 1, i, 0)).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn identity_hook_equals_plain_two_block_run() {
        let mut cfg = small_cfg(Architecture::Ffa2Optics);
        cfg.optics.hook = HookKind::Identity;
        let ds = data(&cfg);
        let out = run_on(&cfg, &ds).unwrap();
        assert_eq!(out.report.transform_calls, 0);
        let Model::ForwardForward { layers, readout } = &out.checkpoint.model else {
            panic!("expected a forward-forward model");
        };
        // recompute the readout input with the plain stack
        let feats = |canvases: &[Canvas]| -> FeatureMatrix {
            let rows: Vec<Vec<f64>> = canvases
                .iter()
                .map(|c| {
                    let reps = forward_stack(&embed_neutral(c).0, layers, &[&IdentityHook, &IdentityHook]).unwrap();
                    [reps[1].clone(), reps[2].clone()].concat()
                })
                .collect();
            FeatureMatrix::from_rows(&rows).unwrap()
        };
        let m = evaluate(&predict(readout, &feats(&ds.test)).unwrap(), &ds.test_labels).unwrap();
        assert_eq!(m, out.report.metrics.test);
    }

    #[test]
    fn repeated_runs_match_except_clock() {
        let cfg = small_cfg(Architecture::Ffa3);
        let ds = data(&cfg);
        let a = run_on(&cfg, &ds).unwrap();
        let b = run_on(&cfg, &ds).unwrap();
        assert_eq!(a.report.deterministic_json().unwrap(), b.report.deterministic_json().unwrap());
        assert_eq!(a.report.parameter_count, 3 * 26 + 2048 * 10 + 10);
        assert_eq!(a.report.flops.count, 194_560);
    }

    #[test]
    fn transform_calls_match_pair_count_for_any_epochs() {
        let ds = data(&small_cfg(Architecture::Ffa2Optics));
        for epochs in [1, 3] {
            let mut cfg = small_cfg(Architecture::Ffa2Optics);
            cfg.epochs = epochs;
            let out = run_on(&cfg, &ds).unwrap();
            assert_eq!(out.report.transform_calls, expected_transform_calls(&cfg));
            assert_eq!(expected_transform_calls(&cfg), (3 * 60 + 40) + (60 + 40));
        }
    }

    #[test]
    fn cache_hit_makes_no_transform_calls() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(Architecture::Ffa2Optics);
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let ds = data(&cfg);
        let first = run_on(&cfg, &ds).unwrap();
        assert_eq!(first.report.transform_calls, expected_transform_calls(&cfg));
        let second = run_on(&cfg, &ds).unwrap();
        assert_eq!(second.report.transform_calls, 0);
        assert_eq!(first.report.metrics, second.report.metrics);
    }

    #[test]
    fn checkpoint_evaluation_reproduces_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(Architecture::Ffa2Optics);
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let ds = data(&cfg);
        let out = run_on(&cfg, &ds).unwrap();
        let m = evaluate_checkpoint(&out.checkpoint, &ds, Split::Test).unwrap();
        assert_eq!(m, out.report.metrics.test);
        let sweep = sweep_checkpoint(&out.checkpoint, &ds, &cfg.alphas).unwrap();
        assert_eq!(Some(&sweep), out.report.sweep.as_ref());
        // without a cache the features are recomputed
        let mut nocache = out.checkpoint.clone();
        nocache.config.cache_dir = None;
        assert_eq!(evaluate_checkpoint(&nocache, &ds, Split::Val).unwrap(), out.report.metrics.val);
    }

    #[test]
    fn ebp_run_reports_shape() {
        let cfg = small_cfg(Architecture::Ebp2);
        let out = run_on(&cfg, &data(&cfg)).unwrap();
        assert_eq!(out.report.parameter_count, EbpNet::N_PARAMS as u64);
        assert_eq!(out.report.flops.count, 143_360);
        assert!(out.report.sweep.is_none());
        assert_eq!(
            evaluate_checkpoint(&out.checkpoint, &data(&cfg), Split::Test).unwrap(),
            out.report.metrics.test
        );
    }

    #[test]
    fn invalid_config_is_rejected_before_work() {
        let mut cfg = small_cfg(Architecture::Ffa3);
        cfg.taps = Some(vec![0]);
        assert!(matches!(run_on(&cfg, &data(&cfg)), Err(Error::Config(_))));
    }
}
