//! One forward-forward block and its layer-local training loop.

use super::conv::{conv2d_dilated, conv_param_grad, TAPS};
use super::goodness::{ff_pair_loss_grad, goodness};
use super::ops::relu_in_place;
use super::optim::Adam;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;

/// Trainable scalars per block: 25 kernel weights and one bias.
pub const LAYER_PARAMS: usize = TAPS + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FFLayerParams {
    pub kernel: [f64; TAPS],
    pub bias: f64,
    pub dilation: usize,
    /// Goodness threshold. Fixed during training.
    pub theta: f64,
}

impl FFLayerParams {
    pub fn new(kernel: [f64; TAPS], bias: f64, dilation: usize, theta: f64) -> Self {
        assert!(dilation >= 1, "dilation must be at least 1");
        Self {
            kernel,
            bias,
            dilation,
            theta,
        }
    }

    /// Kernel drawn from N(0, 0.2²), zero bias.
    pub fn init(seed: u64, dilation: usize, theta: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.2).expect("valid std");
        let kernel = std::array::from_fn(|_| normal.sample(&mut rng));
        Self::new(kernel, 0.0, dilation, theta)
    }

    pub fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        conv2d_dilated(input, &self.kernel, self.bias, self.dilation)
    }

    /// Post-ReLU activations `y_j`.
    pub fn activations(&self, input: &[f64]) -> Vec<f64> {
        let mut a = self.pre_activation(input);
        relu_in_place(&mut a);
        a
    }

    pub fn goodness(&self, input: &[f64]) -> f64 {
        goodness(&self.activations(input), self.theta)
    }

    pub fn params(&self) -> [f64; LAYER_PARAMS] {
        std::array::from_fn(|i| if i < TAPS { self.kernel[i] } else { self.bias })
    }

    pub fn set_params(&mut self, p: &[f64]) {
        self.kernel.copy_from_slice(&p[..TAPS]);
        self.bias = p[TAPS];
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite()) && self.theta.is_finite()
    }
}

/// Loss and parameter gradient for a single positive/negative pair.
pub fn ff_pair_param_grad(layer: &FFLayerParams, pos: &[f64], neg: &[f64]) -> (f64, [f64; LAYER_PARAMS]) {
    let ap = layer.pre_activation(pos);
    let an = layer.pre_activation(neg);
    let yp: Vec<f64> = ap.iter().map(|a| a.max(0.0)).collect();
    let yn: Vec<f64> = an.iter().map(|a| a.max(0.0)).collect();
    let (loss, mut gp, mut gn) = ff_pair_loss_grad(&yp, &yn, layer.theta);
    for (g, a) in gp.iter_mut().zip(&ap) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
    for (g, a) in gn.iter_mut().zip(&an) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
    let (kp, bp) = conv_param_grad(pos, &gp, layer.dilation);
    let (kn, bn) = conv_param_grad(neg, &gn, layer.dilation);
    let grad = std::array::from_fn(|i| if i < TAPS { kp[i] + kn[i] } else { bp + bn });
    (loss, grad)
}

/// Mean pair loss and its parameter gradient over a batch.
pub fn ff_batch_loss_grad(layer: &FFLayerParams, pairs: &[(&[f64], &[f64])]) -> (f64, [f64; LAYER_PARAMS]) {
    let per: Vec<(f64, [f64; LAYER_PARAMS])> = pairs
        .par_iter()
        .map(|(p, n)| ff_pair_param_grad(layer, p, n))
        .collect();
    let scale = 1.0 / pairs.len() as f64;
    let mut grad = [0.0; LAYER_PARAMS];
    let mut loss = 0.0;
    for (l, g) in &per {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|g| *g *= scale);
    (loss * scale, grad)
}

/// Supplies the positive and negative inputs a block trains on.
///
/// `epoch` lets a source resample negatives; cached sources ignore it.
pub trait PairSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn pair(&self, epoch: usize, index: usize) -> (Cow<'_, [f64]>, Cow<'_, [f64]>);
}

/// Pairs held in memory, identical every epoch.
pub struct StoredPairs<'a> {
    pub pos: Vec<&'a [f64]>,
    pub neg: Vec<&'a [f64]>,
}

impl PairSource for StoredPairs<'_> {
    fn len(&self) -> usize {
        self.pos.len()
    }

    fn pair(&self, _epoch: usize, index: usize) -> (Cow<'_, [f64]>, Cow<'_, [f64]>) {
        (Cow::Borrowed(self.pos[index]), Cow::Borrowed(self.neg[index]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FfTrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for FfTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 60,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

/// Greedy layer-local training of one block with mini-batch Adam.
pub fn train_ff_layer(
    layer: &FFLayerParams,
    pairs: &dyn PairSource,
    optim: &mut Adam,
    cfg: &FfTrainConfig,
) -> Result<(FFLayerParams, TrainLog)> {
    let mut layer = layer.clone();
    let mut params = layer.params();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let batch = cfg.batch_size.max(1);

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(batch).enumerate() {
            let owned: Vec<_> = chunk.iter().map(|&i| pairs.pair(epoch, i)).collect();
            let views: Vec<(&[f64], &[f64])> = owned.iter().map(|(p, n)| (&p[..], &n[..])).collect();
            let (loss, grad) = ff_batch_loss_grad(&layer, &views);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss(format!("epoch {epoch}, batch {b}: loss {loss}")));
            }
            total += loss * chunk.len() as f64;
            optim.update(&mut params, &grad);
            layer.set_params(&params);
        }
        epoch_losses.push(total / pairs.len().max(1) as f64);
    }
    Ok((layer, TrainLog { epoch_losses }))
}

/// Mean goodness over positive and negative inputs.
pub fn goodness_gap(layer: &FFLayerParams, pos: &[&[f64]], neg: &[&[f64]]) -> (f64, f64) {
    let mean = |xs: &[&[f64]]| xs.par_iter().map(|x| layer.goodness(x)).sum::<f64>() / xs.len() as f64;
    (mean(pos), mean(neg))
}
