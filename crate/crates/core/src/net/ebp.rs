//! End-to-end backprop baseline: two dilated conv blocks and a fully connected
//! softmax output reading both normalized stages.

use super::conv::{conv_input_grad, conv_param_grad, TAPS};
use super::layer::{FFLayerParams, FfTrainConfig, TrainLog, LAYER_PARAMS};
use super::ops::{l2_norm, l2_normalize_backward, NORM_FLOOR};
use super::optim::Adam;
use crate::error::{Error, Result};
use crate::{CLASSES, FEATURES};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EBP_FEATURES: usize = 2 * FEATURES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbpNet {
    pub layers: [FFLayerParams; 2],
    /// Row-major `EBP_FEATURES × CLASSES`.
    pub fc_weights: Vec<f64>,
    pub fc_bias: [f64; CLASSES],
}

struct Trace {
    a1: Vec<f64>,
    n1: Vec<f64>,
    norm1: f64,
    a2: Vec<f64>,
    n2: Vec<f64>,
    norm2: f64,
    logits: [f64; CLASSES],
}

fn normalize_checked(r: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = l2_norm(r);
    if !n.is_finite() {
        return Err(Error::NonFiniteLoss("non-finite activations".into()));
    }
    if n < NORM_FLOOR {
        return Err(Error::DegenerateNorm(n));
    }
    Ok((r.iter().map(|x| x / n).collect(), n))
}

fn log_softmax(z: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    std::array::from_fn(|c| z[c] - lse)
}

impl EbpNet {
    pub const N_PARAMS: usize = 2 * LAYER_PARAMS + EBP_FEATURES * CLASSES + CLASSES;

    pub fn init(seed: u64, dilation: usize) -> Self {
        let layers = [
            FFLayerParams::init(seed, dilation, 0.0),
            FFLayerParams::init(seed.wrapping_add(1), dilation, 0.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let normal = Normal::new(0.0, 0.01).expect("valid std");
        let fc_weights = (0..EBP_FEATURES * CLASSES).map(|_| normal.sample(&mut rng)).collect();
        Self {
            layers,
            fc_weights,
            fc_bias: [0.0; CLASSES],
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(Self::N_PARAMS);
        p.extend(self.layers[0].params());
        p.extend(self.layers[1].params());
        p.extend(&self.fc_weights);
        p.extend(self.fc_bias);
        p
    }

    pub fn set_params_flat(&mut self, p: &[f64]) {
        assert_eq!(p.len(), Self::N_PARAMS);
        self.layers[0].set_params(&p[..LAYER_PARAMS]);
        self.layers[1].set_params(&p[LAYER_PARAMS..2 * LAYER_PARAMS]);
        let w = 2 * LAYER_PARAMS;
        self.fc_weights.copy_from_slice(&p[w..w + EBP_FEATURES * CLASSES]);
        self.fc_bias.copy_from_slice(&p[w + EBP_FEATURES * CLASSES..]);
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        let a1 = self.layers[0].pre_activation(x);
        let r1: Vec<f64> = a1.iter().map(|v| v.max(0.0)).collect();
        let (n1, norm1) = normalize_checked(&r1)?;
        let a2 = self.layers[1].pre_activation(&n1);
        let r2: Vec<f64> = a2.iter().map(|v| v.max(0.0)).collect();
        let (n2, norm2) = normalize_checked(&r2)?;
        let mut logits = self.fc_bias;
        for (d, f) in n1.iter().chain(&n2).enumerate() {
            if *f == 0.0 {
                continue;
            }
            let row = &self.fc_weights[d * CLASSES..(d + 1) * CLASSES];
            for (z, w) in logits.iter_mut().zip(row) {
                *z += f * w;
            }
        }
        Ok(Trace {
            a1,
            n1,
            norm1,
            a2,
            n2,
            norm2,
            logits,
        })
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = self.trace(x)?;
        Ok(t.n1.into_iter().chain(t.n2).collect())
    }

    pub fn logits(&self, x: &[f64]) -> Result<[f64; CLASSES]> {
        Ok(self.trace(x)?.logits)
    }

    /// Argmax class, ties to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(crate::readout::argmax(&self.logits(x)?))
    }

    fn sample_loss_grad(&self, x: &[f64], label: usize, scale: f64) -> Result<(f64, Vec<f64>)> {
        let t = self.trace(x)?;
        let lp = log_softmax(&t.logits);
        let loss = -lp[label];
        let dz: [f64; CLASSES] =
            std::array::from_fn(|c| scale * (lp[c].exp() - if c == label { 1.0 } else { 0.0 }));

        let mut grad = vec![0.0; Self::N_PARAMS];
        let w0 = 2 * LAYER_PARAMS;
        let mut df = vec![0.0; EBP_FEATURES];
        for (d, f) in t.n1.iter().chain(&t.n2).enumerate() {
            let row = &self.fc_weights[d * CLASSES..(d + 1) * CLASSES];
            let gw = &mut grad[w0 + d * CLASSES..w0 + (d + 1) * CLASSES];
            let mut acc = 0.0;
            for c in 0..CLASSES {
                gw[c] = f * dz[c];
                acc += row[c] * dz[c];
            }
            df[d] = acc;
        }
        grad[w0 + EBP_FEATURES * CLASSES..].copy_from_slice(&dz);

        let mut da2 = l2_normalize_backward(&t.n2, t.norm2, &df[FEATURES..]);
        for (g, a) in da2.iter_mut().zip(&t.a2) {
            if *a <= 0.0 {
                *g = 0.0;
            }
        }
        let (gk2, gb2) = conv_param_grad(&t.n1, &da2, self.layers[1].dilation);
        let back = conv_input_grad(&da2, &self.layers[1].kernel, self.layers[1].dilation);
        let dn1: Vec<f64> = df[..FEATURES].iter().zip(&back).map(|(a, b)| a + b).collect();
        let mut da1 = l2_normalize_backward(&t.n1, t.norm1, &dn1);
        for (g, a) in da1.iter_mut().zip(&t.a1) {
            if *a <= 0.0 {
                *g = 0.0;
            }
        }
        let (gk1, gb1) = conv_param_grad(x, &da1, self.layers[0].dilation);
        grad[..TAPS].copy_from_slice(&gk1);
        grad[TAPS] = gb1;
        grad[LAYER_PARAMS..LAYER_PARAMS + TAPS].copy_from_slice(&gk2);
        grad[LAYER_PARAMS + TAPS] = gb2;
        Ok((loss, grad))
    }

    /// Mean softmax cross-entropy over the batch and its full parameter gradient.
    pub fn loss_and_grad(&self, batch: &[(&[f64], usize)]) -> Result<(f64, Vec<f64>)> {
        let scale = 1.0 / batch.len() as f64;
        let per: Vec<(f64, Vec<f64>)> = batch
            .par_iter()
            .map(|(x, y)| self.sample_loss_grad(x, *y, scale))
            .collect::<Result<_>>()?;
        let mut grad = vec![0.0; Self::N_PARAMS];
        let mut loss = 0.0;
        for (l, g) in &per {
            loss += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        Ok((loss * scale, grad))
    }

    pub fn loss(&self, batch: &[(&[f64], usize)]) -> Result<f64> {
        let total: f64 = batch
            .par_iter()
            .map(|(x, y)| Ok(-log_softmax(&self.logits(x)?)[*y]))
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum();
        Ok(total / batch.len() as f64)
    }
}

pub fn train_baseline_ebp(
    net: &EbpNet,
    data: &[(&[f64], usize)],
    optim: &mut Adam,
    cfg: &FfTrainConfig,
) -> Result<(EbpNet, TrainLog)> {
    let mut net = net.clone();
    let mut params = net.params_flat();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| data[i]).collect();
            let (loss, grad) = net.loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(format!("epoch {epoch}, batch {b}: loss {loss}")));
            }
            total += loss * chunk.len() as f64;
            optim.update(&mut params, &grad);
            net.set_params_flat(&params);
        }
        epoch_losses.push(total / data.len().max(1) as f64);
    }
    Ok((net, TrainLog { epoch_losses }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> Vec<(Vec<f64>, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % CLASSES;
                let mut x = vec![0.0; FEATURES];
                let (r0, c0) = (4 + 2 * label, 6 + (label * 7) % 16);
                for r in r0..r0 + 6 {
                    for c in c0..c0 + 6 {
                        x[r * 32 + c] = rng.random_range(0.5..1.0);
                    }
                }
                (x, label)
            })
            .collect()
    }

    #[test]
    fn full_gradient_matches_central_differences() {
        let data = blobs(5, 3);
        let batch: Vec<(&[f64], usize)> = data.iter().map(|(x, y)| (&x[..], *y)).collect();
        let mut net = EbpNet::init(4, 4);
        // larger output weights so the conv gradients are not negligible
        net.fc_weights.iter_mut().for_each(|w| *w *= 30.0);
        // keep pre-activations away from the ReLU kink on zero background
        net.layers[0].bias = 0.03;
        net.layers[1].bias = -0.01;
        let (_, g) = net.loss_and_grad(&batch).unwrap();
        let p0 = net.params_flat();
        // small step so no pre-activation crosses zero
        let h = 1e-7;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut checked: Vec<usize> = (0..2 * LAYER_PARAMS).collect();
        checked.extend((0..200).map(|_| rng.random_range(2 * LAYER_PARAMS..EbpNet::N_PARAMS)));
        let (mut num, mut den) = (0.0, 0.0);
        for &k in &checked {
            let mut a = p0.clone();
            a[k] += h;
            let mut b = p0.clone();
            b[k] -= h;
            let mut na = net.clone();
            na.set_params_flat(&a);
            let mut nb = net.clone();
            nb.set_params_flat(&b);
            let fd = (na.loss(&batch).unwrap() - nb.loss(&batch).unwrap()) / (2.0 * h);
            num += (fd - g[k]).powi(2);
            den += fd * fd;
        }
        assert!((num / den).sqrt() < 1e-4, "relative error {}", (num / den).sqrt());
    }

    #[test]
    fn overfits_ten_samples() {
        let data = blobs(10, 1);
        let batch: Vec<(&[f64], usize)> = data.iter().map(|(x, y)| (&x[..], *y)).collect();
        let cfg = FfTrainConfig {
            learning_rate: 1e-2,
            batch_size: 10,
            epochs: 500,
            seed: 2,
        };
        let mut optim = Adam::new(EbpNet::N_PARAMS, cfg.learning_rate);
        let (net, _) = train_baseline_ebp(&EbpNet::init(0, 4), &batch, &mut optim, &cfg).unwrap();
        let correct = batch.iter().filter(|(x, y)| net.predict(x).unwrap() == *y).count();
        assert_eq!(correct, 10);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut net = EbpNet::init(1, 4);
        let p: Vec<f64> = (0..EbpNet::N_PARAMS).map(|i| i as f64 * 1e-3).collect();
        net.set_params_flat(&p);
        assert_eq!(net.params_flat(), p);
    }
}
