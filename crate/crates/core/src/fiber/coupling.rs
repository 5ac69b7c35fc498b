use super::modes::mode_orders;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Hermitian linear coupling matrix, row-major, 1/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl CouplingMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.get(i, j) == self.get(j, i).conj()))
    }
}

/// Random Hermitian disorder. Entry (p,n) has standard deviation
/// `strength·exp(-|group(p) - group(n)|)`.
pub fn build_coupling(p: usize, strength: f64, seed: u64) -> Result<CouplingMatrix> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::Config(format!("coupling strength must be non-negative, got {strength}")));
    }
    let groups: Vec<usize> = mode_orders(p)?.iter().map(|(a, b)| a + b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = CouplingMatrix::zeros(p);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    for i in 0..p {
        for j in i..p {
            let scale = strength * (-(groups[i].abs_diff(groups[j]) as f64)).exp();
            let v = if i == j {
                C64::new(scale * draw(), 0.0)
            } else {
                C64::new(draw(), draw()) * (scale / 2f64.sqrt())
            };
            c.data[i * p + j] = v;
            c.data[j * p + i] = v.conj();
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_and_seeded() {
        let c = build_coupling(45, 2700.0, 3).unwrap();
        assert!(c.is_hermitian());
        assert_eq!(c, build_coupling(45, 2700.0, 3).unwrap());
        assert_ne!(c, build_coupling(45, 2700.0, 4).unwrap());
        assert!((0..45).all(|i| c.get(i, i).im == 0.0));
    }

    #[test]
    fn zero_strength_is_zero() {
        let c = build_coupling(15, 0.0, 1).unwrap();
        assert!(c.data.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn decays_with_group_distance() {
        // average magnitude over many seeds, groups 0 and 4 (modes 0 and 10..14)
        let mut near = 0.0;
        let mut far = 0.0;
        for seed in 0..200 {
            let c = build_coupling(15, 1.0, seed).unwrap();
            near += c.get(1, 2).norm_sqr();
            far += c.get(0, 12).norm_sqr();
        }
        let ratio = far / near;
        assert!((ratio.ln() + 8.0).abs() < 1.0, "variance ratio {ratio}");
    }

    #[test]
    fn rejects_negative_strength() {
        assert!(build_coupling(3, -1.0, 0).is_err());
    }
}
