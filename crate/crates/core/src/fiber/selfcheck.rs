//! Physics validation suites run by `ffoptic fiber selfcheck`.

use super::coupling::build_coupling;
use super::geometry::{FiberGeometry, OpticsConfig};
use super::kerr::{compute_kerr_tensor, GaussHermiteKerr, KerrOperator};
use super::modes::build_mode_basis;
use super::propagate::{expm_dense, linear_generator, propagate_cw, ModeState};
use crate::error::Result;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value < limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub checks: Vec<Check>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Unit-power state with random complex amplitudes.
pub fn random_state(p: usize, seed: u64) -> ModeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<C64> = (0..p)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    a.iter_mut().for_each(|v| *v /= norm);
    ModeState {
        amplitudes: a,
        power_scale: 1.0,
    }
}

/// Relative power drift of a full-length CW run.
pub fn conservation_drift(geom: &FiberGeometry, cfg: &OpticsConfig) -> Result<f64> {
    let basis = build_mode_basis(geom, cfg.mode_count, cfg.grid)?;
    let c = build_coupling(cfg.mode_count, cfg.coupling_strength * geom.group_spacing(), cfg.seed)?;
    let kerr = GaussHermiteKerr::new(&basis)?;
    let s = random_state(cfg.mode_count, cfg.seed);
    let out = propagate_cw(&s, &basis, &c, &kerr, geom, cfg)?;
    Ok((out.power() - s.power()).abs() / s.power())
}

/// Max amplitude error and norm error of the γ̃ = 0 run against exp(iHL).
pub fn linear_limit_errors(geom: &FiberGeometry, cfg: &OpticsConfig) -> Result<(f64, f64)> {
    let basis = build_mode_basis(geom, cfg.mode_count, cfg.grid)?;
    let c = build_coupling(cfg.mode_count, cfg.coupling_strength * geom.group_spacing(), cfg.seed)?;
    let kerr = GaussHermiteKerr::new(&basis)?;
    let linear = OpticsConfig {
        gamma_tilde: 0.0,
        ..cfg.clone()
    };
    let s = random_state(cfg.mode_count, cfg.seed.wrapping_add(1));
    let out = propagate_cw(&s, &basis, &c, &kerr, geom, &linear)?;
    let p = basis.len();
    let gen: Vec<C64> = linear_generator(&basis, &c)?
        .iter()
        .map(|h| h * C64::new(0.0, geom.length))
        .collect();
    let u = expm_dense(&gen, p);
    let exact: Vec<C64> = (0..p)
        .map(|i| (0..p).map(|j| u[i * p + j] * s.amplitudes[j]).sum())
        .collect();
    let amp_err = out
        .amplitudes
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let norm_err = (out.power().sqrt() - s.power().sqrt()).abs();
    Ok((amp_err, norm_err))
}

/// Largest relative change of a reported Kerr entry when the grid doubles.
pub fn grid_convergence(geom: &FiberGeometry, p: usize, n: usize, prune: f64) -> Result<f64> {
    let coarse = compute_kerr_tensor(&build_mode_basis(geom, p, n)?, prune);
    let fine = compute_kerr_tensor(&build_mode_basis(geom, p, 2 * n)?, 0.0);
    Ok(coarse
        .entries
        .iter()
        .map(|&([a, b, c, d], v)| {
            let w = fine.get(a as usize, b as usize, c as usize, d as usize);
            (v - w).abs() / v.abs()
        })
        .fold(0.0, f64::max))
}

/// Relative difference between the quadrature and tensor Kerr operators.
pub fn kerr_route_mismatch(geom: &FiberGeometry, cfg: &OpticsConfig) -> Result<f64> {
    let basis = build_mode_basis(geom, cfg.mode_count, cfg.grid)?;
    let eta = compute_kerr_tensor(&basis, cfg.prune_threshold);
    let gh = GaussHermiteKerr::new(&basis)?;
    let s = random_state(cfg.mode_count, cfg.seed.wrapping_add(2));
    let p = basis.len();
    let (mut x, mut y) = (vec![C64::default(); p], vec![C64::default(); p]);
    eta.apply(&s.amplitudes, &mut x);
    gh.apply(&s.amplitudes, &mut y);
    let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = y.iter().map(|a| a.norm_sqr()).sum();
    Ok((num / den).sqrt())
}

/// Superposition residuals of a built system for two feature vectors.
///
/// The first value is ‖T(x1 + x2) − T(x1) − T(x2)‖ / max(‖T(x1 + x2)‖, 1e-12) for the
/// full transform. The second applies the same test to the propagation map
/// alone, on the encoded states rescaled to `field_power` each.
pub fn superposition_residuals(
    system: &super::FiberSystem,
    x1: &[f64],
    x2: &[f64],
    field_power: f64,
) -> Result<(f64, f64)> {
    let sum: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a + b).collect();
    let t12 = system.transform(&sum)?;
    let (t1, t2) = (system.transform(x1)?, system.transform(x2)?);
    let intensity = residual(&t12, &t1, &t2);

    let scaled = |x: &[f64]| -> Result<ModeState> {
        let mut s = system.encode(x)?;
        let k = (field_power / s.power()).sqrt();
        s.amplitudes.iter_mut().for_each(|a| *a *= k);
        s.power_scale = field_power;
        Ok(s)
    };
    let (a1, a2) = (scaled(x1)?, scaled(x2)?);
    let a12 = ModeState {
        amplitudes: a1.amplitudes.iter().zip(&a2.amplitudes).map(|(u, v)| u + v).collect(),
        power_scale: field_power,
    };
    let flat = |s: &ModeState| -> Vec<f64> { s.amplitudes.iter().flat_map(|a| [a.re, a.im]).collect() };
    let (p12, p1, p2) = (
        flat(&system.propagate(&a12)?),
        flat(&system.propagate(&a1)?),
        flat(&system.propagate(&a2)?),
    );
    Ok((intensity, residual(&p12, &p1, &p2)))
}

fn residual(sum: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = sum.iter().zip(a).zip(b).map(|((s, u), v)| (s - u - v).powi(2)).sum();
    let den: f64 = sum.iter().map(|s| s * s).sum();
    num.sqrt() / den.sqrt().max(1e-12)
}

pub fn run_selfcheck(geom: &FiberGeometry, cfg: &OpticsConfig) -> Result<SelfCheckReport> {
    cfg.validate(geom)?;
    let drift = conservation_drift(geom, cfg)?;
    let (amp_err, norm_err) = linear_limit_errors(geom, cfg)?;
    let grid = grid_convergence(geom, 15, cfg.grid, cfg.prune_threshold)?;
    let route = kerr_route_mismatch(geom, cfg)?;
    Ok(SelfCheckReport {
        checks: vec![
            Check::below("power_conservation", drift, 1e-6),
            Check::below("linear_limit_amplitude", amp_err, 1e-8),
            Check::below("linear_unitarity", norm_err, 1e-8),
            Check::below("kerr_grid_convergence", grid, 1e-3),
            // pruning at the configured threshold bounds this difference
            Check::below("kerr_route_agreement", route, 2e-2),
        ],
    })
}
