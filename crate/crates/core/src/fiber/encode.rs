//! Phase-only input modulation and camera-style intensity readout.

use super::geometry::OpticsConfig;
use super::modes::ModeBasis;
use super::propagate::ModeState;
use crate::error::{Error, Result};
use crate::{FEATURES, SIDE};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Largest phase is kept just below 2π so the extremes stay distinct.
pub const PHASE_DEPTH: f64 = 2.0 * PI * (1.0 - 1e-3);

fn check_features(features: &[f64]) -> Result<()> {
    if features.len() != FEATURES {
        return Err(Error::DimensionMismatch {
            expected: FEATURES,
            got: features.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::MalformedInput("features must be finite and non-negative".into()));
    }
    Ok(())
}

/// Phase map D in radians on the 32×32 canvas, rescaled per sample.
pub fn phase_map(features: &[f64]) -> Result<Vec<f64>> {
    check_features(features)?;
    let max = features.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(vec![0.0; FEATURES]);
    }
    Ok(features.iter().map(|v| PHASE_DEPTH * v / max).collect())
}

/// Modulated Gaussian beam E0·exp(−r²/w0²)·exp(iD) on the simulation grid,
/// with D upsampled by nearest neighbour. E0 = 1.
pub fn input_field(features: &[f64], basis: &ModeBasis, cfg: &OpticsConfig) -> Result<Vec<C64>> {
    let d = phase_map(features)?;
    let n = basis.grid;
    let w2 = cfg.w0 * cfg.w0;
    let mut field = Vec::with_capacity(n * n);
    for r in 0..n {
        let y = basis.axis[r];
        let cr = r * SIDE / n;
        for c in 0..n {
            let x = basis.axis[c];
            let phase = d[cr * SIDE + c * SIDE / n];
            field.push(C64::from_polar((-(x * x + y * y) / w2).exp(), phase));
        }
    }
    Ok(field)
}

pub fn encode_and_project(features: &[f64], basis: &ModeBasis, cfg: &OpticsConfig) -> Result<ModeState> {
    let field = input_field(features, basis, cfg)?;
    let mut amplitudes = basis.project(&field)?;
    let power: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if !(power > 0.0) {
        return Err(Error::DegenerateNorm(power));
    }
    let k = (cfg.power_scale / power).sqrt();
    amplitudes.iter_mut().for_each(|a| *a *= k);
    Ok(ModeState {
        amplitudes,
        power_scale: cfg.power_scale,
    })
}

/// |Σ A_p F_p|² on the grid, mean-pooled down to 32×32.
pub fn render_intensity(state: &ModeState, basis: &ModeBasis) -> Result<Vec<f64>> {
    if state.amplitudes.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: state.amplitudes.len(),
        });
    }
    let field = basis.synthesize(&state.amplitudes);
    Ok(pool(&field.iter().map(|e| e.norm_sqr()).collect::<Vec<_>>(), basis.grid))
}

/// Time-integrated intensity of a pulse.
pub fn render_pulse_intensity(state: &super::propagate::PulseState, basis: &ModeBasis) -> Result<Vec<f64>> {
    if state.modes != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: state.modes,
        });
    }
    let n = basis.grid;
    let mut acc = vec![0.0; n * n];
    for t in 0..state.slices {
        let field = basis.synthesize(&state.slice(t));
        for (a, e) in acc.iter_mut().zip(&field) {
            *a += e.norm_sqr();
        }
    }
    Ok(pool(&acc, n))
}

fn pool(grid: &[f64], n: usize) -> Vec<f64> {
    let f = n / SIDE;
    let inv = 1.0 / (f * f) as f64;
    let mut out = vec![0.0; FEATURES];
    for r in 0..n {
        for c in 0..n {
            out[(r / f) * SIDE + c / f] += grid[r * n + c] * inv;
        }
    }
    out
}
