//! Integration of the coupled-mode equation
//! dA_p/dz = i δβ0_p A_p + i Σ_n C_pn A_n + i γ̃ Σ η_plmn A_l A_m A_n*
//! (plus dispersion in the time-resolved case).
//!
//! Each step is a symmetric split: exact linear half-step exp(i H dz/2), one
//! classical RK4 step of the Kerr term alone, exact linear half-step. Mode-group
//! phase rates reach tens of radians per millimetre, outside the stability
//! region of RK4 applied to the full right-hand side; the Kerr flow on its own
//! is slow and conserves Σ|A|².

use super::coupling::CouplingMatrix;
use super::geometry::{FiberGeometry, OpticsConfig};
use super::kerr::KerrOperator;
use super::modes::ModeBasis;
use crate::error::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative per-step power change that aborts a run.
pub const STEP_DRIFT_LIMIT: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Continuous-wave modal amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub amplitudes: Vec<C64>,
    /// Target of Σ|A_p|² at launch.
    pub power_scale: f64,
}

impl ModeState {
    pub fn power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Time-resolved modal amplitudes, mode-major (`amplitudes[p * slices + t]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseState {
    pub modes: usize,
    pub slices: usize,
    /// Slice spacing, s.
    pub dt: f64,
    pub amplitudes: Vec<C64>,
    pub power_scale: f64,
}

impl PulseState {
    /// Σ over modes and slices of |A|².
    pub fn total_power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn mode(&self, p: usize) -> &[C64] {
        &self.amplitudes[p * self.slices..(p + 1) * self.slices]
    }

    pub fn slice(&self, t: usize) -> Vec<C64> {
        (0..self.modes).map(|p| self.amplitudes[p * self.slices + t]).collect()
    }

    /// Angular frequency of FFT bin `k` (bins follow the unnormalized
    /// forward-transform convention).
    pub fn bin_frequency(&self, k: usize) -> f64 {
        let n = self.slices as isize;
        let k = k as isize;
        let signed = if k < (n + 1) / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / (n as f64 * self.dt)
    }
}

fn matvec(m: &[C64], x: &[C64], out: &mut [C64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// exp(i·H·t) for a Hermitian row-major `h`, via its eigendecomposition.
pub fn hermitian_phase_matrix(h: &[C64], dim: usize, t: f64) -> Result<Vec<C64>> {
    if h.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: h.len(),
        });
    }
    let m = Mat::<C64>::from_fn(dim, dim, |i, j| h[i * dim + j]);
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::SingularSystem(format!("eigendecomposition failed: {e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let phases: Vec<C64> = (0..dim).map(|k| C64::from_polar(1.0, s[k].re * t)).collect();
    let mut out = vec![ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = (0..dim).map(|k| u[(i, k)] * phases[k] * u[(j, k)].conj()).sum();
        }
    }
    Ok(out)
}

/// diag(δβ0) + C, row-major.
pub fn linear_generator(basis: &ModeBasis, coupling: &CouplingMatrix) -> Result<Vec<C64>> {
    let p = basis.len();
    if coupling.dim != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: coupling.dim,
        });
    }
    let mut h = coupling.data.clone();
    for (i, &b) in basis.delta_beta0.iter().enumerate() {
        h[i * p + i] += b;
    }
    Ok(h)
}

fn step_count(geom: &FiberGeometry, cfg: &OpticsConfig) -> Result<usize> {
    if !(cfg.dz > 0.0 && cfg.dz <= geom.length) {
        return Err(Error::Config(format!("dz must lie in (0, L], got {}", cfg.dz)));
    }
    Ok(((geom.length / cfg.dz) - 1e-9).ceil().max(1.0) as usize)
}

fn check_drift(step: usize, before: f64, after: f64) -> Result<()> {
    if !after.is_finite() {
        return Err(Error::StepTooLarge { step, drift: f64::INFINITY });
    }
    if before > 0.0 {
        let drift = (after - before).abs() / before;
        if drift > STEP_DRIFT_LIMIT {
            return Err(Error::StepTooLarge { step, drift });
        }
    }
    Ok(())
}

/// Scratch space for one classical RK4 step of an autonomous system whose
/// right-hand side already includes the step length.
struct Rk4 {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
        }
    }

    fn step(&mut self, y: &mut [C64], f: impl Fn(&[C64], &mut [C64])) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        f(y, k1);
        for ((t, &yi), &k) in tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
            *t = yi + k * 0.5;
        }
        f(tmp, k2);
        for ((t, &yi), &k) in tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
            *t = yi + k * 0.5;
        }
        f(tmp, k3);
        for ((t, &yi), &k) in tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
            *t = yi + k;
        }
        f(tmp, k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) / 6.0;
        }
    }
}

/// Reusable CW integrator: the half-step propagator is factored once.
/// `L/dz` is rounded up to whole steps of equal length.
#[derive(Debug, Clone)]
pub struct CwPropagator {
    dim: usize,
    steps: usize,
    step: f64,
    gamma: f64,
    half: Vec<C64>,
}

impl CwPropagator {
    pub fn new(basis: &ModeBasis, coupling: &CouplingMatrix, geom: &FiberGeometry, cfg: &OpticsConfig) -> Result<Self> {
        let steps = step_count(geom, cfg)?;
        let step = geom.length / steps as f64;
        let h = linear_generator(basis, coupling)?;
        let half = hermitian_phase_matrix(&h, basis.len(), step / 2.0)?;
        Ok(Self {
            dim: basis.len(),
            steps,
            step,
            gamma: cfg.gamma_tilde,
            half,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn run(&self, state: &ModeState, kerr: &dyn KerrOperator) -> Result<ModeState> {
        let p = self.dim;
        if state.amplitudes.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: state.amplitudes.len(),
            });
        }
        if kerr.modes() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: kerr.modes(),
            });
        }
        if !state.is_finite() {
            return Err(Error::MalformedInput("non-finite mode amplitudes".into()));
        }
        let g = I * (self.gamma * self.step);
        let mut a = state.amplitudes.clone();
        let mut b = vec![ZERO; p];
        let mut rk = Rk4::new(p);
        let mut power = state.power();
        for step in 0..self.steps {
            matvec(&self.half, &a, &mut b);
            if self.gamma != 0.0 {
                rk.step(&mut b, |x, out| {
                    kerr.apply(x, out);
                    out.iter_mut().for_each(|v| *v *= g);
                });
            }
            matvec(&self.half, &b, &mut a);
            let after: f64 = a.iter().map(|v| v.norm_sqr()).sum();
            check_drift(step, power, after)?;
            power = after;
        }
        Ok(ModeState {
            amplitudes: a,
            power_scale: state.power_scale,
        })
    }
}

pub fn propagate_cw(
    state: &ModeState,
    basis: &ModeBasis,
    coupling: &CouplingMatrix,
    kerr: &dyn KerrOperator,
    geom: &FiberGeometry,
    cfg: &OpticsConfig,
) -> Result<ModeState> {
    CwPropagator::new(basis, coupling, geom, cfg)?.run(state, kerr)
}

/// Linear half-step of a pulse: per frequency bin, exp(i H(ω) dz/2) with
/// H(ω) = diag(δβ0 − δβ1 ω + β2 ω²/2) + C.
struct DispersiveHalfStep {
    dim: usize,
    slices: usize,
    /// One P×P matrix per bin.
    bins: Vec<Vec<C64>>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl DispersiveHalfStep {
    fn new(basis: &ModeBasis, coupling: &CouplingMatrix, state: &PulseState, half_step: f64) -> Result<Self> {
        let p = basis.len();
        let base = coupling.data.clone();
        let bins = (0..state.slices)
            .map(|k| {
                let w = state.bin_frequency(k);
                let mut h = base.clone();
                for i in 0..p {
                    h[i * p + i] += basis.delta_beta0[i] - basis.delta_beta1[i] * w + 0.5 * basis.beta2[i] * w * w;
                }
                hermitian_phase_matrix(&h, p, half_step)
            })
            .collect::<Result<_>>()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            dim: p,
            slices: state.slices,
            bins,
            fft: planner.plan_fft_forward(state.slices),
            ifft: planner.plan_fft_inverse(state.slices),
        })
    }

    /// Applies the half-step to a mode-major table.
    fn apply(&self, src: &[C64], dst: &mut [C64]) {
        let (p, t) = (self.dim, self.slices);
        dst.copy_from_slice(src);
        for m in 0..p {
            self.fft.process(&mut dst[m * t..(m + 1) * t]);
        }
        let mut col = vec![ZERO; p];
        let mut out = vec![ZERO; p];
        for k in 0..t {
            for m in 0..p {
                col[m] = dst[m * t + k];
            }
            matvec(&self.bins[k], &col, &mut out);
            for m in 0..p {
                dst[m * t + k] = out[m];
            }
        }
        let inv = 1.0 / t as f64;
        for m in 0..p {
            let row = &mut dst[m * t..(m + 1) * t];
            self.ifft.process(row);
            row.iter_mut().for_each(|v| *v *= inv);
        }
    }
}

/// i·γ̃·h·K(A) independently per time slice.
fn kerr_slices(kerr: &dyn KerrOperator, a: &[C64], p: usize, t: usize, g: C64, out: &mut [C64]) {
    let mut col = vec![ZERO; p];
    let mut res = vec![ZERO; p];
    for s in 0..t {
        for m in 0..p {
            col[m] = a[m * t + s];
        }
        kerr.apply(&col, &mut res);
        for m in 0..p {
            out[m * t + s] = res[m] * g;
        }
    }
}

/// Time-resolved propagation with modal dispersion. `slices` must be a power
/// of two and the window should hold the pulse with room to spread.
pub fn propagate_time(
    state: &PulseState,
    basis: &ModeBasis,
    coupling: &CouplingMatrix,
    kerr: &dyn KerrOperator,
    geom: &FiberGeometry,
    cfg: &OpticsConfig,
) -> Result<PulseState> {
    let (p, t) = (state.modes, state.slices);
    if p != basis.len() || kerr.modes() != p || coupling.dim != p {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: p,
        });
    }
    if !t.is_power_of_two() {
        return Err(Error::Config(format!("time slices must be a power of two, got {t}")));
    }
    if state.amplitudes.len() != p * t {
        return Err(Error::DimensionMismatch {
            expected: p * t,
            got: state.amplitudes.len(),
        });
    }
    if !(state.dt > 0.0) || state.amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::MalformedInput("invalid pulse state".into()));
    }
    let steps = step_count(geom, cfg)?;
    let hz = geom.length / steps as f64;
    let lin = DispersiveHalfStep::new(basis, coupling, state, hz / 2.0)?;
    let g = I * (cfg.gamma_tilde * hz);
    let mut a = state.amplitudes.clone();
    let mut b = vec![ZERO; p * t];
    let mut rk = Rk4::new(p * t);
    let mut power = state.total_power();
    for step in 0..steps {
        lin.apply(&a, &mut b);
        if cfg.gamma_tilde != 0.0 {
            rk.step(&mut b, |x, out| kerr_slices(kerr, x, p, t, g, out));
        }
        lin.apply(&b, &mut a);
        let after: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        check_drift(step, power, after)?;
        power = after;
    }
    Ok(PulseState {
        amplitudes: a,
        ..state.clone()
    })
}

/// exp(M) for a general dense matrix by Taylor series with scaling and
/// squaring. Slow; used for validation.
pub fn expm_dense(m: &[C64], dim: usize) -> Vec<C64> {
    let norm = (0..dim)
        .map(|i| m[i * dim..(i + 1) * dim].iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let a: Vec<C64> = m.iter().map(|v| v * scale).collect();
    let mul = |x: &[C64], y: &[C64]| -> Vec<C64> {
        let mut out = vec![ZERO; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let xik = x[i * dim + k];
                if xik == ZERO {
                    continue;
                }
                for j in 0..dim {
                    out[i * dim + j] += xik * y[k * dim + j];
                }
            }
        }
        out
    };
    let mut result = vec![ZERO; dim * dim];
    let mut term = vec![ZERO; dim * dim];
    for i in 0..dim {
        result[i * dim + i] = C64::new(1.0, 0.0);
        term[i * dim + i] = C64::new(1.0, 0.0);
    }
    for k in 1..30 {
        term = mul(&term, &a);
        term.iter_mut().for_each(|v| *v /= k as f64);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::coupling::build_coupling;
    use crate::fiber::kerr::{compute_kerr_tensor, GaussHermiteKerr, KerrTensor};
    use crate::fiber::modes::build_mode_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(p: usize, seed: u64) -> ModeState {
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

    #[test]
    fn single_mode_linear_phase() {
        let geom = FiberGeometry::default();
        let mut basis = build_mode_basis(&geom, 1, 64).unwrap();
        let phi = 1.3;
        basis.delta_beta0[0] = phi / geom.length;
        let cfg = OpticsConfig {
            gamma_tilde: 0.0,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let s = ModeState {
            amplitudes: vec![C64::new(0.6, -0.2)],
            power_scale: 1.0,
        };
        let out = propagate_cw(&s, &basis, &CouplingMatrix::zeros(1), &kerr, &geom, &cfg).unwrap();
        let want = s.amplitudes[0] * C64::from_polar(1.0, phi);
        assert!((out.amplitudes[0] - want).norm() < 1e-12);
    }

    #[test]
    fn single_mode_self_phase_modulation() {
        let geom = FiberGeometry::default();
        let mut basis = build_mode_basis(&geom, 1, 64).unwrap();
        basis.delta_beta0[0] = 0.2;
        let cfg = OpticsConfig::default();
        let eta = compute_kerr_tensor(&basis, 0.0);
        let a0 = C64::new(0.8, 0.5);
        let s = ModeState {
            amplitudes: vec![a0],
            power_scale: 1.0,
        };
        let out = propagate_cw(&s, &basis, &CouplingMatrix::zeros(1), &eta, &geom, &cfg).unwrap();
        let phase = (0.2 + cfg.gamma_tilde * eta.get(0, 0, 0, 0) * a0.norm_sqr()) * geom.length;
        let want = a0 * C64::from_polar(1.0, phase);
        assert!((out.amplitudes[0].norm() - a0.norm()).abs() < 1e-12);
        assert!((out.amplitudes[0] - want).norm() < 1e-9, "{} vs {}", out.amplitudes[0], want);
    }

    #[test]
    fn hermitian_exponential_matches_taylor() {
        let c = build_coupling(10, 3.0, 2).unwrap();
        let e = hermitian_phase_matrix(&c.data, 10, 0.7).unwrap();
        let gen: Vec<C64> = c.data.iter().map(|v| v * I * 0.7).collect();
        let t = expm_dense(&gen, 10);
        let err = e.iter().zip(&t).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn linear_map_is_unitary() {
        let geom = FiberGeometry::default();
        let basis = build_mode_basis(&geom, 45, 64).unwrap();
        let c = build_coupling(45, 0.5 * geom.group_spacing(), 1).unwrap();
        let cfg = OpticsConfig {
            gamma_tilde: 0.0,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let s = random_state(45, 3);
        let out = propagate_cw(&s, &basis, &c, &kerr, &geom, &cfg).unwrap();
        assert!((out.power() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn power_conserved_with_kerr() {
        let geom = FiberGeometry::default();
        let basis = build_mode_basis(&geom, 15, 64).unwrap();
        let c = build_coupling(15, 0.5 * geom.group_spacing(), 1).unwrap();
        let cfg = OpticsConfig {
            dz: 1e-2,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let s = random_state(15, 5);
        let out = propagate_cw(&s, &basis, &c, &kerr, &geom, &cfg).unwrap();
        assert!((out.power() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn excessive_power_trips_drift_check() {
        let geom = FiberGeometry::default();
        let basis = build_mode_basis(&geom, 3, 64).unwrap();
        let cfg = OpticsConfig {
            dz: 0.5,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let mut s = random_state(3, 1);
        s.amplitudes.iter_mut().for_each(|a| *a *= 30.0);
        let r = propagate_cw(&s, &basis, &CouplingMatrix::zeros(3), &kerr, &geom, &cfg);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })), "{r:?}");
    }

    #[test]
    fn tensor_and_quadrature_routes_agree_after_propagation() {
        let geom = FiberGeometry::default();
        let basis = build_mode_basis(&geom, 10, 64).unwrap();
        let c = build_coupling(10, 0.5 * geom.group_spacing(), 2).unwrap();
        let cfg = OpticsConfig {
            dz: 1e-2,
            ..OpticsConfig::default()
        };
        let eta: KerrTensor = compute_kerr_tensor(&basis, 0.0);
        let gh = GaussHermiteKerr::new(&basis).unwrap();
        let s = random_state(10, 9);
        let a = propagate_cw(&s, &basis, &c, &eta, &geom, &cfg).unwrap();
        let b = propagate_cw(&s, &basis, &c, &gh, &geom, &cfg).unwrap();
        let err = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    fn gaussian_pulse(p: usize, t: usize, dt: f64, t0: f64, weights: &[C64]) -> PulseState {
        let mut amps = vec![ZERO; p * t];
        for m in 0..p {
            for s in 0..t {
                let time = (s as f64 - t as f64 / 2.0) * dt;
                amps[m * t + s] = weights[m] * (-time * time / (2.0 * t0 * t0)).exp();
            }
        }
        PulseState {
            modes: p,
            slices: t,
            dt,
            amplitudes: amps,
            power_scale: 1.0,
        }
    }

    #[test]
    fn dispersion_free_pulse_matches_cw_per_slice() {
        let geom = FiberGeometry::default();
        let mut basis = build_mode_basis(&geom, 6, 64).unwrap();
        basis.delta_beta1.iter_mut().for_each(|v| *v = 0.0);
        basis.beta2.iter_mut().for_each(|v| *v = 0.0);
        let c = build_coupling(6, 0.5 * geom.group_spacing(), 3).unwrap();
        let cfg = OpticsConfig {
            dz: 5e-2,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let w = random_state(6, 2).amplitudes;
        let pulse = gaussian_pulse(6, 16, 1e-13, 3e-13, &w);
        let out = propagate_time(&pulse, &basis, &c, &kerr, &geom, &cfg).unwrap();
        let prop = CwPropagator::new(&basis, &c, &geom, &cfg).unwrap();
        for s in 0..16 {
            let cw = prop
                .run(
                    &ModeState {
                        amplitudes: pulse.slice(s),
                        power_scale: 1.0,
                    },
                    &kerr,
                )
                .unwrap();
            for (x, y) in cw.amplitudes.iter().zip(out.slice(s)) {
                assert!((x - y).norm() < 1e-8, "slice {s}");
            }
        }
    }

    fn rms_width(pulse: &PulseState, p: usize) -> f64 {
        let t = pulse.slices;
        let time = |s: usize| (s as f64 - t as f64 / 2.0) * pulse.dt;
        let w: Vec<f64> = pulse.mode(p).iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        let mean: f64 = w.iter().enumerate().map(|(s, v)| v * time(s)).sum::<f64>() / total;
        let var: f64 = w.iter().enumerate().map(|(s, v)| v * (time(s) - mean).powi(2)).sum::<f64>() / total;
        var.sqrt()
    }

    #[test]
    fn pure_group_velocity_dispersion_broadens_like_a_chirped_gaussian() {
        let geom = FiberGeometry::default();
        let mut basis = build_mode_basis(&geom, 1, 64).unwrap();
        let t0 = 1e-12;
        // dispersion length equal to the fiber length
        let beta2 = t0 * t0 / geom.length;
        basis.delta_beta1[0] = 0.0;
        basis.beta2[0] = beta2;
        let cfg = OpticsConfig {
            gamma_tilde: 0.0,
            dz: 0.5,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let pulse = gaussian_pulse(1, 2048, 4e-14, t0, &[C64::new(1.0, 0.0)]);
        let out = propagate_time(&pulse, &basis, &CouplingMatrix::zeros(1), &kerr, &geom, &cfg).unwrap();
        let expected = (1.0 + (beta2 * geom.length / (t0 * t0)).powi(2)).sqrt();
        let ratio = rms_width(&out, 0) / rms_width(&pulse, 0);
        assert!((ratio / expected - 1.0).abs() < 1e-3, "ratio {ratio}, expected {expected}");
    }

    #[test]
    fn pulse_energy_conserved_with_dispersion_coupling_and_kerr() {
        let geom = FiberGeometry::default();
        let basis = build_mode_basis(&geom, 6, 64).unwrap();
        let c = build_coupling(6, 0.5 * geom.group_spacing(), 5).unwrap();
        let cfg = OpticsConfig {
            dz: 1e-2,
            ..OpticsConfig::default()
        };
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let w = random_state(6, 8).amplitudes;
        let mut pulse = gaussian_pulse(6, 64, 2e-13, 2e-12, &w);
        // unit peak-slice power so the Kerr term is as strong as in CW runs
        let peak: f64 = pulse.slice(32).iter().map(|a| a.norm_sqr()).sum();
        pulse.amplitudes.iter_mut().for_each(|a| *a /= peak.sqrt());
        let out = propagate_time(&pulse, &basis, &c, &kerr, &geom, &cfg).unwrap();
        let drift = (out.total_power() - pulse.total_power()).abs() / pulse.total_power();
        assert!(drift < 1e-6, "drift {drift}");
        assert!(out.amplitudes != pulse.amplitudes);
    }

    #[test]
    fn rejects_bad_slice_count() {
        let geom = FiberGeometry::default();
        let basis = build_mode_basis(&geom, 1, 64).unwrap();
        let kerr = GaussHermiteKerr::new(&basis).unwrap();
        let pulse = gaussian_pulse(1, 12, 1e-13, 3e-13, &[C64::new(1.0, 0.0)]);
        let r = propagate_time(&pulse, &basis, &CouplingMatrix::zeros(1), &kerr, &geom, &OpticsConfig::default());
        assert!(r.is_err());
    }
}
