//! Hermite-Gaussian modes of a parabolic-index core sampled on a square grid.

use super::geometry::FiberGeometry;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Normalized modal norm error above which a grid is rejected.
pub const NORM_TOLERANCE: f64 = 1e-2;

/// Default group delay step per mode group, s/m.
pub const DEFAULT_GROUP_DELAY: f64 = 5e-14;
/// Default group-velocity dispersion, s²/m.
pub const DEFAULT_BETA2: f64 = 2.2e-26;

/// Number of complete mode groups holding exactly `p` modes.
pub fn groups_for(p: usize) -> Result<usize> {
    let mut q = 0;
    while q * (q + 1) / 2 < p {
        q += 1;
    }
    if p == 0 || q * (q + 1) / 2 != p {
        return Err(Error::Config(format!(
            "mode count {p} is not a sum of complete mode groups (1, 3, 6, 10, 15, ...)"
        )));
    }
    Ok(q)
}

/// Mode orders `(mx, my)` in group-major order.
pub fn mode_orders(p: usize) -> Result<Vec<(usize, usize)>> {
    let q = groups_for(p)?;
    Ok((0..q).flat_map(|g| (0..=g).map(move |m| (g - m, m))).collect())
}

/// Normalized Hermite functions ψ_0..=ψ_nmax at `u`, by the stable
/// three-term recurrence.
pub fn hermite_functions(nmax: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * u * u).exp();
    out.push(psi0);
    if nmax >= 1 {
        out.push(2f64.sqrt() * u * psi0);
    }
    for n in 1..nmax {
        let next = (2.0 / (n + 1) as f64).sqrt() * u * out[n] - (n as f64 / (n + 1) as f64).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    /// Grid points per side.
    pub grid: usize,
    /// Grid pitch, m. The grid spans the core diameter with cell-centred samples.
    pub pitch: f64,
    /// 1/e field radius of the fundamental mode.
    pub waist: f64,
    pub orders: Vec<(usize, usize)>,
    pub groups: Vec<usize>,
    /// Sample coordinates along either axis.
    pub axis: Vec<f64>,
    /// `axis_profiles[n][i]` = 1D mode of order n at `axis[i]`.
    pub axis_profiles: Vec<Vec<f64>>,
    pub delta_beta0: Vec<f64>,
    pub delta_beta1: Vec<f64>,
    pub beta2: Vec<f64>,
}

pub fn build_mode_basis(geom: &FiberGeometry, p: usize, n: usize) -> Result<ModeBasis> {
    geom.validate()?;
    if n < 32 {
        return Err(Error::Config(format!("grid must have at least 32 points per side, got {n}")));
    }
    let orders = mode_orders(p)?;
    let q = groups_for(p)?;
    let a = geom.core_radius;
    let pitch = 2.0 * a / n as f64;
    let axis: Vec<f64> = (0..n).map(|i| -a + (i as f64 + 0.5) * pitch).collect();
    let waist = geom.mode_waist();
    let s = waist / 2f64.sqrt();
    let scale = s.powf(-0.5);
    let per_point: Vec<Vec<f64>> = axis.iter().map(|&x| hermite_functions(q - 1, x / s)).collect();
    let axis_profiles: Vec<Vec<f64>> = (0..q).map(|m| per_point.iter().map(|h| scale * h[m]).collect()).collect();

    let axis_norms: Vec<f64> = axis_profiles
        .iter()
        .map(|h| h.iter().map(|v| v * v).sum::<f64>() * pitch)
        .collect();
    for (idx, &(mx, my)) in orders.iter().enumerate() {
        let err = (axis_norms[mx] * axis_norms[my] - 1.0).abs();
        if !(err <= NORM_TOLERANCE) {
            return Err(Error::GridTooCoarse { mode: idx, error: err });
        }
    }

    let groups: Vec<usize> = orders.iter().map(|&(mx, my)| mx + my).collect();
    let delta = geom.group_spacing();
    let delta_beta0 = groups.iter().map(|&g| -(g as f64) * delta).collect();
    let delta_beta1 = groups.iter().map(|&g| g as f64 * DEFAULT_GROUP_DELAY).collect();
    let beta2 = vec![DEFAULT_BETA2; p];
    Ok(ModeBasis {
        grid: n,
        pitch,
        waist,
        orders,
        groups,
        axis,
        axis_profiles,
        delta_beta0,
        delta_beta1,
        beta2,
    })
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.axis_profiles.len()
    }

    pub fn cell_area(&self) -> f64 {
        self.pitch * self.pitch
    }

    /// Mode `p` on the grid, row-major with rows along y.
    pub fn profile(&self, p: usize) -> Vec<f64> {
        let (mx, my) = self.orders[p];
        let (hx, hy) = (&self.axis_profiles[mx], &self.axis_profiles[my]);
        hy.iter().flat_map(|&y| hx.iter().map(move |&x| x * y)).collect()
    }

    /// Overlap matrix of all modes under grid quadrature, row-major P×P.
    pub fn gram(&self) -> Vec<f64> {
        let q = self.group_count();
        let axis: Vec<f64> = (0..q * q)
            .map(|k| {
                let (i, j) = (k / q, k % q);
                self.axis_profiles[i]
                    .iter()
                    .zip(&self.axis_profiles[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * self.pitch
            })
            .collect();
        let p = self.len();
        let mut g = vec![0.0; p * p];
        for (i, &(ax, ay)) in self.orders.iter().enumerate() {
            for (j, &(bx, by)) in self.orders.iter().enumerate() {
                g[i * p + j] = axis[ax * q + bx] * axis[ay * q + by];
            }
        }
        g
    }

    /// Σ_p A_p F_p on the grid, row-major.
    pub fn synthesize(&self, amps: &[C64]) -> Vec<C64> {
        let n = self.grid;
        let q = self.group_count();
        // rows[my][c] = Σ_mx A(mx,my) h_mx(x_c)
        let mut rows = vec![C64::new(0.0, 0.0); q * n];
        for (&(mx, my), &a) in self.orders.iter().zip(amps) {
            let hx = &self.axis_profiles[mx];
            let row = &mut rows[my * n..(my + 1) * n];
            for (r, &h) in row.iter_mut().zip(hx) {
                *r += a * h;
            }
        }
        let mut field = vec![C64::new(0.0, 0.0); n * n];
        for my in 0..q {
            let hy = &self.axis_profiles[my];
            let row = &rows[my * n..(my + 1) * n];
            for (r, &h) in hy.iter().enumerate() {
                if h == 0.0 {
                    continue;
                }
                for (f, &v) in field[r * n..(r + 1) * n].iter_mut().zip(row) {
                    *f += v * h;
                }
            }
        }
        field
    }

    /// Grid-quadrature overlaps ⟨F_p, E⟩ for a row-major field `E`.
    pub fn project(&self, field: &[C64]) -> Result<Vec<C64>> {
        let n = self.grid;
        if field.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: field.len(),
            });
        }
        let q = self.group_count();
        // cols[r][mx] = Σ_c E(r,c) h_mx(x_c)
        let mut cols = vec![C64::new(0.0, 0.0); n * q];
        for r in 0..n {
            let row = &field[r * n..(r + 1) * n];
            for mx in 0..q {
                cols[r * q + mx] = row
                    .iter()
                    .zip(&self.axis_profiles[mx])
                    .map(|(e, &h)| e * h)
                    .sum();
            }
        }
        let da = self.cell_area();
        Ok(self
            .orders
            .iter()
            .map(|&(mx, my)| {
                let hy = &self.axis_profiles[my];
                (0..n).map(|r| cols[r * q + mx] * hy[r]).sum::<C64>() * da
            })
            .collect())
    }

    pub(crate) fn hash_into(&self, h: &mut crate::hashing::Hasher) {
        h.u64(self.grid as u64);
        h.u64(self.len() as u64);
        for v in &self.axis_profiles {
            h.f64s(v);
        }
        h.f64s(&self.delta_beta0);
        h.f64s(&self.delta_beta1);
        h.f64s(&self.beta2);
    }
}
