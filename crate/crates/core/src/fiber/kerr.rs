//! Kerr overlap tensor and the cubic nonlinear mode-coupling operator.

use super::modes::{hermite_functions, ModeBasis};
use crate::error::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Evaluates `out_p = Σ_{l,m,n} η_{plmn} A_l A_m A_n*`.
pub trait KerrOperator: Send + Sync {
    fn modes(&self) -> usize;
    fn apply(&self, a: &[C64], out: &mut [C64]);
}

/// Sparse table of real overlaps η_{plmn} = ∫ F_p F_l F_m F_n over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrTensor {
    pub modes: usize,
    /// Sorted by index tuple.
    pub entries: Vec<([u16; 4], f64)>,
}

impl KerrTensor {
    pub fn get(&self, p: usize, l: usize, m: usize, n: usize) -> f64 {
        let key = [p as u16, l as u16, m as u16, n as u16];
        self.entries
            .binary_search_by(|(k, _)| k.cmp(&key))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }
}

impl KerrOperator for KerrTensor {
    fn modes(&self) -> usize {
        self.modes
    }

    fn apply(&self, a: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for &([p, l, m, n], eta) in &self.entries {
            out[p as usize] += a[l as usize] * a[m as usize] * a[n as usize].conj() * eta;
        }
    }
}

/// 1D overlap integrals of four axis profiles by grid quadrature.
fn axis_overlaps(basis: &ModeBasis) -> Vec<f64> {
    let q = basis.group_count();
    let h = &basis.axis_profiles;
    let mut t = vec![0.0; q * q * q * q];
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    if (a + b + c + d) % 2 == 1 {
                        continue; // odd integrand on a symmetric grid
                    }
                    // sorted so permuted index tuples round identically
                    let mut k = [a, b, c, d];
                    k.sort_unstable();
                    let s: f64 = (0..basis.grid).map(|i| h[k[0]][i] * h[k[1]][i] * h[k[2]][i] * h[k[3]][i]).sum();
                    t[((a * q + b) * q + c) * q + d] = s * basis.pitch;
                }
            }
        }
    }
    t
}

/// Grid-quadrature Kerr tensor with entries below `prune_threshold·max|η|`
/// dropped. Separable modes make the 2D grid sum an exact product of 1D sums.
pub fn compute_kerr_tensor(basis: &ModeBasis, prune_threshold: f64) -> KerrTensor {
    let q = basis.group_count();
    let t = axis_overlaps(basis);
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * q + b) * q + c) * q + d;
    let p = basis.len();
    let o = &basis.orders;
    let mut entries = Vec::new();
    let mut max = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                for l in 0..p {
                    let v = t[idx(o[i].0, o[j].0, o[k].0, o[l].0)] * t[idx(o[i].1, o[j].1, o[k].1, o[l].1)];
                    if v != 0.0 {
                        max = max.max(v.abs());
                        entries.push(([i as u16, j as u16, k as u16, l as u16], v));
                    }
                }
            }
        }
    }
    let cut = prune_threshold * max;
    entries.retain(|(_, v)| v.abs() >= cut);
    KerrTensor { modes: p, entries }
}

/// Gauss–Hermite nodes and weights for ∫ f(t) e^{-t²} dt, nodes ascending.
///
/// Nodes are eigenvalues of the symmetric Jacobi matrix; weights use the
/// closed form w_k = 1 / (K ψ_{K-1}(t_k)²) · e^{-t_k²}. The returned weights
/// are the scaled `w_k e^{t_k²}`, which stay O(1) for large K.
pub fn gauss_hermite(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Config("need at least one quadrature node".into()));
    }
    let jacobi = Mat::<f64>::from_fn(k, k, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes = jacobi
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::SingularSystem(format!("eigendecomposition failed: {e:?}")))?;
    // one Newton polish on ψ_K for full relative accuracy
    for t in nodes.iter_mut() {
        let h = hermite_functions(k, *t);
        // ψ_K' = sqrt(2K) ψ_{K-1} - t ψ_K
        let d = (2.0 * k as f64).sqrt() * h[k - 1] - *t * h[k];
        *t -= h[k] / d;
    }
    let weights = nodes
        .iter()
        .map(|&t| {
            let h = hermite_functions(k - 1, t);
            1.0 / (k as f64 * h[k - 1] * h[k - 1])
        })
        .collect();
    Ok((nodes, weights))
}

/// Kerr operator computed as ∫ F_p |E|² E with E = Σ A_n F_n, using separable
/// Gauss–Hermite quadrature that is exact for the quartic mode products over
/// the unbounded transverse plane.
#[derive(Debug, Clone)]
pub struct GaussHermiteKerr {
    orders: Vec<(usize, usize)>,
    groups: usize,
    nodes: usize,
    /// `h[n * nodes + k]` = 1D mode n at node k times the fourth root of its weight.
    h: Vec<f64>,
}

impl GaussHermiteKerr {
    pub fn new(basis: &ModeBasis) -> Result<Self> {
        let q = basis.group_count();
        let k = (2 * q).saturating_sub(1).max(1);
        let (t, w) = gauss_hermite(k)?;
        let s = basis.waist / 2f64.sqrt();
        // x = s t / √2, dx = s/√2 dt; each of the 4 profiles carries w^{1/4}·(s/√2)^{1/4}
        let scale = s.powf(-0.5);
        let jac = s / 2f64.sqrt();
        let mut h = vec![0.0; q * k];
        for (node, (&tk, &wk)) in t.iter().zip(&w).enumerate() {
            let psi = hermite_functions(q - 1, tk / 2f64.sqrt());
            let root = (wk * jac).powf(0.25);
            for n in 0..q {
                h[n * k + node] = scale * psi[n] * root;
            }
        }
        Ok(Self {
            orders: basis.orders.clone(),
            groups: q,
            nodes: k,
            h,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }
}

impl KerrOperator for GaussHermiteKerr {
    fn modes(&self) -> usize {
        self.orders.len()
    }

    fn apply(&self, a: &[C64], out: &mut [C64]) {
        let (q, k) = (self.groups, self.nodes);
        let zero = C64::new(0.0, 0.0);
        // b[mx][l] = Σ_my A(mx,my) h_my(l)
        let mut b = vec![zero; q * k];
        for (&(mx, my), &amp) in self.orders.iter().zip(a) {
            let hy = &self.h[my * k..(my + 1) * k];
            for (v, &hh) in b[mx * k..(mx + 1) * k].iter_mut().zip(hy) {
                *v += amp * hh;
            }
        }
        // e[i][l] = Σ_mx h_mx(i) b[mx][l], then g = |e|² e in place
        let mut e = vec![zero; k * k];
        for mx in 0..q {
            let hx = &self.h[mx * k..(mx + 1) * k];
            let row_b = &b[mx * k..(mx + 1) * k];
            for (i, &hh) in hx.iter().enumerate() {
                for (v, &bb) in e[i * k..(i + 1) * k].iter_mut().zip(row_b) {
                    *v += bb * hh;
                }
            }
        }
        for v in e.iter_mut() {
            *v *= v.norm_sqr();
        }
        // d[py][i] = Σ_l g[i][l] h_py(l)
        let mut d = vec![zero; q * k];
        for py in 0..q {
            let hy = &self.h[py * k..(py + 1) * k];
            for i in 0..k {
                d[py * k + i] = e[i * k..(i + 1) * k].iter().zip(hy).map(|(g, &hh)| g * hh).sum();
            }
        }
        for (o, &(px, py)) in out.iter_mut().zip(&self.orders) {
            let hx = &self.h[px * k..(px + 1) * k];
            *o = d[py * k..(py + 1) * k].iter().zip(hx).map(|(v, &hh)| v * hh).sum();
        }
    }
}
