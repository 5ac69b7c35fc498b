//! Ridge classifier on ±1 one-hot targets, solved through one thin SVD.
//!
//! With `X_c = U diag(s) Vᵀ` (column-centered features) and centered targets
//! `Y_c`, the weights are `W = V diag(s / (s² + α)) Uᵀ Y_c`. The factorization is
//! kept in [`RidgePath`] so a regularization sweep costs one SVD.

use crate::error::{Error, Result};
use crate::CLASSES;
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Row-major sample × feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedInput("non-finite feature".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row-major backing data.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Columns of `self` followed by those of `other`, row by row.
    pub fn hconcat(&self, other: &FeatureMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::LengthMismatch {
                left: self.rows,
                right: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub dim: usize,
    /// Row-major `dim × CLASSES`.
    pub weights: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub intercepts: [f64; CLASSES],
    pub alpha: f64,
}

impl RidgeModel {
    pub fn scores(&self, x: &[f64]) -> Result<[f64; CLASSES]> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut s = self.intercepts;
        for (d, (&v, &m)) in x.iter().zip(&self.feature_mean).enumerate() {
            let c = v - m;
            if c == 0.0 {
                continue;
            }
            for (o, w) in s.iter_mut().zip(&self.weights[d * CLASSES..(d + 1) * CLASSES]) {
                *o += c * w;
            }
        }
        Ok(s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &RidgeModel, x: &FeatureMatrix) -> Result<Vec<usize>> {
    if x.cols() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: x.cols(),
        });
    }
    (0..x.rows()).map(|i| model.scores(x.row(i)).map(|s| argmax(&s))).collect()
}

/// ±1 one-hot targets.
pub fn signed_targets(labels: &[usize]) -> Vec<[f64; CLASSES]> {
    labels
        .iter()
        .map(|&l| std::array::from_fn(|c| if c == l { 1.0 } else { -1.0 }))
        .collect()
}

fn column_means(x: &FeatureMatrix) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (a, v) in m.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    let inv = 1.0 / x.rows() as f64;
    m.iter_mut().for_each(|v| *v *= inv);
    m
}

/// Thin SVD of the centered training problem, reusable across `alpha`.
pub struct RidgePath {
    dim: usize,
    feature_mean: Vec<f64>,
    target_mean: [f64; CLASSES],
    /// `dim × k`
    v: Mat<f64>,
    singular: Vec<f64>,
    /// `k × CLASSES`, `Uᵀ Y_c`
    uty: Mat<f64>,
}

impl RidgePath {
    pub fn new(x: &FeatureMatrix, labels: &[usize]) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: labels.len(),
            });
        }
        if x.rows() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                available: x.rows(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= CLASSES) {
            return Err(Error::MalformedInput(format!("label {bad} out of range")));
        }
        let (n, d) = (x.rows(), x.cols());
        let feature_mean = column_means(x);
        let y = signed_targets(labels);
        let mut target_mean = [0.0; CLASSES];
        for row in &y {
            for (a, v) in target_mean.iter_mut().zip(row) {
                *a += v;
            }
        }
        target_mean.iter_mut().for_each(|v| *v /= n as f64);

        let xc = Mat::<f64>::from_fn(n, d, |i, j| x.row(i)[j] - feature_mean[j]);
        let yc = Mat::<f64>::from_fn(n, CLASSES, |i, c| y[i][c] - target_mean[c]);
        let svd = xc
            .thin_svd()
            .map_err(|e| Error::SingularSystem(format!("SVD did not converge: {e:?}")))?;
        let s = svd.S().column_vector();
        let singular: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
        let uty = svd.U().transpose() * &yc;
        Ok(Self {
            dim: d,
            feature_mean,
            target_mean,
            v: svd.V().to_owned(),
            singular,
            uty,
        })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular
    }

    pub fn model(&self, alpha: f64) -> Result<RidgeModel> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        let smax = self.singular.first().copied().unwrap_or(0.0);
        let tol = smax * f64::EPSILON * self.v.nrows().max(self.uty.nrows()).max(1) as f64;
        if alpha == 0.0 && (self.singular.len() < self.dim || self.singular.iter().any(|&s| s <= tol)) {
            return Err(Error::SingularSystem(
                "alpha = 0 with rank-deficient centered features".into(),
            ));
        }
        let k = self.singular.len();
        let mut scaled = Mat::<f64>::zeros(k, CLASSES);
        for i in 0..k {
            let s = self.singular[i];
            let denom = s * s + alpha;
            let f = if denom > 0.0 { s / denom } else { 0.0 };
            for c in 0..CLASSES {
                scaled[(i, c)] = f * self.uty[(i, c)];
            }
        }
        let w = &self.v * &scaled;
        let mut weights = vec![0.0; self.dim * CLASSES];
        for d in 0..self.dim {
            for c in 0..CLASSES {
                weights[d * CLASSES + c] = w[(d, c)];
            }
        }
        // features are centered at prediction time, so the intercept is the target mean
        Ok(RidgeModel {
            dim: self.dim,
            weights,
            feature_mean: self.feature_mean.clone(),
            intercepts: self.target_mean,
            alpha,
        })
    }
}

pub fn fit_ridge(x: &FeatureMatrix, labels: &[usize], alpha: f64) -> Result<RidgeModel> {
    RidgePath::new(x, labels)?.model(alpha)
}
