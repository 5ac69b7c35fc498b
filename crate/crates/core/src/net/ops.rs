use crate::error::{Error, Result};

/// Norms below this are rejected by [`l2_normalize`].
pub const NORM_FLOOR: f64 = 1e-12;

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = l2_norm(v);
    if !n.is_finite() {
        return Err(Error::MalformedInput("non-finite feature vector".into()));
    }
    if n < NORM_FLOOR {
        return Err(Error::DegenerateNorm(n));
    }
    let inv = 1.0 / n;
    Ok(v.iter().map(|x| x * inv).collect())
}

/// Backward pass of `y = x / |x|` given `y` and the input norm.
pub fn l2_normalize_backward(y: &[f64], norm: f64, grad_y: &[f64]) -> Vec<f64> {
    let dot: f64 = y.iter().zip(grad_y).map(|(a, b)| a * b).sum();
    y.iter()
        .zip(grad_y)
        .map(|(&yi, &gi)| (gi - yi * dot) / norm)
        .collect()
}
