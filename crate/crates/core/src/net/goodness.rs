//! Goodness `σ(Σ y² − θ)` and the symmetric logistic pair loss.

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sum_sq(acts: &[f64]) -> f64 {
    acts.iter().map(|y| y * y).sum()
}

pub fn goodness(acts: &[f64], theta: f64) -> f64 {
    sigmoid(sum_sq(acts) - theta)
}

/// `softplus(θ − S_pos) + softplus(S_neg − θ)`, i.e.
/// `−log σ(S_pos − θ) − log(1 − σ(S_neg − θ))`.
pub fn ff_pair_loss(pos: &[f64], neg: &[f64], theta: f64) -> f64 {
    softplus(theta - sum_sq(pos)) + softplus(sum_sq(neg) - theta)
}

/// Pair loss with its gradients w.r.t. the positive and negative activations.
pub fn ff_pair_loss_grad(pos: &[f64], neg: &[f64], theta: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let (sp, sn) = (sum_sq(pos), sum_sq(neg));
    let loss = softplus(theta - sp) + softplus(sn - theta);
    let cp = -2.0 * sigmoid(theta - sp);
    let cn = 2.0 * sigmoid(sn - theta);
    (
        loss,
        pos.iter().map(|y| cp * y).collect(),
        neg.iter().map(|y| cn * y).collect(),
    )
}
