use super::ridge::{predict, FeatureMatrix, RidgePath};
use crate::error::{Error, Result};
use crate::CLASSES;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: [[u64; CLASSES]; CLASSES],
}

impl Metrics {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn class_counts(&self) -> [u64; CLASSES] {
        std::array::from_fn(|r| self.confusion[r].iter().sum())
    }
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut confusion = [[0u64; CLASSES]; CLASSES];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= CLASSES || t >= CLASSES {
            return Err(Error::MalformedInput(format!("class out of range: {t} -> {p}")));
        }
        confusion[t][p] += 1;
    }
    let correct: u64 = (0..CLASSES).map(|c| confusion[c][c]).sum();
    let accuracy = if truth.is_empty() {
        0.0
    } else {
        correct as f64 / truth.len() as f64
    };
    Ok(Metrics {
        accuracy,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub best_index: usize,
}

impl SweepResult {
    pub fn best_alpha(&self) -> f64 {
        self.points[self.best_index].alpha
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,train_acc,val_acc\n");
        for p in &self.points {
            s.push_str(&format!("{:e},{},{}\n", p.alpha, p.train_acc, p.val_acc));
        }
        s
    }
}

/// 13 log-spaced points from 1e-3 to 1e3.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..13).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect()
}

/// Fits once per `alpha` from a shared factorization. Best = highest
/// validation accuracy, ties to the smaller alpha.
pub fn sweep_regularization(
    path: &RidgePath,
    xtr: &FeatureMatrix,
    ytr: &[usize],
    xval: &FeatureMatrix,
    yval: &[usize],
    alpha_grid: &[f64],
) -> Result<SweepResult> {
    if alpha_grid.is_empty() {
        return Err(Error::Config("empty alpha grid".into()));
    }
    if alpha_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("alpha grid must be strictly ascending".into()));
    }
    let mut points = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let model = path.model(alpha)?;
        let train_acc = evaluate(&predict(&model, xtr)?, ytr)?.accuracy;
        let val_acc = evaluate(&predict(&model, xval)?, yval)?.accuracy;
        points.push(SweepPoint {
            alpha,
            train_acc,
            val_acc,
        });
    }
    let mut best_index = 0;
    for (i, p) in points.iter().enumerate() {
        if p.val_acc > points[best_index].val_acc {
            best_index = i;
        }
    }
    Ok(SweepResult { points, best_index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictions() {
        let truth = vec![0, 1, 1, 2, 9, 9, 9];
        let m = evaluate(&truth, &truth).unwrap();
        assert_eq!(m.accuracy, 1.0);
        for c in 0..CLASSES {
            assert_eq!(m.confusion[c][c], truth.iter().filter(|&&t| t == c).count() as u64);
        }
    }

    #[test]
    fn all_zero_predictions() {
        let truth = vec![0, 1, 1, 2, 9];
        let m = evaluate(&[0; 5], &truth).unwrap();
        let col: Vec<u64> = (0..CLASSES).map(|r| m.confusion[r][0]).collect();
        assert_eq!(col, m.class_counts().to_vec());
        assert_eq!(m.accuracy, 0.2);
    }

    #[test]
    fn accuracy_is_trace_over_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<usize> = (0..200).map(|_| rng.random_range(0..10)).collect();
        let pred: Vec<usize> = (0..200).map(|_| rng.random_range(0..10)).collect();
        let m = evaluate(&pred, &truth).unwrap();
        let trace: u64 = (0..CLASSES).map(|c| m.confusion[c][c]).sum();
        assert_eq!(m.accuracy, trace as f64 / 200.0);
        assert_eq!(m.total(), 200);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(evaluate(&[1, 2], &[1]), Err(Error::LengthMismatch { .. })));
    }

    fn noisy(n: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 30;
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let data = (0..n * d)
            .map(|k| {
                let (i, j) = (k / d, k % d);
                2.0 * rng.random_range(-1.0..1.0) + if j == labels[i] { 1.0 } else { 0.0 }
            })
            .collect();
        (FeatureMatrix::new(n, d, data).unwrap(), labels)
    }

    #[test]
    fn sweep_shapes_and_selection() {
        let (xtr, ytr) = noisy(50, 1);
        let (xv, yv) = noisy(200, 2);
        let path = RidgePath::new(&xtr, &ytr).unwrap();
        let grid: Vec<f64> = (0..11).map(|k| 10f64.powi(k - 5)).collect();
        let r = sweep_regularization(&path, &xtr, &ytr, &xv, &yv, &grid).unwrap();
        assert_eq!(r.points.len(), grid.len());
        let best = r.points[r.best_index].val_acc;
        assert!(r.points[0].val_acc <= best && r.points[10].val_acc <= best);
        assert!(r.points.iter().all(|p| p.val_acc <= best));

        let one = sweep_regularization(&path, &xtr, &ytr, &xv, &yv, &[0.3]).unwrap();
        assert_eq!(one.best_alpha(), 0.3);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let (xtr, ytr) = noisy(20, 1);
        let path = RidgePath::new(&xtr, &ytr).unwrap();
        assert!(sweep_regularization(&path, &xtr, &ytr, &xtr, &ytr, &[]).is_err());
        assert!(sweep_regularization(&path, &xtr, &ytr, &xtr, &ytr, &[1.0, 0.1]).is_err());
    }

    #[test]
    fn default_grid() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[12] - 1e3).abs() < 1e-9);
    }
}
