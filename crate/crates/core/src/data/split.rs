use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_train: 4000,
            n_val: 1000,
            n_test: 1000,
        }
    }
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws three disjoint index lists from `0..pool_size` with a seeded shuffle.
pub fn make_splits(pool_size: usize, spec: &SplitSpec) -> Result<Splits> {
    if spec.n_train == 0 || spec.n_val == 0 || spec.n_test == 0 {
        return Err(Error::Config("split counts must be positive".into()));
    }
    let needed = spec.total();
    if needed > pool_size {
        return Err(Error::InsufficientData {
            needed,
            available: pool_size,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pool: Vec<usize> = (0..pool_size).collect();
    pool.shuffle(&mut rng);
    let train = pool[..spec.n_train].to_vec();
    let val = pool[spec.n_train..spec.n_train + spec.n_val].to_vec();
    let test = pool[spec.n_train + spec.n_val..needed].to_vec();
    Ok(Splits { train, val, test })
}
