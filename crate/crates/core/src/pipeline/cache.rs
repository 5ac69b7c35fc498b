//! Per-stage representations of every sample, computed once per frozen layer
//! stack and optionally persisted.
//!
//! A slot holds one stage of one experiment lineage. Its content is tagged
//! with the hash of everything upstream (data, seeds, hook identity, frozen
//! layer parameters); reading a slot under a different tag is
//! [`Error::CacheStale`].

use crate::error::{Error, Result};
use crate::fiber::NamedArrays;
use crate::net::{stage_forward, FFLayerParams, StageHook};
use crate::readout::FeatureMatrix;
use crate::FEATURES;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

const SETS: [&str; 5] = ["train_pos", "train_neg", "train_neutral", "val_neutral", "test_neutral"];

/// One stage's representation of all samples. `train_pos`/`train_neg` are
/// empty when no later block trains on them.
#[derive(Debug, Clone, PartialEq)]
pub struct StageData {
    pub train_pos: FeatureMatrix,
    pub train_neg: FeatureMatrix,
    pub train_neutral: FeatureMatrix,
    pub val_neutral: FeatureMatrix,
    pub test_neutral: FeatureMatrix,
}

fn empty() -> FeatureMatrix {
    FeatureMatrix::new(0, FEATURES, Vec::new()).expect("empty table")
}

fn forward_rows(rows: &FeatureMatrix, layer: &FFLayerParams, hook: &dyn StageHook) -> Result<FeatureMatrix> {
    let out: Vec<Vec<f64>> = (0..rows.rows())
        .into_par_iter()
        .map(|i| stage_forward(rows.row(i), layer, hook))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return FeatureMatrix::new(0, rows.cols(), Vec::new());
    }
    FeatureMatrix::from_rows(&out)
}

impl StageData {
    pub fn has_pairs(&self) -> bool {
        self.train_pos.rows() > 0 && self.train_pos.rows() == self.train_neg.rows()
    }

    pub fn sets(&self) -> [&FeatureMatrix; 5] {
        [
            &self.train_pos,
            &self.train_neg,
            &self.train_neutral,
            &self.val_neutral,
            &self.test_neutral,
        ]
    }

    /// Runs every row through one block and its hook. The hook is invoked
    /// exactly once per produced row.
    pub fn advance(&self, layer: &FFLayerParams, hook: &dyn StageHook, with_pairs: bool) -> Result<StageData> {
        let (train_pos, train_neg) = if with_pairs {
            (
                forward_rows(&self.train_pos, layer, hook)?,
                forward_rows(&self.train_neg, layer, hook)?,
            )
        } else {
            (empty(), empty())
        };
        Ok(StageData {
            train_pos,
            train_neg,
            train_neutral: forward_rows(&self.train_neutral, layer, hook)?,
            val_neutral: forward_rows(&self.val_neutral, layer, hook)?,
            test_neutral: forward_rows(&self.test_neutral, layer, hook)?,
        })
    }

    fn to_arrays(&self, tag: &str) -> Result<NamedArrays> {
        let mut a = NamedArrays::new();
        a.insert("tag", &[tag.len()], tag.bytes().map(f64::from).collect())?;
        for (name, m) in SETS.iter().zip(self.sets()) {
            a.insert(name, &[m.rows(), m.cols()], m.as_slice().to_vec())?;
        }
        Ok(a)
    }

    fn from_arrays(a: &NamedArrays) -> Result<StageData> {
        let get = |name: &str| -> Result<FeatureMatrix> {
            let (dims, data) = a.get(name)?;
            match dims {
                [r, c] => FeatureMatrix::new(*r, *c, data.to_vec()),
                _ => Err(Error::CorruptFile(format!("array '{name}' is not a table"))),
            }
        };
        Ok(StageData {
            train_pos: get("train_pos")?,
            train_neg: get("train_neg")?,
            train_neutral: get("train_neutral")?,
            val_neutral: get("val_neutral")?,
            test_neutral: get("test_neutral")?,
        })
    }
}

fn read_tag(a: &NamedArrays) -> Result<String> {
    let (_, bytes) = a.get("tag")?;
    let raw: Vec<u8> = bytes.iter().map(|&b| b as u8).collect();
    String::from_utf8(raw).map_err(|_| Error::CorruptFile("stage tag is not UTF-8".into()))
}

/// Stage slots under one directory, or an in-memory no-op when `dir` is `None`.
#[derive(Debug, Clone)]
pub struct StageCache {
    dir: Option<PathBuf>,
}

impl StageCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn slot_path(&self, stage: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("stage-{stage}.ffna")))
    }

    /// `Ok(None)` when the slot is empty or caching is disabled.
    pub fn load(&self, stage: usize, tag: &str) -> Result<Option<StageData>> {
        let Some(path) = self.slot_path(stage) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let arrays = NamedArrays::load(&path)?;
        if read_tag(&arrays)? != tag {
            return Err(Error::CacheStale { stage });
        }
        StageData::from_arrays(&arrays).map(Some)
    }

    pub fn store(&self, stage: usize, tag: &str, data: &StageData) -> Result<()> {
        match self.slot_path(stage) {
            Some(path) => data.to_arrays(tag)?.save(&path),
            None => Ok(()),
        }
    }
}
