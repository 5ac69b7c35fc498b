//! Versioned, checksummed checkpoints.
//!
//! Layout: one header line `FFOPTIC-CKPT v<version> sha256=<hex>` followed by a
//! JSON payload. The digest covers the payload bytes.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::hashing::sha256_hex;
use crate::net::{EbpNet, FFLayerParams};
use crate::readout::RidgeModel;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "FFOPTIC-CKPT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Ebp(EbpNet),
    ForwardForward {
        layers: Vec<FFLayerParams>,
        readout: RidgeModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub model: Model,
    /// File name of the persisted fiber basis and disorder, if optics ran.
    pub fiber_cache_key: Option<String>,
    pub fiber_fingerprint: Option<String>,
}

impl Checkpoint {
    pub fn new(config: ExperimentConfig, model: Model) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config,
            model,
            fiber_cache_key: None,
            fiber_fingerprint: None,
        }
    }

    /// Number of stored trainable scalars, counted from the stored arrays.
    /// Goodness thresholds are fixed and not counted.
    pub fn trainable_parameter_count(&self) -> u64 {
        let n = match &self.model {
            Model::Ebp(net) => {
                net.layers.iter().map(|l| l.kernel.len() + 1).sum::<usize>()
                    + net.fc_weights.len()
                    + net.fc_bias.len()
            }
            Model::ForwardForward { layers, readout } => {
                layers.iter().map(|l| l.kernel.len() + 1).sum::<usize>()
                    + readout.weights.len()
                    + readout.intercepts.len()
            }
        };
        n as u64
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = serde_json::to_vec(self)?;
        let mut out = format!("{MAGIC} v{} sha256={}\n", self.version, sha256_hex(&payload)).into_bytes();
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::CorruptFile("missing checkpoint header".into()))?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| Error::CorruptFile("checkpoint header is not UTF-8".into()))?;
        let mut parts = header.split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(Error::CorruptFile("not a checkpoint".into()));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::CorruptFile("bad checkpoint version field".into()))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let digest = parts
            .next()
            .and_then(|d| d.strip_prefix("sha256="))
            .ok_or_else(|| Error::CorruptFile("missing checkpoint digest".into()))?;
        let payload = &bytes[nl + 1..];
        if sha256_hex(payload) != digest {
            return Err(Error::CorruptFile("checkpoint checksum mismatch".into()));
        }
        let ckpt: Checkpoint = serde_json::from_slice(payload)?;
        if ckpt.version != version {
            return Err(Error::CorruptFile("header and payload versions differ".into()));
        }
        Ok(ckpt)
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, ckpt.to_bytes()?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
