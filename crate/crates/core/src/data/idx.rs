//! IDX container format (big-endian header, `u8` payload).
//!
//! Only the two layouts MNIST uses are accepted: rank-3 `u8` image tensors of
//! 28×28 records and rank-1 `u8` label vectors.

use crate::error::{Error, Result};
use std::path::Path;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const RAW_SIDE: usize = 28;
pub const RAW_PIXELS: usize = RAW_SIDE * RAW_SIDE;

/// One 28×28 grayscale digit, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RawImage(pub Box<[u8; RAW_PIXELS]>);

impl RawImage {
    pub fn pixels(&self) -> &[u8; RAW_PIXELS] {
        &self.0
    }
}

impl std::fmt::Debug for RawImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lit = self.0.iter().filter(|&&p| p > 0).count();
        write!(f, "RawImage({lit} lit pixels)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxData {
    Images(Vec<RawImage>),
    Labels(Vec<u8>),
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::MalformedInput(format!("header truncated at byte {at}")))
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxData> {
    let magic = be_u32(bytes, 0)?;
    if magic >> 16 != 0 || (magic >> 8) & 0xff != 0x08 {
        return Err(Error::MalformedInput(format!("bad magic {magic:#010x}")));
    }
    let rank = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(rank);
    for k in 0..rank {
        dims.push(be_u32(bytes, 4 + 4 * k)? as usize);
    }
    let header = 4 + 4 * rank;
    let payload_len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::MalformedInput("dimension product overflows".into()))?;
    let payload = &bytes[header.min(bytes.len())..];
    if payload.len() != payload_len {
        return Err(Error::MalformedInput(format!(
            "payload holds {} bytes, header declares {payload_len}",
            payload.len()
        )));
    }

    match magic {
        IMAGE_MAGIC => {
            if dims[1] != RAW_SIDE || dims[2] != RAW_SIDE {
                return Err(Error::MalformedInput(format!(
                    "expected {RAW_SIDE}x{RAW_SIDE} records, got {}x{}",
                    dims[1], dims[2]
                )));
            }
            let images = payload
                .chunks_exact(RAW_PIXELS)
                .map(|c| RawImage(Box::new(c.try_into().expect("chunk size"))))
                .collect();
            Ok(IdxData::Images(images))
        }
        LABEL_MAGIC => Ok(IdxData::Labels(payload.to_vec())),
        _ => Err(Error::MalformedInput(format!(
            "unsupported IDX layout {magic:#010x}"
        ))),
    }
}

pub fn to_idx_bytes(data: &IdxData) -> Vec<u8> {
    let mut out = Vec::new();
    match data {
        IdxData::Images(images) => {
            out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
            for d in [images.len(), RAW_SIDE, RAW_SIDE] {
                out.extend_from_slice(&(d as u32).to_be_bytes());
            }
            for img in images {
                out.extend_from_slice(&img.0[..]);
            }
        }
        IdxData::Labels(labels) => {
            out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
            out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
            out.extend_from_slice(labels);
        }
    }
    out
}

/// The MNIST training pool: images and labels read from `dir`.
#[derive(Debug, Clone)]
pub struct Mnist {
    pub images: Vec<RawImage>,
    pub labels: Vec<u8>,
}

impl Mnist {
    /// Loads `train-images-idx3-ubyte` and `train-labels-idx1-ubyte`.
    pub fn load_train(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            std::fs::read(dir.join(name)).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", dir.join(name).display()),
                ))
            })
        };
        let images = match parse_idx(&read("train-images-idx3-ubyte")?)? {
            IdxData::Images(v) => v,
            IdxData::Labels(_) => return Err(Error::MalformedInput("image file holds labels".into())),
        };
        let labels = match parse_idx(&read("train-labels-idx1-ubyte")?)? {
            IdxData::Labels(v) => v,
            IdxData::Images(_) => return Err(Error::MalformedInput("label file holds images".into())),
        };
        if images.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: images.len(),
                right: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::MalformedInput(format!("label {bad} out of range")));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut v = magic.to_be_bytes().to_vec();
        for d in dims {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v
    }

    #[test]
    fn two_images() {
        let mut bytes = header(0x0803, &[2, 28, 28]);
        bytes.extend((0..1568u32).map(|i| (i % 256) as u8));
        let IdxData::Images(imgs) = parse_idx(&bytes).unwrap() else {
            panic!("expected images");
        };
        assert_eq!(imgs.len(), 2);
        assert_eq!(imgs[1].pixels()[0], (784 % 256) as u8);
    }

    #[test]
    fn three_labels() {
        let mut bytes = header(0x0801, &[3]);
        bytes.extend([7, 0, 9]);
        assert_eq!(parse_idx(&bytes).unwrap(), IdxData::Labels(vec![7, 0, 9]));
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = header(0x0803, &[2, 28, 28]);
        bytes.extend(std::iter::repeat_n(0u8, 1567));
        assert!(matches!(parse_idx(&bytes), Err(Error::MalformedInput(_))));
        let mut bytes = header(0x0801, &[3]);
        bytes.extend([1, 2]);
        assert!(matches!(parse_idx(&bytes), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn bad_magic_and_header() {
        assert!(parse_idx(&[0, 0, 0x09, 0x01, 0, 0, 0, 0]).is_err());
        assert!(parse_idx(&[0x01, 0, 0x08, 0x01, 0, 0, 0, 0]).is_err());
        assert!(parse_idx(&[0, 0, 0x08]).is_err());
        // header claims rank 3 but stops after two dims
        assert!(parse_idx(&header(0x0803, &[1, 28])).is_err());
    }

    #[test]
    fn dimension_overflow() {
        let bytes = header(0x0803, &[u32::MAX, u32::MAX, u32::MAX]);
        assert!(matches!(parse_idx(&bytes), Err(Error::MalformedInput(_))));
    }

    proptest! {
        #[test]
        fn round_trip(labels in proptest::collection::vec(0u8..10, 0..50),
                      pixels in proptest::collection::vec(any::<u8>(), 0..4usize).prop_flat_map(|v| {
                          proptest::collection::vec(any::<u8>(), v.len() * RAW_PIXELS)
                      })) {
            let mut bytes = header(0x0801, &[labels.len() as u32]);
            bytes.extend(&labels);
            prop_assert_eq!(to_idx_bytes(&parse_idx(&bytes).unwrap()), bytes);

            let n = (pixels.len() / RAW_PIXELS) as u32;
            let mut bytes = header(0x0803, &[n, 28, 28]);
            bytes.extend(&pixels);
            prop_assert_eq!(to_idx_bytes(&parse_idx(&bytes).unwrap()), bytes);
        }
    }
}
