//! Versioned little-endian model file.
//!
//! ```text
//! "TSVM" | version u8 | window_w window_h cell block stride bins: u32 | epsilon f64
//!        | lambda f64 | epochs u32 | seed u64 | n u32 | weights n x f64 | bias f64
//! ```

use std::path::Path;

use thiserror::Error;

use super::{LinearModel, TrainMeta};
use crate::hog::HogParams;

pub const MAGIC: &[u8; 4] = b"TSVM";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ModelCodecError {
    #[error("bad magic {0:?}, not a model file")]
    BadMagic(Vec<u8>),
    #[error("unsupported model format version {0} (expected {VERSION})")]
    Version(u8),
    #[error("model file truncated at byte {0}")]
    Truncated(usize),
    #[error("model declares {declared} weights, HOG parameters require {expected}")]
    LengthMismatch { declared: usize, expected: usize },
    #[error("{0} trailing bytes after model")]
    TrailingBytes(usize),
    #[error("invalid parameters in model file: {0}")]
    InvalidParams(String),
}

pub fn encode(m: &LinearModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * m.weights.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    let h = &m.hog;
    for v in [
        h.window_w,
        h.window_h,
        h.cell_size,
        h.block_size,
        h.block_stride,
        h.num_bins,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&h.epsilon.to_le_bytes());
    out.extend_from_slice(&m.meta.lambda.to_le_bytes());
    out.extend_from_slice(&m.meta.epochs.to_le_bytes());
    out.extend_from_slice(&m.meta.seed.to_le_bytes());
    out.extend_from_slice(&(m.weights.len() as u32).to_le_bytes());
    for w in &m.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.extend_from_slice(&m.bias.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ModelCodecError> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or(ModelCodecError::Truncated(self.buf.len()))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice has length N"))
    }

    fn u32(&mut self) -> Result<u32, ModelCodecError> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, ModelCodecError> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, ModelCodecError> {
        self.take().map(f64::from_le_bytes)
    }
}

pub fn decode(bytes: &[u8]) -> Result<LinearModel, ModelCodecError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ModelCodecError::BadMagic(bytes.iter().take(4).copied().collect()));
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let [version] = r.take::<1>()?;
    if version != VERSION {
        return Err(ModelCodecError::Version(version));
    }
    let mut dims = [0usize; 6];
    for d in dims.iter_mut() {
        *d = r.u32()? as usize;
    }
    let hog = HogParams {
        window_w: dims[0],
        window_h: dims[1],
        cell_size: dims[2],
        block_size: dims[3],
        block_stride: dims[4],
        num_bins: dims[5],
        epsilon: r.f64()?,
    };
    hog.validate()
        .map_err(|e| ModelCodecError::InvalidParams(e.to_string()))?;
    let meta = TrainMeta {
        lambda: r.f64()?,
        epochs: r.u32()?,
        seed: r.u64()?,
    };
    let declared = r.u32()? as usize;
    let expected = hog.descriptor_len();
    if declared != expected {
        return Err(ModelCodecError::LengthMismatch { declared, expected });
    }
    let mut weights = Vec::with_capacity(declared);
    for _ in 0..declared {
        weights.push(r.f64()?);
    }
    let bias = r.f64()?;
    if r.pos != bytes.len() {
        return Err(ModelCodecError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(LinearModel {
        weights,
        bias,
        hog,
        meta,
    })
}

pub fn load(path: impl AsRef<Path>) -> crate::Result<LinearModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| crate::Error::from(e).in_file(path))?;
    decode(&bytes).map_err(|e| crate::Error::from(e).in_file(path))
}

pub fn save(path: impl AsRef<Path>, m: &LinearModel) -> crate::Result<()> {
    crate::io::write_atomic(path.as_ref(), &encode(m))
}
