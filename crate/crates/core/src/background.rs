//! Constant-background subtraction and original/difference fusion.

use crate::error::{Error, Result};
use crate::imaging::{BitMask, GrayImage};

/// Foreground threshold on the 8-bit absolute difference.
pub const DEFAULT_TAU: u8 = 30;
pub const DEFAULT_BLEND_ALPHA: f64 = 0.5;

/// 1 = foreground.
pub type ForegroundMask = BitMask;

/// Reference background plus a mask of pixels where it is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackgroundModel {
    reference: GrayImage,
    valid: BitMask,
}

impl BackgroundModel {
    /// Fresh model, valid everywhere.
    pub fn new(reference: GrayImage) -> Self {
        let valid = BitMask::new(reference.width(), reference.height(), true);
        Self { reference, valid }
    }

    pub fn with_mask(reference: GrayImage, valid: BitMask) -> Result<Self> {
        valid.ensure_dims(reference.dims())?;
        Ok(Self { reference, valid })
    }

    pub fn reference(&self) -> &GrayImage {
        &self.reference
    }

    pub fn valid(&self) -> &BitMask {
        &self.valid
    }

    pub fn dims(&self) -> (usize, usize) {
        self.reference.dims()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.count()
    }
}

/// Absolute difference against the background and its thresholded mask.
///
/// Pixels where the background is not valid get a zero difference and are
/// never foreground.
pub fn subtract(input: &GrayImage, bg: &BackgroundModel, tau: u8) -> Result<(GrayImage, ForegroundMask)> {
    input.ensure_dims(bg.dims())?;
    let (w, h) = input.dims();
    let valid = bg.valid.bits();
    let mut diff = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for ((&a, &b), &ok) in input.as_raw().iter().zip(bg.reference.as_raw()).zip(valid) {
        let d = if ok { a.abs_diff(b) } else { 0 };
        diff.push(d);
        mask.push(ok && d >= tau);
    }
    Ok((GrayImage::new(w, h, diff)?, BitMask::from_bits(w, h, mask)?))
}

/// How the original frame and its background difference are combined.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Fusion {
    /// Original intensity on the foreground, zero elsewhere.
    #[default]
    Mask,
    /// `round(alpha * original + (1 - alpha) * diff)`.
    Blend { alpha: f64 },
}

pub fn fuse(original: &GrayImage, diff: &GrayImage, mask: &ForegroundMask, fusion: Fusion) -> Result<GrayImage> {
    let dims = original.dims();
    diff.ensure_dims(dims)?;
    mask.ensure_dims(dims)?;
    let px: Vec<u8> = match fusion {
        Fusion::Mask => original
            .as_raw()
            .iter()
            .zip(mask.bits())
            .map(|(&o, &m)| if m { o } else { 0 })
            .collect(),
        Fusion::Blend { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidParameter(format!("blend alpha {alpha} outside [0, 1]")));
            }
            original
                .as_raw()
                .iter()
                .zip(diff.as_raw())
                .map(|(&o, &d)| (alpha * o as f64 + (1.0 - alpha) * d as f64).round().clamp(0.0, 255.0) as u8)
                .collect()
        }
    };
    GrayImage::new(dims.0, dims.1, px)
}
