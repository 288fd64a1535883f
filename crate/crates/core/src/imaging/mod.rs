//! Raster and box types shared by every stage of the pipeline.
//!
//! Coordinates use a top-left origin: `x` is the column, `y` the row.

pub mod pgm;
pub mod sequence;

use std::fmt;

use crate::error::{Error, Result};

pub use sequence::FrameSequence;

/// 8-bit single-channel image, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Image filled with a single intensity.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "zero image dimension");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Build an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "zero image dimension");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Bounding box covering the whole image.
    pub fn full_box(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.width as u32, self.height as u32)
    }

    /// Copy out the pixels under `bbox`.
    pub fn crop(&self, bbox: BoundingBox) -> Result<GrayImage> {
        if !bbox.is_inside(self.width, self.height) {
            return Err(Error::OutOfBounds {
                bbox,
                width: self.width,
                height: self.height,
            });
        }
        let (x0, y0) = (bbox.x as usize, bbox.y as usize);
        let (w, h) = (bbox.w as usize, bbox.h as usize);
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            pixels.extend_from_slice(&self.row(y)[x0..x0 + w]);
        }
        Ok(GrayImage {
            width: w,
            height: h,
            pixels,
        })
    }

    pub(crate) fn ensure_dims(&self, expected: (usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

impl std::str::FromStr for BoundingBox {
    type Err = Error;

    /// Parses `x,y,w,h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidParameter(format!("expected box as x,y,w,h, got {s:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let x = parts[0].parse().map_err(|_| bad())?;
        let y = parts[1].parse().map_err(|_| bad())?;
        let w = parts[2].parse().map_err(|_| bad())?;
        let h = parts[3].parse().map_err(|_| bad())?;
        BoundingBox::try_new(x, y, w, h)
    }
}

impl BoundingBox {
    /// Panics on a zero-sized box; use [`BoundingBox::try_new`] for untrusted input.
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        assert!(w > 0 && h > 0, "box must have positive size");
        Self { x, y, w, h }
    }

    pub fn try_new(x: i32, y: i32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidParameter(format!("box {x},{y},{w},{h} has zero size")));
        }
        Ok(Self { x, y, w, h })
    }

    #[inline]
    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    #[inline]
    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn is_inside(&self, width: usize, height: usize) -> bool {
        self.x >= 0 && self.y >= 0 && self.right() <= width as i64 && self.bottom() <= height as i64
    }

    /// True when `other` lies entirely within `self`. `strict` additionally
    /// requires a gap on every side.
    pub fn contains(&self, other: &BoundingBox, strict: bool) -> bool {
        if strict {
            other.x > self.x && other.y > self.y && other.right() < self.right() && other.bottom() < self.bottom()
        } else {
            other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
        }
    }

    pub fn translate(&self, dx: i32, dy: i32) -> BoundingBox {
        BoundingBox {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> u64 {
        let ix = (self.right().min(other.right()) - (self.x.max(other.x) as i64)).max(0);
        let iy = (self.bottom().min(other.bottom()) - (self.y.max(other.y) as i64)).max(0);
        (ix * iy) as u64
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }
}

/// Intersection over union of two boxes, 0 when disjoint.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Binary per-pixel map, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} mask bits for {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// {0, 255} rendering, handy for dumping masks as PGM.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    pub(crate) fn ensure_dims(&self, expected: (usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp3() -> GrayImage {
        GrayImage::from_fn(3, 3, |x, y| (y * 3 + x) as u8)
    }

    #[test]
    fn new_rejects_bad_lengths() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn crop_full_box_is_identity() {
        let img = ramp3();
        assert_eq!(img.crop(img.full_box()).unwrap(), img);
    }

    #[test]
    fn crop_ramp_corner() {
        // ramp value = 3y + x; the 2x2 block at (1,1) holds 4,5,7,8
        let img = ramp3();
        let c = img.crop(BoundingBox::new(1, 1, 2, 2)).unwrap();
        assert_eq!(c.dims(), (2, 2));
        let expected: Vec<u8> = [(1, 1), (2, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(x, y)| (3 * y + x) as u8)
            .collect();
        assert_eq!(c.as_raw(), &expected[..]);
    }

    #[test]
    fn crop_past_right_edge_fails() {
        let img = ramp3();
        let err = img.crop(BoundingBox::new(2, 0, 2, 1)).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
        assert!(img.crop(BoundingBox::new(-1, 0, 1, 1)).is_err());
    }

    #[test]
    fn iou_cases() {
        let a = BoundingBox::new(0, 0, 10, 10);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BoundingBox::new(10, 0, 5, 5)), 0.0);
        let b = BoundingBox::new(5, 0, 10, 10);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn box_parses() {
        let b: BoundingBox = "3, 4,5,6".parse().unwrap();
        assert_eq!(b, BoundingBox::new(3, 4, 5, 6));
        assert!("1,2,0,4".parse::<BoundingBox>().is_err());
        assert!("1,2,3".parse::<BoundingBox>().is_err());
        assert_eq!(b.to_string().parse::<BoundingBox>().unwrap(), b);
    }

    /// A box inside `(w, h)`.
    fn box_within(w: usize, h: usize) -> impl Strategy<Value = BoundingBox> {
        (0..w, 0..h).prop_flat_map(move |(x, y)| {
            (1..=w - x, 1..=h - y).prop_map(move |(bw, bh)| BoundingBox::new(x as i32, y as i32, bw as u32, bh as u32))
        })
    }

    fn nested_crops() -> impl Strategy<Value = (GrayImage, BoundingBox, BoundingBox)> {
        (1usize..40, 1usize..40, any::<u64>()).prop_flat_map(|(w, h, seed)| {
            let img = GrayImage::from_fn(w, h, |x, y| {
                (seed ^ ((y * w + x) as u64).wrapping_mul(0x9e37_79b9)) as u8
            });
            box_within(w, h).prop_flat_map(move |outer| {
                let img = img.clone();
                box_within(outer.w as usize, outer.h as usize).prop_map(move |inner| (img.clone(), outer, inner))
            })
        })
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-20i32..40, -20i32..40, 1u32..30, 1u32..30).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn crop_composes((img, outer, inner) in nested_crops()) {
            let twice = img.crop(outer).unwrap().crop(inner).unwrap();
            let once = img.crop(inner.translate(outer.x, outer.y)).unwrap();
            prop_assert_eq!(twice, once);
        }

        #[test]
        fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let (ab, ba) = (iou(&a, &b), iou(&b, &a));
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b);
        }
    }
}
