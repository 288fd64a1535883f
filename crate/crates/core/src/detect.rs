//! Sliding-window detection with foreground gating.
//!
//! Background subtraction shortens detection because windows whose
//! foreground fraction is below `rho` are never HOG-scored; only the gated
//! windows pay for feature extraction.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::adaptive::{self, DifferenceVector, ReferenceAnchor};
use crate::background::{self, BackgroundModel, ForegroundMask, Fusion, DEFAULT_TAU};
use crate::classify::LinearModel;
use crate::error::{Error, Result};
use crate::hog::{self, HogParams};
use crate::imaging::{iou, BitMask, BoundingBox, GrayImage};
use crate::par::{self, Execution};

pub const DEFAULT_RHO: f64 = 0.2;
pub const DEFAULT_THETA: f64 = 0.0;
pub const DEFAULT_NMS_IOU: f64 = 0.45;
pub const DEFAULT_STRIDE: usize = 8;
pub const DEFAULT_SCALES: [f64; 3] = [1.0, 1.2, 1.44];

/// Binary map of pixels covered by accepted detections.
pub type PredictionMask = BitMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    /// SVM decision value.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    /// Score every window of the raw frame.
    HogOnly,
    /// Subtract a fixed background, fuse, gate, score.
    HogBsStatic,
    /// Shift the background by the measured camera motion first.
    HogAbsDynamic,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::HogOnly => "hog",
            Pipeline::HogBsStatic => "bs",
            Pipeline::HogAbsDynamic => "abs",
        }
    }

    pub fn all() -> [Pipeline; 3] {
        [Pipeline::HogOnly, Pipeline::HogBsStatic, Pipeline::HogAbsDynamic]
    }

    pub fn needs_background(self) -> bool {
        !matches!(self, Pipeline::HogOnly)
    }

    pub fn needs_anchor(self) -> bool {
        matches!(self, Pipeline::HogAbsDynamic)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hog" => Ok(Pipeline::HogOnly),
            "bs" => Ok(Pipeline::HogBsStatic),
            "abs" => Ok(Pipeline::HogAbsDynamic),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected hog, bs or abs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resample {
    #[default]
    Nearest,
    Bilinear,
}

/// Everything that controls one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectMode {
    pub pipeline: Pipeline,
    /// Minimum foreground fraction for a window to be scored.
    pub rho: f64,
    /// Minimum score for a window to become a detection.
    pub theta: f64,
    pub nms_iou: f64,
    /// Strictly increasing, starting at 1.0.
    pub scales: Vec<f64>,
    pub stride: usize,
    pub tau: u8,
    pub fusion: Fusion,
    /// Anchor-lost threshold; `None` derives it from the template size and `tau`.
    pub max_error: Option<f64>,
    pub resample: Resample,
    pub execution: Execution,
}

impl DetectMode {
    pub fn new(pipeline: Pipeline) -> Self {
        Self {
            pipeline,
            rho: DEFAULT_RHO,
            theta: DEFAULT_THETA,
            nms_iou: DEFAULT_NMS_IOU,
            scales: DEFAULT_SCALES.to_vec(),
            stride: DEFAULT_STRIDE,
            tau: DEFAULT_TAU,
            fusion: Fusion::Mask,
            max_error: None,
            resample: Resample::Nearest,
            execution: Execution::Sequential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho {} outside [0, 1]", self.rho));
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return bad(format!("NMS IoU {} outside [0, 1]", self.nms_iou));
        }
        validate_scales(&self.scales)?;
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.theta.is_nan() {
            return bad("theta is NaN".into());
        }
        if let Fusion::Blend { alpha } = self.fusion {
            if !(0.0..=1.0).contains(&alpha) {
                return bad(format!("blend alpha {alpha} outside [0, 1]"));
            }
        }
        Ok(())
    }

    fn max_error_for(&self, anchor: &ReferenceAnchor) -> f64 {
        self.max_error.unwrap_or_else(|| {
            let (w, h) = anchor.template().dims();
            adaptive::default_max_error(w * h, self.tau)
        })
    }
}

pub fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.first() != Some(&1.0) {
        return Err(Error::InvalidParameter(format!(
            "scale ladder must start at 1.0, got {scales:?}"
        )));
    }
    if scales
        .windows(2)
        .any(|p| p[1].partial_cmp(&p[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidParameter(format!(
            "scale ladder must be strictly increasing, got {scales:?}"
        )));
    }
    Ok(())
}

/// Summed-area table over a binary mask.
struct MaskIntegral {
    width: usize,
    sums: Vec<u32>,
}

impl MaskIntegral {
    fn new(mask: &BitMask) -> Self {
        let (w, h) = mask.dims();
        let stride = w + 1;
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += mask.get(x, y) as u32;
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { width: stride, sums }
    }

    fn count(&self, b: &BoundingBox) -> u32 {
        let (x0, y0) = (b.x as usize, b.y as usize);
        let (x1, y1) = (x0 + b.w as usize, y0 + b.h as usize);
        let s = |x: usize, y: usize| self.sums[y * self.width + x];
        s(x1, y1) + s(x0, y0) - s(x0, y1) - s(x1, y0)
    }
}

/// Every window of the scale ladder, scale-major then row-major.
pub fn all_windows(img_w: usize, img_h: usize, params: &HogParams, stride: usize, scales: &[f64]) -> Vec<BoundingBox> {
    let mut out = Vec::new();
    for &s in scales {
        let ww = (params.window_w as f64 * s).round() as usize;
        let wh = (params.window_h as f64 * s).round() as usize;
        if ww == 0 || wh == 0 || ww > img_w || wh > img_h {
            continue;
        }
        let step = stride as f64 * s;
        let positions = |limit: usize| {
            (0..)
                .map(move |k: usize| (k as f64 * step).round() as usize)
                .take_while(move |&p| p <= limit)
                .collect::<Vec<_>>()
        };
        let xs = positions(img_w - ww);
        for y in positions(img_h - wh) {
            for &x in &xs {
                out.push(BoundingBox::new(x as i32, y as i32, ww as u32, wh as u32));
            }
        }
    }
    out
}

/// Candidate windows, kept iff their foreground fraction reaches `rho` when a
/// mask is supplied.
pub fn candidate_windows(
    img_w: usize,
    img_h: usize,
    params: &HogParams,
    stride: usize,
    scales: &[f64],
    mask: Option<&ForegroundMask>,
    rho: f64,
) -> Vec<BoundingBox> {
    let windows = all_windows(img_w, img_h, params, stride.max(1), scales);
    match mask {
        None => windows,
        Some(mask) => gate(windows, mask, rho),
    }
}

fn gate(windows: Vec<BoundingBox>, mask: &ForegroundMask, rho: f64) -> Vec<BoundingBox> {
    let integral = MaskIntegral::new(mask);
    windows
        .into_iter()
        .filter(|b| integral.count(b) as f64 >= rho * b.area() as f64)
        .collect()
}

/// Resample `src` to `w` x `h`.
pub fn resize(src: &GrayImage, w: usize, h: usize, resample: Resample) -> GrayImage {
    if src.dims() == (w, h) {
        return src.clone();
    }
    let (sw, sh) = src.dims();
    match resample {
        Resample::Nearest => GrayImage::from_fn(w, h, |x, y| {
            let sx = ((2 * x + 1) * sw / (2 * w)).min(sw - 1);
            let sy = ((2 * y + 1) * sh / (2 * h)).min(sh - 1);
            src.get(sx, sy)
        }),
        Resample::Bilinear => {
            let fx = sw as f64 / w as f64;
            let fy = sh as f64 / h as f64;
            GrayImage::from_fn(w, h, |x, y| {
                let sx = ((x as f64 + 0.5) * fx - 0.5).clamp(0.0, (sw - 1) as f64);
                let sy = ((y as f64 + 0.5) * fy - 0.5).clamp(0.0, (sh - 1) as f64);
                let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
                let (ax, ay) = (sx - x0 as f64, sy - y0 as f64);
                let p = |x, y| src.get(x, y) as f64;
                let top = p(x0, y0) * (1.0 - ax) + p(x1, y0) * ax;
                let bot = p(x0, y1) * (1.0 - ax) + p(x1, y1) * ax;
                (top * (1.0 - ay) + bot * ay).round().clamp(0.0, 255.0) as u8
            })
        }
    }
}

/// Crop `bbox` and bring it to the HOG window size.
pub fn extract_window(img: &GrayImage, bbox: BoundingBox, params: &HogParams, resample: Resample) -> Result<GrayImage> {
    let crop = img.crop(bbox)?;
    Ok(resize(&crop, params.window_w, params.window_h, resample))
}

pub fn score_window(img: &GrayImage, bbox: BoundingBox, model: &LinearModel, resample: Resample) -> Result<f64> {
    let win = extract_window(img, bbox, &model.hog, resample)?;
    let d = hog::hog_features(&win, &model.hog)?;
    model.score(&d)
}

/// Counters for one frame (or, summed, for a sequence).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectStats {
    pub windows_considered: usize,
    pub windows_scored: usize,
    pub elapsed: Duration,
    /// Camera shift applied to the background, dynamic mode only.
    pub shift: Option<DifferenceVector>,
}

/// Every gated window with its score, before thresholding and NMS.
#[derive(Debug, Clone)]
pub struct ScoredFrame {
    pub scored: Vec<Detection>,
    pub stats: DetectStats,
}

/// The image the windows are scored on, and the gate mask if any.
pub struct Prepared {
    pub image: GrayImage,
    pub mask: Option<ForegroundMask>,
    pub shift: Option<DifferenceVector>,
}

/// Run the pre-HOG part of the pipeline.
pub fn prepare(
    frame: &GrayImage,
    mode: &DetectMode,
    bg: Option<&BackgroundModel>,
    anchor: Option<&ReferenceAnchor>,
) -> Result<Prepared> {
    let mode_name = mode.pipeline.name();
    let need_bg = || Error::MissingInput {
        mode: mode_name,
        what: "a background",
    };
    match mode.pipeline {
        Pipeline::HogOnly => Ok(Prepared {
            image: frame.clone(),
            mask: None,
            shift: None,
        }),
        Pipeline::HogBsStatic => {
            let bg = bg.ok_or_else(need_bg)?;
            let (diff, mask) = background::subtract(frame, bg, mode.tau)?;
            let image = background::fuse(frame, &diff, &mask, mode.fusion)?;
            Ok(Prepared {
                image,
                mask: Some(mask),
                shift: None,
            })
        }
        Pipeline::HogAbsDynamic => {
            let bg = bg.ok_or_else(need_bg)?;
            let anchor = anchor.ok_or(Error::MissingInput {
                mode: mode_name,
                what: "an anchor",
            })?;
            let (shifted, d) = adaptive::adapt_background(frame, anchor, bg, mode.max_error_for(anchor))?;
            let (diff, mask) = background::subtract(frame, &shifted, mode.tau)?;
            let image = background::fuse(frame, &diff, &mask, mode.fusion)?;
            Ok(Prepared {
                image,
                mask: Some(mask),
                shift: Some(d),
            })
        }
    }
}

/// Score every window that survives the gate. Timing covers the whole call.
pub fn score_windows(
    frame: &GrayImage,
    model: &LinearModel,
    mode: &DetectMode,
    bg: Option<&BackgroundModel>,
    anchor: Option<&ReferenceAnchor>,
) -> Result<ScoredFrame> {
    let start = Instant::now();
    mode.validate()?;
    model.validate()?;
    let prepared = prepare(frame, mode, bg, anchor)?;
    let (w, h) = frame.dims();
    let all = all_windows(w, h, &model.hog, mode.stride, &mode.scales);
    let considered = all.len();
    let windows = match &prepared.mask {
        Some(mask) => gate(all, mask, mode.rho),
        None => all,
    };
    let scores = par::map(mode.execution, &windows, |&b| {
        score_window(&prepared.image, b, model, mode.resample)
    });
    let mut scored = Vec::with_capacity(windows.len());
    for (bbox, s) in windows.iter().zip(scores) {
        scored.push(Detection { bbox: *bbox, score: s? });
    }
    Ok(ScoredFrame {
        stats: DetectStats {
            windows_considered: considered,
            windows_scored: scored.len(),
            elapsed: start.elapsed(),
            shift: prepared.shift,
        },
        scored,
    })
}

/// Threshold at `theta`, then suppress overlaps.
pub fn finalize(scored: &[Detection], theta: f64, nms_iou: f64) -> Vec<Detection> {
    let kept: Vec<Detection> = scored.iter().copied().filter(|d| d.score >= theta).collect();
    nms(&kept, nms_iou)
}

/// Full detector for one frame.
pub fn detect(
    frame: &GrayImage,
    model: &LinearModel,
    mode: &DetectMode,
    bg: Option<&BackgroundModel>,
    anchor: Option<&ReferenceAnchor>,
) -> Result<(Vec<Detection>, DetectStats)> {
    let start = Instant::now();
    let sf = score_windows(frame, model, mode, bg, anchor)?;
    let dets = finalize(&sf.scored, mode.theta, mode.nms_iou);
    let stats = DetectStats {
        elapsed: start.elapsed(),
        ..sf.stats
    };
    Ok((dets, stats))
}

fn rank(a: &Detection, b: &Detection) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| (a.bbox.y, a.bbox.x, a.bbox.h, a.bbox.w).cmp(&(b.bbox.y, b.bbox.x, b.bbox.h, b.bbox.w)))
}

/// Greedy non-maximum suppression: highest score first (ties broken by
/// row-major box position); a detection survives iff its IoU with every kept
/// one is below `iou_thresh`.
pub fn nms(dets: &[Detection], iou_thresh: f64) -> Vec<Detection> {
    let mut order: Vec<Detection> = dets.to_vec();
    order.sort_by(rank);
    let mut kept: Vec<Detection> = Vec::new();
    for d in order {
        if kept.iter().all(|k| iou(&k.bbox, &d.bbox) < iou_thresh) {
            kept.push(d);
        }
    }
    kept
}

pub fn prediction_mask(dets: &[Detection], w: usize, h: usize) -> Result<PredictionMask> {
    let mut mask = BitMask::new(w, h, false);
    for d in dets {
        let b = d.bbox;
        if !b.is_inside(w, h) {
            return Err(Error::OutOfBounds {
                bbox: b,
                width: w,
                height: h,
            });
        }
        for y in b.y as usize..b.bottom() as usize {
            for x in b.x as usize..b.right() as usize {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

/// Element-wise product of the frame with the binary prediction matrix.
pub fn apply_mask(frame: &GrayImage, mask: &PredictionMask) -> Result<GrayImage> {
    mask.ensure_dims(frame.dims())?;
    let px = frame
        .as_raw()
        .iter()
        .zip(mask.bits())
        .map(|(&p, &m)| p * m as u8)
        .collect();
    GrayImage::new(frame.width(), frame.height(), px)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::TrainMeta;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn det(x: i32, y: i32, w: u32, h: u32, score: f64) -> Detection {
        Detection {
            bbox: BoundingBox::new(x, y, w, h),
            score,
        }
    }

    #[test]
    fn window_counts() {
        let p = HogParams::default();
        assert_eq!(all_windows(64, 128, &p, 8, &[1.0]).len(), 1);
        let w = candidate_windows(128, 128, &p, 32, &[1.0], None, 0.2);
        let xs: Vec<i32> = w.iter().map(|b| b.x).collect();
        assert_eq!(xs, vec![0, 32, 64]);
        assert!(all_windows(63, 128, &p, 8, &[1.0]).is_empty());
    }

    #[test]
    fn windows_fit_and_are_scale_major() {
        let p = HogParams::default();
        let w = all_windows(200, 190, &p, 8, &DEFAULT_SCALES);
        assert!(w.iter().all(|b| b.is_inside(200, 190)));
        let sizes: Vec<u32> = w.iter().map(|b| b.w).collect();
        assert!(sizes.windows(2).all(|s| s[0] <= s[1]));
        assert!(sizes.contains(&77) && sizes.contains(&92));
    }

    #[test]
    fn empty_mask_gates_everything() {
        let p = HogParams::default();
        let mask = BitMask::new(128, 128, false);
        assert!(candidate_windows(128, 128, &p, 8, &[1.0], Some(&mask), 0.1).is_empty());
        // rho 0 keeps every window
        assert_eq!(candidate_windows(128, 128, &p, 8, &[1.0], Some(&mask), 0.0).len(), 9);
    }

    #[test]
    fn gate_counts_fraction() {
        let p = HogParams::default();
        let mut mask = BitMask::new(128, 128, false);
        // a 32x128 stripe: windows at x=0, 32, 64 see 50%, 25%, 0%
        for y in 0..128 {
            for x in 16..48 {
                mask.set(x, y, true);
            }
        }
        let kept = candidate_windows(128, 128, &p, 32, &[1.0], Some(&mask), 0.25);
        assert_eq!(kept.iter().map(|b| b.x).collect::<Vec<_>>(), vec![0, 32]);
        let kept = candidate_windows(128, 128, &p, 32, &[1.0], Some(&mask), 0.5);
        assert_eq!(kept.iter().map(|b| b.x).collect::<Vec<_>>(), vec![0]);
    }

    proptest! {
        #[test]
        fn gating_is_monotone_in_rho(seed in any::<u64>(), r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits = (0..96 * 160).map(|_| rng.random_bool(0.3)).collect();
            let mask = BitMask::from_bits(96, 160, bits).unwrap();
            let p = HogParams::default();
            let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
            let a = candidate_windows(96, 160, &p, 8, &DEFAULT_SCALES, Some(&mask), lo);
            let b = candidate_windows(96, 160, &p, 8, &DEFAULT_SCALES, Some(&mask), hi);
            prop_assert!(b.len() <= a.len());
            prop_assert!(b.iter().all(|w| a.contains(w)));
        }
    }

    #[test]
    fn nearest_resize_is_integer_exact() {
        let src = GrayImage::from_fn(4, 2, |x, y| (x + 10 * y) as u8);
        let up = resize(&src, 8, 4, Resample::Nearest);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(up.get(x, y), src.get(x / 2, y / 2));
            }
        }
        let down = resize(&up, 4, 2, Resample::Nearest);
        assert_eq!(down, src);
        let flat = resize(&GrayImage::filled(5, 5, 9), 3, 7, Resample::Bilinear);
        assert!(flat.as_raw().iter().all(|&v| v == 9));
    }

    #[test]
    fn nms_basics() {
        let one = vec![det(0, 0, 10, 10, 1.0)];
        assert_eq!(nms(&one, 0.45), one);
        let two = vec![det(0, 0, 10, 10, 1.0), det(0, 0, 10, 10, 2.0)];
        assert_eq!(nms(&two, 0.99), vec![det(0, 0, 10, 10, 2.0)]);
        let apart = vec![det(0, 0, 10, 10, 1.0), det(50, 0, 10, 10, 3.0)];
        assert_eq!(nms(&apart, 0.5), vec![det(50, 0, 10, 10, 3.0), det(0, 0, 10, 10, 1.0)]);
    }

    /// Independent quadratic reference: repeatedly take the best remaining
    /// detection and drop everything it overlaps.
    fn naive_nms(dets: &[Detection], t: f64) -> Vec<Detection> {
        let mut remaining: Vec<Detection> = dets.to_vec();
        let mut out = Vec::new();
        while !remaining.is_empty() {
            let mut best = 0;
            for i in 1..remaining.len() {
                let (a, b) = (&remaining[i], &remaining[best]);
                let better = a.score > b.score
                    || (a.score == b.score
                        && (a.bbox.y, a.bbox.x, a.bbox.h, a.bbox.w) < (b.bbox.y, b.bbox.x, b.bbox.h, b.bbox.w));
                if better {
                    best = i;
                }
            }
            let top = remaining.remove(best);
            remaining.retain(|d| iou(&d.bbox, &top.bbox) < t);
            out.push(top);
        }
        out
    }

    #[test]
    fn nms_matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let n = rng.random_range(0..25);
            let dets: Vec<Detection> = (0..n)
                .map(|_| {
                    det(
                        rng.random_range(0..60),
                        rng.random_range(0..60),
                        rng.random_range(5..30),
                        rng.random_range(5..30),
                        rng.random_range(0..8) as f64 * 0.5,
                    )
                })
                .collect();
            let t = rng.random_range(0.0..1.0);
            let fast = nms(&dets, t);
            assert_eq!(fast, naive_nms(&dets, t));
            for (i, a) in fast.iter().enumerate() {
                for b in &fast[i + 1..] {
                    assert!(iou(&a.bbox, &b.bbox) < t);
                }
            }
        }
    }

    #[test]
    fn prediction_mask_cases() {
        assert_eq!(prediction_mask(&[], 4, 3).unwrap().count(), 0);
        assert_eq!(prediction_mask(&[det(0, 0, 4, 3, 1.0)], 4, 3).unwrap().count(), 12);
        let a = det(0, 0, 10, 10, 1.0);
        let b = det(5, 5, 10, 10, 1.0);
        let m = prediction_mask(&[a, b], 20, 20).unwrap();
        let union = a.bbox.area() + b.bbox.area() - a.bbox.intersection_area(&b.bbox);
        assert_eq!(m.count() as u64, union);
        assert_eq!(union, 175);
        assert!(prediction_mask(&[det(15, 0, 10, 10, 1.0)], 20, 20).is_err());
    }

    #[test]
    fn apply_mask_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frame = GrayImage::from_fn(9, 7, |_, _| rng.random());
        assert_eq!(apply_mask(&frame, &BitMask::new(9, 7, true)).unwrap(), frame);
        assert!(apply_mask(&frame, &BitMask::new(9, 7, false))
            .unwrap()
            .as_raw()
            .iter()
            .all(|&v| v == 0));
        for _ in 0..20 {
            let bits: Vec<bool> = (0..63).map(|_| rng.random()).collect();
            let m = BitMask::from_bits(9, 7, bits).unwrap();
            let out = apply_mask(&frame, &m).unwrap();
            for i in 0..63 {
                let want = if m.bits()[i] { frame.as_raw()[i] } else { 0 };
                assert_eq!(out.as_raw()[i], want);
            }
        }
        assert!(apply_mask(&frame, &BitMask::new(7, 9, true)).is_err());
    }

    fn flat_model() -> LinearModel {
        let hog = HogParams::default();
        LinearModel::new(vec![0.0; hog.descriptor_len()], 1.0, hog, TrainMeta::default()).unwrap()
    }

    #[test]
    fn static_mode_with_identical_background_scores_nothing() {
        let frame = GrayImage::from_fn(160, 160, |x, y| ((x * 7 + y * 3) % 200) as u8);
        let bg = BackgroundModel::new(frame.clone());
        let mode = DetectMode::new(Pipeline::HogBsStatic);
        let (dets, stats) = detect(&frame, &flat_model(), &mode, Some(&bg), None).unwrap();
        assert!(dets.is_empty());
        assert_eq!(stats.windows_scored, 0);
        assert!(stats.windows_considered > 0);
        let (hog_dets, hog_stats) =
            detect(&frame, &flat_model(), &DetectMode::new(Pipeline::HogOnly), None, None).unwrap();
        assert_eq!(hog_stats.windows_scored, hog_stats.windows_considered);
        assert!(!hog_dets.is_empty());
    }

    #[test]
    fn missing_inputs_are_reported() {
        let frame = GrayImage::filled(64, 128, 0);
        let m = flat_model();
        assert!(matches!(
            detect(&frame, &m, &DetectMode::new(Pipeline::HogBsStatic), None, None),
            Err(Error::MissingInput {
                what: "a background",
                ..
            })
        ));
        let bg = BackgroundModel::new(frame.clone());
        assert!(matches!(
            detect(&frame, &m, &DetectMode::new(Pipeline::HogAbsDynamic), Some(&bg), None),
            Err(Error::MissingInput { what: "an anchor", .. })
        ));
    }

    #[test]
    fn mode_validation() {
        let mut m = DetectMode::new(Pipeline::HogOnly);
        assert!(m.validate().is_ok());
        m.scales = vec![1.2, 1.44];
        assert!(m.validate().is_err());
        m.scales = vec![1.0, 1.0];
        assert!(m.validate().is_err());
        m.scales = vec![1.0];
        m.rho = 1.5;
        assert!(m.validate().is_err());
        assert_eq!("abs".parse::<Pipeline>().unwrap(), Pipeline::HogAbsDynamic);
        assert!("hog+bs".parse::<Pipeline>().is_err());
    }
}
