//! Turning annotated frames into SVM training samples.
//!
//! Positives are detector-shaped windows centred on each truth box.
//! Negatives are random detector-shaped windows overlapping no truth box by
//! IoU 0.2 or more. Optionally, windows the first model wrongly accepts are
//! added as extra negatives and the model is trained again.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adaptive::ReferenceAnchor;
use crate::background::BackgroundModel;
use crate::classify::{self, Label, LabeledSample, LinearModel, TrainMeta};
use crate::detect::{self, DetectMode, Pipeline, Resample};
use crate::error::{Error, Result};
use crate::hog::{self, HogParams};
use crate::imaging::{iou, BoundingBox, FrameSequence, GrayImage};

pub const NEGATIVES_PER_POSITIVE: usize = 5;
pub const NEGATIVE_MAX_IOU: f64 = 0.2;
/// Mined negatives per frame are capped to keep the second pass balanced.
pub const MINED_PER_FRAME: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hog: HogParams,
    pub meta: TrainMeta,
    pub scales: Vec<f64>,
    pub negatives_per_positive: usize,
    pub hard_negatives: bool,
    /// Settings used to build fused views and to mine hard negatives.
    pub detect: DetectMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hog: HogParams::default(),
            meta: TrainMeta::default(),
            scales: detect::DEFAULT_SCALES.to_vec(),
            negatives_per_positive: NEGATIVES_PER_POSITIVE,
            hard_negatives: false,
            detect: DetectMode::new(Pipeline::HogOnly),
        }
    }
}

/// The ladder window, centred on `truth`, with the highest IoU against it,
/// shifted to lie inside the image. `None` if no ladder size fits.
pub fn positive_window(
    truth: &BoundingBox,
    img_w: usize,
    img_h: usize,
    hog: &HogParams,
    scales: &[f64],
) -> Option<BoundingBox> {
    let (cx, cy) = truth.center();
    let mut best: Option<(f64, BoundingBox)> = None;
    for &s in scales {
        let w = (hog.window_w as f64 * s).round() as usize;
        let h = (hog.window_h as f64 * s).round() as usize;
        if w == 0 || h == 0 || w > img_w || h > img_h {
            continue;
        }
        let x = ((cx - w as f64 / 2.0).round() as i64).clamp(0, (img_w - w) as i64);
        let y = ((cy - h as f64 / 2.0).round() as i64).clamp(0, (img_h - h) as i64);
        let b = BoundingBox::new(x as i32, y as i32, w as u32, h as u32);
        let score = iou(&b, truth);
        if best.is_none_or(|(s0, _)| score > s0) {
            best = Some((score, b));
        }
    }
    best.map(|(_, b)| b)
}

/// `count` random ladder windows with IoU below the negative threshold
/// against every truth box. Gives up quietly after a bounded number of draws.
pub fn negative_windows(
    rng: &mut impl Rng,
    truths: &[BoundingBox],
    img_w: usize,
    img_h: usize,
    hog: &HogParams,
    scales: &[f64],
    count: usize,
) -> Vec<BoundingBox> {
    let sizes: Vec<(usize, usize)> = scales
        .iter()
        .map(|&s| {
            (
                (hog.window_w as f64 * s).round() as usize,
                (hog.window_h as f64 * s).round() as usize,
            )
        })
        .filter(|&(w, h)| w > 0 && h > 0 && w <= img_w && h <= img_h)
        .collect();
    let mut out = Vec::with_capacity(count);
    if sizes.is_empty() {
        return out;
    }
    for _ in 0..count * 50 {
        if out.len() == count {
            break;
        }
        let (w, h) = sizes[rng.random_range(0..sizes.len())];
        let x = rng.random_range(0..=img_w - w);
        let y = rng.random_range(0..=img_h - h);
        let b = BoundingBox::new(x as i32, y as i32, w as u32, h as u32);
        if truths.iter().all(|t| iou(&b, t) < NEGATIVE_MAX_IOU) {
            out.push(b);
        }
    }
    out
}

/// An image the detector will score, with its truth boxes.
#[derive(Debug, Clone)]
pub struct TrainingView {
    pub image: GrayImage,
    pub truths: Vec<BoundingBox>,
}

/// Raw frames, plus the fused image of every frame when a background is
/// given. With an anchor the background is re-registered per frame.
pub fn training_views(
    seq: &FrameSequence,
    truths: &[Vec<BoundingBox>],
    bg: Option<&BackgroundModel>,
    anchor: Option<&ReferenceAnchor>,
    mode: &DetectMode,
) -> Result<Vec<TrainingView>> {
    if truths.len() != seq.len() {
        return Err(Error::InvalidParameter(format!(
            "{} frames but truth for {}",
            seq.len(),
            truths.len()
        )));
    }
    let mut views = Vec::new();
    for (frame, t) in seq.frames().iter().zip(truths) {
        views.push(TrainingView {
            image: frame.clone(),
            truths: t.clone(),
        });
    }
    if let Some(bg) = bg {
        let pipeline = if anchor.is_some() {
            Pipeline::HogAbsDynamic
        } else {
            Pipeline::HogBsStatic
        };
        let fused_mode = DetectMode {
            pipeline,
            ..mode.clone()
        };
        for ((frame, t), id) in seq.frames().iter().zip(truths).zip(seq.ids()) {
            let p = detect::prepare(frame, &fused_mode, Some(bg), anchor).map_err(|e| e.in_frame(id.clone()))?;
            views.push(TrainingView {
                image: p.image,
                truths: t.clone(),
            });
        }
    }
    Ok(views)
}

fn sample(
    img: &GrayImage,
    b: BoundingBox,
    cfg: &TrainConfig,
    resample: Resample,
    label: Label,
) -> Result<LabeledSample> {
    let win = detect::extract_window(img, b, &cfg.hog, resample)?;
    Ok(LabeledSample {
        descriptor: hog::hog_features(&win, &cfg.hog)?,
        label,
    })
}

/// The centred window and its copies shifted by half a detector stride in
/// each direction, clamped into the image, without duplicates. The shifts
/// cover the misalignment between a person and the nearest grid window.
pub fn positive_windows(
    truth: &BoundingBox,
    img_w: usize,
    img_h: usize,
    hog: &HogParams,
    scales: &[f64],
    stride: usize,
) -> Vec<BoundingBox> {
    let Some(c) = positive_window(truth, img_w, img_h, hog, scales) else {
        return Vec::new();
    };
    let j = (stride / 2) as i32;
    let mut out = Vec::with_capacity(9);
    for dy in [0, -j, j] {
        for dx in [0, -j, j] {
            let x = (c.x + dx).clamp(0, img_w as i32 - c.w as i32);
            let y = (c.y + dy).clamp(0, img_h as i32 - c.h as i32);
            let b = BoundingBox::new(x, y, c.w, c.h);
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }
    out
}

/// Positive and random negative samples from every view.
pub fn collect_samples(views: &[TrainingView], cfg: &TrainConfig) -> Result<Vec<LabeledSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.meta.seed);
    let mut samples = Vec::new();
    for view in views {
        let (w, h) = view.image.dims();
        let mut positives = 0;
        for t in &view.truths {
            for b in positive_windows(t, w, h, &cfg.hog, &cfg.scales, cfg.detect.stride) {
                samples.push(sample(&view.image, b, cfg, cfg.detect.resample, Label::Positive)?);
                positives += 1;
            }
        }
        let count = cfg.negatives_per_positive * positives.max(1);
        for b in negative_windows(&mut rng, &view.truths, w, h, &cfg.hog, &cfg.scales, count) {
            samples.push(sample(&view.image, b, cfg, cfg.detect.resample, Label::Negative)?);
        }
    }
    Ok(samples)
}

/// Highest-scoring windows at or above zero that overlap no truth box.
fn mine(view: &TrainingView, model: &LinearModel, cfg: &TrainConfig) -> Result<Vec<BoundingBox>> {
    let (w, h) = view.image.dims();
    let windows = detect::all_windows(w, h, &cfg.hog, cfg.detect.stride, &cfg.scales);
    let mut hits = Vec::new();
    for b in windows {
        if view.truths.iter().any(|t| iou(&b, t) >= NEGATIVE_MAX_IOU) {
            continue;
        }
        let s = detect::score_window(&view.image, b, model, cfg.detect.resample)?;
        if s >= 0.0 {
            hits.push(detect::Detection { bbox: b, score: s });
        }
    }
    let kept = detect::nms(&hits, cfg.detect.nms_iou);
    Ok(kept.into_iter().take(MINED_PER_FRAME).map(|d| d.bbox).collect())
}

/// Train on the views, with an optional hard-negative second pass.
pub fn train_on_views(views: &[TrainingView], cfg: &TrainConfig) -> Result<LinearModel> {
    let mut samples = collect_samples(views, cfg)?;
    if !samples.iter().any(|s| s.label == Label::Positive) {
        return Err(Error::Training("no truth box yields a positive window".into()));
    }
    let model = classify::train(&samples, cfg.hog, &cfg.meta)?;
    if !cfg.hard_negatives {
        return Ok(model);
    }
    for view in views {
        for b in mine(view, &model, cfg)? {
            samples.push(sample(&view.image, b, cfg, cfg.detect.resample, Label::Negative)?);
        }
    }
    classify::train(&samples, cfg.hog, &cfg.meta)
}
