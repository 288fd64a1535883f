//! Synthetic panning-camera thermal scenes with exact ground truth.
//!
//! A wide panorama of smooth value noise carries one bright rectangular
//! landmark. Each frame is a viewport crop at a scheduled offset, with warm
//! elliptical "humans" added on top and optional Gaussian sensor noise. Since
//! the crop offsets are known, the landmark displacement, the foreground
//! support and the human boxes are all known exactly.
//!
//! Humans are ellipses rather than real silhouettes, so a detector trained on
//! these scenes checks the pipeline's internal consistency, not transfer to
//! real pedestrians.

use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::adaptive::{self, AnchorSpec};
use crate::error::{Error, Result};
use crate::imaging::sequence::frame_id;
use crate::imaging::{pgm, BoundingBox, FrameSequence, GrayImage};
use crate::records;

/// Per-frame viewport offsets relative to frame 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PanSpec {
    /// Per-frame `(dx, dy)` steps, cycled when the sequence is longer.
    Deltas(Vec<(i32, i32)>),
    /// Straight pan reaching `(x, y)` at frame `frames - 1`, then holding.
    Linear { x: i32, y: i32, frames: usize },
}

impl PanSpec {
    pub fn still() -> Self {
        PanSpec::Deltas(vec![(0, 0)])
    }

    /// Offsets for `n` frames; the first is always `(0, 0)`.
    pub fn offsets(&self, n: usize) -> Vec<(i32, i32)> {
        let mut out = Vec::with_capacity(n);
        match self {
            PanSpec::Deltas(d) => {
                let mut cur = (0, 0);
                for i in 0..n {
                    if i > 0 && !d.is_empty() {
                        let (dx, dy) = d[(i - 1) % d.len()];
                        cur = (cur.0 + dx, cur.1 + dy);
                    }
                    out.push(cur);
                }
            }
            PanSpec::Linear { x, y, frames } => {
                let last = frames.saturating_sub(1).max(1) as f64;
                for i in 0..n {
                    let f = (i as f64 / last).min(1.0);
                    out.push(((*x as f64 * f).round() as i32, (*y as f64 * f).round() as i32));
                }
            }
        }
        out
    }
}

impl FromStr for PanSpec {
    type Err = Error;

    /// `dx:dy,dx:dy,...` or `lin:X,Y,K`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad pan spec {s:?}"));
        if let Some(rest) = s.strip_prefix("lin:") {
            let p: Vec<&str> = rest.split(',').map(str::trim).collect();
            if p.len() != 3 {
                return Err(bad());
            }
            let frames: usize = p[2].parse().map_err(|_| bad())?;
            if frames == 0 {
                return Err(bad());
            }
            return Ok(PanSpec::Linear {
                x: p[0].parse().map_err(|_| bad())?,
                y: p[1].parse().map_err(|_| bad())?,
                frames,
            });
        }
        let deltas = s
            .split(',')
            .map(|item| {
                let (a, b) = item.trim().split_once(':').ok_or_else(bad)?;
                Ok((
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PanSpec::Deltas(deltas))
    }
}

/// Knobs for [`generate_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub viewport_w: usize,
    pub viewport_h: usize,
    pub frames: usize,
    pub pan: PanSpec,
    pub humans_per_frame: usize,
    /// Static human-sized warm objects, fully in view in every frame.
    pub decoys: usize,
    /// Keep people inside the part of each view that frame 0 also shows,
    /// where a registered reference background exists.
    pub humans_in_reference: bool,
    /// Semi-axis ranges (inclusive) in pixels.
    pub human_axis_x: (u32, u32),
    pub human_axis_y: (u32, u32),
    /// Peak added intensity range (inclusive).
    pub human_peak: (u8, u8),
    pub noise_sigma: f64,
    pub landmark_w: u32,
    pub landmark_h: u32,
    /// Minimum search margin around the landmark; grown to cover the pan.
    pub region_margin: u32,
    /// Value-noise intensity range.
    pub background_range: (u8, u8),
    /// Value-noise lattice spacing in pixels.
    pub wavelength: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            viewport_w: 352,
            viewport_h: 256,
            frames: 50,
            pan: PanSpec::Linear {
                x: 45,
                y: 10,
                frames: 50,
            },
            humans_per_frame: 1,
            decoys: 2,
            humans_in_reference: true,
            human_axis_x: (27, 30),
            human_axis_y: (55, 60),
            human_peak: (60, 90),
            noise_sigma: 2.0,
            landmark_w: 20,
            landmark_h: 20,
            region_margin: 16,
            background_range: (60, 140),
            wavelength: 48,
        }
    }
}

/// Landmark contrast over the brightest background pixel it covers.
const LANDMARK_CONTRAST: i32 = 90;
/// Required ratio of second-best to best anchor match error on frame 0.
const UNIQUENESS_RATIO: f64 = 10.0;

/// Warm Gaussian-profile ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub cx: i32,
    pub cy: i32,
    pub ax: u32,
    pub ay: u32,
    pub peak: u8,
}

impl Blob {
    /// Tight box of the ellipse support.
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::new(
            self.cx - self.ax as i32,
            self.cy - self.ay as i32,
            2 * self.ax + 1,
            2 * self.ay + 1,
        )
    }

    /// Added intensity at `(x, y)`: `peak * 2^(-r^2)` inside the unit ellipse,
    /// so the rim still adds half the peak.
    pub fn added(&self, x: i32, y: i32) -> u8 {
        let dx = (x - self.cx) as f64 / self.ax as f64;
        let dy = (y - self.cy) as f64 / self.ay as f64;
        let r2 = dx * dx + dy * dy;
        if r2 > 1.0 {
            0
        } else {
            (self.peak as f64 * (-r2).exp2()).round() as u8
        }
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Blob {
        Blob {
            cx: self.cx + dx,
            cy: self.cy + dy,
            ..*self
        }
    }

    /// Add the blob onto `img`, clipped to its bounds.
    fn paint(&self, img: &mut GrayImage) {
        let (w, h) = img.dims();
        let b = self.bbox();
        for y in b.y.max(0)..(b.bottom() as i32).min(h as i32) {
            for x in b.x.max(0)..(b.right() as i32).min(w as i32) {
                let add = self.added(x, y);
                if add > 0 {
                    let (ux, uy) = (x as usize, y as usize);
                    img.set(ux, uy, img.get(ux, uy).saturating_add(add));
                }
            }
        }
    }
}

/// A person present in one frame, in viewport coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Human {
    pub frame: usize,
    pub blob: Blob,
}

impl Human {
    pub fn bbox(&self) -> BoundingBox {
        self.blob.bbox()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanoramaScene {
    pub panorama: GrayImage,
    pub viewport: (usize, usize),
    /// Absolute panorama offset of every frame's viewport.
    pub pan_schedule: Vec<(i32, i32)>,
    pub humans: Vec<Human>,
    /// Static warm objects of human size, painted into the panorama
    /// (panorama coordinates). They belong to the background.
    pub decoys: Vec<Blob>,
    /// Landmark box in panorama coordinates.
    pub anchor_object: BoundingBox,
    /// Search region in viewport coordinates, centred on the landmark in frame 0.
    pub anchor_region: BoundingBox,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Frames, per-frame truth boxes and per-frame true shifts.
pub type RenderedSequence = (FrameSequence, Vec<Vec<BoundingBox>>, Vec<(i32, i32)>);

/// A rendered frame and its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub frame: GrayImage,
    pub truth: Vec<BoundingBox>,
    /// Landmark displacement in image coordinates relative to frame 0.
    pub true_shift: (i32, i32),
}

impl PanoramaScene {
    pub fn len(&self) -> usize {
        self.pan_schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pan_schedule.is_empty()
    }

    /// Landmark box in viewport coordinates of frame 0.
    pub fn anchor_object_in_view(&self) -> BoundingBox {
        let (ox, oy) = self.pan_schedule[0];
        self.anchor_object.translate(-ox, -oy)
    }

    pub fn anchor_spec(&self) -> AnchorSpec {
        AnchorSpec {
            region: self.anchor_region,
            object: self.anchor_object_in_view(),
        }
    }

    pub fn true_shift(&self, t: usize) -> Result<(i32, i32)> {
        let (o0, ot) = (self.pan_schedule[0], self.offset(t)?);
        Ok((o0.0 - ot.0, o0.1 - ot.1))
    }

    fn offset(&self, t: usize) -> Result<(i32, i32)> {
        self.pan_schedule.get(t).copied().ok_or(Error::FrameIndex {
            index: t,
            len: self.len(),
        })
    }

    /// Noiseless, human-free viewport crop at frame `t`.
    pub fn render_clean(&self, t: usize) -> Result<GrayImage> {
        let (ox, oy) = self.offset(t)?;
        let (w, h) = self.viewport;
        self.panorama.crop(BoundingBox::new(ox, oy, w as u32, h as u32))
    }

    /// The clean plate used as the reference background.
    pub fn background(&self) -> GrayImage {
        self.render_clean(0).expect("schedule is non-empty")
    }

    pub fn render_frame(&self, t: usize) -> Result<RenderedFrame> {
        let mut frame = self.render_clean(t)?;
        let (w, h) = self.viewport;
        let mut truth = Vec::new();
        for hm in self.humans.iter().filter(|hm| hm.frame == t) {
            hm.blob.paint(&mut frame);
            let b = hm.bbox();
            truth.push(b);
        }
        if self.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, self.noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(t as u64 + 1);
            for y in 0..h {
                for x in 0..w {
                    let v = frame.get(x, y) as f64 + normal.sample(&mut rng);
                    frame.set(x, y, v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Ok(RenderedFrame {
            frame,
            truth,
            true_shift: self.true_shift(t)?,
        })
    }

    /// Render every frame.
    pub fn render_all(&self) -> Result<RenderedSequence> {
        let mut frames = Vec::with_capacity(self.len());
        let mut truths = Vec::with_capacity(self.len());
        let mut shifts = Vec::with_capacity(self.len());
        for t in 0..self.len() {
            let r = self.render_frame(t)?;
            frames.push(r.frame);
            truths.push(r.truth);
            shifts.push(r.true_shift);
        }
        Ok((FrameSequence::from_frames(frames)?, truths, shifts))
    }

    /// Write `frame_NNNN.pgm`, `truth.csv`, `shifts.csv`, `anchor.txt` and
    /// `background.pgm` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        let (seq, truths, shifts) = self.render_all()?;
        seq.save_dir(dir)?;
        let ids: Vec<String> = (0..self.len()).map(frame_id).collect();
        records::write_truth(dir.join("truth.csv"), &ids, &truths)?;
        records::write_shifts(dir.join("shifts.csv"), &ids, &shifts)?;
        self.anchor_spec().save(dir.join("anchor.txt"))?;
        pgm::save(dir.join("background.pgm"), &self.background())
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Smooth value noise: random lattice values, smoothstep-interpolated.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, spacing: usize, lo: f64, hi: f64) -> Vec<f64> {
    let gw = w / spacing + 2;
    let gh = h / spacing + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(lo..=hi)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let gy = y / spacing;
        let fy = smoothstep((y % spacing) as f64 / spacing as f64);
        for x in 0..w {
            let gx = x / spacing;
            let fx = smoothstep((x % spacing) as f64 / spacing as f64);
            let l = |i: usize, j: usize| lattice[j * gw + i];
            let top = l(gx, gy) * (1.0 - fx) + l(gx + 1, gy) * fx;
            let bot = l(gx, gy + 1) * (1.0 - fx) + l(gx + 1, gy + 1) * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::InfeasibleScene(msg.into())
}

/// Build a scene. Identical `(seed, params)` give identical scenes.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<PanoramaScene> {
    let p = params;
    if p.frames == 0 {
        return Err(infeasible("zero frames"));
    }
    if p.wavelength < 32 {
        return Err(infeasible(format!("wavelength {} below 32 px", p.wavelength)));
    }
    let (bg_lo, bg_hi) = p.background_range;
    if bg_lo > bg_hi || bg_hi as i32 + LANDMARK_CONTRAST > 255 {
        return Err(infeasible("background range leaves no room for the landmark"));
    }
    if p.human_peak.0 < 60 || p.human_peak.0 > p.human_peak.1 {
        return Err(infeasible("human peak must be at least 60"));
    }
    if p.human_axis_x.0 == 0
        || p.human_axis_y.0 == 0
        || p.human_axis_x.0 > p.human_axis_x.1
        || p.human_axis_y.0 > p.human_axis_y.1
    {
        return Err(infeasible("bad human axis ranges"));
    }
    if p.landmark_w == 0 || p.landmark_h == 0 || p.noise_sigma.is_nan() || p.noise_sigma < 0.0 {
        return Err(infeasible("bad landmark size or noise"));
    }
    let (vw, vh) = (p.viewport_w, p.viewport_h);
    let rel = p.pan.offsets(p.frames);

    let min_x = rel.iter().map(|o| o.0).min().unwrap();
    let max_x = rel.iter().map(|o| o.0).max().unwrap();
    let min_y = rel.iter().map(|o| o.1).min().unwrap();
    let max_y = rel.iter().map(|o| o.1).max().unwrap();
    let span_x = (max_x - min_x) as usize;
    let span_y = (max_y - min_y) as usize;
    let pano_w = (2 * vw).max(vw + span_x);
    let pano_h = vh + span_y;
    let origin = (-min_x + ((pano_w - vw - span_x) / 2) as i32, -min_y);
    let schedule: Vec<(i32, i32)> = rel.iter().map(|r| (origin.0 + r.0, origin.1 + r.1)).collect();

    // landmark must stay inside its search region for the whole schedule
    let reach_x = rel.iter().map(|r| r.0.unsigned_abs()).max().unwrap();
    let reach_y = rel.iter().map(|r| r.1.unsigned_abs()).max().unwrap();
    let mx = p.region_margin.max(reach_x);
    let my = p.region_margin.max(reach_y);
    let region_w = p.landmark_w + 2 * mx;
    let region_h = p.landmark_h + 2 * my;
    if region_w as usize > vw || region_h as usize > vh {
        return Err(infeasible(format!(
            "search region {region_w}x{region_h} does not fit the {vw}x{vh} viewport"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = value_noise(&mut rng, pano_w, pano_h, p.wavelength * 2, bg_lo as f64, bg_hi as f64);
    let fine = value_noise(&mut rng, pano_w, pano_h, p.wavelength, bg_lo as f64, bg_hi as f64);
    let pixels: Vec<u8> = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (0.5 * (a + b)).round().clamp(bg_lo as f64, bg_hi as f64) as u8)
        .collect();
    let mut panorama = GrayImage::new(pano_w, pano_h, pixels)?;

    // region hugs the top-left corner, leaving the rest of the view for humans
    let slack_x = (vw as u32 - region_w).min(8);
    let slack_y = (vh as u32 - region_h).min(8);
    let region = BoundingBox::new(
        rng.random_range(0..=slack_x) as i32,
        rng.random_range(0..=slack_y) as i32,
        region_w,
        region_h,
    );
    let object_view = BoundingBox::new(region.x + mx as i32, region.y + my as i32, p.landmark_w, p.landmark_h);
    let anchor_object = object_view.translate(schedule[0].0, schedule[0].1);
    let lm_px = panorama.crop(anchor_object)?;
    let level = lm_px.as_raw().iter().max().copied().unwrap() as i32 + LANDMARK_CONTRAST;
    for y in anchor_object.y as usize..anchor_object.bottom() as usize {
        for x in anchor_object.x as usize..anchor_object.right() as usize {
            panorama.set(x, y, level as u8);
        }
    }
    for &(ox, oy) in &schedule {
        let view = anchor_object.translate(-ox, -oy);
        if !view.is_inside(vw, vh) {
            return Err(infeasible(format!("landmark leaves the view at offset ({ox}, {oy})")));
        }
    }

    let keep_out = BoundingBox::new(region.x - 2, region.y - 2, region.w + 4, region.h + 4);
    // decoys live in panorama space but are placed in frame-0 view coordinates
    let mut decoys_view: Vec<Blob> = Vec::new();
    for _ in 0..p.decoys {
        let fits = |b: &Blob| {
            let bb = b.bbox();
            bb.intersection_area(&keep_out) == 0
                && decoys_view.iter().all(|o| o.bbox().intersection_area(&bb) == 0)
                && rel.iter().all(|r| bb.translate(-r.0, -r.1).is_inside(vw, vh))
        };
        let d = place(&mut rng, p, vw, vh, fits).ok_or_else(|| infeasible("no room for the decoys"))?;
        decoys_view.push(d);
    }
    let decoys: Vec<Blob> = decoys_view
        .iter()
        .map(|d| d.translate(schedule[0].0, schedule[0].1))
        .collect();
    for d in &decoys {
        d.paint(&mut panorama);
    }

    let mut humans = Vec::new();
    for (t, r) in rel.iter().enumerate() {
        let mut placed: Vec<BoundingBox> = decoys_view.iter().map(|d| d.bbox().translate(-r.0, -r.1)).collect();
        placed.push(keep_out.translate(-r.0, -r.1));
        placed.push(keep_out);
        for _ in 0..p.humans_per_frame {
            let blob = place(&mut rng, p, vw, vh, |b| {
                let bb = b.bbox();
                placed.iter().all(|o| o.intersection_area(&bb) == 0)
                    && (!p.humans_in_reference || bb.translate(r.0, r.1).is_inside(vw, vh))
            })
            .ok_or_else(|| infeasible(format!("no room for a human in frame {t}")))?;
            placed.push(blob.bbox());
            humans.push(Human { frame: t, blob });
        }
    }

    let scene = PanoramaScene {
        panorama,
        viewport: (vw, vh),
        pan_schedule: schedule,
        humans,
        decoys,
        anchor_object,
        anchor_region: region,
        noise_sigma: p.noise_sigma,
        seed,
    };
    check_landmark_unique(&scene)?;
    Ok(scene)
}

/// Random human-sized blob fully inside the view and accepted by `fits`.
fn place(rng: &mut ChaCha8Rng, p: &SceneParams, vw: usize, vh: usize, fits: impl Fn(&Blob) -> bool) -> Option<Blob> {
    for _ in 0..1000 {
        let ax = rng.random_range(p.human_axis_x.0..=p.human_axis_x.1);
        let ay = rng.random_range(p.human_axis_y.0..=p.human_axis_y.1);
        if 2 * ax as usize + 1 > vw || 2 * ay as usize + 1 > vh {
            return None;
        }
        let b = Blob {
            cx: rng.random_range(ax as i32..=(vw as i32 - 1 - ax as i32)),
            cy: rng.random_range(ay as i32..=(vh as i32 - 1 - ay as i32)),
            ax,
            ay,
            peak: rng.random_range(p.human_peak.0..=p.human_peak.1),
        };
        if fits(&b) {
            return Some(b);
        }
    }
    None
}

/// The landmark must be the clear SSD minimum of its region on frame 0.
fn check_landmark_unique(scene: &PanoramaScene) -> Result<()> {
    let clean = scene.background();
    let object = scene.anchor_object_in_view();
    let template = clean.crop(object)?;
    let frame = scene.render_frame(0)?.frame;
    let (cols, _, errs) = adaptive::ssd_map(&frame, scene.anchor_region, &template)?;
    let at = ((object.y - scene.anchor_region.y) as usize) * cols + (object.x - scene.anchor_region.x) as usize;
    let best = errs[at];
    let second = errs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != at)
        .map(|(_, &e)| e)
        .min()
        .unwrap_or(u64::MAX);
    if second as f64 <= UNIQUENESS_RATIO * best.max(1) as f64 {
        return Err(infeasible(format!(
            "landmark match not unique: best {best}, second {second}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SceneParams {
        SceneParams {
            frames: 6,
            pan: "3:-1,2:0".parse().unwrap(),
            noise_sigma: 0.0,
            ..SceneParams::default()
        }
    }

    #[test]
    fn pan_spec_parsing() {
        assert_eq!(
            "lin:10,-4,5".parse::<PanSpec>().unwrap(),
            PanSpec::Linear {
                x: 10,
                y: -4,
                frames: 5
            }
        );
        let lin = PanSpec::Linear {
            x: 10,
            y: -4,
            frames: 5,
        };
        assert_eq!(
            lin.offsets(6),
            vec![(0, 0), (3, -1), (5, -2), (8, -3), (10, -4), (10, -4)]
        );
        let d: PanSpec = "1:0, 0:2".parse().unwrap();
        assert_eq!(d.offsets(4), vec![(0, 0), (1, 0), (1, 2), (2, 2)]);
        assert!("lin:1,2".parse::<PanSpec>().is_err());
        assert!("1-2".parse::<PanSpec>().is_err());
    }

    #[test]
    fn same_seed_same_scene() {
        let a = generate_scene(9, &small()).unwrap();
        let b = generate_scene(9, &small()).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(10, &small()).unwrap();
        assert_ne!(a.panorama, c.panorama);
    }

    #[test]
    fn scene_invariants() {
        let s = generate_scene(3, &small()).unwrap();
        assert!(s.panorama.width() >= 2 * s.viewport.0);
        for &(ox, oy) in &s.pan_schedule {
            let view = BoundingBox::new(ox, oy, s.viewport.0 as u32, s.viewport.1 as u32);
            assert!(view.is_inside(s.panorama.width(), s.panorama.height()));
            assert!(view.contains(&s.anchor_object, false));
        }
        assert!(s.anchor_region.contains(&s.anchor_object_in_view(), true));
    }

    #[test]
    fn noiseless_humanless_frames_are_crops() {
        let params = SceneParams {
            humans_per_frame: 0,
            ..small()
        };
        let s = generate_scene(4, &params).unwrap();
        for t in 0..s.len() {
            let r = s.render_frame(t).unwrap();
            let (ox, oy) = s.pan_schedule[t];
            let crop = s
                .panorama
                .crop(BoundingBox::new(ox, oy, s.viewport.0 as u32, s.viewport.1 as u32))
                .unwrap();
            assert_eq!(r.frame, crop);
            assert!(r.truth.is_empty());
        }
    }

    #[test]
    fn shift_sign_convention() {
        let params = SceneParams {
            frames: 2,
            pan: "5:0".parse().unwrap(),
            humans_per_frame: 0,
            noise_sigma: 0.0,
            ..SceneParams::default()
        };
        let s = generate_scene(1, &params).unwrap();
        assert_eq!(s.render_frame(0).unwrap().true_shift, (0, 0));
        let r = s.render_frame(1).unwrap();
        assert_eq!(r.true_shift, (-5, 0));
        assert_eq!(r.frame, s.render_clean(1).unwrap());
        assert!(matches!(s.render_frame(2), Err(Error::FrameIndex { .. })));
    }

    #[test]
    fn human_support_and_boxes() {
        let s = generate_scene(5, &small()).unwrap();
        for t in 0..s.len() {
            let r = s.render_frame(t).unwrap();
            let clean = s.render_clean(t).unwrap();
            let hs: Vec<&Human> = s.humans.iter().filter(|h| h.frame == t).collect();
            assert_eq!(r.truth.len(), hs.len());
            for h in hs {
                let b = h.bbox();
                assert!(b.is_inside(s.viewport.0, s.viewport.1));
                let h = h.blob;
                // the rim of the ellipse still adds at least half the peak
                assert!(h.added(h.cx + h.ax as i32, h.cy) >= 30);
                assert_eq!(h.added(h.cx + h.ax as i32 + 1, h.cy), 0);
                let top = r.frame.get(h.cx as usize, h.cy as usize) as i32;
                assert_eq!(top - clean.get(h.cx as usize, h.cy as usize) as i32, h.peak as i32);
            }
        }
    }

    #[test]
    fn rejects_infeasible_params() {
        let too_far = SceneParams {
            viewport_w: 120,
            viewport_h: 120,
            humans_per_frame: 0,
            decoys: 0,
            pan: PanSpec::Linear { x: 60, y: 0, frames: 2 },
            frames: 2,
            ..SceneParams::default()
        };
        assert!(matches!(generate_scene(1, &too_far), Err(Error::InfeasibleScene(_))));
        let crowded = SceneParams {
            viewport_w: 100,
            viewport_h: 130,
            frames: 1,
            ..SceneParams::default()
        };
        assert!(generate_scene(1, &crowded).is_err());
    }

    #[test]
    fn decoys_are_background_and_always_visible() {
        let s = generate_scene(8, &small()).unwrap();
        assert_eq!(s.decoys.len(), 2);
        let clean = s.background();
        for d in &s.decoys {
            for &(ox, oy) in &s.pan_schedule {
                assert!(d.bbox().translate(-ox, -oy).is_inside(s.viewport.0, s.viewport.1));
            }
            let v = d.translate(-s.pan_schedule[0].0, -s.pan_schedule[0].1);
            let under = clean.get(v.cx as usize, v.cy as usize);
            assert!(under >= 60 + d.peak, "decoy centre {under}");
            for h in &s.humans {
                let (ox, oy) = s.pan_schedule[h.frame];
                assert_eq!(h.bbox().intersection_area(&d.bbox().translate(-ox, -oy)), 0);
            }
        }
    }

    #[test]
    fn noise_is_deterministic_per_frame() {
        let params = SceneParams {
            noise_sigma: 5.0,
            ..small()
        };
        let s = generate_scene(12, &params).unwrap();
        assert_eq!(s.render_frame(2).unwrap(), s.render_frame(2).unwrap());
        assert_ne!(s.render_frame(2).unwrap().frame, s.render_frame(3).unwrap().frame);
    }
}
