//! Background adaptation for a panning camera.
//!
//! A static, high-contrast landmark (the *object*) is cropped from the initial
//! frame together with a search *region* centred on it. In every later frame
//! the object is re-located by an exhaustive sum-of-squared-differences scan of
//! the region; its displacement is the camera motion, and the initial
//! background is translated by that displacement before subtraction.
//!
//! Camera rotation is modelled as pure integer image translation. Registration
//! is absolute: each frame is compared with the initial state only, so errors
//! do not accumulate along the sequence.

use std::fmt;
use std::ops::Neg;
use std::path::Path;

use crate::background::BackgroundModel;
use crate::error::{Error, Result};
use crate::imaging::{BitMask, BoundingBox, GrayImage};

/// Landmark template plus the region it is searched in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceAnchor {
    region: BoundingBox,
    template: GrayImage,
    object_pos: (i32, i32),
    frame_dims: (usize, usize),
}

impl ReferenceAnchor {
    /// Selected region, in frame coordinates.
    pub fn region(&self) -> BoundingBox {
        self.region
    }

    pub fn template(&self) -> &GrayImage {
        &self.template
    }

    /// Object top-left relative to the region origin in the initial frame.
    pub fn object_pos(&self) -> (i32, i32) {
        self.object_pos
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        self.frame_dims
    }

    /// Object box in frame coordinates in the initial frame.
    pub fn object_box(&self) -> BoundingBox {
        BoundingBox::new(
            self.region.x + self.object_pos.0,
            self.region.y + self.object_pos.1,
            self.template.width() as u32,
            self.template.height() as u32,
        )
    }

    pub fn spec(&self) -> AnchorSpec {
        AnchorSpec {
            region: self.region,
            object: self.object_box(),
        }
    }

    /// Largest displacement per axis the region can still observe.
    pub fn reach(&self) -> (i32, i32) {
        let (ox, oy) = self.object_pos;
        let max_x = self.region.w as i32 - self.template.width() as i32;
        let max_y = self.region.h as i32 - self.template.height() as i32;
        (ox.min(max_x - ox), oy.min(max_y - oy))
    }
}

/// Build an anchor from the initial frame.
///
/// The object must be strictly smaller than the region and centred in it to
/// within one pixel per axis.
pub fn init_anchor(initial: &GrayImage, region: BoundingBox, object: BoundingBox) -> Result<ReferenceAnchor> {
    let (w, h) = initial.dims();
    if !region.is_inside(w, h) {
        return Err(Error::OutOfBounds {
            bbox: region,
            width: w,
            height: h,
        });
    }
    if object.w >= region.w || object.h >= region.h {
        return Err(Error::InvalidParameter(format!(
            "object {object} must be strictly smaller than region {region}"
        )));
    }
    let off_x = object.x as i64 - region.x as i64;
    let off_y = object.y as i64 - region.y as i64;
    let want_x = (region.w - object.w) as i64 / 2;
    let want_y = (region.h - object.h) as i64 / 2;
    if (off_x - want_x).abs() > 1 || (off_y - want_y).abs() > 1 {
        return Err(Error::NotCentered {
            region,
            object,
            offset: (off_x - want_x, off_y - want_y),
        });
    }
    if !region.contains(&object, false) {
        return Err(Error::OutOfBounds {
            bbox: object,
            width: w,
            height: h,
        });
    }
    Ok(ReferenceAnchor {
        region,
        template: initial.crop(object)?,
        object_pos: (off_x as i32, off_y as i32),
        frame_dims: (w, h),
    })
}

/// Best placement of the template inside the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    /// Top-left relative to the region origin.
    pub found_pos: (i32, i32),
    /// Sum of squared intensity differences at `found_pos`.
    pub min_error: f64,
}

/// SSD of the template at every placement inside `region`, row-major.
/// Returns `(cols, rows, errors)`.
pub fn ssd_map(frame: &GrayImage, region: BoundingBox, template: &GrayImage) -> Result<(usize, usize, Vec<u64>)> {
    if !region.is_inside(frame.width(), frame.height()) {
        return Err(Error::OutOfBounds {
            bbox: region,
            width: frame.width(),
            height: frame.height(),
        });
    }
    let (tw, th) = template.dims();
    if tw > region.w as usize || th > region.h as usize {
        return Err(Error::InvalidParameter("template larger than region".into()));
    }
    let cols = region.w as usize - tw + 1;
    let rows = region.h as usize - th + 1;
    let mut out = Vec::with_capacity(cols * rows);
    for py in 0..rows {
        for px in 0..cols {
            let x0 = region.x as usize + px;
            let y0 = region.y as usize + py;
            out.push(placement_error(frame, template, x0, y0, u64::MAX));
        }
    }
    Ok((cols, rows, out))
}

/// SSD at one placement. Stops early once the running sum exceeds `bound`.
#[inline]
fn placement_error(frame: &GrayImage, template: &GrayImage, x0: usize, y0: usize, bound: u64) -> u64 {
    let tw = template.width();
    let mut sum = 0u64;
    for ty in 0..template.height() {
        let f = &frame.row(y0 + ty)[x0..x0 + tw];
        let t = template.row(ty);
        sum += f
            .iter()
            .zip(t)
            .map(|(&a, &b)| {
                let d = a as i32 - b as i32;
                (d * d) as u64
            })
            .sum::<u64>();
        if sum > bound {
            break;
        }
    }
    sum
}

/// Exhaustive stride-1 scan for the object.
///
/// Equal errors are resolved in favour of the smallest displacement from the
/// initial object position, then row-major order.
pub fn locate_object(frame: &GrayImage, anchor: &ReferenceAnchor) -> Result<MatchResult> {
    frame.ensure_dims(anchor.frame_dims)?;
    let region = anchor.region;
    let (tw, th) = anchor.template.dims();
    let cols = region.w as usize - tw + 1;
    let rows = region.h as usize - th + 1;
    let (ox, oy) = anchor.object_pos;

    let mut best: Option<(u64, i64, (i32, i32))> = None;
    for py in 0..rows {
        for px in 0..cols {
            let bound = best.map_or(u64::MAX, |b| b.0);
            let err = placement_error(
                frame,
                &anchor.template,
                region.x as usize + px,
                region.y as usize + py,
                bound,
            );
            let ddx = px as i64 - ox as i64;
            let ddy = py as i64 - oy as i64;
            let disp = ddx * ddx + ddy * ddy;
            let better = match best {
                None => true,
                Some((e, d, _)) => err < e || (err == e && disp < d),
            };
            if better {
                best = Some((err, disp, (px as i32, py as i32)));
            }
        }
    }
    let (err, _, pos) = best.expect("region holds at least one placement");
    Ok(MatchResult {
        found_pos: pos,
        min_error: err as f64,
    })
}

/// Landmark displacement between two observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceVector {
    pub dx: i32,
    pub dy: i32,
    /// Euclidean length in pixels.
    pub magnitude: f64,
    /// Quadrant-correct direction in degrees, (-180, 180]; 0 for the zero vector.
    pub angle_deg: f64,
}

impl DifferenceVector {
    pub fn new(dx: i32, dy: i32) -> Self {
        let (fx, fy) = (dx as f64, dy as f64);
        let angle_deg = if dx == 0 && dy == 0 {
            0.0
        } else {
            fy.atan2(fx).to_degrees()
        };
        Self {
            dx,
            dy,
            magnitude: fx.hypot(fy),
            angle_deg,
        }
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.dx == 0 && self.dy == 0
    }
}

impl Neg for DifferenceVector {
    type Output = DifferenceVector;

    fn neg(self) -> Self::Output {
        DifferenceVector::new(-self.dx, -self.dy)
    }
}

impl fmt::Display for DifferenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}) |{:.3}| @ {:.3} deg",
            self.dx, self.dy, self.magnitude, self.angle_deg
        )
    }
}

/// Displacement from `initial` to `found`.
pub fn difference_vector(initial: (i32, i32), found: (i32, i32)) -> DifferenceVector {
    DifferenceVector::new(found.0 - initial.0, found.1 - initial.1)
}

/// Translate the background by `d`: `out(p) = bg(p - d)`.
///
/// Pixels whose source falls outside the frame become invalid with reference
/// value 0. A shift that leaves nothing valid is reported as an error.
pub fn shift_background(bg: &BackgroundModel, d: DifferenceVector) -> Result<BackgroundModel> {
    let (w, h) = bg.dims();
    let (dx, dy) = (d.dx as i64, d.dy as i64);
    if dx.unsigned_abs() as usize >= w || dy.unsigned_abs() as usize >= h {
        return Err(Error::ShiftOutOfFrame {
            dx,
            dy,
            width: w,
            height: h,
        });
    }
    if d.is_zero() {
        return Ok(bg.clone());
    }
    let src = bg.reference();
    let src_valid = bg.valid();
    let mut reference = GrayImage::filled(w, h, 0);
    let mut valid = BitMask::new(w, h, false);
    for y in 0..h {
        let sy = y as i64 - dy;
        if !(0..h as i64).contains(&sy) {
            continue;
        }
        for x in 0..w {
            let sx = x as i64 - dx;
            if !(0..w as i64).contains(&sx) {
                continue;
            }
            let (sx, sy) = (sx as usize, sy as usize);
            if src_valid.get(sx, sy) {
                reference.set(x, y, src.get(sx, sy));
                valid.set(x, y, true);
            }
        }
    }
    BackgroundModel::with_mask(reference, valid)
}

/// Anchor-lost threshold: mean squared error of twice the foreground threshold.
pub fn default_max_error(template_pixels: usize, tau: u8) -> f64 {
    4.0 * template_pixels as f64 * (tau as f64).powi(2)
}

/// Locate the landmark, derive the camera shift, and translate the *initial*
/// background accordingly.
pub fn adapt_background(
    frame: &GrayImage,
    anchor: &ReferenceAnchor,
    initial_bg: &BackgroundModel,
    max_error: f64,
) -> Result<(BackgroundModel, DifferenceVector)> {
    initial_bg.reference().ensure_dims(anchor.frame_dims)?;
    let m = locate_object(frame, anchor)?;
    if m.min_error > max_error {
        return Err(Error::AnchorLost {
            best_error: m.min_error,
            max_error,
        });
    }
    let d = difference_vector(anchor.object_pos, m.found_pos);
    Ok((shift_background(initial_bg, d)?, d))
}

/// On-disk anchor description: `region=x,y,w,h` and `object=x,y,w,h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnchorSpec {
    pub region: BoundingBox,
    pub object: BoundingBox,
}

impl AnchorSpec {
    pub fn to_text(&self) -> String {
        format!("# thermoscan anchor\nregion={}\nobject={}\n", self.region, self.object)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut region = None;
        let mut object = None;
        for (i, line) in text.lines().enumerate() {
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let bbox: BoundingBox = v.trim().parse().map_err(|e: Error| err(e.to_string()))?;
            match k.trim() {
                "region" => region = Some(bbox),
                "object" => object = Some(bbox),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("missing {what}"),
        };
        Ok(Self {
            region: region.ok_or_else(|| missing("region"))?,
            object: object.ok_or_else(|| missing("object"))?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_text().as_bytes())
    }

    /// Build the anchor against the given initial frame.
    pub fn anchor(&self, initial: &GrayImage) -> Result<ReferenceAnchor> {
        init_anchor(initial, self.region, self.object)
    }
}
