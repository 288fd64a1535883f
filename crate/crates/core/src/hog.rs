//! Histogram of Oriented Gradients.
//!
//! Unsigned orientations over [0, 180) with bin centres at multiples of the
//! bin width; each pixel splits its magnitude between the two nearest bins
//! (wrapping from the last bin to the first) and votes only into its own
//! cell. Blocks are L2-Hys normalized.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const L2HYS_CLIP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogParams {
    pub window_w: usize,
    pub window_h: usize,
    /// Square cell side in pixels.
    pub cell_size: usize,
    /// Cells per block side.
    pub block_size: usize,
    /// Block step in cells.
    pub block_stride: usize,
    pub num_bins: usize,
    pub epsilon: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            window_w: 64,
            window_h: 128,
            cell_size: 8,
            block_size: 2,
            block_stride: 1,
            num_bins: 9,
            epsilon: 1e-5,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.cell_size == 0 || self.block_size == 0 || self.block_stride == 0 || self.num_bins == 0 {
            return bad(format!("HOG sizes must be positive: {self:?}"));
        }
        if self.window_w < 3 || self.window_h < 3 {
            return bad(format!("HOG window {}x{} too small", self.window_w, self.window_h));
        }
        if !self.window_w.is_multiple_of(self.cell_size) || !self.window_h.is_multiple_of(self.cell_size) {
            return bad(format!(
                "window {}x{} is not a multiple of cell size {}",
                self.window_w, self.window_h, self.cell_size
            ));
        }
        if self.block_size * self.cell_size > self.window_w.min(self.window_h) {
            return bad(format!("block of {} cells does not fit the window", self.block_size));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.window_w / self.cell_size, self.window_h / self.cell_size)
    }

    pub fn blocks(&self) -> (usize, usize) {
        let (cx, cy) = self.cells();
        (
            (cx - self.block_size) / self.block_stride + 1,
            (cy - self.block_size) / self.block_stride + 1,
        )
    }

    pub fn block_len(&self) -> usize {
        self.block_size * self.block_size * self.num_bins
    }

    pub fn descriptor_len(&self) -> usize {
        let (bx, by) = self.blocks();
        bx * by * self.block_len()
    }
}

/// Flat descriptor: blocks row-major, cells row-major within a block, bins
/// ascending within a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HogDescriptor(pub Vec<f64>);

impl HogDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-pixel gradient magnitude and unsigned orientation in degrees.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub orientation: Vec<f64>,
}

const LUT_SIDE: usize = 511;

/// Magnitude and first-quadrant angle for every `(|2 gx|, |2 gy|)`.
///
/// Doubled differences of 8-bit pixels are integers in `[-510, 510]`, so the
/// table covers every gradient the images can produce.
fn polar_table() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LUT_SIDE * LUT_SIDE);
        for ay in 0..LUT_SIDE {
            for ax in 0..LUT_SIDE {
                let (gx, gy) = (ax as f64 * 0.5, ay as f64 * 0.5);
                t.push((gx.hypot(gy), gy.atan2(gx).to_degrees()));
            }
        }
        t
    })
}

/// Magnitude and unsigned orientation in `[0, 180)` of doubled differences.
#[inline]
fn polar(table: &[(f64, f64)], dx2: i32, dy2: i32) -> (f64, f64) {
    let (m, a) = table[dy2.unsigned_abs() as usize * LUT_SIDE + dx2.unsigned_abs() as usize];
    if (dx2 < 0) != (dy2 < 0) && dx2 != 0 && dy2 != 0 {
        (m, 180.0 - a)
    } else {
        (m, a)
    }
}

/// Doubled horizontal and vertical differences at `(x, y)`: central inside,
/// one-sided (and doubled) on the border.
#[inline]
fn doubled_diffs(img: &GrayImage, x: usize, y: usize) -> (i32, i32) {
    let (w, h) = img.dims();
    let row = img.row(y);
    let dx2 = if x == 0 {
        2 * (row[1] as i32 - row[0] as i32)
    } else if x == w - 1 {
        2 * (row[x] as i32 - row[x - 1] as i32)
    } else {
        row[x + 1] as i32 - row[x - 1] as i32
    };
    let px = |yy: usize| img.row(yy)[x] as i32;
    let dy2 = if y == 0 {
        2 * (px(1) - px(0))
    } else if y == h - 1 {
        2 * (px(y) - px(y - 1))
    } else {
        px(y + 1) - px(y - 1)
    };
    (dx2, dy2)
}

fn check_gradient_size(img: &GrayImage) -> Result<()> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(Error::InvalidImage(format!("gradient needs at least 3x3, got {w}x{h}")));
    }
    Ok(())
}

/// Half-weighted central differences, one-sided at the borders.
pub fn compute_gradients(img: &GrayImage) -> Result<Gradients> {
    check_gradient_size(img)?;
    let (w, h) = img.dims();
    let table = polar_table();
    let n = w * h;
    let mut g = Gradients {
        width: w,
        height: h,
        gx: Vec::with_capacity(n),
        gy: Vec::with_capacity(n),
        magnitude: Vec::with_capacity(n),
        orientation: Vec::with_capacity(n),
    };
    for y in 0..h {
        for x in 0..w {
            let (dx2, dy2) = doubled_diffs(img, x, y);
            let (m, a) = polar(table, dx2, dy2);
            g.gx.push(dx2 as f64 * 0.5);
            g.gy.push(dy2 as f64 * 0.5);
            g.magnitude.push(m);
            g.orientation.push(a);
        }
    }
    Ok(g)
}

/// Raw (unnormalized) cell histograms, cells row-major, `num_bins` each.
pub fn cell_histograms(window: &GrayImage, params: &HogParams) -> Result<Vec<f64>> {
    params.validate()?;
    window.ensure_dims((params.window_w, params.window_h))?;
    check_gradient_size(window)?;
    let table = polar_table();
    let (cells_x, _) = params.cells();
    let bins = params.num_bins;
    let bin_width = 180.0 / bins as f64;
    let mut hist = vec![0.0; cells_x * params.cells().1 * bins];
    let (w, h) = window.dims();
    for y in 0..h {
        let cy = y / params.cell_size;
        let row = window.row(y);
        let (up, down, dy_scale) = if y == 0 {
            (window.row(0), window.row(1), 2)
        } else if y == h - 1 {
            (window.row(y - 1), row, 2)
        } else {
            (window.row(y - 1), window.row(y + 1), 1)
        };
        for x in 0..w {
            let dx2 = if x == 0 {
                2 * (row[1] as i32 - row[0] as i32)
            } else if x == w - 1 {
                2 * (row[x] as i32 - row[x - 1] as i32)
            } else {
                row[x + 1] as i32 - row[x - 1] as i32
            };
            let dy2 = dy_scale * (down[x] as i32 - up[x] as i32);
            if dx2 == 0 && dy2 == 0 {
                continue;
            }
            let (m, angle) = polar(table, dx2, dy2);
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % bins;
            let hi = (lo + 1) % bins;
            let base = (cy * cells_x + x / params.cell_size) * bins;
            hist[base + lo] += (1.0 - frac) * m;
            hist[base + hi] += frac * m;
        }
    }
    Ok(hist)
}

fn l2_normalize(v: &mut [f64], eps: f64) {
    let norm = (v.iter().map(|x| x * x).sum::<f64>() + eps * eps).sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// L2-normalize, clip at 0.2, L2-normalize again.
pub fn l2_hys(v: &mut [f64], eps: f64) {
    l2_normalize(v, eps);
    for x in v.iter_mut() {
        *x = x.min(L2HYS_CLIP);
    }
    l2_normalize(v, eps);
}

pub fn hog_features(window: &GrayImage, params: &HogParams) -> Result<HogDescriptor> {
    let hist = cell_histograms(window, params)?;
    let (cells_x, _) = params.cells();
    let (blocks_x, blocks_y) = params.blocks();
    let bins = params.num_bins;
    let mut out = Vec::with_capacity(params.descriptor_len());
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let start = out.len();
            for j in 0..params.block_size {
                for i in 0..params.block_size {
                    let cx = bx * params.block_stride + i;
                    let cy = by * params.block_stride + j;
                    let base = (cy * cells_x + cx) * bins;
                    out.extend_from_slice(&hist[base..base + bins]);
                }
            }
            l2_hys(&mut out[start..], params.epsilon);
        }
    }
    Ok(HogDescriptor(out))
}
