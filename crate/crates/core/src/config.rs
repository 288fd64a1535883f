//! Plain-text `key = value` configuration.
//!
//! Every key mirrors a library default, so an empty file and no file at all
//! behave the same. Unknown keys and out-of-range values are rejected when
//! the file is read.
//!
//! ```text
//! # thermoscan.conf
//! tau = 30
//! scales = 1.0, 1.2, 1.44
//! fusion = blend
//! alpha = 0.25
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::background::{Fusion, DEFAULT_BLEND_ALPHA, DEFAULT_TAU};
use crate::classify::TrainMeta;
use crate::detect::{self, DetectMode, Pipeline, Resample};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_MATCH_IOU;
use crate::hog::HogParams;
use crate::par::Execution;
use crate::training::{TrainConfig, NEGATIVES_PER_POSITIVE};

/// Environment variable naming a config file used when no `--config` is given.
pub const CONFIG_ENV: &str = "THERMOSCAN_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionKind {
    Mask,
    Blend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub tau: u8,
    pub rho: f64,
    pub theta: f64,
    pub stride: usize,
    pub scales: Vec<f64>,
    pub nms_iou: f64,
    pub match_iou: f64,
    pub hog: HogParams,
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
    pub negatives_per_positive: usize,
    pub hard_negatives: bool,
    pub fusion: FusionKind,
    pub alpha: f64,
    /// `None` derives the anchor-lost limit from the template size.
    pub max_error: Option<f64>,
    pub resample: Resample,
    pub parallel: bool,
}

impl Default for Config {
    fn default() -> Self {
        let meta = TrainMeta::default();
        Self {
            tau: DEFAULT_TAU,
            rho: detect::DEFAULT_RHO,
            theta: detect::DEFAULT_THETA,
            stride: detect::DEFAULT_STRIDE,
            scales: detect::DEFAULT_SCALES.to_vec(),
            nms_iou: detect::DEFAULT_NMS_IOU,
            match_iou: DEFAULT_MATCH_IOU,
            hog: HogParams::default(),
            lambda: meta.lambda,
            epochs: meta.epochs,
            seed: meta.seed,
            negatives_per_positive: NEGATIVES_PER_POSITIVE,
            hard_negatives: false,
            fusion: FusionKind::Mask,
            alpha: DEFAULT_BLEND_ALPHA,
            max_error: None,
            resample: Resample::Nearest,
            parallel: false,
        }
    }
}

/// Every accepted key, in the order [`Config::to_text`] writes them.
pub const KEYS: [&str; 24] = [
    "tau",
    "rho",
    "theta",
    "stride",
    "scales",
    "nms_iou",
    "match_iou",
    "window_w",
    "window_h",
    "cell_size",
    "block_size",
    "block_stride",
    "num_bins",
    "hog_epsilon",
    "lambda",
    "epochs",
    "seed",
    "negatives_per_positive",
    "hard_negatives",
    "fusion",
    "alpha",
    "max_error",
    "resample",
    "parallel",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

fn ratio(key: &str, v: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(key, v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{key} = {x} is outside [0, 1]"))
    }
}

fn positive(key: &str, v: &str) -> std::result::Result<usize, String> {
    match num::<usize>(key, v)? {
        0 => Err(format!("{key} must be at least 1")),
        n => Ok(n),
    }
}

fn boolean(key: &str, v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {v:?}")),
    }
}

impl Config {
    /// Set one key. Values are checked here; cross-field checks happen in
    /// [`Config::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "tau" => self.tau = num(key, v)?,
            "rho" => self.rho = ratio(key, v)?,
            "theta" => {
                let t: f64 = num(key, v)?;
                if !t.is_finite() {
                    return Err(format!("theta must be finite, got {v}"));
                }
                self.theta = t;
            }
            "stride" => self.stride = positive(key, v)?,
            "scales" => {
                let scales = v
                    .split(',')
                    .map(|s| num::<f64>(key, s.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                detect::validate_scales(&scales).map_err(|e| e.to_string())?;
                self.scales = scales;
            }
            "nms_iou" => self.nms_iou = ratio(key, v)?,
            "match_iou" => self.match_iou = ratio(key, v)?,
            "window_w" => self.hog.window_w = positive(key, v)?,
            "window_h" => self.hog.window_h = positive(key, v)?,
            "cell_size" => self.hog.cell_size = positive(key, v)?,
            "block_size" => self.hog.block_size = positive(key, v)?,
            "block_stride" => self.hog.block_stride = positive(key, v)?,
            "num_bins" => self.hog.num_bins = positive(key, v)?,
            "hog_epsilon" => {
                let e: f64 = num(key, v)?;
                if !(e > 0.0 && e.is_finite()) {
                    return Err(format!("hog_epsilon must be positive, got {v}"));
                }
                self.hog.epsilon = e;
            }
            "lambda" => {
                let l: f64 = num(key, v)?;
                if !(l > 0.0 && l.is_finite()) {
                    return Err(format!("lambda must be positive, got {v}"));
                }
                self.lambda = l;
            }
            "epochs" => self.epochs = positive(key, v)? as u32,
            "seed" => self.seed = num(key, v)?,
            "negatives_per_positive" => self.negatives_per_positive = num(key, v)?,
            "hard_negatives" => self.hard_negatives = boolean(key, v)?,
            "fusion" => {
                self.fusion = match v {
                    "mask" => FusionKind::Mask,
                    "blend" => FusionKind::Blend,
                    _ => return Err(format!("fusion: expected mask or blend, got {v:?}")),
                }
            }
            "alpha" => self.alpha = ratio(key, v)?,
            "max_error" => {
                self.max_error = if v == "auto" {
                    None
                } else {
                    let m: f64 = num(key, v)?;
                    if m.is_nan() || m < 0.0 {
                        return Err(format!("max_error must be non-negative, got {v}"));
                    }
                    Some(m)
                }
            }
            "resample" => {
                self.resample = match v {
                    "nearest" => Resample::Nearest,
                    "bilinear" => Resample::Bilinear,
                    _ => return Err(format!("resample: expected nearest or bilinear, got {v:?}")),
                }
            }
            "parallel" => self.parallel = boolean(key, v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.hog.validate()?;
        Ok(())
    }

    /// Apply `key = value` lines over the current values.
    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            self.set(k.trim(), v).map_err(err)?;
        }
        self.validate().map_err(|e| e.in_file(path))
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut c = Self::default();
        c.merge_text(text, path)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::parse(&text, path)
    }

    /// The explicit file if given, else the file named by
    /// [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(PathBuf::from(p)),
                _ => Ok(Self::default()),
            },
        }
    }

    /// Every key with its current value; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let scales: Vec<String> = self.scales.iter().map(|x| format!("{x:?}")).collect();
        let fusion = match self.fusion {
            FusionKind::Mask => "mask",
            FusionKind::Blend => "blend",
        };
        let resample = match self.resample {
            Resample::Nearest => "nearest",
            Resample::Bilinear => "bilinear",
        };
        let max_error = self.max_error.map_or("auto".to_string(), |m| format!("{m:?}"));
        let values: [String; 24] = [
            self.tau.to_string(),
            format!("{:?}", self.rho),
            format!("{:?}", self.theta),
            self.stride.to_string(),
            scales.join(", "),
            format!("{:?}", self.nms_iou),
            format!("{:?}", self.match_iou),
            self.hog.window_w.to_string(),
            self.hog.window_h.to_string(),
            self.hog.cell_size.to_string(),
            self.hog.block_size.to_string(),
            self.hog.block_stride.to_string(),
            self.hog.num_bins.to_string(),
            format!("{:?}", self.hog.epsilon),
            format!("{:?}", self.lambda),
            self.epochs.to_string(),
            self.seed.to_string(),
            self.negatives_per_positive.to_string(),
            self.hard_negatives.to_string(),
            fusion.to_string(),
            format!("{:?}", self.alpha),
            max_error,
            resample.to_string(),
            self.parallel.to_string(),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn fusion(&self) -> Fusion {
        match self.fusion {
            FusionKind::Mask => Fusion::Mask,
            FusionKind::Blend => Fusion::Blend { alpha: self.alpha },
        }
    }

    pub fn detect_mode(&self, pipeline: Pipeline) -> DetectMode {
        DetectMode {
            pipeline,
            rho: self.rho,
            theta: self.theta,
            nms_iou: self.nms_iou,
            scales: self.scales.clone(),
            stride: self.stride,
            tau: self.tau,
            fusion: self.fusion(),
            max_error: self.max_error,
            resample: self.resample,
            execution: if self.parallel {
                Execution::Parallel
            } else {
                Execution::Sequential
            },
        }
    }

    pub fn train_meta(&self) -> TrainMeta {
        TrainMeta {
            lambda: self.lambda,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hog: self.hog,
            meta: self.train_meta(),
            scales: self.scales.clone(),
            negatives_per_positive: self.negatives_per_positive,
            hard_negatives: self.hard_negatives,
            detect: self.detect_mode(Pipeline::HogOnly),
        }
    }
}
