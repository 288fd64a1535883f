//! Linear SVM trained by primal sub-gradient descent on the hinge loss.

pub mod codec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hog::{HogDescriptor, HogParams};

pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const DEFAULT_EPOCHS: u32 = 100;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl TryFrom<i32> for Label {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidParameter(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub descriptor: HogDescriptor,
    pub label: Label,
}

/// Hyper-parameters recorded alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainMeta {
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
}

impl Default for TrainMeta {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            epochs: DEFAULT_EPOCHS,
            seed: DEFAULT_SEED,
        }
    }
}

impl TrainMeta {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Weights, bias, and the HOG configuration they were trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hog: HogParams,
    pub meta: TrainMeta,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64, hog: HogParams, meta: TrainMeta) -> Result<Self> {
        let m = Self {
            weights,
            bias,
            hog,
            meta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.hog.validate()?;
        let expected = self.hog.descriptor_len();
        if self.weights.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "model has {} weights but its HOG parameters produce {expected}",
                self.weights.len()
            )));
        }
        Ok(())
    }

    /// Decision value `w . d + b`.
    pub fn score(&self, d: &HogDescriptor) -> Result<f64> {
        if d.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: (self.weights.len(), 1),
                actual: (d.len(), 1),
            });
        }
        Ok(decision(&self.weights, self.bias, d.values()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn decision(w: &[f64], b: f64, x: &[f64]) -> f64 {
    dot(w, x) + b
}

/// Result of a raw fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularized objective on the full set after each epoch.
    pub objective: Vec<f64>,
}

/// `lambda / 2 * |w|^2 + mean(max(0, 1 - y (w . x + b)))`.
pub fn objective(w: &[f64], b: f64, xs: &[&[f64]], ys: &[Label], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y.sign() * decision(w, b, x)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / xs.len() as f64
}

/// Pegasos-style sub-gradient descent with step `1 / (lambda * t)`.
///
/// Sample order is reshuffled every epoch from a generator seeded with
/// `meta.seed`; the bias is updated with the same step but not regularized.
/// After each step `w` is projected onto the ball of radius `1/sqrt(lambda)`
/// that contains the optimum. The returned model is the running average of
/// the iterates over the second half of the epochs, and `objective` is
/// evaluated on that average once it exists.
pub fn fit_linear(xs: &[&[f64]], ys: &[Label], meta: &TrainMeta) -> Result<Fit> {
    meta.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::Training(format!("{} samples but {} labels", xs.len(), ys.len())));
    }
    if !ys.contains(&Label::Positive) || !ys.contains(&Label::Negative) {
        return Err(Error::Training("need at least one sample of each label".into()));
    }
    let dim = xs[0].len();
    if let Some(bad) = xs.iter().position(|x| x.len() != dim) {
        return Err(Error::Training(format!(
            "sample {bad} has {} features, expected {dim}",
            xs[bad].len()
        )));
    }

    let lambda = meta.lambda;
    let radius_sq = 1.0 / lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(meta.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let sq_norms: Vec<f64> = xs.iter().map(|x| dot(x, x)).collect();
    // w = scale * v keeps the shrink and projection steps O(1)
    let mut v = vec![0.0; dim];
    let mut scale = 1.0f64;
    let mut v_sq = 0.0f64;
    let mut bias = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut averaged = 0u64;
    let avg_from = meta.epochs / 2;
    let mut t: u64 = 0;
    let mut history = Vec::with_capacity(meta.epochs as usize);

    for epoch in 0..meta.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = ys[i].sign();
            let vx = dot(&v, xs[i]);
            let margin = y * (scale * vx + bias);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                v_sq = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for (vj, xj) in v.iter_mut().zip(xs[i]) {
                    *vj += step * xj;
                }
                v_sq += 2.0 * step * vx + step * step * sq_norms[i];
                bias += eta * y;
            }
            let w_sq = scale * scale * v_sq.max(0.0);
            if w_sq > radius_sq {
                scale *= (radius_sq / w_sq).sqrt();
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                v_sq *= scale * scale;
                scale = 1.0;
            }
            if epoch >= avg_from {
                averaged += 1;
                let k = 1.0 / averaged as f64;
                for (a, vj) in avg_w.iter_mut().zip(&v) {
                    *a += (scale * vj - *a) * k;
                }
                avg_b += (bias - avg_b) * k;
            }
        }
        let value = if averaged > 0 {
            objective(&avg_w, avg_b, xs, ys, lambda)
        } else {
            let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
            objective(&w, bias, xs, ys, lambda)
        };
        history.push(value);
    }
    Ok(Fit {
        weights: avg_w,
        bias: avg_b,
        objective: history,
    })
}

/// Train a model on HOG descriptors produced with `hog`.
pub fn train(samples: &[LabeledSample], hog: HogParams, meta: &TrainMeta) -> Result<LinearModel> {
    hog.validate()?;
    let expected = hog.descriptor_len();
    if let Some(bad) = samples.iter().position(|s| s.descriptor.len() != expected) {
        return Err(Error::Training(format!(
            "sample {bad} has {} features, HOG parameters give {expected}",
            samples[bad].descriptor.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::Training("no samples".into()));
    }
    let xs: Vec<&[f64]> = samples.iter().map(|s| s.descriptor.values()).collect();
    let ys: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let fit = fit_linear(&xs, &ys, meta)?;
    LinearModel::new(fit.weights, fit.bias, hog, *meta)
}
