//! Detection quality and timing: IoU matching, micro-averaged precision and
//! recall, and the per-mode benchmark report.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use crate::adaptive::ReferenceAnchor;
use crate::background::BackgroundModel;
use crate::classify::LinearModel;
use crate::detect::{self, DetectMode, Detection};
use crate::error::{Error, Result};
use crate::imaging::{iou, BoundingBox, FrameSequence};
use crate::io::write_atomic;
use crate::synth::{PanSpec, SceneParams};

pub const DEFAULT_MATCH_IOU: f64 = 0.5;
pub const REPORT_HEADER: [&str; 6] = [
    "mode",
    "exec_time_s",
    "precision",
    "recall",
    "windows_considered",
    "windows_scored",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    /// False negatives (missed truth boxes).
    pub fn_: usize,
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// Greedy one-to-one matching. Detections, best score first, each claim the
/// unmatched truth with the highest IoU if it reaches `iou_thresh`.
pub fn match_detections(dets: &[Detection], truths: &[BoundingBox], iou_thresh: f64) -> MatchCounts {
    let mut order: Vec<&Detection> = dets.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut taken = vec![false; truths.len()];
    let mut tp = 0;
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (j, t) in truths.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let v = iou(&d.bbox, t);
            if v >= iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
            tp += 1;
        }
    }
    MatchCounts {
        tp,
        fp: dets.len() - tp,
        fn_: truths.len() - tp,
    }
}

/// `(precision, recall)`, each 1.0 when its denominator is zero.
pub fn precision_recall(c: MatchCounts) -> (f64, f64) {
    let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    (ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_))
}

/// One report row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: String,
    pub exec_time: Duration,
    pub counts: MatchCounts,
    pub windows_considered: usize,
    pub windows_scored: usize,
    pub theta: f64,
}

impl BenchRow {
    pub fn precision(&self) -> f64 {
        precision_recall(self.counts).0
    }

    pub fn recall(&self) -> f64 {
        precision_recall(self.counts).1
    }

    /// Formatted cells in report column order. Both renderings use these.
    pub fn cells(&self) -> [String; 6] {
        [
            self.mode.clone(),
            format!("{:.6}", self.exec_time.as_secs_f64()),
            format!("{:.6}", self.precision()),
            format!("{:.6}", self.recall()),
            self.windows_considered.to_string(),
            self.windows_scored.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, mode: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            w.write_record(r.cells())?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_csv()?.as_bytes())
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let header = [
            "Mode",
            "Execution Time (in Seconds)",
            "Precision",
            "Recall",
            "Windows considered",
            "Windows scored",
        ];
        let rows: Vec<[String; 6]> = self.rows.iter().map(BenchRow::cells).collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
        for r in &rows {
            line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }
}

/// A sequence with everything the detector and the metric need.
#[derive(Debug, Clone)]
pub struct BenchInput<'a> {
    pub seq: &'a FrameSequence,
    pub truths: &'a [Vec<BoundingBox>],
    pub bg: Option<&'a BackgroundModel>,
    pub anchor: Option<&'a ReferenceAnchor>,
    pub match_iou: f64,
}

impl BenchInput<'_> {
    fn check(&self) -> Result<()> {
        if self.truths.len() != self.seq.len() {
            return Err(Error::InvalidParameter(format!(
                "truth covers {} frames, sequence has {}",
                self.truths.len(),
                self.seq.len()
            )));
        }
        Ok(())
    }
}

/// Run `mode` over every frame and aggregate. The time is the sum of the
/// per-frame detector durations.
pub fn run_mode(input: &BenchInput, model: &LinearModel, label: &str, mode: &DetectMode) -> Result<BenchRow> {
    input.check()?;
    let mut row = BenchRow {
        mode: label.to_string(),
        exec_time: Duration::ZERO,
        counts: MatchCounts::default(),
        windows_considered: 0,
        windows_scored: 0,
        theta: mode.theta,
    };
    for (i, (frame, truth)) in input.seq.frames().iter().zip(input.truths).enumerate() {
        let (dets, stats) =
            detect::detect(frame, model, mode, input.bg, input.anchor).map_err(|e| wrap_frame(input, i, e))?;
        row.exec_time += stats.elapsed;
        row.windows_considered += stats.windows_considered;
        row.windows_scored += stats.windows_scored;
        row.counts += match_detections(&dets, truth, input.match_iou);
    }
    Ok(row)
}

fn wrap_frame(input: &BenchInput, i: usize, e: Error) -> Error {
    e.in_frame(input.seq.ids()[i].clone())
}

/// One row per `(label, mode)`.
pub fn benchmark(input: &BenchInput, model: &LinearModel, modes: &[(String, DetectMode)]) -> Result<BenchReport> {
    let rows = modes
        .iter()
        .map(|(label, mode)| run_mode(input, model, label, mode))
        .collect::<Result<_>>()?;
    Ok(BenchReport { rows })
}

/// Highest score threshold at which every truth box is still matched.
///
/// Every window is scored once. Raising the threshold only drops the
/// lowest-scored survivors of NMS, so recall can only fall as it rises, and
/// the candidates are the scores of the NMS survivors at no threshold.
/// Returns `None` when full recall is out of reach.
pub fn tune_theta(input: &BenchInput, model: &LinearModel, mode: &DetectMode) -> Result<Option<f64>> {
    input.check()?;
    let mut kept: Vec<Vec<Detection>> = Vec::with_capacity(input.seq.len());
    for (i, frame) in input.seq.frames().iter().enumerate() {
        let sf =
            detect::score_windows(frame, model, mode, input.bg, input.anchor).map_err(|e| wrap_frame(input, i, e))?;
        kept.push(detect::nms(&sf.scored, mode.nms_iou));
    }
    let full_recall = |theta: f64| {
        kept.iter().zip(input.truths).all(|(dets, truth)| {
            let above: Vec<Detection> = dets.iter().copied().filter(|d| d.score >= theta).collect();
            match_detections(&above, truth, input.match_iou).fn_ == 0
        })
    };
    let mut scores: Vec<f64> = kept.iter().flatten().map(|d| d.score).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    if !full_recall(f64::NEG_INFINITY) {
        return Ok(None);
    }
    if scores.is_empty() {
        return Ok(Some(mode.theta));
    }
    // largest index whose score still gives full recall
    let (mut lo, mut hi) = (0usize, scores.len());
    if !full_recall(scores[0]) {
        return Ok(None);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if full_recall(scores[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(scores[lo]))
}

/// Scene parameters of the standard benchmark corpus: 50 frames of a
/// 352x256 view holding one person (about 5% of the area), either still or
/// panning linearly by (45, 10) pixels.
pub fn standard_corpus(panning: bool) -> SceneParams {
    standard_corpus_with_pan(panning, STANDARD_PAN)
}

pub const STANDARD_PAN: (i32, i32) = (45, 10);

pub fn standard_corpus_with_pan(panning: bool, pan: (i32, i32)) -> SceneParams {
    let frames = 50;
    SceneParams {
        frames,
        pan: if panning {
            PanSpec::Linear {
                x: pan.0,
                y: pan.1,
                frames,
            }
        } else {
            PanSpec::still()
        },
        ..SceneParams::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(x: i32, y: i32, w: u32, h: u32, score: f64) -> Detection {
        Detection {
            bbox: BoundingBox::new(x, y, w, h),
            score,
        }
    }

    #[test]
    fn perfect_and_empty_matches() {
        let truths = vec![
            BoundingBox::new(0, 0, 10, 10),
            BoundingBox::new(20, 0, 10, 10),
            BoundingBox::new(40, 0, 10, 10),
        ];
        let dets: Vec<Detection> = truths
            .iter()
            .zip([0.3, -1.0, 7.0])
            .map(|(b, s)| Detection { bbox: *b, score: s })
            .collect();
        assert_eq!(
            match_detections(&dets, &truths, 0.5),
            MatchCounts { tp: 3, fp: 0, fn_: 0 }
        );
        assert_eq!(
            match_detections(&[], &truths, 0.5),
            MatchCounts { tp: 0, fp: 0, fn_: 3 }
        );
    }

    #[test]
    fn ratios_and_conventions() {
        assert_eq!(precision_recall(MatchCounts { tp: 3, fp: 1, fn_: 0 }), (0.75, 1.0));
        assert_eq!(precision_recall(MatchCounts::default()), (1.0, 1.0));
        assert_eq!(precision_recall(MatchCounts { tp: 0, fp: 2, fn_: 0 }), (0.0, 1.0));
    }

    #[test]
    fn duplicate_detection_is_a_false_positive() {
        let truths = [BoundingBox::new(0, 0, 10, 10)];
        let dets = [det(0, 0, 10, 10, 1.0), det(1, 0, 10, 10, 2.0)];
        let c = match_detections(&dets, &truths, 0.5);
        assert_eq!(c, MatchCounts { tp: 1, fp: 1, fn_: 0 });
    }

    /// Independent greedy reference: repeatedly take the globally
    /// highest-scored unprocessed detection, scan truths in index order.
    fn naive_match(dets: &[Detection], truths: &[BoundingBox], thr: f64) -> MatchCounts {
        let mut left: Vec<Detection> = dets.to_vec();
        let mut free: Vec<bool> = vec![true; truths.len()];
        let mut tp = 0;
        while !left.is_empty() {
            let mut k = 0;
            for i in 1..left.len() {
                if left[i].score > left[k].score {
                    k = i;
                }
            }
            let d = left.remove(k);
            let mut pick = None;
            let mut best = -1.0;
            for j in 0..truths.len() {
                let inter = d.bbox.intersection_area(&truths[j]) as f64;
                let uni = (d.bbox.area() + truths[j].area()) as f64 - inter;
                let v = inter / uni;
                if free[j] && v >= thr && v > best {
                    best = v;
                    pick = Some(j);
                }
            }
            if let Some(j) = pick {
                free[j] = false;
                tp += 1;
            }
        }
        MatchCounts {
            tp,
            fp: dets.len() - tp,
            fn_: truths.len() - tp,
        }
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0i32..40, 0i32..40, 4u32..20, 4u32..20).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn greedy_matches_naive_reference(
            dets in prop::collection::vec((arb_box(), -1000i32..1000), 0..12),
            truths in prop::collection::vec(arb_box(), 0..8),
            thr in prop::sample::select(vec![0.1, 0.3, 0.5, 0.7]),
        ) {
            // distinct scores so descending order is unambiguous
            let mut seen = std::collections::HashSet::new();
            let dets: Vec<Detection> = dets
                .into_iter()
                .filter(|(_, s)| seen.insert(*s))
                .map(|(b, s)| Detection { bbox: b, score: s as f64 })
                .collect();
            let c = match_detections(&dets, &truths, thr);
            prop_assert_eq!(c, naive_match(&dets, &truths, thr));
            prop_assert_eq!(c.tp + c.fn_, truths.len());
            prop_assert_eq!(c.tp + c.fp, dets.len());
        }

        #[test]
        fn ratios_are_scale_free(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50, k in 1usize..20) {
            let a = precision_recall(MatchCounts { tp, fp, fn_ });
            let b = precision_recall(MatchCounts { tp: tp * k, fp: fp * k, fn_: fn_ * k });
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_and_table_carry_the_same_numbers() {
        let report = BenchReport {
            rows: vec![
                BenchRow {
                    mode: "hog".into(),
                    exec_time: Duration::from_millis(1500),
                    counts: MatchCounts { tp: 2, fp: 6, fn_: 0 },
                    windows_considered: 100,
                    windows_scored: 100,
                    theta: 0.0,
                },
                BenchRow {
                    mode: "bs".into(),
                    exec_time: Duration::from_millis(20),
                    counts: MatchCounts { tp: 2, fp: 1, fn_: 0 },
                    windows_considered: 100,
                    windows_scored: 7,
                    theta: 0.0,
                },
            ],
        };
        let csv = report.to_csv().unwrap();
        let table = report.to_table();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), REPORT_HEADER.join(","));
        for line in lines {
            for cell in line.split(',') {
                assert!(table.contains(cell), "{cell} missing from\n{table}");
            }
        }
        assert!(csv.contains("hog,1.500000,0.250000,1.000000,100,100"));
        assert_eq!(report.row("bs").unwrap().precision(), 2.0 / 3.0);
    }
}
