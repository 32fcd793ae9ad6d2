//! Per-second block aggregation, confusion-matrix metrics and ROC analysis.

use std::cmp::Ordering;

use num_rational::Ratio;

use crate::detection::ValidatedDetection;
use crate::error::{Error, Result};

/// Verdict for one block of consecutive frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockVerdict {
    pub block_idx: usize,
    /// Inclusive `[first, last]` frame indices.
    pub frame_range: (usize, usize),
    pub positive: bool,
}

/// Splits frames into blocks of `block_size`; the last block may be short.
/// A block is positive when any of its frames is.
pub fn group_blocks(frame_positive: &[bool], block_size: usize) -> Result<Vec<BlockVerdict>> {
    if block_size == 0 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    Ok(frame_positive
        .chunks(block_size)
        .enumerate()
        .map(|(i, frames)| {
            let first = i * block_size;
            BlockVerdict {
                block_idx: i,
                frame_range: (first, first + frames.len() - 1),
                positive: frames.iter().any(|&p| p),
            }
        })
        .collect())
}

/// Fraction of positive blocks.
pub fn block_recall(verdicts: &[BlockVerdict]) -> Result<f64> {
    if verdicts.is_empty() {
        return Err(Error::Parameter("no blocks to score".into()));
    }
    let positive = verdicts.iter().filter(|v| v.positive).count();
    Ok(positive as f64 / verdicts.len() as f64)
}

/// Marks frames `0..n_frames` that carry at least one validated detection.
/// Detections on frames at or past `n_frames` are an error.
pub fn frame_positives(validated: &[ValidatedDetection], n_frames: usize) -> Result<Vec<bool>> {
    let mut out = vec![false; n_frames];
    for v in validated {
        let idx = v.detection.frame_idx;
        match usize::try_from(idx).ok().and_then(|i| out.get_mut(i)) {
            Some(slot) => *slot = true,
            None => {
                return Err(Error::Parameter(format!(
                    "detection on frame {idx} but only {n_frames} frames"
                )))
            }
        }
    }
    Ok(out)
}

/// Per-frame ranking score: the best combined score on the frame, 0 when
/// nothing on the frame was validated.
pub fn frame_scores(validated: &[ValidatedDetection], n_frames: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; n_frames];
    for v in validated {
        let idx = v.detection.frame_idx;
        match usize::try_from(idx).ok().and_then(|i| out.get_mut(i)) {
            Some(slot) => *slot = slot.max(v.combined_score),
            None => {
                return Err(Error::Parameter(format!(
                    "detection on frame {idx} but only {n_frames} frames"
                )))
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Tallies predicted against true per-frame labels.
pub fn frame_confusion(predicted: &[bool], truth: &[bool]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::Parameter(format!(
            "{} predictions for {} ground-truth frames",
            predicted.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Accuracy, precision, recall and F-measure as exact fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactMetrics {
    pub accuracy: Ratio<u64>,
    pub precision: Ratio<u64>,
    pub recall: Ratio<u64>,
    pub f_measure: Ratio<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    // counts stay far below 2^53, so both parts convert exactly
    *r.numer() as f64 / *r.denom() as f64
}

impl From<ExactMetrics> for Metrics {
    fn from(m: ExactMetrics) -> Self {
        Self {
            accuracy: ratio_to_f64(m.accuracy),
            precision: ratio_to_f64(m.precision),
            recall: ratio_to_f64(m.recall),
            f_measure: ratio_to_f64(m.f_measure),
        }
    }
}

pub fn compute_exact_metrics(cm: &ConfusionMatrix) -> Result<ExactMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::UndefinedMetric {
            metric: "accuracy",
            reason: "confusion matrix is empty",
        });
    }
    if cm.tp + cm.fp == 0 {
        return Err(Error::UndefinedMetric {
            metric: "precision",
            reason: "no positive predictions (tp + fp = 0)",
        });
    }
    if cm.tp + cm.fn_ == 0 {
        return Err(Error::UndefinedMetric {
            metric: "recall",
            reason: "no positive ground truth (tp + fn = 0)",
        });
    }
    let accuracy = Ratio::new(cm.tp + cm.tn, total);
    let precision = Ratio::new(cm.tp, cm.tp + cm.fp);
    let recall = Ratio::new(cm.tp, cm.tp + cm.fn_);
    let sum = precision + recall;
    if sum == Ratio::from_integer(0) {
        return Err(Error::UndefinedMetric {
            metric: "f_measure",
            reason: "precision + recall = 0",
        });
    }
    let f_measure = Ratio::from_integer(2) * precision * recall / sum;
    Ok(ExactMetrics {
        accuracy,
        precision,
        recall,
        f_measure,
    })
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    compute_exact_metrics(cm).map(Metrics::from)
}

/// ROC curve points sorted by false-positive rate, anchored at (0,0) and (1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Score at or above which a sample is called positive. `+inf` for the
    /// origin anchor.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Sweeps every distinct score from high to low; samples with equal scores
/// enter the curve together. AUC is the trapezoid area under the points.
pub fn roc(samples: &[(f64, bool)]) -> Result<RocCurve> {
    if let Some((s, _)) = samples.iter().find(|(s, _)| !s.is_finite()) {
        return Err(Error::Parameter(format!("non-finite score {s}")));
    }
    let positives = samples.iter().filter(|(_, l)| *l).count();
    let negatives = samples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate(format!(
            "ROC needs both classes, got {positives} positive and {negatives} negative"
        )));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("anchor present");
        let pt = RocPoint {
            threshold,
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        };
        auc += (pt.fpr - prev.fpr) * (pt.tpr + prev.tpr) / 2.0;
        points.push(pt);
    }
    // the final threshold admits every sample, so the curve ends at (1,1)
    debug_assert!(tp == positives && fp == negatives);
    Ok(RocCurve { points, auc })
}
