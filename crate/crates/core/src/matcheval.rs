//! Detection and counting metrics.
//!
//! Every target object is paired with at most one predicted object by
//! centroid distance, greedily in ascending distance over all pairs closer
//! than `max_dist`. Unpaired predictions are false positives, unpaired
//! targets false negatives.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::imgcore::{connected_components, object_stats, BinaryMask, Connectivity, LabelMap, ObjectStats};

/// Default matching gate in pixels (average cell diameter).
pub const DEFAULT_MATCH_DISTANCE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchPair {
    /// Index into the target slice.
    pub target: usize,
    /// Index into the prediction slice.
    pub predicted: usize,
    pub distance: f64,
}

/// A partial one-to-one matching between targets and predictions.
///
/// Indices refer to positions in the slices handed to [`match_objects`];
/// for label maps, index `i` is label `i + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchOutcome {
    /// Sorted by ascending distance, ties by (target, predicted).
    pub pairs: Vec<MatchPair>,
    /// Unmatched predictions, ascending.
    pub false_positives: Vec<usize>,
    /// Unmatched targets, ascending.
    pub false_negatives: Vec<usize>,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    libm::sqrt(dx * dx + dy * dy)
}

/// Greedy unique nearest-centroid matching with a strict `< max_dist` gate.
pub fn match_objects(targets: &[(f64, f64)], preds: &[(f64, f64)], max_dist: f64) -> Result<MatchOutcome> {
    if !(max_dist > 0.0) {
        return Err(invalid("max_dist", alloc::format!("must be positive, got {max_dist}")));
    }
    let mut candidates: Vec<MatchPair> = Vec::new();
    for (t, &tc) in targets.iter().enumerate() {
        for (p, &pc) in preds.iter().enumerate() {
            let d = dist(tc, pc);
            if d < max_dist {
                candidates.push(MatchPair {
                    target: t,
                    predicted: p,
                    distance: d,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.target.cmp(&b.target))
            .then(a.predicted.cmp(&b.predicted))
    });

    let mut target_used = alloc::vec![false; targets.len()];
    let mut pred_used = alloc::vec![false; preds.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if target_used[c.target] || pred_used[c.predicted] {
            continue;
        }
        target_used[c.target] = true;
        pred_used[c.predicted] = true;
        pairs.push(c);
    }
    let unused = |used: &[bool]| used.iter().enumerate().filter(|(_, &u)| !u).map(|(i, _)| i).collect();
    Ok(MatchOutcome {
        pairs,
        false_positives: unused(&pred_used),
        false_negatives: unused(&target_used),
    })
}

/// Per-image detection and counting scores.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageMetrics {
    pub tp: usize,
    pub fp: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Foreground intersection over union.
    pub iou: f64,
    pub predicted_count: usize,
    pub target_count: usize,
    pub abs_count_error: usize,
}

/// `num / den`, with `0/0` read as a perfect score.
fn ratio_or_perfect(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl ImageMetrics {
    /// Builds scores from raw counts.
    ///
    /// An image with no targets and no predictions scores 1 everywhere.
    /// Otherwise an empty denominator for precision or recall means the
    /// other side has errors only, and the score is 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, iou: f64) -> Self {
        let all_empty = tp + fp + fn_ == 0;
        let precision = if tp + fp == 0 && !all_empty { 0.0 } else { ratio_or_perfect(tp, tp + fp) };
        let recall = if tp + fn_ == 0 && !all_empty { 0.0 } else { ratio_or_perfect(tp, tp + fn_) };
        let predicted_count = tp + fp;
        let target_count = tp + fn_;
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: f1_score(tp, fp, fn_),
            iou,
            predicted_count,
            target_count,
            abs_count_error: predicted_count.abs_diff(target_count),
        }
    }
}

/// `2·tp / (2·tp + fp + fn)`, 1 when nothing was expected or found.
pub fn f1_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    ratio_or_perfect(2 * tp, 2 * tp + fp + fn_)
}

/// Foreground IoU of two masks; both empty counts as 1.
pub fn foreground_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(ratio_or_perfect(inter, union))
}

/// Everything computed while scoring one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEvaluation {
    pub metrics: ImageMetrics,
    pub outcome: MatchOutcome,
    pub predicted: Vec<ObjectStats>,
    pub targets: Vec<ObjectStats>,
}

/// Scores predicted objects against target instances given as a label map.
pub fn evaluate_instances(pred: &LabelMap, target: &LabelMap, max_dist: f64) -> Result<ImageEvaluation> {
    pred.labels().ensure_same_dims(target.labels())?;
    let predicted = object_stats(pred);
    let targets = object_stats(target);
    let centroids = |s: &[ObjectStats]| s.iter().map(|o| o.centroid).collect::<Vec<_>>();
    let outcome = match_objects(&centroids(&targets), &centroids(&predicted), max_dist)?;
    let iou = foreground_iou(&pred.foreground(), &target.foreground())?;
    let metrics = ImageMetrics::from_counts(
        outcome.pairs.len(),
        outcome.false_positives.len(),
        outcome.false_negatives.len(),
        iou,
    );
    Ok(ImageEvaluation {
        metrics,
        outcome,
        predicted,
        targets,
    })
}

/// Scores a prediction against a binary target mask whose objects are its
/// 8-connected components.
pub fn evaluate_image(pred: &LabelMap, target: &BinaryMask, max_dist: f64) -> Result<ImageEvaluation> {
    pred.labels().ensure_same_dims(target)?;
    evaluate_instances(pred, &connected_components(target, Connectivity::Eight), max_dist)
}

pub fn image_metrics(pred: &LabelMap, target: &BinaryMask, max_dist: f64) -> Result<ImageMetrics> {
    evaluate_image(pred, target, max_dist).map(|e| e.metrics)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetMetrics {
    /// F1 from tp/fp/fn summed over images.
    pub f1_micro: f64,
    /// Mean of per-image F1.
    pub f1_macro: f64,
    pub precision_micro: f64,
    pub recall_micro: f64,
    pub mean_iou: f64,
    /// Mean absolute count error.
    pub mae: f64,
    /// Median absolute count error (mean of the middle two for even sizes).
    pub medae: f64,
    pub per_image: Vec<ImageMetrics>,
}

/// Folds per-image scores into dataset scores. Order-independent.
pub fn aggregate(per_image: Vec<ImageMetrics>) -> Result<DatasetMetrics> {
    if per_image.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = per_image.len() as f64;
    let (tp, fp, fn_) = per_image
        .iter()
        .fold((0, 0, 0), |(a, b, c), m| (a + m.tp, b + m.fp, c + m.fn_));
    let summed = ImageMetrics::from_counts(tp, fp, fn_, 0.0);
    let mut errors: Vec<usize> = per_image.iter().map(|m| m.abs_count_error).collect();
    errors.sort_unstable();
    let mid = errors.len() / 2;
    let medae = if errors.len() % 2 == 1 {
        errors[mid] as f64
    } else {
        (errors[mid - 1] + errors[mid]) as f64 / 2.0
    };
    Ok(DatasetMetrics {
        f1_micro: summed.f1,
        f1_macro: sum_sorted(per_image.iter().map(|m| m.f1)) / n,
        precision_micro: summed.precision,
        recall_micro: summed.recall,
        mean_iou: sum_sorted(per_image.iter().map(|m| m.iou)) / n,
        mae: errors.iter().sum::<usize>() as f64 / n,
        medae,
        per_image,
    })
}

// summation order fixed by value so permuting images cannot change the result
fn sum_sorted(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.iter().sum()
}

/// Scores every `(prediction, target)` pair and aggregates.
pub fn dataset_metrics(images: &[(LabelMap, BinaryMask)], max_dist: f64) -> Result<DatasetMetrics> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let per_image = images
        .iter()
        .map(|(p, t)| image_metrics(p, t, max_dist))
        .collect::<Result<Vec<_>>>()?;
    aggregate(per_image)
}
