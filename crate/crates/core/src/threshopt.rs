//! Exhaustive sweep of the binarization cutoff. The objective (dataset F1)
//! is a step function of the threshold, so a grid is all there is to search.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::imgcore::{LabelMap, ProbabilityMap};
use crate::matcheval::{aggregate, evaluate_instances, DatasetMetrics};
use crate::postproc::{postprocess, PostprocConfig};

/// `0.05, 0.10, ..., 0.95`.
pub fn default_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

/// `start, start + step, ...` up to and including `stop` (with a small
/// tolerance for accumulated rounding). Points are computed as
/// `start + i·step`, not by repeated addition.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start <= stop) {
        return Err(invalid(
            "grid",
            format!("need start <= stop and step > 0, got {start}:{stop}:{step}"),
        ));
    }
    let n = libm::floor((stop - start) / step + 1e-9) as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| {
            // snap to 12 decimals so 0.1 + 2·0.05 prints as 0.2
            libm::round((start + i as f64 * step) * 1e12) / 1e12
        })
        .collect();
    validate_grid(&grid)?;
    Ok(grid)
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("grid", "empty"));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(invalid("grid", format!("threshold {t} outside [0, 1]")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("grid", "thresholds must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    /// `(threshold, f1)` ascending by threshold.
    pub points: Vec<(f64, f64)>,
    pub best_threshold: f64,
    pub best_f1: f64,
}

impl SweepResult {
    /// Picks the highest F1, the smallest threshold among ties.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        validate_grid(&points.iter().map(|p| p.0).collect::<Vec<_>>())?;
        let mut best = points[0];
        for &p in &points[1..] {
            if p.1 > best.1 {
                best = p;
            }
        }
        Ok(Self {
            best_threshold: best.0,
            best_f1: best.1,
            points,
        })
    }
}

/// Post-processes every heatmap at threshold `t` and scores it against its
/// target instances.
pub fn evaluate_threshold(
    data: &[(ProbabilityMap, LabelMap)],
    cfg: &PostprocConfig,
    t: f64,
    max_dist: f64,
) -> Result<DatasetMetrics> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cfg = PostprocConfig { threshold: t, ..*cfg };
    let per_image = data
        .iter()
        .map(|(heatmap, target)| {
            let pred = postprocess(heatmap, &cfg)?;
            evaluate_instances(&pred, target, max_dist).map(|e| e.metrics)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(per_image)
}

/// Dataset micro-F1 at every grid threshold. `cfg.threshold` is ignored.
pub fn f1_curve(
    data: &[(ProbabilityMap, LabelMap)],
    cfg: &PostprocConfig,
    grid: &[f64],
    max_dist: f64,
) -> Result<SweepResult> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    validate_grid(grid)?;
    let points = grid
        .iter()
        .map(|&t| evaluate_threshold(data, cfg, t, max_dist).map(|m| (t, m.f1_micro)))
        .collect::<Result<Vec<_>>>()?;
    SweepResult::from_points(points)
}
