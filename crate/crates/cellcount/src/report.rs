//! CSV and JSON reports.

use cellcount_core::matcheval::{DatasetMetrics, ImageMetrics};
use cellcount_core::threshopt::SweepResult;
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    file: &'a str,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    iou: f64,
    pred_count: usize,
    target_count: usize,
    abs_err: usize,
}

/// One row per image.
pub fn metrics_csv(files: &[String], per_image: &[ImageMetrics]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (file, m) in files.iter().zip(per_image) {
        w.serialize(CsvRow {
            file,
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            iou: m.iou,
            pred_count: m.predicted_count,
            target_count: m.target_count,
            abs_err: m.abs_count_error,
        })?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

#[derive(Debug, Serialize)]
struct Summary {
    images: usize,
    max_dist: f64,
    f1_micro: f64,
    f1_macro: f64,
    precision_micro: f64,
    recall_micro: f64,
    mean_iou: f64,
    mae: f64,
    medae: f64,
}

#[derive(Debug, Serialize)]
struct ImageEntry<'a> {
    file: &'a str,
    #[serde(flatten)]
    metrics: &'a ImageMetrics,
}

#[derive(Debug, Serialize)]
struct EvalReport<'a> {
    summary: Summary,
    images: Vec<ImageEntry<'a>>,
}

/// Dataset summary plus per-image metrics.
pub fn metrics_json(files: &[String], d: &DatasetMetrics, max_dist: f64) -> CliResult<Vec<u8>> {
    let report = EvalReport {
        summary: Summary {
            images: d.per_image.len(),
            max_dist,
            f1_micro: d.f1_micro,
            f1_macro: d.f1_macro,
            precision_micro: d.precision_micro,
            recall_micro: d.recall_micro,
            mean_iou: d.mean_iou,
            mae: d.mae,
            medae: d.medae,
        },
        images: files
            .iter()
            .zip(&d.per_image)
            .map(|(file, metrics)| ImageEntry { file, metrics })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&report)?;
    out.push(b'\n');
    Ok(out)
}

/// `threshold,f1` rows followed by a `# best` comment line.
pub fn sweep_csv(r: &SweepResult) -> Vec<u8> {
    let mut s = String::from("threshold,f1\n");
    for (t, f1) in &r.points {
        s.push_str(&format!("{t},{f1}\n"));
    }
    s.push_str(&format!("# best threshold={} f1={}\n", r.best_threshold, r.best_f1));
    s.into_bytes()
}
