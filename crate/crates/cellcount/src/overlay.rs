//! Box overlays for visual inspection of detections.

use cellcount_core::imgcore::ObjectStats;
use cellcount_core::matcheval::ImageEvaluation;
use cellcount_core::Raster;

pub const GREEN: [u8; 3] = [0, 200, 0];
pub const RED: [u8; 3] = [230, 0, 0];
pub const BLUE: [u8; 3] = [0, 80, 255];

/// Gray `[0, 1]` image as 8-bit RGB.
pub fn gray_to_rgb(image: &Raster<f64>) -> Raster<[u8; 3]> {
    image.map(|&v| {
        let q = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        [q, q, q]
    })
}

/// One-pixel outline of an inclusive bounding box.
pub fn draw_box(img: &mut Raster<[u8; 3]>, bbox: (usize, usize, usize, usize), color: [u8; 3]) {
    let (x0, y0, x1, y1) = bbox;
    for x in x0..=x1 {
        *img.get_mut(x, y0) = color;
        *img.get_mut(x, y1) = color;
    }
    for y in y0..=y1 {
        *img.get_mut(x0, y) = color;
        *img.get_mut(x1, y) = color;
    }
}

pub fn objects_overlay(base: &Raster<f64>, objects: &[ObjectStats]) -> Raster<[u8; 3]> {
    let mut img = gray_to_rgb(base);
    for o in objects {
        draw_box(&mut img, o.bbox, GREEN);
    }
    img
}

/// Matched predictions in green, unmatched predictions in red, missed
/// targets in blue.
pub fn evaluation_overlay(base: &Raster<f64>, eval: &ImageEvaluation) -> Raster<[u8; 3]> {
    let mut img = gray_to_rgb(base);
    for p in &eval.outcome.pairs {
        draw_box(&mut img, eval.predicted[p.predicted].bbox, GREEN);
    }
    for &i in &eval.outcome.false_positives {
        draw_box(&mut img, eval.predicted[i].bbox, RED);
    }
    for &i in &eval.outcome.false_negatives {
        draw_box(&mut img, eval.targets[i].bbox, BLUE);
    }
    img
}
