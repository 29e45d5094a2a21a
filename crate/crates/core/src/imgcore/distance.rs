//! Exact Euclidean distance transform.
//!
//! Separable lower-envelope-of-parabolas method: one pass down the columns,
//! one along the rows, both on squared distances. Distances are between pixel
//! centers and exact up to the final square root.

use alloc::vec;
use alloc::vec::Vec;

use super::raster::{BinaryMask, Raster};

/// Output of [`distance_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub values: Raster<f64>,
    /// Set when the mask has no background pixel; every value is then
    /// `f64::INFINITY`.
    pub degenerate: bool,
}

/// Distance from every pixel to the nearest background (`false`) pixel.
pub fn distance_transform(mask: &BinaryMask) -> DistanceField {
    let background = mask.map(|&v| !v);
    let degenerate = background.count_foreground() == 0;
    let mut values = squared_distance_to(&background);
    for v in values.as_mut_slice() {
        *v = libm::sqrt(*v);
    }
    DistanceField { values, degenerate }
}

/// Squared distance from every pixel to the nearest `true` pixel of `seeds`,
/// or `f64::INFINITY` when there is none.
pub fn squared_distance_to(seeds: &BinaryMask) -> Raster<f64> {
    let (w, h) = (seeds.width(), seeds.height());
    let mut out: Vec<f64> = seeds
        .as_slice()
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();

    let n = w.max(h);
    let mut scratch = Envelope::with_capacity(n);
    let mut line = vec![0.0; n];
    let mut result = vec![0.0; n];

    for x in 0..w {
        for y in 0..h {
            line[y] = out[y * w + x];
        }
        scratch.transform(&line[..h], &mut result[..h]);
        for y in 0..h {
            out[y * w + x] = result[y];
        }
    }
    for y in 0..h {
        let row = &mut out[y * w..(y + 1) * w];
        line[..w].copy_from_slice(row);
        scratch.transform(&line[..w], &mut result[..w]);
        row.copy_from_slice(&result[..w]);
    }

    Raster::from_vec(w, h, out).unwrap()
}

struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// 1-D squared distance transform of the sampled function `f`.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.vertices.clear();
        self.bounds.clear();
        for (q, &fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            loop {
                let Some(&p) = self.vertices.last() else {
                    self.vertices.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let s = intersection(f, p, q);
                if s <= *self.bounds.last().unwrap() {
                    self.vertices.pop();
                    self.bounds.pop();
                } else {
                    self.vertices.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.vertices.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.vertices.len() && self.bounds[k + 1] < qf {
                k += 1;
            }
            let p = self.vertices[k];
            let d = qf - p as f64;
            *o = d * d + f[p];
        }
    }
}

fn intersection(f: &[f64], p: usize, q: usize) -> f64 {
    let (pf, qf) = (p as f64, q as f64);
    ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(seeds: &BinaryMask) -> Raster<f64> {
        let pts: Vec<(f64, f64)> = seeds
            .enumerate()
            .filter(|(_, _, &s)| s)
            .map(|(x, y, _)| (x as f64, y as f64))
            .collect();
        Raster::from_fn(seeds.width(), seeds.height(), |x, y| {
            pts.iter()
                .map(|&(px, py)| {
                    let (dx, dy) = (px - x as f64, py - y as f64);
                    dx * dx + dy * dy
                })
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap()
    }

    #[test]
    fn one_by_three() {
        let m = BinaryMask::from_bits(3, 1, &[0, 1, 1]).unwrap();
        let d = distance_transform(&m);
        assert!(!d.degenerate);
        assert_eq!(d.values.as_slice(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn corner_seed() {
        let m = BinaryMask::from_bits(3, 3, &[0, 1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        let d = distance_transform(&m);
        assert!((d.values.get(2, 2) - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn all_foreground_is_flagged() {
        let m = BinaryMask::filled(4, 3, true).unwrap();
        let d = distance_transform(&m);
        assert!(d.degenerate);
        assert!(d.values.as_slice().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn all_background_is_zero() {
        let d = distance_transform(&BinaryMask::filled(4, 3, false).unwrap());
        assert!(d.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_brute_force_on_sparse_seeds() {
        let seeds = Raster::from_fn(17, 11, |x, y| (x * 7 + y * 13) % 29 == 0).unwrap();
        let fast = squared_distance_to(&seeds);
        let slow = brute(&seeds);
        assert_eq!(fast, slow);
    }
}
