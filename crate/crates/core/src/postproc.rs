//! From probability map to counted objects: threshold, drop specks, fill
//! holes, then split touching cells with a marker-controlled watershed on the
//! distance transform.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::imgcore::{
    connected_components, distance_transform, fill_holes, remove_small, threshold, BinaryMask,
    Connectivity, LabelMap, ProbabilityMap, Raster,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PostprocConfig {
    /// Binarization cutoff; pixels strictly above it are foreground.
    pub threshold: f64,
    /// Components smaller than this many pixels are discarded.
    pub min_area: usize,
    /// Minimum separation between watershed markers, in pixels.
    pub cell_radius: f64,
    pub split_enabled: bool,
    /// Foreground adjacency for cleaning and unsplit counting.
    pub connectivity: Connectivity,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        Self {
            threshold: 0.55,
            min_area: 30,
            cell_radius: 25.0,
            split_enabled: true,
            connectivity: Connectivity::Eight,
        }
    }
}

impl PostprocConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(invalid(
                "threshold",
                format!("must be in [0, 1], got {}", self.threshold),
            ));
        }
        if !(self.cell_radius >= 1.0 && self.cell_radius.is_finite()) {
            return Err(invalid(
                "cell_radius",
                format!("must be at least 1, got {}", self.cell_radius),
            ));
        }
        Ok(())
    }
}

/// Removes components below `min_area`, then fills holes.
pub fn clean(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    clean_with(mask, min_area, Connectivity::Eight)
}

fn clean_with(mask: &BinaryMask, min_area: usize, connectivity: Connectivity) -> BinaryMask {
    fill_holes(&remove_small(mask, min_area, connectivity))
}

/// Distance transform treating everything beyond the image edge as
/// background, so objects cut by the edge still peak inside the image.
fn edge_aware_distance(mask: &BinaryMask) -> Raster<f64> {
    let (w, h) = (mask.width(), mask.height());
    let padded = Raster::from_fn(w + 2, h + 2, |x, y| {
        x >= 1 && y >= 1 && x <= w && y <= h && *mask.get(x - 1, y - 1)
    })
    .unwrap();
    let d = distance_transform(&padded).values;
    Raster::from_fn(w, h, |x, y| *d.get(x + 1, y + 1)).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FloodEntry {
    elevation: f64,
    age: u64,
    label: u32,
    index: usize,
}

impl Eq for FloodEntry {}

impl Ord for FloodEntry {
    // max-heap: highest distance first, then first pushed
    fn cmp(&self, other: &Self) -> Ordering {
        self.elevation
            .total_cmp(&other.elevation)
            .then_with(|| other.age.cmp(&self.age))
    }
}

impl PartialOrd for FloodEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Positions of the distance-transform peaks used as watershed markers, in
/// acceptance order.
///
/// A foreground pixel is a candidate when no pixel of its own component within
/// `cell_radius` has a larger distance value. Candidates are visited by
/// decreasing distance (row-major order on ties) and kept unless an already
/// kept marker of the same component lies within `cell_radius`. Every
/// component therefore gets at least one marker.
pub fn watershed_markers(mask: &BinaryMask, cell_radius: f64) -> Vec<(usize, usize)> {
    let dist = edge_aware_distance(mask);
    let components = connected_components(mask, Connectivity::Eight);
    markers_from(&dist, &components, cell_radius)
}

fn markers_from(dist: &Raster<f64>, components: &LabelMap, cell_radius: f64) -> Vec<(usize, usize)> {
    let comp = components.labels();
    let r = libm::floor(cell_radius) as isize;
    let r2 = cell_radius * cell_radius;
    let disc: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| (dx * dx + dy * dy) as f64 <= r2 && (dx, dy) != (0, 0))
        .collect();

    let dominated = |x: usize, y: usize, offsets: &[(isize, isize)]| {
        let (c, d) = (*comp.get(x, y), *dist.get(x, y));
        offsets.iter().any(|&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            comp.try_get(nx, ny) == Some(&c) && *dist.get(nx as usize, ny as usize) > d
        })
    };

    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for (x, y, &c) in comp.enumerate() {
        if c == 0 {
            continue;
        }
        // cheap 8-neighbor test first, the full disc only for survivors
        if dominated(x, y, Connectivity::Eight.offsets()) || dominated(x, y, &disc) {
            continue;
        }
        candidates.push((*dist.get(x, y), comp.index(x, y)));
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let w = comp.width();
    let mut kept: Vec<Vec<(usize, usize)>> = vec![Vec::new(); components.object_count() as usize + 1];
    let mut markers = Vec::new();
    for (_, idx) in candidates {
        let (x, y) = (idx % w, idx / w);
        let c = comp.as_slice()[idx] as usize;
        let near = kept[c].iter().any(|&(mx, my)| {
            let (dx, dy) = (mx as f64 - x as f64, my as f64 - y as f64);
            dx * dx + dy * dy <= r2
        });
        if !near {
            kept[c].push((x, y));
            markers.push((x, y));
        }
    }
    markers
}

/// Splits touching objects by flooding the negated distance transform from
/// its peaks.
///
/// Markers come from [`watershed_markers`]. Pixels are claimed in order of
/// decreasing distance value; equal values are served first-in first-out,
/// with markers queued in acceptance order and neighbors in a fixed scan
/// order. Flooding never leaves the mask, so the
/// union of the output labels is exactly the input foreground. Labels are
/// renumbered in row-major first-encounter order.
pub fn watershed_split(mask: &BinaryMask, cell_radius: f64) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let dist = edge_aware_distance(mask);
    let components = connected_components(mask, Connectivity::Eight);
    let markers = markers_from(&dist, &components, cell_radius);

    let mut labels = vec![0u32; w * h];
    let mut expanded = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    let mut age = 0u64;
    for (k, &(x, y)) in markers.iter().enumerate() {
        let index = y * w + x;
        let label = k as u32 + 1;
        labels[index] = label;
        heap.push(FloodEntry {
            elevation: *dist.get(x, y),
            age,
            label,
            index,
        });
        age += 1;
    }
    while let Some(FloodEntry { label, index, .. }) = heap.pop() {
        if expanded[index] {
            continue;
        }
        if labels[index] == 0 {
            labels[index] = label;
        } else if labels[index] != label {
            continue;
        }
        expanded[index] = true;
        let (x, y) = ((index % w) as isize, (index / w) as isize);
        for &(dx, dy) in Connectivity::Eight.offsets() {
            let (nx, ny) = (x + dx, y + dy);
            if mask.try_get(nx, ny) != Some(&true) {
                continue;
            }
            let n = ny as usize * w + nx as usize;
            if labels[n] == 0 && !expanded[n] {
                heap.push(FloodEntry {
                    elevation: dist.as_slice()[n],
                    age,
                    label,
                    index: n,
                });
                age += 1;
            }
        }
    }
    LabelMap::compact(&Raster::from_vec(w, h, labels).unwrap())
}

/// Threshold, clean, then split (or plain component labeling when splitting
/// is disabled).
pub fn postprocess(p: &ProbabilityMap, cfg: &PostprocConfig) -> Result<LabelMap> {
    cfg.validate()?;
    let binary = threshold(p, cfg.threshold);
    let cleaned = clean_with(&binary, cfg.min_area, cfg.connectivity);
    Ok(if cfg.split_enabled {
        watershed_split(&cleaned, cfg.cell_radius)
    } else {
        connected_components(&cleaned, cfg.connectivity)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::object_stats;

    pub(crate) fn discs(w: usize, h: usize, centers: &[(f64, f64)], r: f64) -> BinaryMask {
        Raster::from_fn(w, h, |x, y| {
            centers.iter().any(|&(cx, cy)| {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                dx * dx + dy * dy <= r * r
            })
        })
        .unwrap()
    }

    #[test]
    fn clean_removes_specks_and_fills_rings() {
        let mut m = BinaryMask::filled(60, 60, false).unwrap();
        *m.get_mut(1, 1) = true;
        *m.get_mut(2, 1) = true;
        *m.get_mut(1, 2) = true;
        let ring = Raster::from_fn(60, 60, |x, y| {
            let d2 = (x as f64 - 30.0).powi(2) + (y as f64 - 30.0).powi(2);
            d2 <= 15.0 * 15.0 && d2 > 7.0 * 7.0
        })
        .unwrap();
        for (i, v) in m.as_mut_slice().iter_mut().enumerate() {
            *v |= ring.as_slice()[i];
        }
        let cleaned = clean(&m, 30);
        assert_eq!(cleaned, discs(60, 60, &[(30.0, 30.0)], 15.0));
        let empty = BinaryMask::filled(5, 5, false).unwrap();
        assert_eq!(clean(&empty, 30), empty);
    }

    #[test]
    fn single_disc_is_one_object() {
        let m = discs(80, 80, &[(40.0, 40.0)], 25.0);
        let lm = watershed_split(&m, 25.0);
        assert_eq!(lm.object_count(), 1);
        assert_eq!(lm.foreground(), m);
    }

    #[test]
    fn overlapping_discs_far_apart_split() {
        let m = discs(160, 80, &[(50.0, 40.0), (110.0, 40.0)], 25.0);
        let lm = watershed_split(&m, 25.0);
        assert_eq!(lm.object_count(), 2);
        assert_eq!(lm.foreground(), m);
    }

    #[test]
    fn truly_overlapping_discs_split_at_the_neck() {
        let m = discs(160, 80, &[(60.0, 40.0), (100.0, 40.0)], 25.0);
        assert_eq!(connected_components(&m, Connectivity::Eight).object_count(), 1);
        let lm = watershed_split(&m, 25.0);
        assert_eq!(lm.object_count(), 2);
        assert_eq!(lm.foreground(), m);
        let stats = object_stats(&lm);
        assert!((stats[0].centroid.0 - 57.0).abs() < 4.0, "{:?}", stats[0]);
        assert!((stats[1].centroid.0 - 103.0).abs() < 4.0, "{:?}", stats[1]);
        assert!((stats[0].area as i64 - stats[1].area as i64).abs() < 40);
    }

    #[test]
    fn overlapping_discs_close_together_merge() {
        let m = discs(120, 80, &[(56.0, 40.0), (64.0, 40.0)], 25.0);
        let lm = watershed_split(&m, 25.0);
        assert_eq!(lm.object_count(), 1);
        assert_eq!(lm.foreground(), m);
    }

    #[test]
    fn empty_and_full_masks() {
        let e = BinaryMask::filled(10, 10, false).unwrap();
        assert_eq!(watershed_split(&e, 25.0).object_count(), 0);
        let f = BinaryMask::filled(10, 10, true).unwrap();
        let lm = watershed_split(&f, 25.0);
        assert_eq!(lm.object_count(), 1);
        assert_eq!(lm.foreground(), f);
    }

    #[test]
    fn tiny_components_each_get_a_marker() {
        let mut m = BinaryMask::filled(10, 3, false).unwrap();
        for x in [0, 2, 4, 6, 8] {
            *m.get_mut(x, 1) = true;
        }
        let lm = watershed_split(&m, 25.0);
        assert_eq!(lm.object_count(), 5);
    }

    #[test]
    fn postprocess_zero_heatmap() {
        let p = ProbabilityMap::constant(50, 40, 0.0).unwrap();
        assert_eq!(postprocess(&p, &PostprocConfig::default()).unwrap().object_count(), 0);
    }

    #[test]
    fn postprocess_counts_disjoint_cells() {
        let m = discs(200, 100, &[(30.0, 30.0), (100.0, 50.0), (170.0, 60.0)], 20.0);
        let p = ProbabilityMap::new(m.map(|&b| if b { 1.0 } else { 0.0 })).unwrap();
        let cfg = PostprocConfig {
            threshold: 0.5,
            ..Default::default()
        };
        assert_eq!(postprocess(&p, &cfg).unwrap().object_count(), 3);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = ProbabilityMap::constant(5, 5, 0.0).unwrap();
        for cfg in [
            PostprocConfig { threshold: 1.5, ..Default::default() },
            PostprocConfig { threshold: -0.1, ..Default::default() },
            PostprocConfig { cell_radius: 0.5, ..Default::default() },
        ] {
            assert!(postprocess(&p, &cfg).is_err());
        }
    }
}
