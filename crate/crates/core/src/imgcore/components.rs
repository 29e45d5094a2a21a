use alloc::vec;
use alloc::vec::Vec;

use super::raster::{BinaryMask, LabelMap, Raster};

/// Pixel adjacency used for foreground regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    /// Neighbor offsets `(dx, dy)`.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }

    /// Offsets of already-visited neighbors in a row-major scan.
    fn causal_offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0)],
            Connectivity::Eight => &[(-1, -1), (0, -1), (1, -1), (-1, 0)],
        }
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        // slot 0 is the background and never joined
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller id as root so roots follow scan order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels maximal connected foreground regions.
///
/// Two-pass union-find. Final labels follow row-major first encounter: the
/// region containing the first foreground pixel of the scan is 1, and so on.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let mut provisional = vec![0u32; w * h];
    let mut sets = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) {
                continue;
            }
            let mut current = 0u32;
            for &(dx, dy) in connectivity.causal_offsets() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx as usize >= w {
                    continue;
                }
                let l = provisional[ny as usize * w + nx as usize];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else if current != l {
                    sets.union(current, l);
                }
            }
            if current == 0 {
                current = sets.make();
            }
            provisional[y * w + x] = current;
        }
    }

    let mut final_id = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    for l in provisional.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if final_id[root] == 0 {
            count += 1;
            final_id[root] = count;
        }
        *l = final_id[root];
    }

    LabelMap::from_compact(Raster::from_vec(w, h, provisional).unwrap(), count)
}

/// Area, centroid and bounding box of one labeled object.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectStats {
    pub label: u32,
    pub area: usize,
    /// Mean pixel coordinate `(x, y)`, pixel centers at integer positions.
    pub centroid: (f64, f64),
    /// Inclusive `(x_min, y_min, x_max, y_max)`.
    pub bbox: (usize, usize, usize, usize),
}

/// One record per positive label, sorted by label.
pub fn object_stats(lm: &LabelMap) -> Vec<ObjectStats> {
    let n = lm.object_count() as usize;
    let mut area = vec![0usize; n];
    let mut sum = vec![(0f64, 0f64); n];
    let mut bbox = vec![(usize::MAX, usize::MAX, 0usize, 0usize); n];
    for (x, y, &l) in lm.labels().enumerate() {
        if l == 0 {
            continue;
        }
        let i = (l - 1) as usize;
        area[i] += 1;
        sum[i].0 += x as f64;
        sum[i].1 += y as f64;
        let b = &mut bbox[i];
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
    }
    (0..n)
        .map(|i| ObjectStats {
            label: i as u32 + 1,
            area: area[i],
            centroid: (sum[i].0 / area[i] as f64, sum[i].1 / area[i] as f64),
            bbox: bbox[i],
        })
        .collect()
}
