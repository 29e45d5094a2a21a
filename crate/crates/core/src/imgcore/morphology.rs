use alloc::vec;
use alloc::vec::Vec;

use super::components::{connected_components, Connectivity};
use super::raster::{BinaryMask, ProbabilityMap};

/// Fills background regions that are not 4-connected to the image border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, stack: &mut Vec<(usize, usize)>| {
        let i = y * w + x;
        if !mask.as_slice()[i] && !outside[i] {
            outside[i] = true;
            stack.push((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut stack);
        seed(x, h - 1, &mut outside, &mut stack);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut stack);
        seed(w - 1, y, &mut outside, &mut stack);
    }
    while let Some((x, y)) = stack.pop() {
        for &(dx, dy) in Connectivity::Four.offsets() {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            seed(nx as usize, ny as usize, &mut outside, &mut stack);
        }
    }
    let mut out = mask.clone();
    for (v, &o) in out.as_mut_slice().iter_mut().zip(&outside) {
        *v = !o;
    }
    out
}

/// Drops connected components with fewer than `min_area` pixels.
pub fn remove_small(mask: &BinaryMask, min_area: usize, connectivity: Connectivity) -> BinaryMask {
    if min_area <= 1 {
        return mask.clone();
    }
    let lm = connected_components(mask, connectivity);
    let mut area = vec![0usize; lm.object_count() as usize + 1];
    for &l in lm.labels().as_slice() {
        area[l as usize] += 1;
    }
    lm.labels().map(|&l| l != 0 && area[l as usize] >= min_area)
}

/// Foreground where the probability is strictly above `t`.
pub fn threshold(p: &ProbabilityMap, t: f64) -> BinaryMask {
    p.raster().map(|&v| v > t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::Raster;

    fn annulus(size: usize, r_in: f64, r_out: f64) -> BinaryMask {
        let c = (size / 2) as f64;
        Raster::from_fn(size, size, |x, y| {
            let d2 = (x as f64 - c) * (x as f64 - c) + (y as f64 - c) * (y as f64 - c);
            d2 <= r_out * r_out && (r_in < 0.0 || d2 > r_in * r_in)
        })
        .unwrap()
    }

    fn disc(size: usize, r: f64) -> BinaryMask {
        annulus(size, -1.0, r)
    }

    #[test]
    fn fills_annulus_to_disc() {
        let ring = annulus(41, 8.0, 15.0);
        assert_eq!(fill_holes(&ring), disc(41, 15.0));
    }

    #[test]
    fn fill_holes_is_identity_on_solid_and_empty() {
        let d = disc(31, 10.0);
        assert_eq!(fill_holes(&d), d);
        let e = BinaryMask::filled(7, 5, false).unwrap();
        assert_eq!(fill_holes(&e), e);
    }

    #[test]
    fn diagonal_gap_does_not_leak() {
        // the hole touches the outside only through a diagonal step
        #[rustfmt::skip]
        let m = BinaryMask::from_bits(4, 4, &[
            1, 1, 1, 0,
            1, 0, 1, 1,
            1, 1, 1, 1,
            1, 1, 1, 1,
        ]).unwrap();
        let filled = fill_holes(&m);
        assert!(*filled.get(1, 1));
        assert!(!*filled.get(3, 0));
    }

    fn blob(m: &mut BinaryMask, x0: usize, y0: usize, n: usize) {
        for i in 0..n {
            *m.get_mut(x0 + i % 8, y0 + i / 8) = true;
        }
    }

    #[test]
    fn remove_small_boundary_is_inclusive() {
        let mut m = BinaryMask::filled(20, 20, false).unwrap();
        blob(&mut m, 2, 2, 5);
        assert_eq!(remove_small(&m, 6, Connectivity::Eight).count_foreground(), 0);
        assert_eq!(remove_small(&m, 5, Connectivity::Eight), m);
    }

    #[test]
    fn remove_small_keeps_large_blob_exactly() {
        let mut m = BinaryMask::filled(30, 30, false).unwrap();
        blob(&mut m, 1, 1, 3);
        let mut big = BinaryMask::filled(30, 30, false).unwrap();
        blob(&mut big, 10, 10, 40);
        blob(&mut m, 10, 10, 40);
        assert_eq!(remove_small(&m, 10, Connectivity::Eight), big);
    }

    #[test]
    fn threshold_is_strict() {
        let at = ProbabilityMap::constant(3, 3, 0.55).unwrap();
        assert_eq!(threshold(&at, 0.55).count_foreground(), 0);
        let above = ProbabilityMap::constant(3, 3, 0.56).unwrap();
        assert_eq!(threshold(&above, 0.55).count_foreground(), 9);
        let ones = ProbabilityMap::constant(3, 3, 1.0).unwrap();
        assert_eq!(threshold(&ones, 1.0).count_foreground(), 0);
        let mut r = Raster::filled(2, 1, 0.0).unwrap();
        *r.get_mut(1, 0) = 1e-9;
        let p = ProbabilityMap::new(r).unwrap();
        assert_eq!(threshold(&p, 0.0).as_slice(), &[false, true]);
    }
}
