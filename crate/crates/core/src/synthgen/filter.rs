use alloc::vec::Vec;

use crate::imgcore::Raster;

/// Separable Gaussian blur, kernel truncated at 4σ, edges replicated.
/// `sigma <= 0` returns the input unchanged.
pub fn gaussian_blur(src: &Raster<f64>, sigma: f64) -> Raster<f64> {
    blur(src, sigma, true)
}

/// Same kernel, but everything outside the raster counts as zero.
pub(crate) fn gaussian_blur_zero_padded(src: &Raster<f64>, sigma: f64) -> Raster<f64> {
    blur(src, sigma, false)
}

fn blur(src: &Raster<f64>, sigma: f64, replicate: bool) -> Raster<f64> {
    if !(sigma > 0.0) {
        return src.clone();
    }
    let radius = libm::ceil(4.0 * sigma) as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h) = (src.width() as isize, src.height() as isize);
    let at = |v: isize, n: isize| {
        if replicate {
            Some(v.clamp(0, n - 1) as usize)
        } else {
            (0..n).contains(&v).then_some(v as usize)
        }
    };
    let horizontal = Raster::from_fn(src.width(), src.height(), |x, y| {
        kernel
            .iter()
            .zip(-radius..=radius)
            .filter_map(|(k, d)| at(x as isize + d, w).map(|x| k * src.get(x, y)))
            .sum()
    })
    .unwrap();
    Raster::from_fn(src.width(), src.height(), |x, y| {
        kernel
            .iter()
            .zip(-radius..=radius)
            .filter_map(|(k, d)| at(y as isize + d, h).map(|y| k * horizontal.get(x, y)))
            .sum()
    })
    .unwrap()
}
