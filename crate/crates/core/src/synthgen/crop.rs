use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, Raster};

pub const DEFAULT_CROP: usize = 512;

/// Top-left corner of a square crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CropWindow {
    pub x: usize,
    pub y: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crop<T> {
    pub window: CropWindow,
    pub image: Raster<T>,
    pub mask: BinaryMask,
}

/// Fewest offsets covering `0..len` with windows of `crop`, spread so the
/// overlaps are as even as integer positions allow.
fn offsets(len: usize, crop: usize) -> Vec<usize> {
    let n = len.div_ceil(crop);
    if n <= 1 {
        return alloc::vec![0];
    }
    let span = (len - crop) as f64;
    (0..n)
        .map(|i| libm::round(i as f64 * span / (n - 1) as f64) as usize)
        .collect()
}

/// Row-major grid of windows covering a `width`×`height` image.
pub fn crop_windows(width: usize, height: usize, crop: usize) -> Result<Vec<CropWindow>> {
    if crop == 0 || width < crop || height < crop {
        return Err(Error::ImageTooSmall { width, height, crop });
    }
    let xs = offsets(width, crop);
    Ok(offsets(height, crop)
        .into_iter()
        .flat_map(|y| xs.iter().map(move |&x| CropWindow { x, y, size: crop }))
        .collect())
}

/// Cuts matching image/mask crops on the `crop_windows` grid.
pub fn crop_grid<T: Clone>(image: &Raster<T>, mask: &BinaryMask, crop: usize) -> Result<Vec<Crop<T>>> {
    image.ensure_same_dims(mask)?;
    crop_windows(image.width(), image.height(), crop)?
        .into_iter()
        .map(|window| {
            Ok(Crop {
                window,
                image: image.crop(window.x, window.y, crop, crop)?,
                mask: mask.crop(window.x, window.y, crop, crop)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_crops_for_full_frames() {
        let w = crop_windows(1600, 1200, 512).unwrap();
        assert_eq!(w.len(), 12);
        let xs: Vec<usize> = w[..4].iter().map(|c| c.x).collect();
        assert_eq!(xs, [0, 363, 725, 1088]);
        let ys: Vec<usize> = w.iter().step_by(4).map(|c| c.y).collect();
        assert_eq!(ys, [0, 344, 688]);
    }

    #[test]
    fn exact_fit_is_identity() {
        let img = Raster::from_fn(512, 512, |x, y| (x ^ y) as u16).unwrap();
        let mask = img.map(|&v| v % 3 == 0);
        let crops = crop_grid(&img, &mask, 512).unwrap();
        assert_eq!(crops.len(), 1);
        assert_eq!((crops[0].image.clone(), crops[0].mask.clone()), (img, mask));
    }

    #[test]
    fn crops_cover_and_stay_inside() {
        for (w, h) in [(513, 600), (1600, 1200), (700, 1900), (1024, 512)] {
            let mut covered = alloc::vec![false; w * h];
            for c in crop_windows(w, h, 512).unwrap() {
                assert!(c.x + 512 <= w && c.y + 512 <= h);
                for y in c.y..c.y + 512 {
                    covered[y * w + c.x..y * w + c.x + 512].iter_mut().for_each(|v| *v = true);
                }
            }
            assert!(covered.iter().all(|&v| v), "{w}x{h}");
        }
    }

    #[test]
    fn crop_contents_match_source() {
        let img = Raster::from_fn(600, 520, |x, y| (x * 1000 + y) as u32).unwrap();
        let mask = img.map(|&v| v % 2 == 0);
        for c in crop_grid(&img, &mask, 512).unwrap() {
            assert_eq!(*c.image.get(5, 7), ((c.window.x + 5) * 1000 + c.window.y + 7) as u32);
            assert_eq!(*c.mask.get(0, 0), *mask.get(c.window.x, c.window.y));
        }
    }

    #[test]
    fn too_small() {
        assert_eq!(
            crop_windows(511, 600, 512),
            Err(Error::ImageTooSmall {
                width: 511,
                height: 600,
                crop: 512
            })
        );
    }
}
