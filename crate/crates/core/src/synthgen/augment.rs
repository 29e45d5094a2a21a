use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::filter::gaussian_blur_zero_padded;
use super::rng;
use crate::error::{invalid, Result};
use crate::imgcore::{BinaryMask, Raster};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AugmentKind {
    /// `k` clockwise quarter turns.
    Rot90 { k: u32 },
    GaussianNoise { sigma: f64 },
    Brightness { scale: f64 },
    /// Random unit displacements smoothed by a Gaussian of width `sigma`
    /// and scaled by `alpha`.
    Elastic { alpha: f64, sigma: f64 },
}

impl AugmentKind {
    pub fn elastic_default() -> Self {
        Self::Elastic {
            alpha: 300.0,
            sigma: 10.0,
        }
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self, Self::Rot90 { .. } | Self::Elastic { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name, v: f64, strict: bool| {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(invalid(name, format!("out of range: {v}")))
            }
        };
        match *self {
            Self::Rot90 { .. } => Ok(()),
            Self::GaussianNoise { sigma } => check("sigma", sigma, false),
            Self::Brightness { scale } => check("scale", scale, false),
            Self::Elastic { alpha, sigma } => {
                check("alpha", alpha, false)?;
                check("sigma", sigma, true)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AugmentOp {
    pub kind: AugmentKind,
    pub seed: u64,
}

impl AugmentOp {
    pub fn new(kind: AugmentKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

/// Applies one augmentation. Geometric ops move image and mask together;
/// photometric ops leave the mask untouched. Intensities are clamped to
/// `[0, 1]`.
pub fn apply_augment(image: &Raster<f64>, mask: &BinaryMask, op: &AugmentOp) -> Result<(Raster<f64>, BinaryMask)> {
    image.ensure_same_dims(mask)?;
    op.kind.validate()?;
    Ok(match op.kind {
        AugmentKind::Rot90 { k } => (image.rot90(k), mask.rot90(k)),
        AugmentKind::GaussianNoise { sigma } => {
            if sigma == 0.0 {
                return Ok((image.clone(), mask.clone()));
            }
            let mut rng = rng(op.seed);
            let normal = Normal::new(0.0, sigma).map_err(|_| invalid("sigma", "invalid"))?;
            let noisy = image.map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0));
            (noisy, mask.clone())
        }
        AugmentKind::Brightness { scale } => (image.map(|&v| (v * scale).clamp(0.0, 1.0)), mask.clone()),
        AugmentKind::Elastic { alpha, sigma } => elastic(image, mask, alpha, sigma, op.seed),
    })
}

fn elastic(image: &Raster<f64>, mask: &BinaryMask, alpha: f64, sigma: f64, seed: u64) -> (Raster<f64>, BinaryMask) {
    if alpha == 0.0 {
        return (image.clone(), mask.clone());
    }
    let (w, h) = (image.width(), image.height());
    let mut rng = rng(seed);
    let mut field = || {
        let noise: Vec<f64> = (0..w * h).map(|_| rng.random_range(-1.0..=1.0)).collect();
        gaussian_blur_zero_padded(&Raster::from_vec(w, h, noise).unwrap(), sigma).map(|&d| d * alpha)
    };
    let dx = field();
    let dy = field();

    let (wf, hf) = ((w - 1) as f64, (h - 1) as f64);
    // samples that leave the frame read as empty background
    let source = |x: usize, y: usize| {
        let sx = x as f64 + dx.get(x, y);
        let sy = y as f64 + dy.get(x, y);
        ((0.0..=wf).contains(&sx) && (0.0..=hf).contains(&sy)).then_some((sx, sy))
    };
    let warped = Raster::from_fn(w, h, |x, y| source(x, y).map_or(0.0, |(sx, sy)| bilinear(image, sx, sy))).unwrap();
    let warped_mask = Raster::from_fn(w, h, |x, y| {
        source(x, y).is_some_and(|(sx, sy)| *mask.get(libm::round(sx) as usize, libm::round(sy) as usize))
    })
    .unwrap();
    (warped, warped_mask)
}

fn bilinear(r: &Raster<f64>, x: f64, y: f64) -> f64 {
    let (x0, y0) = (libm::floor(x) as usize, libm::floor(y) as usize);
    let (x1, y1) = ((x0 + 1).min(r.width() - 1), (y0 + 1).min(r.height() - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = r.get(x0, y0) * (1.0 - fx) + r.get(x1, y0) * fx;
    let bottom = r.get(x0, y1) * (1.0 - fx) + r.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{connected_components, Connectivity};
    use crate::synthgen::{generate_scene, SceneConfig};

    fn fixture() -> (Raster<f64>, BinaryMask) {
        let img = Raster::from_fn(7, 5, |x, y| ((x * 5 + y) as f64) / 40.0).unwrap();
        let mask = img.map(|&v| v > 0.4);
        (img, mask)
    }

    fn op(kind: AugmentKind) -> AugmentOp {
        AugmentOp::new(kind, 11)
    }

    #[test]
    fn identities() {
        let (img, mask) = fixture();
        for kind in [
            AugmentKind::Rot90 { k: 4 },
            AugmentKind::Rot90 { k: 0 },
            AugmentKind::Brightness { scale: 1.0 },
            AugmentKind::GaussianNoise { sigma: 0.0 },
            AugmentKind::Elastic { alpha: 0.0, sigma: 10.0 },
        ] {
            assert_eq!(apply_augment(&img, &mask, &op(kind)).unwrap(), (img.clone(), mask.clone()), "{kind:?}");
        }
    }

    #[test]
    fn rotation_moves_both() {
        let (img, mask) = fixture();
        let (ri, rm) = apply_augment(&img, &mask, &op(AugmentKind::Rot90 { k: 1 })).unwrap();
        assert_eq!((ri.width(), ri.height()), (5, 7));
        assert_eq!(ri, img.rot90(1));
        assert_eq!(rm, mask.rot90(1));
    }

    #[test]
    fn photometric_ops_keep_mask() {
        let (img, mask) = fixture();
        let (bi, bm) = apply_augment(&img, &mask, &op(AugmentKind::Brightness { scale: 2.0 })).unwrap();
        assert_eq!(bm, mask);
        assert_eq!(*bi.get(1, 0), 0.25);
        assert_eq!(*bi.get(6, 4), 1.0);
        let (ni, nm) = apply_augment(&img, &mask, &op(AugmentKind::GaussianNoise { sigma: 0.1 })).unwrap();
        assert_eq!(nm, mask);
        assert_ne!(ni, img);
        assert_eq!(ni, apply_augment(&img, &mask, &op(AugmentKind::GaussianNoise { sigma: 0.1 })).unwrap().0);
    }

    #[test]
    fn rejects_bad_input() {
        let (img, mask) = fixture();
        assert!(apply_augment(&img, &mask.rot90(1), &op(AugmentKind::Rot90 { k: 1 })).is_err());
        assert!(apply_augment(&img, &mask, &op(AugmentKind::Brightness { scale: -1.0 })).is_err());
        assert!(apply_augment(&img, &mask, &op(AugmentKind::Elastic { alpha: 1.0, sigma: 0.0 })).is_err());
    }

    #[test]
    fn elastic_preserves_cell_count() {
        let cfg = SceneConfig {
            cell_count: 12,
            clump_probability: 0.0,
            ..SceneConfig::default()
        };
        for seed in 0..4 {
            let s = generate_scene(&cfg, seed).unwrap();
            let (wi, wm) = apply_augment(&s.image, &s.mask, &op(AugmentKind::Elastic { alpha: 300.0, sigma: 10.0 })).unwrap();
            assert_ne!(wm, s.mask);
            assert!(wi.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(connected_components(&wm, Connectivity::Eight).object_count(), 12, "seed {seed}");
        }
    }
}
