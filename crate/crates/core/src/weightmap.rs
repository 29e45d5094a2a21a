//! Per-pixel loss weights that emphasise the borders between nearby cells,
//! and the weighted binary cross-entropy they feed.
//!
//! Every object contributes `exp(-d² / 2σ²)` at every pixel, `d` being the
//! distance to that object's border pixels. Contributions are summed over
//! objects, so pixels squeezed between several cells weigh more than pixels
//! next to a single one. A class base weight (cells vs background) is then
//! combined with the accumulated proximity term.

use alloc::format;

use crate::error::{invalid, Error, Result};
use crate::imgcore::{
    connected_components, object_stats, squared_distance_to, BinaryMask, Connectivity, LabelMap,
    ProbabilityMap, Raster,
};

/// Proximity fields are dropped beyond `CUTOFF_SIGMAS * sigma` from an
/// object's bounding box, where they fall below `exp(-18)`.
pub const CUTOFF_SIGMAS: f64 = 6.0;

/// Default clamp applied to predictions in [`weighted_bce`].
pub const DEFAULT_BCE_EPSILON: f64 = 1e-7;

/// How the class base weight and the proximity sum are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Combination {
    /// `base + proximity`
    #[default]
    Additive,
    /// `base * (1 + proximity)`
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightConfig {
    /// Decay length in pixels (average cell radius).
    pub sigma: f64,
    pub foreground_base: f64,
    pub background_base: f64,
    /// When false, cell pixels receive only their class base.
    pub include_foreground_proximity: bool,
    pub combination: Combination,
    /// Adjacency used to split the target mask into objects.
    pub connectivity: Connectivity,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            sigma: 25.0,
            foreground_base: 1.0,
            background_base: 1.5,
            include_foreground_proximity: true,
            combination: Combination::Additive,
            connectivity: Connectivity::Eight,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        for (name, v) in [
            ("foreground_base", self.foreground_base),
            ("background_base", self.background_base),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Positive per-pixel loss weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap(Raster<f64>);

impl WeightMap {
    pub fn new(weights: Raster<f64>) -> Result<Self> {
        if let Some((i, &w)) = weights
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(invalid("weights", format!("weight {w} at index {i} is not positive")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(width: usize, height: usize, w: f64) -> Result<Self> {
        Self::new(Raster::filled(width, height, w)?)
    }

    pub fn raster(&self) -> &Raster<f64> {
        &self.0
    }

    pub fn into_raster(self) -> Raster<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pixels of object `label` with at least one 4-neighbor outside the object.
/// Positions beyond the image edge count as outside.
pub fn object_border(lm: &LabelMap, label: u32) -> Result<BinaryMask> {
    if !lm.contains_label(label) {
        return Err(Error::InvalidLabel(label));
    }
    let labels = lm.labels();
    Ok(Raster::from_fn(lm.width(), lm.height(), |x, y| is_border(labels, label, x, y)).unwrap())
}

fn is_border(labels: &Raster<u32>, label: u32, x: usize, y: usize) -> bool {
    *labels.get(x, y) == label
        && Connectivity::Four
            .offsets()
            .iter()
            .any(|&(dx, dy)| labels.try_get(x as isize + dx, y as isize + dy) != Some(&label))
}

/// `exp(-d² / 2σ²)` at every pixel, `d` the distance to the nearest border pixel.
pub fn object_weight_field(border: &BinaryMask, sigma: f64) -> Result<Raster<f64>> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if border.count_foreground() == 0 {
        return Err(Error::EmptyBorder);
    }
    let denom = 2.0 * sigma * sigma;
    Ok(squared_distance_to(border).map(|&d2| libm::exp(-d2 / denom)))
}

/// Builds the weight map of a target mask.
///
/// Objects are the connected components of `target`. Each object's field is
/// evaluated on a window around its bounding box padded by
/// [`CUTOFF_SIGMAS`]`·σ`; the nearest border pixel always lies inside that
/// window, so values within it are exact.
pub fn build_weight_map(target: &BinaryMask, cfg: &WeightConfig) -> Result<WeightMap> {
    cfg.validate()?;
    let (w, h) = (target.width(), target.height());
    let lm = connected_components(target, cfg.connectivity);
    let mut proximity = Raster::filled(w, h, 0.0f64)?;
    let pad = libm::ceil(CUTOFF_SIGMAS * cfg.sigma) as usize;
    let denom = 2.0 * cfg.sigma * cfg.sigma;

    for obj in object_stats(&lm) {
        let (bx0, by0, bx1, by1) = obj.bbox;
        let x0 = bx0.saturating_sub(pad);
        let y0 = by0.saturating_sub(pad);
        let x1 = (bx1 + pad).min(w - 1);
        let y1 = (by1 + pad).min(h - 1);
        let labels = lm.labels();
        let label = obj.label;
        let border = Raster::from_fn(x1 - x0 + 1, y1 - y0 + 1, |x, y| {
            is_border(labels, label, x + x0, y + y0)
        })?;
        let d2 = squared_distance_to(&border);
        for (x, y, &d) in d2.enumerate() {
            *proximity.get_mut(x + x0, y + y0) += libm::exp(-d / denom);
        }
    }

    let weights = Raster::from_fn(w, h, |x, y| {
        let fg = *target.get(x, y);
        let base = if fg { cfg.foreground_base } else { cfg.background_base };
        let prox = if fg && !cfg.include_foreground_proximity {
            0.0
        } else {
            *proximity.get(x, y)
        };
        match cfg.combination {
            Combination::Additive => base + prox,
            Combination::Multiplicative => base * (1.0 + prox),
        }
    })?;
    WeightMap::new(weights)
}

/// Mean of `-w·(y·ln p + (1-y)·ln(1-p))` with `p` clamped to `[ε, 1-ε]`.
pub fn weighted_bce(
    target: &BinaryMask,
    prediction: &ProbabilityMap,
    weights: &WeightMap,
    epsilon: f64,
) -> Result<f64> {
    target.ensure_same_dims(prediction.raster())?;
    target.ensure_same_dims(weights.raster())?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid("epsilon", format!("must be in (0, 0.5), got {epsilon}")));
    }
    let sum: f64 = target
        .as_slice()
        .iter()
        .zip(prediction.raster().as_slice())
        .zip(weights.raster().as_slice())
        .map(|((&y, &p), &w)| {
            let p = p.clamp(epsilon, 1.0 - epsilon);
            let ll = if y { libm::log(p) } else { libm::log(1.0 - p) };
            -w * ll
        })
        .sum();
    Ok(sum / target.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn rect(m: &mut BinaryMask, x0: usize, y0: usize, x1: usize, y1: usize) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                *m.get_mut(x, y) = true;
            }
        }
    }

    fn disc(size: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        Raster::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
        .unwrap()
    }

    #[test]
    fn border_of_single_pixel_and_block() {
        let mut m = BinaryMask::filled(5, 5, false).unwrap();
        *m.get_mut(2, 2) = true;
        let lm = connected_components(&m, Connectivity::Eight);
        assert_eq!(object_border(&lm, 1).unwrap(), m);

        let mut m = BinaryMask::filled(7, 7, false).unwrap();
        rect(&mut m, 2, 2, 4, 4);
        let lm = connected_components(&m, Connectivity::Eight);
        let b = object_border(&lm, 1).unwrap();
        assert_eq!(b.count_foreground(), 8);
        assert!(!*b.get(3, 3));

        // the image edge counts as outside
        let full = BinaryMask::filled(3, 3, true).unwrap();
        let lm = connected_components(&full, Connectivity::Eight);
        assert_eq!(object_border(&lm, 1).unwrap().count_foreground(), 8);
    }

    #[test]
    fn border_of_missing_label_is_an_error() {
        let lm = LabelMap::empty(4, 4).unwrap();
        assert_eq!(object_border(&lm, 1), Err(Error::InvalidLabel(1)));
        assert_eq!(object_border(&lm, 0), Err(Error::InvalidLabel(0)));
    }

    #[test]
    fn disc_border_touches_background() {
        let m = disc(31, 15.0, 15.0, 10.0);
        let lm = connected_components(&m, Connectivity::Eight);
        let b = object_border(&lm, 1).unwrap();
        let edt = crate::imgcore::distance_transform(&m);
        let n = b.count_foreground();
        // an 8-connected digital circle needs about 0.9 pixels per unit of arc
        assert!(n as f64 >= 2.0 * core::f64::consts::PI * 10.0 * 0.85, "{n}");
        assert!(n as f64 <= 8.0 * 10.0 + 8.0, "{n}");
        for (x, y, &on) in b.enumerate() {
            if on {
                assert_eq!(*edt.values.get(x, y), 1.0);
            }
        }
    }

    #[test]
    fn weight_field_spot_values() {
        // border pixel at x = 0 on a 1x51 strip: d equals the column index
        let mut border = BinaryMask::filled(51, 1, false).unwrap();
        *border.get_mut(0, 0) = true;
        let f = object_weight_field(&border, 25.0).unwrap();
        assert_eq!(*f.get(0, 0), 1.0);
        assert!((f.get(25, 0) - 0.606_530_659_712_633_4).abs() < 1e-12);
        assert!((f.get(50, 0) - 0.135_335_283_236_612_7).abs() < 1e-12);
    }

    #[test]
    fn weight_field_errors() {
        let empty = BinaryMask::filled(3, 3, false).unwrap();
        assert_eq!(object_weight_field(&empty, 1.0), Err(Error::EmptyBorder));
        let mut b = empty.clone();
        *b.get_mut(0, 0) = true;
        assert!(object_weight_field(&b, 0.0).is_err());
    }

    #[test]
    fn empty_mask_is_background_base() {
        let wm = build_weight_map(&BinaryMask::filled(20, 10, false).unwrap(), &WeightConfig::default()).unwrap();
        assert!(wm.raster().as_slice().iter().all(|&w| w == 1.5));
    }

    #[test]
    fn next_to_a_disc_border() {
        let m = disc(101, 50.0, 50.0, 20.0);
        let wm = build_weight_map(&m, &WeightConfig::default()).unwrap();
        // (70, 50) is on the border, (71, 50) is the first background pixel
        assert!(*m.get(70, 50) && !*m.get(71, 50));
        assert!((wm.raster().get(70, 50) - 2.0).abs() < 1e-12);
        let expected = 1.5 + libm::exp(-1.0 / 1250.0);
        assert!((wm.raster().get(71, 50) - expected).abs() < 1e-12);
        assert!((wm.raster().get(71, 50) - 2.5).abs() < 1e-3);
    }

    #[test]
    fn two_cells_add_up() {
        let mut m = BinaryMask::filled(80, 100, false).unwrap();
        rect(&mut m, 0, 20, 10, 80);
        rect(&mut m, 50, 20, 60, 80);
        let wm = build_weight_map(&m, &WeightConfig::default()).unwrap();
        let v = *wm.raster().get(30, 50);
        assert!((v - 2.952_298).abs() < 1e-5, "{v}");
    }

    #[test]
    fn foreground_proximity_flag() {
        let m = disc(61, 30.0, 30.0, 10.0);
        let cfg = WeightConfig {
            include_foreground_proximity: false,
            ..WeightConfig::default()
        };
        let wm = build_weight_map(&m, &cfg).unwrap();
        for (x, y, &fg) in m.enumerate() {
            if fg {
                assert_eq!(*wm.raster().get(x, y), 1.0);
            } else {
                assert!(*wm.raster().get(x, y) > 1.5);
            }
        }
    }

    #[test]
    fn multiplicative_combination() {
        let m = disc(61, 30.0, 30.0, 10.0);
        let add = build_weight_map(&m, &WeightConfig::default()).unwrap();
        let cfg = WeightConfig {
            combination: Combination::Multiplicative,
            ..WeightConfig::default()
        };
        let mul = build_weight_map(&m, &cfg).unwrap();
        for (x, y, &fg) in m.enumerate() {
            let base = if fg { 1.0 } else { 1.5 };
            let prox = add.raster().get(x, y) - base;
            assert!((mul.raster().get(x, y) - base * (1.0 + prox)).abs() < 1e-12);
        }
    }

    #[test]
    fn far_from_objects_is_base() {
        let mut m = BinaryMask::filled(200, 20, false).unwrap();
        rect(&mut m, 0, 5, 3, 8);
        let cfg = WeightConfig {
            sigma: 5.0,
            ..WeightConfig::default()
        };
        let wm = build_weight_map(&m, &cfg).unwrap();
        assert!((wm.min() - 1.5).abs() < 1e-6);
        assert!(wm.raster().get(199, 10) - 1.5 < 1e-6);
    }

    #[test]
    fn invalid_config() {
        let m = BinaryMask::filled(3, 3, false).unwrap();
        for cfg in [
            WeightConfig { sigma: 0.0, ..Default::default() },
            WeightConfig { sigma: -1.0, ..Default::default() },
            WeightConfig { background_base: 0.0, ..Default::default() },
        ] {
            assert!(build_weight_map(&m, &cfg).is_err());
        }
    }

    #[test]
    fn bce_half_is_ln2() {
        let t = BinaryMask::filled(4, 4, true).unwrap();
        let p = ProbabilityMap::constant(4, 4, 0.5).unwrap();
        let w = WeightMap::uniform(4, 4, 1.0).unwrap();
        let l = weighted_bce(&t, &p, &w, DEFAULT_BCE_EPSILON).unwrap();
        assert!((l - core::f64::consts::LN_2).abs() < 1e-12);
        let w2 = WeightMap::uniform(4, 4, 2.0).unwrap();
        let l2 = weighted_bce(&t, &p, &w2, DEFAULT_BCE_EPSILON).unwrap();
        assert!((l2 - 2.0 * l).abs() < 1e-12);
    }

    #[test]
    fn bce_perfect_prediction_is_near_zero() {
        let bits: Vec<u8> = (0..16).map(|i| (i % 3 == 0) as u8).collect();
        let t = BinaryMask::from_bits(4, 4, &bits).unwrap();
        let p = ProbabilityMap::new(t.map(|&b| if b { 1.0 } else { 0.0 })).unwrap();
        let w = WeightMap::uniform(4, 4, 2.5).unwrap();
        let l = weighted_bce(&t, &p, &w, DEFAULT_BCE_EPSILON).unwrap();
        assert!((0.0..=2.5 * 1.1e-7).contains(&l), "{l}");
    }

    #[test]
    fn bce_dimension_mismatch() {
        let t = BinaryMask::filled(4, 4, true).unwrap();
        let p = ProbabilityMap::constant(4, 3, 0.5).unwrap();
        let w = WeightMap::uniform(4, 4, 1.0).unwrap();
        assert!(matches!(
            weighted_bce(&t, &p, &w, DEFAULT_BCE_EPSILON),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
