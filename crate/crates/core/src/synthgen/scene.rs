use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::filter::gaussian_blur;
use super::rng;
use crate::error::{invalid, Error, Result};
use crate::imgcore::{BinaryMask, LabelMap, ProbabilityMap, Raster};

const SUBSAMPLES: usize = 4;
const FALLOFF: f64 = 0.35;

/// A rotated ellipse; `angle` is the major axis direction in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub angle: f64,
    pub peak: f64,
}

impl Ellipse {
    /// Squared normalized radius; `<= 1` inside.
    pub fn radius2(&self, x: f64, y: f64) -> f64 {
        let (s, c) = libm::sincos(self.angle);
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (dx * c + dy * s) / self.a;
        let v = (-dx * s + dy * c) / self.b;
        u * u + v * v
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.radius2(x, y) <= 1.0
    }

    /// Distance from the center to the outline along direction `theta`.
    pub fn extent(&self, theta: f64) -> f64 {
        let (s, c) = libm::sincos(theta - self.angle);
        1.0 / libm::sqrt((c / self.a) * (c / self.a) + (s / self.b) * (s / self.b))
    }

    fn center_distance(&self, other: &Ellipse) -> f64 {
        libm::hypot(self.cx - other.cx, self.cy - other.cy)
    }

    /// Pixel bounding box `(x0, y0, x1, y1)`, inclusive, clipped to the image.
    fn pixel_box(&self, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let r = self.a;
        let lo = |c: f64| libm::floor(c - r).max(0.0) as usize;
        let hi = |c: f64, n: usize| (libm::ceil(c + r) as usize).min(n - 1);
        (lo(self.cx), lo(self.cy), hi(self.cx, width), hi(self.cy, height))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub cell_count: usize,
    /// Semi-axis range in pixels, shared by cells and distractors.
    pub semi_axis_min: f64,
    pub semi_axis_max: f64,
    /// Smallest minor/major axis ratio.
    pub min_aspect: f64,
    /// Chance that a cell is placed against an existing one.
    pub clump_probability: f64,
    /// Lower bound on the center distance of any two cells.
    pub min_center_distance: f64,
    /// Clearance between the bounding circles of objects that do not clump.
    pub min_gap: f64,
    /// Clearance between every object and the frame.
    pub margin: f64,
    /// Largest overlap of two clumped cells along the line joining them.
    pub max_clump_overlap: f64,
    pub distractor_count: usize,
    pub cell_peak: (f64, f64),
    pub distractor_peak: (f64, f64),
    pub background: f64,
    pub noise_sigma: f64,
    /// Placement attempts per object before giving up.
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            cell_count: 10,
            semi_axis_min: 15.0,
            semi_axis_max: 35.0,
            min_aspect: 0.6,
            clump_probability: 0.3,
            min_center_distance: 50.0,
            min_gap: 2.0,
            margin: 0.0,
            max_clump_overlap: 6.0,
            distractor_count: 0,
            cell_peak: (0.75, 1.0),
            distractor_peak: (0.25, 0.45),
            background: 0.08,
            noise_sigma: 0.03,
            max_attempts: 2000,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::EmptyRaster {
                width: self.width,
                height: self.height,
            });
        }
        if !(self.semi_axis_min > 0.0 && self.semi_axis_min <= self.semi_axis_max) {
            return Err(invalid("semi_axis", "need 0 < min <= max"));
        }
        if !(self.min_aspect > 0.0 && self.min_aspect <= 1.0) {
            return Err(invalid("min_aspect", "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.clump_probability) {
            return Err(invalid("clump_probability", "must be in [0, 1]"));
        }
        for (name, v) in [
            ("min_center_distance", self.min_center_distance),
            ("min_gap", self.min_gap),
            ("margin", self.margin),
            ("max_clump_overlap", self.max_clump_overlap),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, (lo, hi)) in [("cell_peak", self.cell_peak), ("distractor_peak", self.distractor_peak)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(invalid(name, "need 0 <= lo <= hi <= 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(invalid("background", "must be in [0, 1]"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("max_attempts", "must be positive"));
        }
        Ok(())
    }
}

/// A rendered scene with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub seed: u64,
    pub background: f64,
    pub noise_sigma: f64,
    pub cells: Vec<Ellipse>,
    pub distractors: Vec<Ellipse>,
    /// Gray intensities in `[0, 1]`.
    pub image: Raster<f64>,
    /// Cell pixels; distractors are excluded.
    pub mask: BinaryMask,
    /// One label per cell. Pixels shared by overlapping cells go to the
    /// cell whose outline they are deepest inside.
    pub instances: LabelMap,
    pub distractor_mask: BinaryMask,
}

impl SynthScene {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn count(&self) -> usize {
        self.cells.len()
    }
}

struct Placer<'a> {
    cfg: &'a SceneConfig,
    rng: &'a mut ChaCha8Rng,
}

impl Placer<'_> {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo < hi {
            self.rng.random_range(lo..hi)
        } else {
            lo
        }
    }

    fn shape(&mut self, peak: (f64, f64)) -> Ellipse {
        let cfg = self.cfg;
        let a = self.uniform(cfg.semi_axis_min, cfg.semi_axis_max);
        let b = self.uniform((a * cfg.min_aspect).max(cfg.semi_axis_min), a);
        Ellipse {
            cx: 0.0,
            cy: 0.0,
            a,
            b,
            angle: self.uniform(0.0, PI),
            peak: self.uniform(peak.0, peak.1),
        }
    }

    fn in_bounds(&self, e: &Ellipse) -> bool {
        let (w, h) = ((self.cfg.width - 1) as f64, (self.cfg.height - 1) as f64);
        let r = e.a + self.cfg.margin;
        e.cx - r >= 0.0 && e.cy - r >= 0.0 && e.cx + r <= w && e.cy + r <= h
    }

    fn random_center(&mut self, e: &mut Ellipse) -> bool {
        let (w, h) = ((self.cfg.width - 1) as f64, (self.cfg.height - 1) as f64);
        let r = e.a + self.cfg.margin;
        if w < 2.0 * r || h < 2.0 * r {
            return false;
        }
        e.cx = self.uniform(r, w - r);
        e.cy = self.uniform(r, h - r);
        true
    }

    fn clear_of(&self, e: &Ellipse, other: &Ellipse) -> bool {
        e.center_distance(other) >= e.a + other.a + self.cfg.min_gap
    }

    fn place_cell(&mut self, cells: &[Ellipse]) -> Option<Ellipse> {
        let cfg = self.cfg;
        for _ in 0..cfg.max_attempts {
            let mut e = self.shape(cfg.cell_peak);
            let clump = !cells.is_empty() && self.rng.random_bool(cfg.clump_probability);
            let anchor = if clump {
                let i = self.rng.random_range(0..cells.len());
                let anchor = cells[i];
                let theta = self.uniform(0.0, 2.0 * PI);
                let overlap = self.uniform(0.0, cfg.max_clump_overlap);
                let d = (anchor.extent(theta) + e.extent(theta + PI) - overlap).max(cfg.min_center_distance);
                let (s, c) = libm::sincos(theta);
                e.cx = anchor.cx + d * c;
                e.cy = anchor.cy + d * s;
                if !self.in_bounds(&e) {
                    continue;
                }
                Some(i)
            } else {
                if !self.random_center(&mut e) {
                    continue;
                }
                None
            };
            let ok = cells.iter().enumerate().all(|(j, other)| {
                e.center_distance(other) >= cfg.min_center_distance
                    && (anchor == Some(j) || self.clear_of(&e, other))
            });
            if ok {
                return Some(e);
            }
        }
        None
    }

    fn place_distractor(&mut self, placed: &[Ellipse]) -> Option<Ellipse> {
        for _ in 0..self.cfg.max_attempts {
            let mut e = self.shape(self.cfg.distractor_peak);
            if self.random_center(&mut e) && placed.iter().all(|o| self.clear_of(&e, o)) {
                return Some(e);
            }
        }
        None
    }
}

/// Renders a seeded scene of bright cells (and optional dim distractors) on
/// a dark noisy background.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<SynthScene> {
    config.validate()?;
    let mut rng = rng(seed);
    let infeasible = |requested| Error::InfeasiblePlacement {
        requested,
        attempts: config.max_attempts,
    };

    let mut placer = Placer {
        cfg: config,
        rng: &mut rng,
    };
    let mut cells = Vec::with_capacity(config.cell_count);
    for _ in 0..config.cell_count {
        let e = placer.place_cell(&cells).ok_or(infeasible(config.cell_count))?;
        cells.push(e);
    }
    let mut everything = cells.clone();
    for _ in 0..config.distractor_count {
        let e = placer.place_distractor(&everything).ok_or(infeasible(config.cell_count + config.distractor_count))?;
        everything.push(e);
    }
    let distractors = everything.split_off(cells.len());

    let (w, h) = (config.width, config.height);
    let mut shade = Raster::filled(w, h, 0.0f64)?;
    for e in cells.iter().chain(&distractors) {
        render(e, &mut shade);
    }
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|_| invalid("noise_sigma", "invalid"))?;
    let bg = config.background;
    let image = shade.map(|&s| {
        let v = bg + (1.0 - bg) * s;
        let n = if config.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        (v + n).clamp(0.0, 1.0)
    });

    let instances = LabelMap::compact(&rasterize(&cells, w, h)?);
    let mask = instances.foreground();
    let distractor_mask = rasterize(&distractors, w, h)?.map(|&l| l != 0);

    Ok(SynthScene {
        seed,
        background: bg,
        noise_sigma: config.noise_sigma,
        cells,
        distractors,
        image,
        mask,
        instances,
        distractor_mask,
    })
}

/// Anti-aliased radial profile, kept as the per-pixel maximum over objects.
fn render(e: &Ellipse, shade: &mut Raster<f64>) {
    let (x0, y0, x1, y1) = e.pixel_box(shade.width(), shade.height());
    let step = 1.0 / SUBSAMPLES as f64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let mut total = 0.0;
            for sy in 0..SUBSAMPLES {
                for sx in 0..SUBSAMPLES {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) * step;
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) * step;
                    let r2 = e.radius2(px, py);
                    if r2 <= 1.0 {
                        total += e.peak * (1.0 - FALLOFF * r2);
                    }
                }
            }
            let v = total / (SUBSAMPLES * SUBSAMPLES) as f64;
            let p = shade.get_mut(x, y);
            *p = p.max(v);
        }
    }
}

/// Labels pixel centers by the ellipse they sit deepest inside (`i + 1`).
fn rasterize(shapes: &[Ellipse], width: usize, height: usize) -> Result<Raster<u32>> {
    let mut labels = Raster::filled(width, height, 0u32)?;
    let mut depth = Raster::filled(width, height, f64::INFINITY)?;
    for (i, e) in shapes.iter().enumerate() {
        let (x0, y0, x1, y1) = e.pixel_box(width, height);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let r2 = e.radius2(x as f64, y as f64);
                if r2 <= 1.0 && r2 < *depth.get(x, y) {
                    *depth.get_mut(x, y) = r2;
                    *labels.get_mut(x, y) = i as u32 + 1;
                }
            }
        }
    }
    Ok(labels)
}

/// Stand-in for a model's output: 1 on the mask, 0 off it, blurred by a
/// Gaussian of width `edge_softness` and perturbed by Gaussian noise.
pub fn ideal_heatmap(mask: &BinaryMask, edge_softness: f64, noise: f64, seed: u64) -> ProbabilityMap {
    let base = mask.map(|&b| if b { 1.0 } else { 0.0 });
    let mut values = gaussian_blur(&base, edge_softness);
    if noise > 0.0 {
        let mut rng = rng(seed);
        let normal = Normal::new(0.0, noise).expect("positive sigma");
        values.as_mut_slice().iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    ProbabilityMap::clamped(values)
}

/// Flat heatmap: `cell_level` on cells, `distractor_level` on distractors
/// (cells win where both are set), 0 elsewhere.
pub fn level_heatmap(
    cells: &BinaryMask,
    distractors: &BinaryMask,
    cell_level: f64,
    distractor_level: f64,
) -> Result<ProbabilityMap> {
    cells.ensure_same_dims(distractors)?;
    let values = Raster::from_fn(cells.width(), cells.height(), |x, y| {
        if *cells.get(x, y) {
            cell_level
        } else if *distractors.get(x, y) {
            distractor_level
        } else {
            0.0
        }
    })?;
    ProbabilityMap::new(values)
}

/// Yellow-on-black 8-bit RGB rendering of a unit-range gray image.
pub fn yellow_rgb(image: &Raster<f64>) -> Raster<[u8; 3]> {
    image.map(|&v| {
        let q = |s: f64| libm::round(v.clamp(0.0, 1.0) * s * 255.0) as u8;
        [q(1.0), q(0.9), q(0.15)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{connected_components, threshold, Connectivity};
    use crate::postproc::{postprocess, PostprocConfig};

    fn cfg(cells: usize, clump: f64) -> SceneConfig {
        SceneConfig {
            cell_count: cells,
            clump_probability: clump,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn empty_scene() {
        let s = generate_scene(&cfg(0, 0.0), 1).unwrap();
        assert_eq!(s.count(), 0);
        assert_eq!(s.mask.count_foreground(), 0);
        assert_eq!(s.instances.object_count(), 0);
    }

    #[test]
    fn separated_cells_are_disjoint_components() {
        for seed in 0..10 {
            let s = generate_scene(&cfg(3, 0.0), seed).unwrap();
            assert_eq!(connected_components(&s.mask, Connectivity::Eight).object_count(), 3);
            assert_eq!(s.instances.object_count(), 3);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = SceneConfig {
            distractor_count: 3,
            ..cfg(8, 0.5)
        };
        assert_eq!(generate_scene(&c, 42).unwrap(), generate_scene(&c, 42).unwrap());
        assert_ne!(generate_scene(&c, 42).unwrap().image, generate_scene(&c, 43).unwrap().image);
    }

    #[test]
    fn geometry_respects_config() {
        let c = SceneConfig {
            distractor_count: 4,
            ..cfg(25, 0.6)
        };
        for seed in 0..5 {
            let s = generate_scene(&c, seed).unwrap();
            for e in s.cells.iter().chain(&s.distractors) {
                assert!((15.0..=35.0).contains(&e.a) && (15.0..=e.a).contains(&e.b));
                assert!(e.cx - e.a >= 0.0 && e.cx + e.a <= 511.0);
                assert!(e.cy - e.a >= 0.0 && e.cy + e.a <= 511.0);
            }
            for (i, p) in s.cells.iter().enumerate() {
                for q in &s.cells[i + 1..] {
                    assert!(p.center_distance(q) >= 50.0);
                }
            }
            assert!(s.image.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.mask.as_slice().iter().zip(s.distractor_mask.as_slice()).all(|(a, b)| !(a & b)));
        }
    }

    #[test]
    fn clumping_produces_touching_cells() {
        let s = generate_scene(&cfg(30, 1.0), 3).unwrap();
        let merged = connected_components(&s.mask, Connectivity::Eight).object_count();
        assert!(merged < 30, "{merged}");
        assert_eq!(s.instances.object_count(), 30);
    }

    #[test]
    fn overcrowding_fails() {
        let c = SceneConfig {
            width: 100,
            height: 100,
            max_attempts: 50,
            ..cfg(20, 0.0)
        };
        assert!(matches!(generate_scene(&c, 0), Err(Error::InfeasiblePlacement { requested: 20, .. })));
    }

    #[test]
    fn invalid_config() {
        assert!(generate_scene(&cfg(1, 1.5), 0).is_err());
    }

    #[test]
    fn sharp_heatmap_is_the_mask() {
        let s = generate_scene(&cfg(6, 0.3), 9).unwrap();
        let h = ideal_heatmap(&s.mask, 0.0, 0.0, 0);
        assert!(h
            .raster()
            .as_slice()
            .iter()
            .zip(s.mask.as_slice())
            .all(|(&v, &m)| v == if m { 1.0 } else { 0.0 }));
        for t in [0.11, 0.5, 0.89] {
            assert_eq!(threshold(&h, t), s.mask);
        }
    }

    #[test]
    fn soft_heatmap_round_trips_count() {
        for seed in 0..4 {
            let s = generate_scene(&cfg(8, 0.0), seed).unwrap();
            let h = ideal_heatmap(&s.mask, 3.0, 0.0, seed);
            let lm = postprocess(&h, &PostprocConfig::default()).unwrap();
            assert_eq!(lm.object_count(), 8);
        }
    }

    #[test]
    fn noisy_heatmap_is_seeded_and_clamped() {
        let s = generate_scene(&cfg(4, 0.0), 5).unwrap();
        let a = ideal_heatmap(&s.mask, 2.0, 0.1, 7);
        assert_eq!(a, ideal_heatmap(&s.mask, 2.0, 0.1, 7));
        assert_ne!(a, ideal_heatmap(&s.mask, 2.0, 0.1, 8));
        assert!(a.raster().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn levels() {
        let c = Raster::from_vec(3, 1, alloc::vec![true, false, false]).unwrap();
        let d = Raster::from_vec(3, 1, alloc::vec![true, true, false]).unwrap();
        let h = level_heatmap(&c, &d, 0.8, 0.4).unwrap();
        assert_eq!(h.raster().as_slice(), [0.8, 0.4, 0.0]);
        assert!(level_heatmap(&c, &d, 1.2, 0.4).is_err());
    }

    #[test]
    fn yellow() {
        let r = yellow_rgb(&Raster::from_vec(2, 1, alloc::vec![0.0, 1.0]).unwrap());
        assert_eq!(r.as_slice(), [[0, 0, 0], [255, 230, 38]]);
    }
}
