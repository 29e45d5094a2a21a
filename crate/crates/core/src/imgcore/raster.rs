use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A row-major 2-D grid. `x` is the column, `y` the row, origin top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: rasters have at least one pixel.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[self.index(x, y)]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        let i = self.index(x, y);
        &mut self.data[i]
    }

    /// Bounds-checked access with signed coordinates.
    #[inline]
    pub fn try_get(&self, x: isize, y: isize) -> Option<&T> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(&self.data[y as usize * self.width + x as usize])
        }
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_dims<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn ensure_same_dims<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Iterator over `(x, y, &value)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        let w = self.width;
        self.data.iter().enumerate().map(move |(i, v)| (i % w, i / w, v))
    }
}

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }

    /// Copies the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(crate::error::invalid(
                "crop",
                alloc::format!(
                    "window {w}x{h}+{x0}+{y0} exceeds {}x{}",
                    self.width,
                    self.height
                ),
            ));
        }
        Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y).clone())
    }

    /// Rotates 90° clockwise `k` times.
    pub fn rot90(&self, k: u32) -> Self {
        let (w, h) = (self.width, self.height);
        match k % 4 {
            0 => self.clone(),
            1 => Self::from_fn(h, w, |x, y| self.get(y, h - 1 - x).clone()).unwrap(),
            2 => Self::from_fn(w, h, |x, y| self.get(w - 1 - x, h - 1 - y).clone()).unwrap(),
            _ => Self::from_fn(h, w, |x, y| self.get(w - 1 - y, x).clone()).unwrap(),
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        Err(Error::EmptyRaster { width, height })
    } else {
        Ok(())
    }
}

/// Foreground/background mask. `true` is foreground.
pub type BinaryMask = Raster<bool>;

impl Raster<bool> {
    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Builds a mask from `{0, 1}` bytes, rejecting anything else.
    pub fn from_bits(width: usize, height: usize, bits: &[u8]) -> Result<Self> {
        let mut data = Vec::with_capacity(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => data.push(false),
                1 => data.push(true),
                other => {
                    return Err(Error::OutOfUnitRange {
                        index: i,
                        value: f64::from(other),
                    })
                }
            }
        }
        Self::from_vec(width, height, data)
    }
}

/// Sample width of a [`GrayRaster`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

/// Unsigned grayscale intensities at 8 or 16 bits.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayRaster {
    depth: BitDepth,
    pixels: Raster<u16>,
}

impl GrayRaster {
    pub fn new(depth: BitDepth, pixels: Raster<u16>) -> Result<Self> {
        let max = depth.max_value();
        if let Some(i) = pixels.as_slice().iter().position(|&v| v > max) {
            return Err(crate::error::invalid(
                "pixels",
                alloc::format!("value {} at index {i} exceeds {max}", pixels.as_slice()[i]),
            ));
        }
        Ok(Self { depth, pixels })
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn pixels(&self) -> &Raster<u16> {
        &self.pixels
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    /// Intensities scaled to `[0, 1]` by `value / (2^depth - 1)`.
    pub fn to_unit(&self) -> Raster<f64> {
        let max = f64::from(self.depth.max_value());
        self.pixels.map(|&v| f64::from(v) / max)
    }

    /// Quantizes `[0, 1]` intensities (clamped) to the given depth.
    pub fn from_unit(values: &Raster<f64>, depth: BitDepth) -> Self {
        let max = f64::from(depth.max_value());
        let pixels = values.map(|&v| libm::round(v.clamp(0.0, 1.0) * max) as u16);
        Self { depth, pixels }
    }

    pub fn into_pixels(self) -> Raster<u16> {
        self.pixels
    }
}

/// Per-pixel probabilities, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap(Raster<f64>);

impl ProbabilityMap {
    pub fn new(values: Raster<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfUnitRange { index, value });
        }
        Ok(Self(values))
    }

    /// Clamps every value into `[0, 1]`; NaN becomes 0.
    pub fn clamped(mut values: Raster<f64>) -> Self {
        for v in values.as_mut_slice() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self(values)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(Raster::filled(width, height, value)?)
    }

    pub fn raster(&self) -> &Raster<f64> {
        &self.0
    }

    pub fn into_raster(self) -> Raster<f64> {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }
}

/// Object labels: 0 is background, objects are numbered `1..=object_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    labels: Raster<u32>,
    object_count: u32,
}

impl LabelMap {
    /// Wraps labels already known to be compact (`{0} ∪ 1..=object_count`, all used).
    pub(crate) fn from_compact(labels: Raster<u32>, object_count: u32) -> Self {
        debug_assert!(labels.as_slice().iter().all(|&l| l <= object_count));
        Self {
            labels,
            object_count,
        }
    }

    /// Renumbers arbitrary non-negative ids to `1..=n` in row-major
    /// first-encounter order. Connectivity of each id is not checked.
    pub fn compact(raw: &Raster<u32>) -> Self {
        let mut next = 0u32;
        let mut remap = alloc::collections::BTreeMap::new();
        let labels = raw.map(|&l| {
            if l == 0 {
                0
            } else {
                *remap.entry(l).or_insert_with(|| {
                    next += 1;
                    next
                })
            }
        });
        Self {
            labels,
            object_count: next,
        }
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            labels: Raster::filled(width, height, 0)?,
            object_count: 0,
        })
    }

    pub fn labels(&self) -> &Raster<u32> {
        &self.labels
    }

    pub fn object_count(&self) -> u32 {
        self.object_count
    }

    pub fn width(&self) -> usize {
        self.labels.width()
    }

    pub fn height(&self) -> usize {
        self.labels.height()
    }

    pub fn foreground(&self) -> BinaryMask {
        self.labels.map(|&l| l != 0)
    }

    pub fn contains_label(&self, label: u32) -> bool {
        label >= 1 && label <= self.object_count
    }
}
