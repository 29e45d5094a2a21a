//! Raster containers and the low-level raster algorithms the pipeline is
//! built on.
//!
//! Coordinates: `x` is the column, `y` the row, origin at the top-left pixel.
//! Pixel centers sit at integer positions.

mod components;
mod distance;
mod morphology;
mod raster;

pub use components::{connected_components, object_stats, Connectivity, ObjectStats};
pub use distance::{distance_transform, squared_distance_to, DistanceField};
pub use morphology::{fill_holes, remove_small, threshold};
pub use raster::{BinaryMask, BitDepth, GrayRaster, LabelMap, ProbabilityMap, Raster};
