//! Counting objects by segmentation.
//!
//! The pipeline turns a per-pixel probability map into a labeled set of
//! objects (threshold, clean, fill holes, watershed split) and evaluates the
//! result against ground truth by unique nearest-centroid matching. Around it
//! sit the pieces needed to train and validate such a model without the model
//! itself: border-emphasising loss weight maps, a static analyzer for the
//! residual UNet, a threshold sweep, and a seeded synthetic scene generator
//! with the usual augmentations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and the
//! command line live in the `cellcount` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod archspec;
mod error;
pub mod imgcore;
pub mod matcheval;
pub mod postproc;
pub mod synthgen;
pub mod threshopt;
pub mod weightmap;

pub use error::{Error, Result};
pub use imgcore::{
    BinaryMask, BitDepth, Connectivity, DistanceField, GrayRaster, LabelMap, ObjectStats,
    ProbabilityMap, Raster,
};
