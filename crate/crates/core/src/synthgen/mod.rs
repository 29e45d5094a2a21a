//! Seeded synthetic microscopy scenes and the augmentation suite.
//!
//! Scenes are bright elliptical cells on a dark, noisy background, with
//! optional clumping and dimmer distractor blobs that are not cells. The
//! generator knows the exact cell count and instance masks, which makes it
//! the ground truth for desk-scale validation of the counting pipeline.
//! Everything here is a pure function of its inputs and a seed.

mod augment;
mod crop;
mod filter;
mod scene;

pub use augment::{apply_augment, AugmentKind, AugmentOp};
pub use crop::{crop_grid, crop_windows, Crop, CropWindow, DEFAULT_CROP};
pub use filter::gaussian_blur;
pub use scene::{
    generate_scene, ideal_heatmap, level_heatmap, yellow_rgb, Ellipse, SceneConfig, SynthScene,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
