use alloc::string::String;

/// Errors raised by the pipeline stages.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("raster dimensions must be at least 1x1, got {width}x{height}")]
    EmptyRaster { width: usize, height: usize },
    #[error("expected {expected} values for the raster, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },
    #[error("label {0} does not exist in the label map")]
    InvalidLabel(u32),
    #[error("object has no border pixels")]
    EmptyBorder,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("input {height}x{width} is not divisible by {multiple} (required by {levels} pooling levels)")]
    NotDivisible {
        height: usize,
        width: usize,
        multiple: usize,
        levels: usize,
    },
    #[error("input has {actual} channels, the network expects {expected}")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("could not place {requested} objects after {attempts} attempts")]
    InfeasiblePlacement { requested: usize, attempts: usize },
    #[error("image {width}x{height} is smaller than the {crop}x{crop} crop")]
    ImageTooSmall {
        width: usize,
        height: usize,
        crop: usize,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
