use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid pose: {0}")]
    InvalidPose(&'static str),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("building {index}: {reason}")]
    InvalidBuilding { index: usize, reason: String },
    #[error("mask dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no non-degenerate views after {attempts} attempts")]
    NoViews { attempts: usize },
    #[error("corruption target iou {target} unreachable: {reason}")]
    CorruptionUnreachable { target: f64, reason: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
}
