//! Camera localization against LoD1 city models by silhouette alignment.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and seeds; parallelism is injected through the
//! [`exec::Executor`] trait so that hosts with threads can fan out work
//! without changing results.
//!
//! Pipeline: a query building mask is scored against silhouettes rendered
//! from a grid of pose hypotheses around a prior ([`coarse`]), and the best
//! node is refined with a multi-beam particle search ([`refine`]).

#![no_std]
#![allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coarse;
pub mod error;
pub mod evalkit;
pub mod exec;
pub mod geometry;
pub mod mask;
pub mod pipeline;
pub mod rasterizer;
pub mod refine;
pub mod rng;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{CameraIntrinsics, Pose, Rotation};
pub use mask::BinaryMask;
pub use rasterizer::{Building, CityModel};
pub use scoring::{iou, AlignmentScore};

/// Coarse stage resolution (width, height).
pub const COARSE_RESOLUTION: (u32, u32) = (301, 224);
/// Refinement resolution, twice the coarse one on each axis.
pub const FINE_RESOLUTION: (u32, u32) = (602, 448);
/// Grayscale level above which an externally produced mask pixel counts as building.
pub const MASK_THRESHOLD: u8 = 127;
