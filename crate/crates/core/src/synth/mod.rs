//! Synthetic worlds: procedural cities, query poses with ground truth,
//! noisy sensor priors, and segmentation-like mask corruption.

mod city;
mod corrupt;
mod prior;
mod queries;

pub use city::{generate_city, polygon_distance, CitySpec, GeneratedCity};
pub use corrupt::{corrupt_mask, corrupt_with_amplitude, CorruptionSpec, Corrupted, IOU_TOLERANCE};
pub use prior::{make_prior, make_priors, NoiseMode, PriorNoiseSpec, CALIBRATED_TRANSLATION, CALIBRATED_YAW};
pub use queries::{generate_queries, query_id, Query, QuerySpec};

use rand_core::RngCore;

/// Uniform draw in `[lo, hi)`.
pub(crate) fn uniform<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    // 53 random mantissa bits
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}
