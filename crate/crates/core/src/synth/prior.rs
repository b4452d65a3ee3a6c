use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::uniform;
use crate::error::{Error, Result};
use crate::geometry::{normalize_roll, normalize_yaw, Pose};
use crate::rng::{domain, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Offsets uniform in `[-scale, scale]`.
    Uniform,
    /// Offsets `N(0, scale²)`.
    Gaussian,
}

/// Sensor-prior noise. Pitch and roll default to noise-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorNoiseSpec {
    pub mode: NoiseMode,
    /// Per-axis translation scale (x, y, z), meters.
    pub translation: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub seed: u64,
}

/// Uniform per-axis half-width whose induced median 3-D error is 6.48 m.
pub const CALIBRATED_TRANSLATION: f64 = 6.58;
/// Uniform yaw half-width whose median absolute error is 1.63°.
pub const CALIBRATED_YAW: f64 = 3.26;

impl PriorNoiseSpec {
    pub fn none() -> Self {
        PriorNoiseSpec {
            mode: NoiseMode::Uniform,
            translation: [0.0; 3],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            seed: 0,
        }
    }

    pub fn uniform(translation: f64, yaw: f64, seed: u64) -> Self {
        PriorNoiseSpec {
            mode: NoiseMode::Uniform,
            translation: [translation; 3],
            yaw,
            seed,
            ..Self::none()
        }
    }

    /// Uniform noise calibrated to typical onboard-sensor error medians.
    pub fn calibrated(seed: u64) -> Self {
        Self::uniform(CALIBRATED_TRANSLATION, CALIBRATED_YAW, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let scales = [self.translation[0], self.translation[1], self.translation[2], self.yaw, self.pitch, self.roll];
        if scales.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("noise scales must be finite and >= 0".into()))
        }
    }
}

fn draw_prior(gt: &Pose, noise: &PriorNoiseSpec, path: &[u64]) -> Result<Pose> {
    noise.validate()?;
    let mut rng = stream(noise.seed, path);
    let mut offset = |scale: f64| -> f64 {
        match noise.mode {
            NoiseMode::Uniform => uniform(&mut rng, -scale, scale),
            NoiseMode::Gaussian => {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            }
        }
    };
    let dx = offset(noise.translation[0]);
    let dy = offset(noise.translation[1]);
    let dz = offset(noise.translation[2]);
    let dyaw = offset(noise.yaw);
    let dpitch = offset(noise.pitch);
    let droll = offset(noise.roll);
    Ok(Pose {
        x: gt.x + dx,
        y: gt.y + dy,
        z: gt.z + dz,
        yaw: normalize_yaw(gt.yaw + dyaw),
        pitch: (gt.pitch + dpitch).clamp(-90.0, 90.0),
        roll: normalize_roll(gt.roll + droll),
    })
}

/// Noisy prior around `gt`, deterministic in `noise.seed`.
pub fn make_prior(gt: &Pose, noise: &PriorNoiseSpec) -> Result<Pose> {
    draw_prior(gt, noise, &[domain::PRIOR])
}

/// One prior per ground-truth pose, each from its own stream.
pub fn make_priors(gts: &[Pose], noise: &PriorNoiseSpec) -> Result<Vec<Pose>> {
    gts.iter()
        .enumerate()
        .map(|(i, gt)| draw_prior(gt, noise, &[domain::PRIOR, i as u64]))
        .collect()
}
