//! Multi-beam particle refinement of the coarse pose.
//!
//! Each beam is an independent hill climber: per iteration it draws
//! candidates around its current best with Gaussian translation noise and
//! yaw-only rotation noise, scores them by IoU, and moves to the best one if
//! it strictly improves. Noise shrinks geometrically from `sigma` to
//! `gamma * sigma` over the run. Pitch and roll are never touched.

use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{normalize_yaw, CameraIntrinsics, Pose};
use crate::mask::BinaryMask;
use crate::rasterizer::CityModel;
use crate::rng::{domain, stream};
use crate::scoring::{AlignmentScore, PoseScorer};
use crate::FINE_RESOLUTION;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    pub iterations: u32,
    pub beams: u32,
    /// Candidates per iteration, split evenly over the beams.
    pub candidates: u32,
    /// Initial translation noise, meters.
    pub sigma_t: f64,
    /// Initial yaw noise, degrees.
    pub sigma_yaw: f64,
    /// Terminal shrink factor of both sigmas.
    pub gamma: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            iterations: 40,
            beams: 2,
            candidates: 52,
            sigma_t: 1.5,
            sigma_yaw: 2.0,
            gamma: 0.3,
            width: FINE_RESOLUTION.0,
            height: FINE_RESOLUTION.1,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("refine: {what}")));
        if self.beams == 0 {
            return bad("beams must be >= 1");
        }
        if self.candidates < self.beams {
            return bad("candidates must be >= beams");
        }
        if !(self.sigma_t >= 0.0 && self.sigma_t.is_finite()) {
            return bad("sigma_t must be >= 0");
        }
        if !(self.sigma_yaw >= 0.0 && self.sigma_yaw.is_finite()) {
            return bad("sigma_yaw must be >= 0");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if self.width == 0 || self.height == 0 {
            return bad("resolution must be positive");
        }
        Ok(())
    }

    pub fn per_beam(&self) -> u32 {
        self.candidates / self.beams
    }
}

/// `sigma0 * gamma^(k / (n - 1))`; `sigma0` when `n <= 1`.
pub fn sigma_schedule(sigma0: f64, k: u32, n: u32, gamma: f64) -> f64 {
    if n <= 1 {
        return sigma0;
    }
    sigma0 * libm::pow(gamma, k as f64 / (n - 1) as f64)
}

/// Gaussian jitter of x, y, z and yaw; pitch and roll pass through unchanged.
pub fn perturb_pose<R: RngCore + ?Sized>(base: &Pose, sigma_t: f64, sigma_yaw: f64, rng: &mut R) -> Pose {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    let dx = draw() * sigma_t;
    let dy = draw() * sigma_t;
    let dz = draw() * sigma_t;
    let dyaw = draw() * sigma_yaw;
    Pose {
        x: base.x + dx,
        y: base.y + dy,
        z: base.z + dz,
        yaw: normalize_yaw(base.yaw + dyaw),
        pitch: base.pitch,
        roll: base.roll,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pose: Pose,
    pub weight: AlignmentScore,
}

/// One beam's running state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamState {
    pub best: Particle,
    /// Random stream label; also the beam's identity in tie-breaks.
    pub stream: u64,
    /// Iteration at which `best` was adopted, `None` for the start pose.
    pub found_at: Option<u32>,
}

/// Best weight of a beam after an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u32,
    pub beam: u32,
    pub best_iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub pose: Pose,
    pub score: AlignmentScore,
    /// Score of the start pose at the refinement resolution.
    pub start_score: AlignmentScore,
    pub trace: Vec<TraceRow>,
    pub beams: Vec<BeamState>,
}

/// Refines `coarse` against `query_mask` (which sets the render resolution).
pub fn refine_pose<E: Executor>(
    query_mask: &BinaryMask,
    coarse: &Pose,
    params: &RefineParams,
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    near: f64,
    seed: u64,
    exec: &E,
) -> Result<Refinement> {
    let streams: Vec<u64> = (0..params.beams as u64).collect();
    refine_with_streams(query_mask, coarse, params, model, intrinsics, near, seed, &streams, exec)
}

/// As [`refine_pose`] with explicit per-beam stream labels (one per beam).
pub fn refine_with_streams<E: Executor>(
    query_mask: &BinaryMask,
    coarse: &Pose,
    params: &RefineParams,
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    near: f64,
    seed: u64,
    streams: &[u64],
    exec: &E,
) -> Result<Refinement> {
    params.validate()?;
    if query_mask.dims() != (params.width, params.height) {
        return Err(Error::InvalidParameter(format!(
            "query mask is {}x{}, refinement renders at {}x{}",
            query_mask.width(),
            query_mask.height(),
            params.width,
            params.height
        )));
    }
    if streams.len() != params.beams as usize {
        return Err(Error::InvalidParameter("one stream label per beam required".into()));
    }
    let scorer = PoseScorer::new(model, intrinsics, query_mask, near);
    let start = Particle {
        pose: *coarse,
        weight: scorer.score(coarse),
    };
    let mut beams: Vec<BeamState> = streams
        .iter()
        .map(|&s| BeamState {
            best: start,
            stream: s,
            found_at: None,
        })
        .collect();
    let per_beam = params.per_beam() as usize;
    let mut trace = Vec::with_capacity(params.iterations as usize * beams.len());

    for k in 0..params.iterations {
        let st = sigma_schedule(params.sigma_t, k, params.iterations, params.gamma);
        let sy = sigma_schedule(params.sigma_yaw, k, params.iterations, params.gamma);
        let candidates: Vec<Pose> = beams
            .iter()
            .flat_map(|b| {
                (0..per_beam).map(move |c| {
                    let mut rng = stream(seed, &[domain::REFINE, b.stream, k as u64, c as u64]);
                    perturb_pose(&b.best.pose, st, sy, &mut rng)
                })
            })
            .collect();
        let weights = exec.map_indexed(candidates.len(), |i| scorer.score(&candidates[i]));
        for (bi, beam) in beams.iter_mut().enumerate() {
            let slice = bi * per_beam..(bi + 1) * per_beam;
            let mut pick: Option<usize> = None;
            for i in slice {
                if pick.is_none_or(|p| weights[i].value > weights[p].value) {
                    pick = Some(i);
                }
            }
            if let Some(i) = pick {
                if weights[i].value > beam.best.weight.value {
                    beam.best = Particle {
                        pose: candidates[i],
                        weight: weights[i],
                    };
                    beam.found_at = Some(k);
                }
            }
            trace.push(TraceRow {
                iteration: k,
                beam: bi as u32,
                best_iou: beam.best.weight.value,
            });
        }
    }

    // Global best; ties prefer the lowest stream label, then the earliest find.
    let winner = beams
        .iter()
        .copied()
        .reduce(|a, b| {
            let key = |s: &BeamState| (s.stream, s.found_at.map_or(-1i64, |k| k as i64));
            if b.best.weight.value > a.best.weight.value
                || (b.best.weight.value == a.best.weight.value && key(&b) < key(&a))
            {
                b
            } else {
                a
            }
        })
        .expect("at least one beam");

    Ok(Refinement {
        pose: winner.best.pose,
        score: winner.best.weight,
        start_score: start.weight,
        trace,
        beams,
    })
}
