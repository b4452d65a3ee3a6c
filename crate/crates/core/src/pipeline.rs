//! Prior → coarse → refined pose for one query.

use alloc::format;
use alloc::vec::Vec;

use crate::coarse::{build_cost_volume, select_coarse_pose, CoarseSelection, CostVolume, SamplingSpec};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{CameraIntrinsics, Pose, DEFAULT_NEAR};
use crate::mask::BinaryMask;
use crate::rasterizer::CityModel;
use crate::refine::{refine_pose, RefineParams, TraceRow};
use crate::rng::{derive_key, domain};
use crate::scoring::{AlignmentScore, PoseScorer};
use crate::COARSE_RESOLUTION;

/// Which stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    /// Stop after grid selection.
    NoRefine,
    /// Skip grid selection and refine from the prior.
    NoSelect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub sampling: SamplingSpec,
    pub refine: RefineParams,
    pub coarse_resolution: (u32, u32),
    pub near: f64,
    pub mode: Mode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sampling: SamplingSpec::default(),
            refine: RefineParams::default(),
            coarse_resolution: COARSE_RESOLUTION,
            near: DEFAULT_NEAR,
            mode: Mode::Full,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.refine.validate()?;
        let (cw, ch) = self.coarse_resolution;
        if cw == 0 || ch == 0 {
            return Err(Error::InvalidParameter("coarse resolution must be positive".into()));
        }
        if !(self.near > 0.0 && self.near.is_finite()) {
            return Err(Error::InvalidParameter("near plane must be > 0".into()));
        }
        Ok(())
    }
}

/// The query mask at both working resolutions.
#[derive(Debug, Clone)]
pub struct QueryMasks {
    pub coarse: BinaryMask,
    pub fine: BinaryMask,
}

impl QueryMasks {
    /// The coarse mask is the 2x2 majority downsample of the fine one unless
    /// the two resolutions coincide.
    pub fn from_fine(fine: BinaryMask, config: &PipelineConfig) -> Result<Self> {
        let want_fine = (config.refine.width, config.refine.height);
        if fine.dims() != want_fine {
            return Err(Error::InvalidParameter(format!(
                "query mask is {}x{}, expected {}x{}",
                fine.width(),
                fine.height(),
                want_fine.0,
                want_fine.1
            )));
        }
        let coarse = if config.coarse_resolution == want_fine {
            fine.clone()
        } else if (want_fine.0, want_fine.1) == (2 * config.coarse_resolution.0, 2 * config.coarse_resolution.1) {
            fine.downsample_majority()?
        } else {
            return Err(Error::InvalidParameter(
                "fine resolution must equal or double the coarse resolution".into(),
            ));
        };
        Ok(QueryMasks { coarse, fine })
    }
}

#[derive(Debug, Clone)]
pub struct CoarseStage {
    pub selection: CoarseSelection,
    pub volume: Option<CostVolume>,
}

/// Builds the cost volume and selects the coarse pose (or passes the prior
/// through in [`Mode::NoSelect`]).
pub fn coarse_stage<E: Executor>(
    masks: &QueryMasks,
    prior: &Pose,
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    config: &PipelineConfig,
    exec: &E,
) -> Result<CoarseStage> {
    if config.mode == Mode::NoSelect {
        let score = PoseScorer::new(model, intrinsics, &masks.coarse, config.near).score(prior);
        return Ok(CoarseStage {
            selection: CoarseSelection {
                pose: *prior,
                score,
                index: None,
                fallback: false,
            },
            volume: None,
        });
    }
    let volume = build_cost_volume(&masks.coarse, prior, &config.sampling, model, intrinsics, config.near, exec)?;
    Ok(CoarseStage {
        selection: select_coarse_pose(&volume),
        volume: Some(volume),
    })
}

#[derive(Debug, Clone)]
pub struct RefineStage {
    pub pose: Pose,
    pub score: AlignmentScore,
    /// Coarse pose scored at the refinement resolution.
    pub coarse_fine_score: AlignmentScore,
    pub trace: Vec<TraceRow>,
}

pub fn refine_stage<E: Executor>(
    masks: &QueryMasks,
    coarse: &Pose,
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    config: &PipelineConfig,
    seed: u64,
    exec: &E,
) -> Result<RefineStage> {
    if config.mode == Mode::NoRefine {
        let score = PoseScorer::new(model, intrinsics, &masks.fine, config.near).score(coarse);
        return Ok(RefineStage {
            pose: *coarse,
            score,
            coarse_fine_score: score,
            trace: Vec::new(),
        });
    }
    let r = refine_pose(&masks.fine, coarse, &config.refine, model, intrinsics, config.near, seed, exec)?;
    Ok(RefineStage {
        pose: r.pose,
        score: r.score,
        coarse_fine_score: r.start_score,
        trace: r.trace,
    })
}

#[derive(Debug, Clone)]
pub struct Localization {
    pub prior: Pose,
    pub coarse: CoarseSelection,
    pub refined: RefineStage,
}

impl Localization {
    pub fn pose(&self) -> Pose {
        self.refined.pose
    }
}

/// Refinement seed of the `index`-th query of a batch.
pub fn query_seed(seed: u64, index: usize) -> u64 {
    derive_key(seed, &[domain::REFINE, index as u64])
}

/// Runs the configured stages for one query.
pub fn localize<E: Executor>(
    masks: &QueryMasks,
    prior: &Pose,
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    config: &PipelineConfig,
    seed: u64,
    exec: &E,
) -> Result<Localization> {
    config.validate()?;
    let coarse = coarse_stage(masks, prior, model, intrinsics, config, exec)?;
    let refined = refine_stage(masks, &coarse.selection.pose, model, intrinsics, config, seed, exec)?;
    Ok(Localization {
        prior: *prior,
        coarse: coarse.selection,
        refined,
    })
}
