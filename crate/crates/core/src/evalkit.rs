//! Pose-error metrics, recall tables and the convergence-basin study.

use alloc::format;
use alloc::vec::Vec;

use crate::coarse::SamplingSpec;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::pipeline::{localize, query_seed, PipelineConfig, QueryMasks};
use crate::rasterizer::CityModel;
use crate::synth::{make_priors, PriorNoiseSpec};

/// Joint (meters, degrees) recall thresholds.
pub const THRESHOLDS: [(f64, f64); 3] = [(2.0, 2.0), (3.0, 3.0), (5.0, 5.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    /// Euclidean distance, meters.
    pub translation: f64,
    /// Geodesic angle of the relative rotation, degrees.
    pub rotation: f64,
}

impl PoseError {
    /// Error assigned to a query whose pipeline run failed.
    pub const FAILED: PoseError = PoseError {
        translation: f64::INFINITY,
        rotation: 180.0,
    };

    pub fn within(&self, t: f64, r: f64) -> bool {
        self.translation <= t && self.rotation <= r
    }
}

pub fn pose_error(estimate: &Pose, gt: &Pose) -> PoseError {
    PoseError {
        translation: (estimate.position() - gt.position()).norm(),
        rotation: estimate.rotation().angle_to(&gt.rotation()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallReport {
    /// `(t_max, r_max, fraction)` per entry of [`THRESHOLDS`].
    pub recalls: Vec<(f64, f64, f64)>,
    pub median_translation: f64,
    pub median_rotation: f64,
    pub count: usize,
}

impl RecallReport {
    /// Recall at the `i`-th threshold as a fraction in [0, 1].
    pub fn recall(&self, i: usize) -> f64 {
        self.recalls[i].2
    }

    pub fn is_monotone(&self) -> bool {
        self.recalls.windows(2).all(|w| w[0].2 <= w[1].2)
    }
}

fn lower_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

pub fn recall_report(errors: &[PoseError]) -> Result<RecallReport> {
    recall_report_at(errors, &THRESHOLDS)
}

/// Recall at custom thresholds, which must be non-decreasing in both terms.
pub fn recall_report_at(errors: &[PoseError], thresholds: &[(f64, f64)]) -> Result<RecallReport> {
    if errors.is_empty() {
        return Err(Error::Empty("recall report needs at least one error"));
    }
    if thresholds.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1) {
        return Err(Error::InvalidParameter("thresholds must be non-decreasing".into()));
    }
    let n = errors.len() as f64;
    let recalls = thresholds
        .iter()
        .map(|&(t, r)| (t, r, errors.iter().filter(|e| e.within(t, r)).count() as f64 / n))
        .collect();
    let report = RecallReport {
        recalls,
        median_translation: lower_median(errors.iter().map(|e| e.translation).collect()),
        median_rotation: lower_median(errors.iter().map(|e| e.rotation).collect()),
        count: errors.len(),
    };
    assert!(report.is_monotone(), "recall must be monotone in the thresholds");
    Ok(report)
}

/// A query with a known pose and its mask.
#[derive(Debug, Clone)]
pub struct EvalQuery {
    pub gt: Pose,
    pub masks: QueryMasks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinRow {
    pub delta: f64,
    pub report: RecallReport,
    pub failures: usize,
}

/// Runs the full pipeline from uniform ±Δ translation priors (yaw exact)
/// with a coarse grid wide enough to cover Δ.
///
/// `config.sampling` is replaced per row; everything else is kept.
pub fn basin_study<E: Executor>(
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    queries: &[EvalQuery],
    deltas: &[f64],
    config: &PipelineConfig,
    prior_seed: u64,
    refine_seed: u64,
    exec: &E,
) -> Result<Vec<BasinRow>> {
    if queries.is_empty() {
        return Err(Error::Empty("basin study needs queries"));
    }
    let gts: Vec<Pose> = queries.iter().map(|q| q.gt).collect();
    deltas
        .iter()
        .map(|&delta| {
            let cfg = PipelineConfig {
                sampling: SamplingSpec::for_prior_error(delta)?,
                ..*config
            };
            cfg.validate()?;
            let noise = PriorNoiseSpec::uniform(delta, 0.0, prior_seed);
            let priors = make_priors(&gts, &noise)?;
            let mut failures = 0;
            let errors: Vec<PoseError> = queries
                .iter()
                .zip(&priors)
                .enumerate()
                .map(|(i, (q, prior))| match localize(&q.masks, prior, model, intrinsics, &cfg, query_seed(refine_seed, i), exec) {
                    Ok(loc) => pose_error(&loc.pose(), &q.gt),
                    Err(_) => {
                        failures += 1;
                        PoseError::FAILED
                    }
                })
                .collect();
            let report = recall_report(&errors)
                .map_err(|e| Error::InvalidParameter(format!("basin row {delta}: {e}")))?;
            Ok(BasinRow { delta, report, failures })
        })
        .collect()
}
