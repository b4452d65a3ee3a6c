//! Coarse pose selection over a uniform 4-DoF grid around the prior.
//!
//! Along each axis `d` the grid holds `n(d)` samples spanning `r(d)`,
//! centred on the prior value with stride `r(d) / (n(d) - 1)`. Pitch and
//! roll stay at the prior. Every node is rendered, scored by IoU against the
//! query mask, and the best node becomes the coarse pose.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::mask::BinaryMask;
use crate::rasterizer::CityModel;
use crate::scoring::{AlignmentScore, PoseScorer};

/// Range and sample count along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSampling {
    pub range: f64,
    pub count: u32,
}

impl AxisSampling {
    pub fn new(range: f64, count: u32) -> Result<Self> {
        let a = AxisSampling { range, count };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.range.is_finite() || self.range < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "axis range {} / count {} invalid",
                self.range, self.count
            )));
        }
        if (self.range == 0.0) != (self.count == 1) {
            return Err(Error::InvalidParameter(format!(
                "axis range {} must be zero exactly when count is 1 (count {})",
                self.range, self.count
            )));
        }
        Ok(())
    }

    pub fn fixed() -> Self {
        AxisSampling { range: 0.0, count: 1 }
    }

    pub fn stride(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            self.range / (self.count - 1) as f64
        }
    }

    /// Offset of sample `k` from the prior value.
    ///
    /// Written as `(k - (n-1)/2) * stride`, which equals `-r/2 + k * stride`
    /// but yields exactly 0 at the centre of an odd grid.
    pub fn offset(&self, k: u32) -> f64 {
        if self.count <= 1 {
            return 0.0;
        }
        let centre = (self.count - 1) as f64 / 2.0;
        (k as f64 - centre) * self.stride()
    }

    /// Offset of sample `k` divided by the range (0 when the range is 0).
    fn normalized_offset(&self, k: u32) -> f64 {
        if self.range == 0.0 {
            0.0
        } else {
            self.offset(k) / self.range
        }
    }
}

/// Sampling along x, y, z (meters) and yaw (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec {
    pub x: AxisSampling,
    pub y: AxisSampling,
    pub z: AxisSampling,
    pub yaw: AxisSampling,
}

impl Default for SamplingSpec {
    /// ±30 m at 10 m stride on each translation axis, ±4° at 2° in yaw.
    fn default() -> Self {
        let t = AxisSampling { range: 60.0, count: 7 };
        SamplingSpec {
            x: t,
            y: t,
            z: t,
            yaw: AxisSampling { range: 8.0, count: 5 },
        }
    }
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        self.axes().iter().try_for_each(|a| a.validate())
    }

    /// Only the prior itself.
    pub fn single() -> Self {
        let f = AxisSampling::fixed();
        SamplingSpec { x: f, y: f, z: f, yaw: f }
    }

    /// Translation grid spanning ±`delta` meters at a 10 m stride; yaw as default.
    pub fn for_prior_error(delta: f64) -> Result<Self> {
        const STRIDE: f64 = 10.0;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta {delta} must be >= 0")));
        }
        let steps = libm::ceil(2.0 * delta / STRIDE - 1e-9).max(0.0) as u32;
        let t = if steps == 0 {
            AxisSampling::fixed()
        } else {
            AxisSampling {
                range: steps as f64 * STRIDE,
                count: steps + 1,
            }
        };
        Ok(SamplingSpec {
            x: t,
            y: t,
            z: t,
            ..SamplingSpec::default()
        })
    }

    pub fn axes(&self) -> [AxisSampling; 4] {
        [self.x, self.y, self.z, self.yaw]
    }

    pub fn shape(&self) -> [usize; 4] {
        self.axes().map(|a| a.count as usize)
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index to `(ix, iy, iz, iyaw)`; yaw varies fastest.
    pub fn unravel(&self, mut linear: usize) -> [u32; 4] {
        let s = self.shape();
        let mut out = [0u32; 4];
        for axis in (0..4).rev() {
            out[axis] = (linear % s[axis]) as u32;
            linear /= s[axis];
        }
        out
    }

    pub fn ravel(&self, idx: [u32; 4]) -> usize {
        let s = self.shape();
        idx.iter()
            .zip(s.iter())
            .fold(0usize, |acc, (&i, &n)| acc * n + i as usize)
    }

    /// Hypothesis at grid index `idx` around `prior`.
    pub fn hypothesis(&self, prior: &Pose, idx: [u32; 4]) -> Pose {
        prior.offset(
            self.x.offset(idx[0]),
            self.y.offset(idx[1]),
            self.z.offset(idx[2]),
            self.yaw.offset(idx[3]),
        )
    }

    fn normalized_distance2(&self, idx: [u32; 4]) -> f64 {
        self.axes()
            .iter()
            .zip(idx)
            .map(|(a, k)| {
                let o = a.normalized_offset(k);
                o * o
            })
            .sum()
    }
}

/// All grid poses in index order (x outermost, yaw innermost).
pub fn generate_hypotheses(prior: &Pose, spec: &SamplingSpec) -> Result<Vec<Pose>> {
    spec.validate()?;
    Ok((0..spec.len())
        .map(|i| spec.hypothesis(prior, spec.unravel(i)))
        .collect())
}

/// IoU score for every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub spec: SamplingSpec,
    pub prior: Pose,
    scores: Vec<AlignmentScore>,
}

impl CostVolume {
    pub fn from_scores(spec: SamplingSpec, prior: Pose, scores: Vec<AlignmentScore>) -> Result<Self> {
        spec.validate()?;
        if scores.len() != spec.len() {
            return Err(Error::InvalidParameter(format!(
                "{} scores for a grid of {}",
                scores.len(),
                spec.len()
            )));
        }
        Ok(CostVolume { spec, prior, scores })
    }

    pub fn scores(&self) -> &[AlignmentScore] {
        &self.scores
    }

    pub fn get(&self, idx: [u32; 4]) -> AlignmentScore {
        self.scores[self.spec.ravel(idx)]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// 16-byte header of `u32` counts `(n_x, n_y, n_z, n_yaw)` then one `f32`
    /// per node, all little-endian, in index order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.scores.len());
        for n in self.spec.shape() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for s in &self.scores {
            out.extend_from_slice(&(s.value as f32).to_le_bytes());
        }
        out
    }
}

/// Renders every hypothesis at the query's resolution and scores it.
pub fn build_cost_volume<E: Executor>(
    query_mask: &BinaryMask,
    prior: &Pose,
    spec: &SamplingSpec,
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    near: f64,
    exec: &E,
) -> Result<CostVolume> {
    spec.validate()?;
    let scorer = PoseScorer::new(model, intrinsics, query_mask, near);
    let scores = exec.map_indexed(spec.len(), |i| {
        scorer.score(&spec.hypothesis(prior, spec.unravel(i)))
    });
    CostVolume::from_scores(*spec, *prior, scores)
}

/// Result of the argmax over a cost volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseSelection {
    pub pose: Pose,
    pub score: AlignmentScore,
    /// Grid index of the selected node; `None` on fallback.
    pub index: Option<[u32; 4]>,
    /// Set when no node scored above zero and the prior was returned.
    pub fallback: bool,
}

/// Highest-scoring node. Ties go to the node nearest the prior in
/// range-normalized offsets, then to the lowest linear index. When every
/// score is zero or degenerate the prior is returned with `fallback` set.
pub fn select_coarse_pose(volume: &CostVolume) -> CoarseSelection {
    let spec = &volume.spec;
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, s) in volume.scores.iter().enumerate() {
        if s.degenerate || !(s.value > 0.0) {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, v, d)) => {
                s.value > v || (s.value == v && spec.normalized_distance2(spec.unravel(i)) < d)
            }
        };
        if better {
            best = Some((i, s.value, spec.normalized_distance2(spec.unravel(i))));
        }
    }
    match best {
        Some((i, _, _)) => {
            let idx = spec.unravel(i);
            CoarseSelection {
                pose: spec.hypothesis(&volume.prior, idx),
                score: volume.scores[i],
                index: Some(idx),
                fallback: false,
            }
        }
        None => CoarseSelection {
            pose: volume.prior,
            score: AlignmentScore::ZERO,
            index: None,
            fallback: true,
        },
    }
}
