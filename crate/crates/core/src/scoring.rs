//! Silhouette alignment cost: intersection over union of two masks.

use crate::error::Result;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::mask::BinaryMask;
use crate::rasterizer::{CityModel, Renderer};

/// IoU of two silhouettes. `degenerate` marks an empty union, scored 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlignmentScore {
    pub value: f64,
    pub degenerate: bool,
}

impl AlignmentScore {
    pub const ZERO: AlignmentScore = AlignmentScore {
        value: 0.0,
        degenerate: false,
    };

    pub fn from_counts(intersection: u64, union: u64) -> Self {
        if union == 0 {
            AlignmentScore {
                value: 0.0,
                degenerate: true,
            }
        } else {
            AlignmentScore {
                value: intersection as f64 / union as f64,
                degenerate: false,
            }
        }
    }
}

/// Popcounts of `a ∩ b` and `a ∪ b`.
pub fn overlap_counts(a: &BinaryMask, b: &BinaryMask) -> Result<(u64, u64)> {
    a.check_dims(b)?;
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&x, &y) in a.words().iter().zip(b.words()) {
        inter += (x & y).count_ones() as u64;
        union += (x | y).count_ones() as u64;
    }
    Ok((inter, union))
}

/// `|a ∩ b| / |a ∪ b|`; errors when the masks differ in size.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<AlignmentScore> {
    let (inter, union) = overlap_counts(a, b)?;
    Ok(AlignmentScore::from_counts(inter, union))
}

/// Scores poses by rendering the model and comparing with a fixed query mask.
#[derive(Clone, Copy)]
pub struct PoseScorer<'a> {
    model: &'a CityModel,
    intrinsics: CameraIntrinsics,
    query: &'a BinaryMask,
    near: f64,
}

impl<'a> PoseScorer<'a> {
    /// Renders at the query's resolution; `intrinsics` may be at any reference
    /// resolution.
    pub fn new(
        model: &'a CityModel,
        intrinsics: &CameraIntrinsics,
        query: &'a BinaryMask,
        near: f64,
    ) -> Self {
        PoseScorer {
            model,
            intrinsics: intrinsics.scaled(query.width(), query.height()),
            query,
            near,
        }
    }

    pub fn render(&self, pose: &Pose) -> BinaryMask {
        Renderer::new(self.model, self.intrinsics, self.near).render(pose)
    }

    pub fn score(&self, pose: &Pose) -> AlignmentScore {
        let rendered = self.render(pose);
        let (i, u) = overlap_counts(self.query, &rendered).expect("render matches query dims");
        AlignmentScore::from_counts(i, u)
    }
}
