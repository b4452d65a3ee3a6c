use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::uniform;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::rasterizer::{CityModel, Renderer};
use crate::rng::{domain, stream};
use crate::geometry::DEFAULT_NEAR;
use crate::COARSE_RESOLUTION;

/// Where query cameras may be placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySpec {
    pub count: usize,
    /// Camera height above ground, meters.
    pub altitude_range: (f64, f64),
    /// Camera pitch, degrees (negative looks down).
    pub pitch_range: (f64, f64),
    /// Inset from the scene bounds for camera positions, meters.
    pub margin: f64,
    /// Minimum fraction of building pixels in the coarse-resolution view.
    pub min_coverage: f64,
    pub seed: u64,
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec {
            count: 100,
            altitude_range: (100.0, 160.0),
            pitch_range: (-60.0, -30.0),
            margin: 50.0,
            min_coverage: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub pose: Pose,
}

pub fn query_id(index: usize) -> String {
    format!("q{index:04}")
}

/// Samples query poses whose coarse view shows at least `min_coverage`
/// building pixels. Fails after `200 * count + 1000` rejected draws.
pub fn generate_queries(
    model: &CityModel,
    spec: &QuerySpec,
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<Query>> {
    let (a0, a1) = spec.altitude_range;
    let (p0, p1) = spec.pitch_range;
    if !(a0 <= a1 && p0 <= p1 && p0 >= -90.0 && p1 <= 90.0) {
        return Err(Error::InvalidParameter("query ranges must be ordered and valid".into()));
    }
    let b = model.bounds();
    let (xmin, xmax) = (b.xmin + spec.margin, b.xmax - spec.margin);
    let (ymin, ymax) = (b.ymin + spec.margin, b.ymax - spec.margin);
    if !(xmin <= xmax && ymin <= ymax) {
        return Err(Error::InvalidParameter("margin leaves no room for cameras".into()));
    }
    let budget = 200 * spec.count + 1000;
    if model.is_empty() && spec.count > 0 {
        return Err(Error::NoViews { attempts: 0 });
    }
    let k = intrinsics.scaled(COARSE_RESOLUTION.0, COARSE_RESOLUTION.1);
    let mut renderer = Renderer::new(model, k, DEFAULT_NEAR);
    let mut rng = stream(spec.seed, &[domain::QUERIES]);
    let mut out = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while out.len() < spec.count {
        if attempts == budget {
            return Err(Error::NoViews { attempts });
        }
        attempts += 1;
        let x = uniform(&mut rng, xmin, xmax);
        let y = uniform(&mut rng, ymin, ymax);
        let z = uniform(&mut rng, a0, a1);
        let yaw = uniform(&mut rng, 0.0, 360.0);
        let pitch = uniform(&mut rng, p0, p1);
        let pose = Pose::new(x, y, z, yaw, pitch, 0.0)?;
        if renderer.render(&pose).coverage() >= spec.min_coverage {
            out.push(Query {
                id: query_id(out.len()),
                pose,
            });
        }
    }
    Ok(out)
}
