use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::uniform;
use crate::error::{Error, Result};
use crate::rasterizer::{segments_intersect, signed_area2, Bounds, Building, CityModel, Point2};
use crate::rng::{domain, stream};

/// Parameters of a procedural city.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CitySpec {
    pub bounds: Bounds,
    pub building_count: usize,
    /// Footprint side lengths, meters.
    pub side_range: (f64, f64),
    /// Building heights, meters.
    pub height_range: (f64, f64),
    /// Minimum distance between any two footprints, meters.
    pub min_gap: f64,
    /// Probability that a footprint is L-shaped rather than rectangular.
    pub l_shape_fraction: f64,
    pub seed: u64,
}

impl Default for CitySpec {
    fn default() -> Self {
        CitySpec {
            bounds: Bounds {
                xmin: -250.0,
                ymin: -250.0,
                xmax: 250.0,
                ymax: 250.0,
            },
            building_count: 200,
            side_range: (8.0, 30.0),
            height_range: (8.0, 45.0),
            min_gap: 3.0,
            l_shape_fraction: 0.3,
            seed: 0,
        }
    }
}

impl CitySpec {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a > 0.0 && a <= b;
        if !ordered(self.side_range) {
            return Err(Error::InvalidParameter("side range must be positive and ordered".into()));
        }
        if !ordered(self.height_range) {
            return Err(Error::InvalidParameter("height range must be positive and ordered".into()));
        }
        if !(self.min_gap >= 0.0 && self.min_gap.is_finite()) {
            return Err(Error::InvalidParameter("min gap must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.l_shape_fraction) {
            return Err(Error::InvalidParameter("l-shape fraction must be in [0, 1]".into()));
        }
        Bounds::new(self.bounds.xmin, self.bounds.ymin, self.bounds.xmax, self.bounds.ymax)?;
        Ok(())
    }
}

/// A generated city and whether every requested building fit.
#[derive(Debug, Clone)]
pub struct GeneratedCity {
    pub model: CityModel,
    pub requested: usize,
    /// False when the placement budget ran out first.
    pub complete: bool,
}

fn rectangle(w: f64, d: f64) -> Vec<Point2> {
    let (hw, hd) = (w / 2.0, d / 2.0);
    vec![[-hw, -hd], [hw, -hd], [hw, hd], [-hw, hd]]
}

/// `w x d` rectangle with the `(+x, +y)` corner cut away by `cw x cd`.
fn l_shape(w: f64, d: f64, cw: f64, cd: f64) -> Vec<Point2> {
    let (hw, hd) = (w / 2.0, d / 2.0);
    vec![
        [-hw, -hd],
        [hw, -hd],
        [hw, hd - cd],
        [hw - cw, hd - cd],
        [hw - cw, hd],
        [-hw, hd],
    ]
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    libm::hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy))
}

fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Euclidean distance between two simple polygons (0 when they overlap).
pub fn polygon_distance(a: &[Point2], b: &[Point2]) -> f64 {
    if point_in_polygon(a[0], b) || point_in_polygon(b[0], a) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        let (p0, p1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (q0, q1) = (b[j], b[(j + 1) % b.len()]);
            if segments_intersect(p0, p1, q0, q1) {
                return 0.0;
            }
            best = best
                .min(point_segment_distance(p0, q0, q1))
                .min(point_segment_distance(p1, q0, q1))
                .min(point_segment_distance(q0, p0, p1))
                .min(point_segment_distance(q1, p0, p1));
        }
    }
    best
}

struct Placed {
    footprint: Vec<Point2>,
    center: Point2,
    radius: f64,
}

/// Places rectangles and L-shapes by rejection sampling.
///
/// Gives up after `1000 * building_count` attempts and returns what fits.
pub fn generate_city(spec: &CitySpec) -> Result<GeneratedCity> {
    spec.validate()?;
    let mut rng = stream(spec.seed, &[domain::CITY]);
    let budget = 1000usize.saturating_mul(spec.building_count);
    let mut placed: Vec<Placed> = Vec::with_capacity(spec.building_count);
    let mut heights = Vec::with_capacity(spec.building_count);
    let b = spec.bounds;
    let (smin, smax) = spec.side_range;
    for _ in 0..budget {
        if placed.len() == spec.building_count {
            break;
        }
        let w = uniform(&mut rng, smin, smax);
        let d = uniform(&mut rng, smin, smax);
        let cx = uniform(&mut rng, b.xmin, b.xmax);
        let cy = uniform(&mut rng, b.ymin, b.ymax);
        let theta = uniform(&mut rng, 0.0, core::f64::consts::FRAC_PI_2);
        let is_l = uniform(&mut rng, 0.0, 1.0) < spec.l_shape_fraction;
        let cut_w = uniform(&mut rng, 0.3, 0.7);
        let cut_d = uniform(&mut rng, 0.3, 0.7);
        let height = uniform(&mut rng, spec.height_range.0, spec.height_range.1);
        let local = if is_l {
            l_shape(w, d, cut_w * w, cut_d * d)
        } else {
            rectangle(w, d)
        };
        let (s, c) = libm::sincos(theta);
        let footprint: Vec<Point2> = local
            .iter()
            .map(|p| [cx + c * p[0] - s * p[1], cy + s * p[0] + c * p[1]])
            .collect();
        if !footprint.iter().all(|p| b.contains(*p)) {
            continue;
        }
        debug_assert!(signed_area2(&footprint) > 0.0);
        let radius = libm::hypot(w, d) / 2.0;
        let clear = placed.iter().all(|o| {
            let gap = libm::hypot(o.center[0] - cx, o.center[1] - cy) - o.radius - radius;
            gap >= spec.min_gap || polygon_distance(&o.footprint, &footprint) >= spec.min_gap
        });
        if clear {
            placed.push(Placed {
                footprint,
                center: [cx, cy],
                radius,
            });
            heights.push(height);
        }
    }
    let complete = placed.len() == spec.building_count;
    let buildings = placed
        .into_iter()
        .zip(heights)
        .map(|(p, h)| Building {
            footprint: p.footprint,
            base_z: 0.0,
            height: h,
        })
        .collect();
    let model = CityModel::new(buildings, spec.bounds)
        .map_err(|e| Error::InvalidParameter(format!("generated city failed validation: {e}")))?;
    Ok(GeneratedCity {
        model,
        requested: spec.building_count,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let spec = CitySpec { building_count: 30, seed: 5, ..Default::default() };
        let a = generate_city(&spec).unwrap();
        let b = generate_city(&spec).unwrap();
        assert_eq!(a.model, b.model);
        let c = generate_city(&CitySpec { seed: 6, ..spec }).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn fifty_buildings_respect_bounds_and_gaps() {
        let spec = CitySpec { building_count: 50, seed: 1, ..Default::default() };
        let city = generate_city(&spec).unwrap();
        assert!(city.complete);
        let bs = city.model.buildings();
        assert_eq!(bs.len(), 50);
        assert!(bs.iter().flat_map(|b| &b.footprint).all(|p| spec.bounds.contains(*p)));
        for i in 0..bs.len() {
            for j in i + 1..bs.len() {
                assert!(polygon_distance(&bs[i].footprint, &bs[j].footprint) >= spec.min_gap);
            }
        }
        assert!(bs.iter().any(|b| b.footprint.len() == 6));
        assert!(bs.iter().any(|b| b.footprint.len() == 4));
    }

    #[test]
    fn zero_count_is_empty() {
        let city = generate_city(&CitySpec { building_count: 0, ..Default::default() }).unwrap();
        assert!(city.model.is_empty());
        assert!(city.complete);
    }

    #[test]
    fn crowded_spec_reports_partial() {
        let spec = CitySpec {
            bounds: Bounds { xmin: 0.0, ymin: 0.0, xmax: 60.0, ymax: 60.0 },
            building_count: 40,
            ..Default::default()
        };
        let city = generate_city(&spec).unwrap();
        assert!(!city.complete);
        assert!(city.model.len() < 40);
    }

    #[test]
    fn polygon_distance_cases() {
        let a = rectangle(2.0, 2.0);
        let b: Vec<Point2> = a.iter().map(|p| [p[0] + 5.0, p[1]]).collect();
        assert!((polygon_distance(&a, &b) - 3.0).abs() < 1e-12);
        let inner = rectangle(0.5, 0.5);
        assert_eq!(polygon_distance(&a, &inner), 0.0);
    }
}
