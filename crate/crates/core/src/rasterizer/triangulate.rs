//! Footprint validation and ear-clipping triangulation.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

/// Twice the signed area (positive for counter-clockwise order).
pub fn signed_area2(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum()
}

#[inline]
fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn orientation(o: Point2, a: Point2, b: Point2) -> i8 {
    let c = cross(o, a, b);
    if c > 0.0 {
        1
    } else if c < 0.0 {
        -1
    } else {
        0
    }
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching counts.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    (o1 != o2 && o3 != o4)
        || (o1 == 0 && on_segment(c, a, b))
        || (o2 == 0 && on_segment(d, a, b))
        || (o3 == 0 && on_segment(a, c, d))
        || (o4 == 0 && on_segment(b, c, d))
}

/// Checks that `poly` is a simple polygon with no repeated or collinear
/// consecutive vertices. Orientation is not checked.
pub fn validate_simple(poly: &[Point2]) -> Result<()> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::InvalidPolygon(format!("{n} vertices, need at least 3")));
    }
    if poly.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidPolygon("non-finite vertex".into()));
    }
    let scale = poly
        .iter()
        .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
        .max(1.0);
    for i in 0..n {
        let a = poly[(i + n - 1) % n];
        let b = poly[i];
        let c = poly[(i + 1) % n];
        if a == b {
            return Err(Error::InvalidPolygon(format!("vertex {i} repeats its predecessor")));
        }
        let len = libm::hypot(c[0] - a[0], c[1] - a[1]).max(libm::hypot(b[0] - a[0], b[1] - a[1]));
        if cross(a, b, c).abs() <= 1e-12 * scale * len {
            return Err(Error::InvalidPolygon(format!("vertex {i} is collinear with its neighbours")));
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    if signed_area2(poly) == 0.0 {
        return Err(Error::InvalidPolygon("zero area".into()));
    }
    Ok(())
}

fn in_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
///
/// Returns `n - 2` index triples into `poly`, each counter-clockwise.
pub fn triangulate_footprint(poly: &[Point2]) -> Result<Vec<[usize; 3]>> {
    validate_simple(poly)?;
    if signed_area2(poly) < 0.0 {
        return Err(Error::InvalidPolygon("footprint is clockwise".into()));
    }
    let mut ring: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len() - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let ear = (0..m).find(|&k| {
            let (ia, ib, ic) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if cross(a, b, c) <= 0.0 {
                return false;
            }
            ring.iter()
                .filter(|&&v| v != ia && v != ib && v != ic)
                .all(|&v| !in_triangle(poly[v], a, b, c))
        });
        let Some(k) = ear else {
            return Err(Error::InvalidPolygon("no ear found".into()));
        };
        out.push([ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]]);
        ring.remove(k);
    }
    out.push([ring[0], ring[1], ring[2]]);
    Ok(out)
}

pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    cross(a, b, c) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn total_area(poly: &[Point2], tris: &[[usize; 3]]) -> f64 {
        tris.iter()
            .map(|t| triangle_area(poly[t[0]], poly[t[1]], poly[t[2]]))
            .sum()
    }

    #[test]
    fn unit_square() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = triangulate_footprint(&sq).unwrap();
        assert_eq!(t.len(), 2);
        assert!((total_area(&sq, &t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regular_pentagon() {
        let pent: Vec<Point2> = (0..5)
            .map(|k| {
                let a = 2.0 * core::f64::consts::PI * k as f64 / 5.0;
                [libm::cos(a), libm::sin(a)]
            })
            .collect();
        let t = triangulate_footprint(&pent).unwrap();
        assert_eq!(t.len(), 3);
        // 5/2 sin(72°) from the shoelace formula
        assert!((total_area(&pent, &t) - 2.377641).abs() < 1e-6);
    }

    #[test]
    fn l_shape_matches_shoelace() {
        let l = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 1.0], [1.0, 1.0], [1.0, 3.0], [0.0, 3.0]];
        let t = triangulate_footprint(&l).unwrap();
        assert_eq!(t.len(), 4);
        assert!((total_area(&l, &t) - signed_area2(&l) / 2.0).abs() < 1e-9);
        for tri in &t {
            assert!(triangle_area(l[tri[0]], l[tri[1]], l[tri[2]]) > 0.0);
        }
    }

    #[test]
    fn rejects_bow_tie_and_collinear() {
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(triangulate_footprint(&bow).is_err());
        let col = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]];
        assert!(triangulate_footprint(&col).is_err());
        let flat = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(triangulate_footprint(&flat).is_err());
        assert!(triangulate_footprint(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn rejects_clockwise() {
        let cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        assert!(validate_simple(&cw).is_ok());
        assert!(triangulate_footprint(&cw).is_err());
    }
}
