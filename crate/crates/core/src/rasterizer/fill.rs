//! Scanline triangle fill with pixel-center sampling.
//!
//! Pixel `(i, j)` is covered when its center `(i + 0.5, j + 0.5)` lies inside
//! the triangle; centers on a left or top edge count, centers on a right or
//! bottom edge do not.

use crate::mask::BinaryMask;

type P = (f64, f64);

/// x of the edge `a -> b` (with `a.1 < b.1`) at height `y`.
#[inline]
fn edge_x(a: P, b: P, y: f64) -> f64 {
    a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1)
}

/// Canonical endpoint order so that triangles sharing an edge evaluate it
/// with identical arithmetic.
#[inline]
fn ordered(a: P, b: P) -> (P, P) {
    if (a.1, a.0) <= (b.1, b.0) {
        (a, b)
    } else {
        (b, a)
    }
}

/// First pixel index whose center is `>= x`, clamped to `[0, limit]`.
#[inline]
fn first_center_at_or_after(x: f64, limit: usize) -> usize {
    let v = libm::ceil(x - 0.5);
    if !(v > 0.0) {
        0
    } else if v >= limit as f64 {
        limit
    } else {
        v as usize
    }
}

/// Fills the pixels whose centers fall inside triangle `(p0, p1, p2)` (any winding).
pub fn fill_triangle(mask: &mut BinaryMask, p0: P, p1: P, p2: P) {
    let mut v = [p0, p1, p2];
    v.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap_or(core::cmp::Ordering::Equal));
    let [a, b, c] = v;
    if !(a.1 < c.1) || !a.0.is_finite() || !b.0.is_finite() || !c.0.is_finite() {
        return;
    }
    let area2 = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    if area2 == 0.0 {
        return;
    }
    let h = mask.height() as usize;
    let w = mask.width() as usize;
    let row0 = first_center_at_or_after(a.1, h);
    let row1 = first_center_at_or_after(c.1, h);
    let long = ordered(a, c);
    let upper = ordered(a, b);
    let lower = ordered(b, c);
    for row in row0..row1 {
        let yc = row as f64 + 0.5;
        let xl = edge_x(long.0, long.1, yc);
        let xs = if yc < b.1 {
            edge_x(upper.0, upper.1, yc)
        } else {
            edge_x(lower.0, lower.1, yc)
        };
        let (left, right) = if xl <= xs { (xl, xs) } else { (xs, xl) };
        let i0 = first_center_at_or_after(left, w);
        let i1 = first_center_at_or_after(right, w);
        mask.fill_span(row, i0, i1);
    }
}
