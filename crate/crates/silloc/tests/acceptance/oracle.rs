//! Per-pixel ray casting against extruded footprints, independent of the
//! scanline renderer.

use silloc_core::{Building, CameraIntrinsics, CityModel, Pose};

fn inside(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut c = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            c = !c;
        }
        j = i;
    }
    c
}

/// Parameter values in `[t0, t1]` where the 2-D ray `o + t d` crosses an edge line segment.
fn crossings(o: [f64; 2], d: [f64; 2], poly: &[[f64; 2]], t0: f64, t1: f64, out: &mut Vec<f64>) {
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let e = [b[0] - a[0], b[1] - a[1]];
        let den = d[0] * e[1] - d[1] * e[0];
        if den == 0.0 {
            continue;
        }
        let w = [a[0] - o[0], a[1] - o[1]];
        let t = (w[0] * e[1] - w[1] * e[0]) / den;
        let s = (w[0] * d[1] - w[1] * d[0]) / den;
        if (0.0..=1.0).contains(&s) && t > t0 && t < t1 {
            out.push(t);
        }
    }
}

fn ray_hits(b: &Building, c: [f64; 3], d: [f64; 3], near: f64) -> bool {
    let (lo, hi) = (b.base_z, b.base_z + b.height);
    let (mut t0, mut t1) = (near, 1e7_f64);
    if d[2] == 0.0 {
        if c[2] < lo || c[2] > hi {
            return false;
        }
    } else {
        let (a, z) = ((lo - c[2]) / d[2], (hi - c[2]) / d[2]);
        t0 = t0.max(a.min(z));
        t1 = t1.min(a.max(z));
    }
    if t0 >= t1 {
        return false;
    }
    let o = [c[0], c[1]];
    let dd = [d[0], d[1]];
    let mut ts = vec![t0, t1];
    crossings(o, dd, &b.footprint, t0, t1, &mut ts);
    ts.sort_by(f64::total_cmp);
    ts.windows(2).any(|w| {
        let t = 0.5 * (w[0] + w[1]);
        w[1] > w[0] && inside([o[0] + t * dd[0], o[1] + t * dd[1]], &b.footprint)
    })
}

/// Camera centre and world direction of a pixel-space point, scaled so that
/// the ray parameter equals camera depth.
pub fn ray(k: &CameraIntrinsics, pose: &Pose, u: f64, v: f64) -> ([f64; 3], [f64; 3]) {
    let r = pose.rotation();
    let m = r.matrix();
    let dc = [(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0];
    let d = [0, 1, 2].map(|i| m[(i, 0)] * dc[0] + m[(i, 1)] * dc[1] + m[(i, 2)] * dc[2]);
    ([pose.x, pose.y, pose.z], d)
}

pub fn covered(model: &CityModel, k: &CameraIntrinsics, pose: &Pose, u: f64, v: f64, near: f64) -> bool {
    let (c, d) = ray(k, pose, u, v);
    model.buildings().iter().any(|b| ray_hits(b, c, d, near))
}

/// Oracle silhouette at `k`'s resolution, row-major.
pub fn render(model: &CityModel, k: &CameraIntrinsics, pose: &Pose, near: f64) -> Vec<bool> {
    let mut out = Vec::with_capacity((k.width * k.height) as usize);
    for j in 0..k.height {
        for i in 0..k.width {
            out.push(covered(model, k, pose, i as f64 + 0.5, j as f64 + 0.5, near));
        }
    }
    out
}

/// True when the oracle is not constant within one pixel of `(u, v)`.
pub fn near_edge(model: &CityModel, k: &CameraIntrinsics, pose: &Pose, u: f64, v: f64, near: f64) -> bool {
    let v0 = covered(model, k, pose, u, v, near);
    (0..16).any(|a| {
        let th = a as f64 * std::f64::consts::TAU / 16.0;
        covered(model, k, pose, u + th.cos(), v + th.sin(), near) != v0
    })
}
