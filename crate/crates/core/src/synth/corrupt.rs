//! Segmentation-quality simulation.
//!
//! A clean mask is degraded by dropping whole connected components,
//! displacing its boundary with a smooth zero-mean noise field, and punching
//! single-pixel holes. The displacement amplitude is then bisected until the
//! IoU against the clean mask reaches the requested target.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::uniform;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::rng::{domain, stream};
use crate::scoring::iou;

/// Allowed gap between achieved and target IoU.
pub const IOU_TOLERANCE: f64 = 0.02;
const BISECTION_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub target_iou: f64,
    /// Probability of removing each connected component.
    pub dropout: f64,
    /// Upper bound of the searched boundary displacement, pixels.
    pub max_jitter: f64,
    /// Cleared pixels per 1000 image pixels.
    pub hole_rate: f64,
    /// Lattice spacing of the displacement noise, pixels.
    pub noise_cell: f64,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec {
            target_iou: 0.8,
            dropout: 0.0,
            max_jitter: 48.0,
            hole_rate: 0.5,
            noise_cell: 24.0,
            seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn identity() -> Self {
        CorruptionSpec {
            target_iou: 1.0,
            dropout: 0.0,
            max_jitter: 0.0,
            hole_rate: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.target_iou > 0.0
            && self.target_iou <= 1.0
            && (0.0..=1.0).contains(&self.dropout)
            && self.max_jitter >= 0.0
            && self.max_jitter.is_finite()
            && self.hole_rate >= 0.0
            && self.hole_rate <= 1000.0
            && self.noise_cell > 0.0
            && self.noise_cell.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("corruption parameters out of range".into()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corrupted {
    pub mask: BinaryMask,
    pub achieved_iou: f64,
    pub amplitude: f64,
}

/// 8-connected component labels, 0 for background.
fn components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if labels[start] != 0 || !mask.get((start % w) as u32, (start / w) as u32) {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if labels[q] == 0 && mask.get(nx as u32, ny as u32) {
                        labels[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Chamfer (3-4) distance, in pixels, from each pixel to the nearest pixel
/// where `target` holds.
fn chamfer(w: usize, h: usize, target: impl Fn(usize) -> bool) -> Vec<f32> {
    const INF: u32 = u32::MAX / 4;
    let mut d: Vec<u32> = (0..w * h).map(|i| if target(i) { 0 } else { INF }).collect();
    let at = |x: usize, y: usize| y * w + x;
    for y in 0..h {
        for x in 0..w {
            let mut v = d[at(x, y)];
            if x > 0 {
                v = v.min(d[at(x - 1, y)] + 3);
            }
            if y > 0 {
                v = v.min(d[at(x, y - 1)] + 3);
                if x > 0 {
                    v = v.min(d[at(x - 1, y - 1)] + 4);
                }
                if x + 1 < w {
                    v = v.min(d[at(x + 1, y - 1)] + 4);
                }
            }
            d[at(x, y)] = v;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut v = d[at(x, y)];
            if x + 1 < w {
                v = v.min(d[at(x + 1, y)] + 3);
            }
            if y + 1 < h {
                v = v.min(d[at(x, y + 1)] + 3);
                if x + 1 < w {
                    v = v.min(d[at(x + 1, y + 1)] + 4);
                }
                if x > 0 {
                    v = v.min(d[at(x - 1, y + 1)] + 4);
                }
            }
            d[at(x, y)] = v;
        }
    }
    d.into_iter().map(|v| v as f32 / 3.0).collect()
}

/// Smooth value noise in `[-1, 1]`, bilinear with smoothstep weights.
fn noise_field(w: usize, h: usize, cell: f64, seed: u64) -> Vec<f32> {
    let gw = libm::ceil(w as f64 / cell) as usize + 2;
    let gh = libm::ceil(h as f64 / cell) as usize + 2;
    let mut rng = stream(seed, &[domain::CORRUPT, 1]);
    let lattice: Vec<f64> = (0..gw * gh).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let fy = (y as f64 + 0.5) / cell;
        let (iy, ty) = (fy as usize, smooth(fy - libm::floor(fy)));
        for x in 0..w {
            let fx = (x as f64 + 0.5) / cell;
            let (ix, tx) = (fx as usize, smooth(fx - libm::floor(fx)));
            let g = |i: usize, j: usize| lattice[j * gw + i];
            let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
            let bot = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
            out.push((top * (1.0 - ty) + bot * ty) as f32);
        }
    }
    out
}

/// Amplitude-independent ingredients of one corruption draw.
struct Plan {
    width: u32,
    height: u32,
    /// Signed distance to the (post-dropout) boundary, positive inside.
    signed: Vec<f32>,
    noise: Vec<f32>,
    holes: Vec<usize>,
}

impl Plan {
    fn new(mask: &BinaryMask, spec: &CorruptionSpec) -> Plan {
        let (w, h) = (mask.width() as usize, mask.height() as usize);
        let (labels, n) = components(mask);
        let mut rng = stream(spec.seed, &[domain::CORRUPT, 0]);
        let keep: Vec<bool> = core::iter::once(false)
            .chain((0..n).map(|_| uniform(&mut rng, 0.0, 1.0) >= spec.dropout))
            .collect();
        let kept = |i: usize| keep[labels[i] as usize];
        let d_in = chamfer(w, h, |i| !kept(i));
        let d_out = chamfer(w, h, kept);
        let signed = (0..w * h)
            .map(|i| if kept(i) { d_in[i] - 0.5 } else { 0.5 - d_out[i] })
            .collect();
        let noise = noise_field(w, h, spec.noise_cell, spec.seed);
        let count = libm::round(spec.hole_rate * (w * h) as f64 / 1000.0) as usize;
        let mut hole_rng = stream(spec.seed, &[domain::CORRUPT, 2]);
        let holes = (0..count)
            .map(|_| (hole_rng.next_u64() % (w * h) as u64) as usize)
            .collect();
        Plan {
            width: mask.width(),
            height: mask.height(),
            signed,
            noise,
            holes,
        }
    }

    fn apply(&self, amplitude: f64) -> BinaryMask {
        let w = self.width as usize;
        let a = amplitude as f32;
        let mut m = BinaryMask::from_fn(self.width, self.height, |x, y| {
            let i = y as usize * w + x as usize;
            self.signed[i] + a * self.noise[i] > 0.0
        });
        for &i in &self.holes {
            m.set((i % w) as u32, (i / w) as u32, false);
        }
        m
    }
}

/// Corruption at a fixed displacement amplitude (no search).
pub fn corrupt_with_amplitude(mask: &BinaryMask, spec: &CorruptionSpec, amplitude: f64) -> Result<BinaryMask> {
    spec.validate()?;
    Ok(Plan::new(mask, spec).apply(amplitude))
}

/// Degrades `mask` so its IoU with the original is `target_iou ± 0.02`.
pub fn corrupt_mask(mask: &BinaryMask, spec: &CorruptionSpec) -> Result<Corrupted> {
    spec.validate()?;
    if mask.is_empty() {
        return Err(Error::InvalidParameter("cannot corrupt an empty mask".into()));
    }
    let target = spec.target_iou;
    let unreachable = |reason: alloc::string::String| Error::CorruptionUnreachable { target, reason };
    let plan = Plan::new(mask, spec);
    let measure = |a: f64| -> (BinaryMask, f64) {
        let m = plan.apply(a);
        let s = iou(mask, &m).expect("same dims").value;
        (m, s)
    };
    let (m0, s0) = measure(0.0);
    if (s0 - target).abs() <= 0.005 {
        return Ok(Corrupted { mask: m0, achieved_iou: s0, amplitude: 0.0 });
    }
    if s0 < target - IOU_TOLERANCE {
        return Err(unreachable(format!("dropout and holes alone give {s0:.3}")));
    }
    let (mut lo, mut hi) = (0.0, spec.max_jitter);
    let (mhi, shi) = measure(hi);
    if shi > target + IOU_TOLERANCE {
        return Err(unreachable(format!("max jitter {hi} px still gives {shi:.3}")));
    }
    let mut best = if (s0 - target).abs() <= (shi - target).abs() {
        (m0, s0, 0.0)
    } else {
        (mhi, shi, hi)
    };
    for _ in 0..BISECTION_STEPS {
        if (best.1 - target).abs() <= 0.005 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (m, s) = measure(mid);
        if (s - target).abs() < (best.1 - target).abs() {
            best = (m, s, mid);
        }
        if s > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (m, s, a) = best;
    if (s - target).abs() > IOU_TOLERANCE {
        return Err(unreachable(format!("bisection ended at {s:.3}")));
    }
    Ok(Corrupted { mask: m, achieved_iou: s, amplitude: a })
}
