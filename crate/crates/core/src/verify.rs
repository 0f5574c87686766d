//! Lipschitz and inverse-Lipschitz measurement with witnesses.
//!
//! The upper constant of a PL curve is its largest segment speed. The lower
//! constant is minimized per ordered pair of segments. On such a pair the
//! ratio `|f(q) - f(p)| / (q - p)` has convex sublevel sets (norm of an affine
//! map against an affine denominator), so for fixed `p` the minimizing `q` has
//! a closed form and the outer search in `p` is unimodal. A coarse grid guards
//! against flat stretches before golden-section refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{PLCurve, Point2};

pub const DEFAULT_SLACK: f64 = 1e-6;
pub const GOLDEN_ITERS: usize = 50;
const MAX_GRID: usize = 257;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiLipReport {
    pub lip_upper: f64,
    pub inv_lip_lower: f64,
    pub witness_max: (f64, f64),
    pub witness_min: (f64, f64),
    pub grid_step: f64,
}

impl BiLipReport {
    /// `max(lip_upper, 1 / inv_lip_lower)`, infinite for a collapsing pair.
    pub fn constant(&self) -> f64 {
        let inv = if self.inv_lip_lower > 0.0 {
            1.0 / self.inv_lip_lower
        } else {
            f64::INFINITY
        };
        self.lip_upper.max(inv)
    }

    pub fn passes(&self, lip: f64, slack: f64) -> bool {
        let bound = lip * (1.0 + slack);
        self.lip_upper <= bound && self.inv_lip_lower >= 1.0 / bound
    }
}

/// Default sampling step: domain length / 2048.
pub fn default_grid(curve: &PLCurve) -> f64 {
    curve.domain_len() / 2048.0
}

pub fn lipschitz_upper(curve: &PLCurve) -> f64 {
    lipschitz_upper_with_witness(curve).0
}

pub fn lipschitz_upper_with_witness(curve: &PLCurve) -> (f64, (f64, f64)) {
    let bps = curve.breakpoints();
    let mut best = (f64::NEG_INFINITY, (bps[0], bps[1]));
    for (i, s) in curve.speeds().into_iter().enumerate() {
        if s > best.0 {
            best = (s, (bps[i], bps[i + 1]));
        }
    }
    best
}

/// Minimum pair ratio and its witness.
pub fn inverse_lipschitz(curve: &PLCurve, grid_step: f64) -> (f64, (f64, f64)) {
    inverse_lipschitz_over(curve, grid_step, |_, _| true)
}

/// Minimum ratio over `p` in segment `i`, `q` in segment `j`, `i <= j`,
/// restricted to the segment pairs accepted by `select`. Returns infinity
/// when nothing is selected.
pub fn inverse_lipschitz_over(
    curve: &PLCurve,
    grid_step: f64,
    select: impl Fn(usize, usize) -> bool + Sync,
) -> (f64, (f64, f64)) {
    assert!(grid_step > 0.0, "grid_step must be positive");
    let bps = curve.breakpoints();
    let vs = curve.vertices();
    let n = curve.n_segments();

    // ratios between segment endpoints give a cheap starting bound
    let mut best = (f64::INFINITY, (bps[0], bps[n]));
    for i in 0..n {
        for j in i..n {
            if !select(i, j) {
                continue;
            }
            for (a, b) in [(i, j + 1), (i, j), (i + 1, j + 1), (i + 1, j)] {
                if a < b {
                    let r = vs[a].dist(vs[b]) / (bps[b] - bps[a]);
                    if r < best.0 {
                        best = (r, (bps[a], bps[b]));
                    }
                }
            }
        }
    }
    let bound = best.0;

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| select(i, j))
        .collect();
    let found: Vec<Option<(f64, (f64, f64))>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let span = bps[j + 1] - bps[i];
            let lb = segment_distance(vs[i], vs[i + 1], vs[j], vs[j + 1]) / span;
            if lb >= bound {
                return None;
            }
            Some(segment_pair_min(curve, i, j, grid_step))
        })
        .collect();
    for (v, w) in found.into_iter().flatten() {
        if v < best.0 - 1e-12 * best.0.abs() {
            best = (v, w);
        }
    }
    best
}

/// Minimum over `p` in segment `i`, `q` in segment `j > i`.
fn segment_pair_min(curve: &PLCurve, i: usize, j: usize, grid_step: f64) -> (f64, (f64, f64)) {
    let bps = curve.breakpoints();
    let vs = curve.vertices();
    let (p0, p1) = (bps[i], bps[i + 1]);
    let (q0, q1) = (bps[j], bps[j + 1]);
    let u = curve.velocity(i);
    let w = curve.velocity(j);
    let ws = w.dot(w);
    let len_q = q1 - q0;

    // exact minimum over q for fixed p
    let inner = |p: f64| -> (f64, f64) {
        // measured from the segment end so adjacent pairs get c = 0 exactly at p1
        let c = (vs[j] - vs[i + 1]) + u * (p1 - p);
        let d = q0 - p;
        let mut best = (f64::INFINITY, q1);
        let mut try_s = |s: f64| {
            let den = s + d;
            if den <= 0.0 {
                return;
            }
            let r = (c + w * s).norm() / den;
            if r < best.0 {
                best = (r, q0 + s);
            }
        };
        try_s(0.0);
        try_s(len_q);
        let denom = ws * d - c.dot(w);
        if denom != 0.0 {
            let s = (c.dot(c) - c.dot(w) * d) / denom;
            if s > 0.0 && s < len_q {
                try_s(s);
            }
        }
        if d <= 0.0 && c.norm() == 0.0 {
            // p sits on q0 itself: the ratio tends to |w| as q -> q0
            let r = ws.sqrt();
            if r < best.0 {
                best = (r, q0 + len_q.min(1e-9 * (1.0 + q0.abs())));
            }
        }
        best
    };

    let mut best = (f64::INFINITY, (p0, q1));
    let consider = |p: f64, best: &mut (f64, (f64, f64))| -> f64 {
        let (r, q) = inner(p);
        if r < best.0 {
            *best = (r, (p, q));
        }
        r
    };

    if j == i + 1 {
        // limit at the shared vertex: min over lambda of |lambda u + (1 - lambda) w|
        let v = q0;
        let m = (p1 - p0).min(q1 - q0);
        let d = u - w;
        let dd = d.dot(d);
        let lam = if dd == 0.0 { 0.5 } else { (-(w.dot(d)) / dd).clamp(0.0, 1.0) };
        let r = (u * lam + w * (1.0 - lam)).norm();
        let (p, q) = if lam == 0.0 {
            (v, v + m)
        } else if lam == 1.0 {
            (v - m, v)
        } else {
            // the ratio is constant along rays from the vertex; take the longest
            let m = ((p1 - p0) / lam).min((q1 - q0) / (1.0 - lam));
            (v - lam * m, v + (1.0 - lam) * m)
        };
        best = (r, (p, q));
    }

    let k = (((p1 - p0) / grid_step).ceil() as usize + 1).clamp(3, MAX_GRID);
    let mut grid_best = (f64::INFINITY, p0);
    for a in 0..k {
        let p = if a + 1 == k { p1 } else { p0 + (p1 - p0) * a as f64 / (k - 1) as f64 };
        let r = consider(p, &mut best);
        if r < grid_best.0 {
            grid_best = (r, p);
        }
    }
    let h = (p1 - p0) / (k - 1) as f64;
    for (lo, hi) in [
        ((grid_best.1 - h).max(p0), (grid_best.1 + h).min(p1)),
        (p0, p1),
    ] {
        golden(lo, hi, GOLDEN_ITERS, |p| consider(p, &mut best));
    }
    best
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns the best abscissa seen.
pub fn golden(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (f1, x1)
    } else {
        (f2, x2)
    }
}

/// Minimum of `f` over the box by a `k x k` grid followed by nested golden
/// search (locally around the best grid node, then over the whole box).
/// Infinite values mark excluded points.
pub fn box_min(
    p_range: (f64, f64),
    q_range: (f64, f64),
    k: usize,
    iters: usize,
    f: &dyn Fn(f64, f64) -> f64,
) -> (f64, (f64, f64)) {
    let k = k.max(2);
    let node = |r: (f64, f64), a: usize| {
        if a + 1 == k {
            r.1
        } else {
            r.0 + (r.1 - r.0) * a as f64 / (k - 1) as f64
        }
    };
    let mut best = (f64::INFINITY, (p_range.0, q_range.1));
    for a in 0..k {
        for b in 0..k {
            let (p, q) = (node(p_range, a), node(q_range, b));
            let v = f(p, q);
            if v < best.0 {
                best = (v, (p, q));
            }
        }
    }
    let hp = (p_range.1 - p_range.0) / (k - 1) as f64;
    let hq = (q_range.1 - q_range.0) / (k - 1) as f64;
    let (bp, bq) = best.1;
    let local_p = ((bp - hp).max(p_range.0), (bp + hp).min(p_range.1));
    let local_q = ((bq - hq).max(q_range.0), (bq + hq).min(q_range.1));
    for (pr, qr) in [(local_p, local_q), (p_range, q_range)] {
        let cell = std::cell::RefCell::new(best);
        golden(pr.0, pr.1, iters, |p| {
            let (v, q) = golden(qr.0, qr.1, iters, |q| f(p, q));
            let mut b = cell.borrow_mut();
            if v < b.0 {
                *b = (v, (p, q));
            }
            v
        });
        best = cell.into_inner();
    }
    best
}

pub fn report(curve: &PLCurve, grid_step: f64) -> BiLipReport {
    let (lip_upper, witness_max) = lipschitz_upper_with_witness(curve);
    let (inv_lip_lower, witness_min) = inverse_lipschitz(curve, grid_step);
    BiLipReport {
        lip_upper,
        inv_lip_lower,
        witness_max,
        witness_min,
        grid_step,
    }
}

pub fn check_bilip(curve: &PLCurve, lip: f64, grid_step: f64, slack: f64) -> (bool, BiLipReport) {
    let r = report(curve, grid_step);
    (r.passes(lip, slack), r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerViolation {
    pub index: usize,
    pub t: f64,
    pub turning: f64,
    pub bound: f64,
}

/// Largest turning angle allowed at a corner between two speed-`lip` legs.
pub fn max_corner_turn(lip: f64) -> f64 {
    std::f64::consts::PI - 2.0 * (1.0 / (lip * lip)).min(1.0).asin()
}

pub fn corner_angle_check(curve: &PLCurve, lip: f64) -> Vec<CornerViolation> {
    let speeds = curve.speeds();
    let fast = lip * (1.0 - 1e-9);
    let bound = max_corner_turn(lip);
    (1..curve.n_segments())
        .filter(|&i| speeds[i - 1] >= fast && speeds[i] >= fast)
        .filter_map(|i| {
            let turning = curve.turning_angle(i)?;
            (turning > bound + 1e-9).then(|| CornerViolation {
                index: i,
                t: curve.breakpoints()[i],
                turning,
                bound,
            })
        })
        .collect()
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let l2 = ab.dot(ab);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Euclidean distance between segments `[a, b]` and `[c, d]`.
pub fn segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}
