//! Shortening a sub-arc of a curve while keeping the inverse bound.
//!
//! Starting from the speed-`L` reparametrization of `[a, b]`, sub-arcs are
//! repeatedly replaced by their speed-`L` chords. A replacement is accepted
//! when no point outside the current fast interval comes too close to the new
//! chord. When no candidate is accepted the curve is locally short; its
//! global biLipschitz bound is then measured, not assumed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{DirVec, PLCurve, Point2, PARAM_TOL};
use crate::verify::inverse_lipschitz_over;

/// Cap on accepted straightenings in one [`shorten`] call.
pub const MAX_ACCEPTED: usize = 10_000;
/// Slack used when accepting a straightening.
pub const STEP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastCertificate {
    pub a: f64,
    pub b: f64,
    pub b_prime: f64,
    pub lip: f64,
    /// Largest `| |speed| - L |` over segments of `[a, b']`.
    pub speed_dev: f64,
    /// Smallest ratio over pairs with exactly one parameter in `[a, b']`.
    pub mild_min: f64,
    pub mild_witness: (f64, f64),
    /// Smallest ratio over pairs with both parameters in `[a, b']`.
    pub internal_min: f64,
    pub internal_witness: (f64, f64),
}

impl FastCertificate {
    pub fn is_fast(&self, slack: f64) -> bool {
        self.speed_dev <= 1e-9 * self.lip.max(1.0) && self.mild_min >= 1.0 / (self.lip * (1.0 + slack))
    }

    /// Fast and with no internal pair below the inverse bound.
    pub fn is_short_enough(&self, slack: f64) -> bool {
        self.is_fast(slack) && self.internal_min >= 1.0 / (self.lip * (1.0 + slack))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub r: f64,
    pub s: f64,
    pub s_plus: f64,
    pub accepted: bool,
    pub b_prime_after: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StraightenTrace {
    /// Every accepted step, plus the rejections of the final sweep.
    pub iterations: Vec<TraceStep>,
    pub final_b_prime: f64,
}

impl StraightenTrace {
    pub fn accepted(&self) -> usize {
        self.iterations.iter().filter(|s| s.accepted).count()
    }

    pub fn rejected(&self) -> usize {
        self.iterations.len() - self.accepted()
    }
}

/// Same image on `[a, b']`, traversed at speed `L`; the tail after `b` is
/// shifted left by `b - b'`.
pub fn speed_l_reparam(curve: &PLCurve, a: f64, b: f64, lip: f64) -> Result<(PLCurve, f64)> {
    let (c, a) = curve.with_breakpoint(a)?;
    let (c, b) = c.with_breakpoint(b)?;
    if !(a < b) {
        return Err(Error::Domain {
            t: a,
            lo: c.t0(),
            hi: b,
        });
    }
    let bps = c.breakpoints();
    let vs = c.vertices();
    for i in 0..c.n_segments() {
        if bps[i] >= a && bps[i + 1] <= b {
            let v = c.segment_speed(i);
            if v > lip * (1.0 + 1e-12) {
                return Err(Error::WouldExpand { speed: v, lip });
            }
        }
    }
    let mut nb = Vec::with_capacity(bps.len());
    let mut nv = Vec::with_capacity(bps.len());
    let mut acc = 0.0;
    let mut b_prime = a;
    for k in 0..bps.len() {
        let t = bps[k];
        if t <= a {
            nb.push(t);
            nv.push(vs[k]);
        } else if t <= b {
            let len = vs[k].dist(vs[k - 1]);
            if len == 0.0 {
                continue;
            }
            acc += len;
            b_prime = a + acc / lip;
            nb.push(b_prime);
            nv.push(vs[k]);
        } else {
            nb.push(t - (b - b_prime));
            nv.push(vs[k]);
        }
    }
    Ok((PLCurve::new(nb, nv)?, b_prime))
}

fn inside(c: &PLCurve, i: usize, a: f64, b: f64) -> bool {
    let bps = c.breakpoints();
    bps[i] >= a - PARAM_TOL && bps[i + 1] <= b + PARAM_TOL
}

fn outside(c: &PLCurve, i: usize, a: f64, b: f64) -> bool {
    let bps = c.breakpoints();
    bps[i + 1] <= a + PARAM_TOL || bps[i] >= b - PARAM_TOL
}

/// Speed and mixed-pair certificate for `[a, b']`.
pub fn is_fast(curve: &PLCurve, a: f64, b_prime: f64, lip: f64, grid_step: f64) -> Result<FastCertificate> {
    let mut cert = FastCertificate {
        a,
        b: b_prime,
        b_prime,
        lip,
        speed_dev: 0.0,
        mild_min: f64::INFINITY,
        mild_witness: (a, b_prime),
        internal_min: f64::INFINITY,
        internal_witness: (a, b_prime),
    };
    if b_prime <= a + PARAM_TOL {
        return Ok(cert);
    }
    let (c, a) = curve.with_breakpoint(a)?;
    let (c, bp) = c.with_breakpoint(b_prime)?;
    for i in 0..c.n_segments() {
        if inside(&c, i, a, bp) {
            cert.speed_dev = cert.speed_dev.max((c.segment_speed(i) - lip).abs());
        }
    }
    let (m, w) = inverse_lipschitz_over(&c, grid_step, |i, j| inside(&c, i, a, bp) != inside(&c, j, a, bp));
    cert.mild_min = m;
    cert.mild_witness = w;
    let (m, w) = inverse_lipschitz_over(&c, grid_step, |i, j| inside(&c, i, a, bp) && inside(&c, j, a, bp));
    cert.internal_min = m;
    cert.internal_witness = w;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub curve: PLCurve,
    pub s_plus: f64,
    pub b_prime_after: f64,
    /// Smallest ratio between the new chord and the outside.
    pub min_ratio: f64,
    pub witness: Option<(f64, f64)>,
    pub degenerate: bool,
}

/// Replaces `(r, s)` by its speed-`L` chord if no parameter outside the
/// shrunken fast interval violates the inverse bound against the chord.
pub fn straightening_step(
    curve: &PLCurve,
    a: f64,
    b_prime: f64,
    r: f64,
    s: f64,
    lip: f64,
    grid_step: f64,
) -> Result<StepOutcome> {
    if !(a - PARAM_TOL <= r && r < s && s <= b_prime + PARAM_TOL) {
        return Err(Error::Precondition(format!(
            "need a <= r < s <= b', got a={a} r={r} s={s} b'={b_prime}"
        )));
    }
    let reject = |degenerate| StepOutcome {
        accepted: false,
        curve: curve.clone(),
        s_plus: s,
        b_prime_after: b_prime,
        min_ratio: f64::NAN,
        witness: None,
        degenerate,
    };
    let (next, s_plus) = match curve.fast_reparam_segment(r, s, lip) {
        Ok(v) => v,
        Err(Error::DegenerateChord { .. }) => return Ok(reject(true)),
        Err(e) => return Err(e),
    };
    let b2 = b_prime - (s - s_plus);
    let (probe, a) = next.with_breakpoint(a)?;
    let (probe, b2) = probe.with_breakpoint(b2)?;
    let chord = probe.segment_at(0.5 * (r + s_plus));
    let (m, w) = inverse_lipschitz_over(&probe, grid_step, |i, j| {
        (i == chord && outside(&probe, j, a, b2)) || (j == chord && outside(&probe, i, a, b2))
    });
    let accepted = m >= 1.0 / (lip * (1.0 + STEP_SLACK));
    Ok(StepOutcome {
        accepted,
        curve: if accepted { next } else { curve.clone() },
        s_plus,
        b_prime_after: if accepted { b2 } else { b_prime },
        min_ratio: m,
        witness: m.is_finite().then_some(w),
        degenerate: false,
    })
}

fn check_hypothesis(curve: &PLCurve, a: f64, b: f64, lip: f64) -> Result<()> {
    // speeds of very short segments carry the rounding of their endpoints
    let scale = curve.t0().abs().max(curve.t1().abs()).max(1.0)
        + curve.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max) / lip;
    let near_seg = |i: usize| {
        let (lo, hi) = (curve.breakpoints()[i], curve.breakpoints()[i + 1]);
        let tol = 1e-9 + 16.0 * f64::EPSILON * scale / (hi - lo);
        (curve.segment_speed(i) - lip).abs() <= tol * lip.max(1.0)
    };
    if a > curve.t0() + PARAM_TOL {
        let i = curve.segment_at(a - PARAM_TOL * 4.0);
        if !near_seg(i) {
            return Err(Error::Precondition(format!(
                "curve must run at speed {lip} just before {a}, found {}",
                curve.segment_speed(i)
            )));
        }
    }
    if b < curve.t1() - PARAM_TOL {
        let i = curve.segment_at(b + PARAM_TOL * 4.0);
        if !near_seg(i) {
            return Err(Error::Precondition(format!(
                "curve must run at speed {lip} just after {b}, found {}",
                curve.segment_speed(i)
            )));
        }
    }
    Ok(())
}

/// Candidate intervals over `[a, b']`: whole interval, then halves, quarters
/// and so on down to `grid_step`, each level also shifted by half a cell.
fn candidates(a: f64, bp: f64, grid_step: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(a, bp)];
    let mut parts = 2usize;
    loop {
        let len = (bp - a) / parts as f64;
        if len < grid_step || parts > 1 << 20 {
            break;
        }
        for m in 0..parts {
            let r = a + len * m as f64;
            out.push((r, if m + 1 == parts { bp } else { r + len }));
        }
        for m in 0..parts - 1 {
            let r = a + len * (m as f64 + 0.5);
            out.push((r, r + len));
        }
        parts *= 2;
    }
    out
}

pub fn shorten(
    curve: &PLCurve,
    a: f64,
    b: f64,
    lip: f64,
    grid_step: f64,
) -> Result<(PLCurve, FastCertificate, StraightenTrace)> {
    check_hypothesis(curve, a, b, lip)?;
    let (mut psi, mut bp) = speed_l_reparam(curve, a, b, lip)?;
    let mut trace = StraightenTrace::default();
    let bound = 1.0 / (lip * (1.0 + STEP_SLACK));
    let mut accepted = 0usize;
    'outer: loop {
        if accepted >= MAX_ACCEPTED {
            return Err(Error::NonConvergence(accepted));
        }
        let mut rejections = Vec::new();
        for (r, s) in candidates(a, bp, grid_step) {
            let interior = psi.breakpoints().iter().any(|&t| t > r + PARAM_TOL && t < s - PARAM_TOL);
            if !interior {
                continue;
            }
            let chord = psi.eval_unchecked(r).dist(psi.eval_unchecked(s));
            if chord >= lip * (s - r) * (1.0 - 1e-12) {
                continue;
            }
            let out = straightening_step(&psi, a, bp, r, s, lip, grid_step)?;
            let step = TraceStep {
                r,
                s,
                s_plus: out.s_plus,
                accepted: out.accepted,
                b_prime_after: out.b_prime_after,
            };
            if out.accepted {
                trace.iterations.push(step);
                psi = out.curve.merge_collinear();
                bp = out.b_prime_after;
                accepted += 1;
                continue 'outer;
            }
            rejections.push(step);
        }
        // a violating internal pair is itself a candidate straightening
        let (m, (r, s)) = inverse_lipschitz_over(&psi, grid_step, |i, j| inside(&psi, i, a, bp) && inside(&psi, j, a, bp));
        if m < bound && r < s {
            let out = straightening_step(&psi, a, bp, r, s, lip, grid_step)?;
            let step = TraceStep {
                r,
                s,
                s_plus: out.s_plus,
                accepted: out.accepted,
                b_prime_after: out.b_prime_after,
            };
            if out.accepted {
                trace.iterations.push(step);
                psi = out.curve.merge_collinear();
                bp = out.b_prime_after;
                accepted += 1;
                continue 'outer;
            }
            rejections.push(step);
        }
        trace.iterations.extend(rejections);
        break;
    }
    trace.final_b_prime = bp;
    let mut cert = is_fast(&psi, a, bp, lip, grid_step)?;
    cert.b = b;
    Ok((psi, cert, trace))
}

/// Largest turning angle at breakpoints strictly inside `(a, b')`.
pub fn discrete_smoothness(curve: &PLCurve, a: f64, b_prime: f64) -> f64 {
    let bps = curve.breakpoints();
    (1..curve.n_segments())
        .filter(|&i| bps[i] > a + PARAM_TOL && bps[i] < b_prime - PARAM_TOL)
        .filter_map(|i| curve.turning_angle(i))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    pub ell: f64,
    pub eta: f64,
    pub lip: f64,
    /// `|QS|`.
    pub delta: f64,
    /// Direction of `PQ`.
    pub theta: DirVec,
    /// Direction of `PS`.
    pub theta_prime: DirVec,
    /// Direction of `QS`.
    pub nu: DirVec,
    /// `|theta - theta'| - eta / L^2`.
    pub residual1: f64,
    /// `theta.nu - eta / L^2 - (PS - PQ) / delta`.
    pub residual2_lo: f64,
    /// `(PS - PQ) / delta - theta.nu - eta / L^2`.
    pub residual2_hi: f64,
}

impl DirectionEstimate {
    pub fn holds(&self) -> bool {
        self.residual1 <= 0.0 && self.residual2_lo <= 0.0 && self.residual2_hi <= 0.0
    }
}

pub fn direction_estimates(p: Point2, q: Point2, s: Point2, ell: f64, eta: f64, lip: f64) -> Result<DirectionEstimate> {
    let degenerate = || Error::Degenerate("direction estimate needs distinct points".into());
    let theta = DirVec::from_vector(q - p).ok_or_else(degenerate)?;
    let theta_prime = DirVec::from_vector(s - p).ok_or_else(degenerate)?;
    let nu = DirVec::from_vector(s - q).ok_or_else(degenerate)?;
    if p.dist(q) < ell / 2.0 {
        return Err(Error::Precondition(format!(
            "|PQ| = {} is below ell/2 = {}",
            p.dist(q),
            ell / 2.0
        )));
    }
    let delta = q.dist(s);
    let tol = eta / (lip * lip);
    // chord distance between unit vectors, as in |theta - theta'| on the circle
    let gap = (theta.as_point() - theta_prime.as_point()).norm();
    let growth = (p.dist(s) - p.dist(q)) / delta;
    let tn = theta.dot(nu);
    Ok(DirectionEstimate {
        ell,
        eta,
        lip,
        delta,
        theta,
        theta_prime,
        nu,
        residual1: gap - tol,
        residual2_lo: tn - tol - growth,
        residual2_hi: growth - tn - tol,
    })
}

/// Largest dyadic multiple of `ell` for which both direction estimates hold on
/// a fixed probe set with `|QS|` at that value and a few smaller ones.
pub fn fit_delta_bar(ell: f64, eta: f64, lip: f64) -> f64 {
    let holds_at = |delta: f64| {
        (0..5).all(|j| {
            let q = Point2::new(ell / 2.0 * (1.0 + j as f64 / 4.0), 0.0);
            (0..32).all(|k| {
                let phi = std::f64::consts::TAU * k as f64 / 32.0;
                let s = q + DirVec::from_angle(phi).as_point() * delta;
                direction_estimates(Point2::ORIGIN, q, s, ell, eta, lip)
                    .map(|d| d.holds())
                    .unwrap_or(false)
            })
        })
    };
    let mut delta = ell;
    while delta > ell * 1e-12 && !(0..4).all(|k| holds_at(delta / 2f64.powi(k))) {
        delta *= 0.5;
    }
    delta
}
