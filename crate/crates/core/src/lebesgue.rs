//! Derivative-deviation averages, the greedy bad set around a reference
//! parameter, safe chord windows, and the partition-based straightening that
//! makes a curve piecewise linear on most of its domain.
//!
//! For a PL curve the derivative is piecewise constant, so the deviation
//! `M(p, q)` (average of `|f'(z) - f'(x)|` over `[p, q]`) is an exact finite
//! sum, and its antiderivative is piecewise linear. Threshold crossings of
//! `M` are therefore solvable in closed form on each piece.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::ConstantBudget;
use crate::error::{Error, Result};
use crate::geom::{PLCurve, Point2, PARAM_TOL};

/// Upper bound on greedy picks before giving up.
pub const MAX_BAD_INTERVALS: usize = 10_000;
/// Upper bound on the number of partition cells.
pub const MAX_CELLS: usize = 1 << 20;

/// Derivative at `x`; fails at a genuine corner.
pub fn reference_velocity(curve: &PLCurve, x: f64) -> Result<Point2> {
    curve.eval(x)?;
    if let Some(i) = curve.breakpoint_near(x) {
        if curve.is_corner(i) {
            return Err(Error::AmbiguousDerivative(curve.breakpoints()[i]));
        }
        return Ok(curve.velocity(i.min(curve.n_segments() - 1)));
    }
    Ok(curve.velocity(curve.segment_at(x)))
}

/// `int_p^q |f'(z) - v| dz`.
pub fn deviation_integral(curve: &PLCurve, v: Point2, p: f64, q: f64) -> f64 {
    let bps = curve.breakpoints();
    let mut acc = 0.0;
    for i in 0..curve.n_segments() {
        let lo = bps[i].max(p);
        let hi = bps[i + 1].min(q);
        if hi > lo {
            acc += (curve.velocity(i) - v).norm() * (hi - lo);
        }
    }
    acc
}

/// Average of `|f'(z) - f'(x)|` over `[p, q]`.
pub fn deviation(curve: &PLCurve, x: f64, p: f64, q: f64) -> Result<f64> {
    let v = reference_velocity(curve, x)?;
    curve.eval(p)?;
    curve.eval(q)?;
    if !(p < q) {
        return Err(Error::Domain {
            t: p,
            lo: curve.t0(),
            hi: q,
        });
    }
    Ok(deviation_integral(curve, v, p, q) / (q - p))
}

/// Piecewise-linear antiderivative of `|f' - v|` on a window.
struct Primitive {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Primitive {
    fn new(curve: &PLCurve, v: Point2, lo: f64, hi: f64) -> Primitive {
        let mut knots = vec![lo];
        knots.extend(curve.breakpoints().iter().copied().filter(|&b| b > lo && b < hi));
        knots.push(hi);
        let mut values = vec![0.0];
        let mut slopes = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let g = (curve.velocity(curve.segment_at(0.5 * (w[0] + w[1]))) - v).norm();
            slopes.push(g);
            values.push(values.last().unwrap() + g * (w[1] - w[0]));
        }
        Primitive { knots, values, slopes }
    }

    fn piece(&self, t: f64) -> usize {
        self.knots
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(self.slopes.len() - 1)
    }

    fn at(&self, t: f64) -> f64 {
        let k = self.piece(t);
        self.values[k] + self.slopes[k] * (t - self.knots[k])
    }

    /// Largest `q > p` with `mean(p, q) >= thr`.
    fn max_q(&self, p: f64, thr: f64) -> Option<f64> {
        let fp = self.at(p);
        let g = |t: f64| self.at(t) - fp - thr * (t - p);
        let hi = *self.knots.last().unwrap();
        let mut right = hi;
        let mut gr = g(right);
        for k in (0..self.slopes.len()).rev() {
            let left = self.knots[k].max(p);
            if left >= right {
                break;
            }
            let gl = g(left);
            if gr >= 0.0 {
                return (right > p).then_some(right);
            }
            if gl >= 0.0 {
                let q = left + gl / (gl - gr) * (right - left);
                return (q > p + PARAM_TOL).then_some(q);
            }
            right = left;
            gr = gl;
        }
        None
    }

    /// Smallest `p < q` with `mean(p, q) >= thr`.
    fn min_p(&self, q: f64, thr: f64) -> Option<f64> {
        let fq = self.at(q);
        let g = |t: f64| fq - self.at(t) - thr * (q - t);
        let lo = self.knots[0];
        let mut left = lo;
        let mut gl = g(left);
        for k in 0..self.slopes.len() {
            let right = self.knots[k + 1].min(q);
            if right <= left {
                break;
            }
            let gr = g(right);
            if gl >= 0.0 {
                return (left < q).then_some(left);
            }
            if gr >= 0.0 {
                let p = left + gl / (gl - gr) * (right - left);
                return (p < q - PARAM_TOL).then_some(p);
            }
            left = right;
            gl = gr;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadSet {
    /// Inflated intervals `(p - (q - p), q + (q - p))`.
    pub intervals: Vec<(f64, f64)>,
    /// Generating pairs `(p, q)` in pick order.
    pub generators: Vec<(f64, f64)>,
    /// Uncovered measure of each generator at the time it was picked.
    pub uncovered: Vec<f64>,
    pub total_measure: f64,
}

impl BadSet {
    /// True when `t` lies in the closure of some interval.
    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= t && t <= b)
    }
}

fn union_measure(mut ivs: Vec<(f64, f64)>) -> f64 {
    merge_intervals(&mut ivs).iter().map(|(a, b)| b - a).sum()
}

/// Sorts and merges overlapping closed intervals.
pub fn merge_intervals(ivs: &mut Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in ivs.iter() {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Measure of `(p, q)` not covered by `covered` (merged, sorted).
fn uncovered_measure(p: f64, q: f64, covered: &[(f64, f64)]) -> f64 {
    let mut m = q - p;
    for &(a, b) in covered {
        let lo = a.max(p);
        let hi = b.min(q);
        if hi > lo {
            m -= hi - lo;
        }
    }
    m.max(0.0)
}

/// Greedy bad set around `x` on `(x - h, x + h)` at threshold `eps / (2L)`.
pub fn bad_set(curve: &PLCurve, x: f64, h: f64, eps: f64, lip: f64) -> Result<BadSet> {
    let v = reference_velocity(curve, x)?;
    if !(h > 0.0) || x - h < curve.t0() - PARAM_TOL || x + h > curve.t1() + PARAM_TOL {
        return Err(Error::Precondition(format!(
            "window ({}, {}) must lie inside the domain",
            x - h,
            x + h
        )));
    }
    bad_set_from(curve, v, (x - h).max(curve.t0()), (x + h).min(curve.t1()), eps / (2.0 * lip))
}

fn bad_set_from(curve: &PLCurve, v: Point2, lo: f64, hi: f64, thr: f64) -> Result<BadSet> {
    let prim = Primitive::new(curve, v, lo, hi);
    let mut set = BadSet {
        intervals: vec![],
        generators: vec![],
        uncovered: vec![],
        total_measure: 0.0,
    };
    let tiny = PARAM_TOL * (1.0 + hi.abs().max(lo.abs()));
    loop {
        let mut covered = set.intervals.clone();
        let covered = merge_intervals(&mut covered);
        let mut cands: Vec<f64> = prim.knots.clone();
        for &(a, b) in &covered {
            cands.extend([a, b].into_iter().filter(|&t| t > lo && t < hi));
        }
        let mut best: Option<(f64, f64, f64)> = None;
        let mut offer = |p: f64, q: f64| {
            let u = uncovered_measure(p, q, &covered);
            let better = match best {
                None => true,
                Some((bu, bp, bq)) => {
                    u > bu + tiny || ((u - bu).abs() <= tiny && (p < bp || (p == bp && q > bq)))
                }
            };
            if better {
                best = Some((u, p, q));
            }
        };
        for &c in &cands {
            if let Some(q) = prim.max_q(c, thr) {
                offer(c, q);
            }
            if let Some(p) = prim.min_p(c, thr) {
                offer(p, c);
            }
        }
        match best {
            Some((u, p, q)) if u > tiny => {
                if set.generators.len() >= MAX_BAD_INTERVALS {
                    return Err(Error::Pathological(MAX_BAD_INTERVALS));
                }
                let w = q - p;
                set.generators.push((p, q));
                set.intervals.push((p - w, q + w));
                set.uncovered.push(u);
            }
            _ => break,
        }
    }
    set.total_measure = union_measure(set.intervals.clone());
    Ok(set)
}

/// Whether `M(p, q) < thr` whenever one of `p`, `q` lies outside the closure
/// of the bad set, checked on all pairs of `probe` points.
pub fn bad_set_property_holds(curve: &PLCurve, x: f64, set: &BadSet, thr: f64, probe: &[f64]) -> Result<bool> {
    let v = reference_velocity(curve, x)?;
    for (a, &p) in probe.iter().enumerate() {
        for &q in &probe[a + 1..] {
            if q <= p || (set.contains(p) && set.contains(q)) {
                continue;
            }
            if deviation_integral(curve, v, p, q) / (q - p) >= thr * (1.0 + 1e-9) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    /// Open pieces of `(lo, hi)` outside the bad set.
    pub pieces: Vec<(f64, f64)>,
    pub measure: f64,
    pub bad: BadSet,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        self.pieces.iter().any(|&(a, b)| a < t && t < b)
    }
}

/// `(x - ell, x + ell)` minus the bad set built on `(x - ell/eps, x + ell/eps)`
/// (clipped to the domain).
pub fn lebesgue_window(curve: &PLCurve, x: f64, ell: f64, eps: f64, lip: f64) -> Result<Window> {
    lebesgue_window_with_reach(curve, x, ell, ell / eps, eps, lip)
}

/// Same as [`lebesgue_window`] with an explicit deviation half-width `h`.
pub fn lebesgue_window_with_reach(
    curve: &PLCurve,
    x: f64,
    ell: f64,
    h: f64,
    eps: f64,
    lip: f64,
) -> Result<Window> {
    let v = reference_velocity(curve, x)?;
    let (lo, hi) = (x - ell, x + ell);
    if lo < curve.t0() - PARAM_TOL || hi > curve.t1() + PARAM_TOL || !(ell > 0.0) {
        return Err(Error::Precondition(format!(
            "window ({lo}, {hi}) must lie inside the domain"
        )));
    }
    let h = h.max(ell).min(x - curve.t0()).min(curve.t1() - x);
    let bad = bad_set_from(curve, v, x - h, x + h, eps / (2.0 * lip))?;
    let mut ivs = bad.intervals.clone();
    let covered = merge_intervals(&mut ivs);
    let mut pieces = Vec::new();
    let mut cursor = lo;
    for &(a, b) in &covered {
        if b <= cursor || a >= hi {
            continue;
        }
        if a > cursor {
            pieces.push((cursor, a.min(hi)));
        }
        cursor = cursor.max(b);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        pieces.push((cursor, hi));
    }
    let measure: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let required = (2.0 - eps) * ell;
    if measure < required {
        return Err(Error::WindowTooSmall { x, measure, required });
    }
    Ok(Window {
        lo,
        hi,
        pieces,
        measure,
        bad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub m: usize,
    /// Reference parameter in the central part of the cell.
    pub x: f64,
    pub admissible: bool,
    pub x_minus: Option<f64>,
    pub x_plus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub n: usize,
    pub eps_tilde: f64,
    /// Cells near a corner, in order; every other cell is admissible with
    /// an identity replacement.
    pub cells: Vec<CellRecord>,
    /// Chord replacements actually applied.
    pub replaced: Vec<(f64, f64)>,
    /// Maximal intervals on which the output is a single linear piece.
    pub good_set: Vec<(f64, f64)>,
    /// Closure of the complement of the good set.
    pub bad_intervals: Vec<(f64, f64)>,
    pub complement_measure: f64,
}

/// Makes the curve linear on all but a set of measure `eps` (relative to the
/// domain length) by chord replacement on admissible partition cells.
pub fn straighten_lebesgue(
    curve: &PLCurve,
    eps: f64,
    lip: f64,
    budget: &ConstantBudget,
) -> Result<(PLCurve, PartitionReport)> {
    straighten_lebesgue_min_cells(curve, eps, lip, budget, 1)
}

/// [`straighten_lebesgue`] with at least `min_cells` partition cells.
pub fn straighten_lebesgue_min_cells(
    curve: &PLCurve,
    eps: f64,
    lip: f64,
    budget: &ConstantBudget,
    min_cells: usize,
) -> Result<(PLCurve, PartitionReport)> {
    if !(eps > 0.0) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let mut n = ((1.0 / (eps * eps)).ceil().min(MAX_CELLS as f64) as usize)
        .max(min_cells)
        .max(1);
    loop {
        let (out, report) = straighten_with_cells(curve, eps, lip, budget, n)?;
        if report.complement_measure <= eps * curve.domain_len() {
            let sup = out.sup_distance(curve);
            if sup > eps {
                return Err(Error::CannotStraighten(format!(
                    "sup-distance {sup} exceeds {eps} at N = {n}"
                )));
            }
            return Ok((out, report));
        }
        if n * 2 > MAX_CELLS {
            return Err(Error::CannotStraighten(format!(
                "non-linear measure {} still above {} at N = {}",
                report.complement_measure,
                eps * curve.domain_len(),
                n
            )));
        }
        n *= 2;
    }
}

fn straighten_with_cells(
    curve: &PLCurve,
    eps: f64,
    lip: f64,
    budget: &ConstantBudget,
    n: usize,
) -> Result<(PLCurve, PartitionReport)> {
    let (t0, t1) = (curve.t0(), curve.t1());
    let d = t1 - t0;
    let et = budget.eps_tilde;
    let corners = curve.corner_params();
    let corner_in = |a: f64, b: f64| {
        let k = corners.partition_point(|&c| c <= a);
        k < corners.len() && corners[k] < b
    };
    let width = d / n as f64;
    let bounds = |m: usize| {
        let lo = t0 + d * m as f64 / n as f64;
        let hi = if m + 1 == n { t1 } else { t0 + d * (m + 1) as f64 / n as f64 };
        (lo, hi)
    };
    // Cells whose reach holds no corner are admissible with an identity
    // replacement; only the few cells near a corner are examined.
    let reach_cells = (budget.window_ratio / 2.0).ceil() as usize + 2;
    let mut examine: Vec<usize> = corners
        .iter()
        .flat_map(|&c| {
            let k = (((c - t0) / width).floor().max(0.0) as usize).min(n - 1);
            k.saturating_sub(reach_cells)..(k + reach_cells + 1).min(n)
        })
        .collect();
    examine.sort_unstable();
    examine.dedup();

    let cells: Vec<CellRecord> = examine
        .par_iter()
        .map(|&m| {
            let (lo, hi) = bounds(m);
            let mut x = 0.5 * (lo + hi);
            if corner_in(x - PARAM_TOL, x + PARAM_TOL) {
                x += 0.25 * et * width;
            }
            let ell = (x - lo).min(hi - x);
            let h = (budget.window_ratio * ell).min(x - t0).min(t1 - x);
            let left_range = (lo, lo + 2.0 * et * width);
            let right_range = (hi - 2.0 * et * width, hi);
            let reject = CellRecord {
                m,
                x,
                admissible: false,
                x_minus: None,
                x_plus: None,
            };
            if !corner_in(x - h, x + h) {
                return CellRecord {
                    admissible: true,
                    x_minus: Some(lo + et * width),
                    x_plus: Some(hi - et * width),
                    ..reject
                };
            }
            let Ok(win) = lebesgue_window_with_reach(curve, x, ell, h, eps, lip) else {
                return reject;
            };
            let pick = |range: (f64, f64), from_left: bool| {
                let mut hits = win.pieces.iter().filter_map(|&(a, b)| {
                    let (u, w) = (a.max(range.0), b.min(range.1));
                    (w > u).then_some(0.5 * (u + w))
                });
                if from_left {
                    hits.next()
                } else {
                    hits.last()
                }
            };
            match (pick(left_range, true), pick(right_range, false)) {
                (Some(a), Some(b)) if a < b => CellRecord {
                    admissible: true,
                    x_minus: Some(a),
                    x_plus: Some(b),
                    ..reject
                },
                _ => reject,
            }
        })
        .collect();

    let mut out = curve.clone();
    let mut replaced = Vec::new();
    let mut ranges = Vec::new();
    let trivial_range = |m: usize| {
        let (lo, hi) = bounds(m);
        (lo + et * width, hi - et * width)
    };
    for (k, c) in cells.iter().enumerate() {
        // the unexamined neighbours bound the gaps around this run
        if c.m > 0 && (k == 0 || cells[k - 1].m + 1 != c.m) {
            ranges.push(trivial_range(c.m - 1));
        }
        if c.admissible {
            let (a, b) = (c.x_minus.unwrap(), c.x_plus.unwrap());
            ranges.push((a, b));
            if corner_in(a, b) {
                out = out.segment_replace(a, b)?;
                replaced.push((a, b));
            }
        }
        if c.m + 1 < n && cells.get(k + 1).map_or(true, |d| d.m != c.m + 1) {
            ranges.push(trivial_range(c.m + 1));
        }
    }
    let out = out.merge_collinear();

    // complement components without a corner of the output join the good set
    let out_corners = out.corner_params();
    let corner_in_closed = |a: f64, b: f64| {
        let k = out_corners.partition_point(|&c| c < a - PARAM_TOL);
        k < out_corners.len() && out_corners[k] <= b + PARAM_TOL
    };
    let mut gaps = Vec::new();
    let mut cursor = t0;
    for &(a, b) in &ranges {
        if a > cursor {
            gaps.push((cursor, a));
        }
        cursor = b;
    }
    if cursor < t1 {
        gaps.push((cursor, t1));
    }
    let bad_intervals: Vec<(f64, f64)> = gaps.into_iter().filter(|&(a, b)| corner_in_closed(a, b)).collect();
    let mut good_set = Vec::new();
    let mut cursor = t0;
    for &(a, b) in &bad_intervals {
        if a > cursor {
            good_set.push((cursor, a));
        }
        cursor = b;
    }
    if cursor < t1 {
        good_set.push((cursor, t1));
    }
    let complement_measure = bad_intervals.iter().map(|(a, b)| b - a).sum();
    Ok((
        out,
        PartitionReport {
            n,
            eps_tilde: et,
            cells,
            replaced,
            good_set,
            bad_intervals,
            complement_measure,
        },
    ))
}
