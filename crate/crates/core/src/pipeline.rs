//! End-to-end approximation of an `L`-biLipschitz curve on `[0, 1]` by a
//! piecewise-linear `(L + eps)`-biLipschitz curve within sup-distance `eps`.
//!
//! Stages:
//! 1. straighten: linear on all but a set of measure `xi`;
//! 2. speed up: run at speed `L + xi` on short strips next to each bad
//!    interval, recording the time change `tau`;
//! 3. shorten every bad interval at speed `L + xi` (time change `tau~`);
//! 4. resample the shortened intervals on uniform subdivisions;
//! 5. rescale the domain back to `[0, 1]`.
//!
//! The output is always certified by direct measurement; a failed
//! certification is reported, never hidden.

use serde::{Deserialize, Serialize};

pub use crate::budget::{choose_constants, ConstantBudget};
use crate::error::{Error, Result};
use crate::geom::{PLCurve, PARAM_TOL};
use crate::lebesgue::{straighten_lebesgue, straighten_lebesgue_min_cells, PartitionReport};
use crate::shorten::shorten;
pub use crate::timechange::TimeChange;
use crate::verify::{check_bilip, BiLipReport};

/// Largest number of subdivisions tried per resampled interval.
pub const MAX_SUBDIVISIONS: usize = 1 << 16;

fn complement(domain: (f64, f64), good: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cursor = domain.0;
    for &(a, b) in good {
        if a > cursor + PARAM_TOL {
            out.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < domain.1 - PARAM_TOL {
        out.push((cursor, domain.1));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Speedup {
    pub curve: PLCurve,
    pub tau: TimeChange,
    /// Domain length after the speed-up.
    pub c: f64,
    /// Strip width actually used.
    pub ell: f64,
    /// Bad intervals in the new parametrization.
    pub bad: Vec<(f64, f64)>,
}

/// Runs at speed `L + xi` on strips of width `ell` next to every bad
/// interval (the complement of `good_set`).
pub fn speedup(curve: &PLCurve, good_set: &[(f64, f64)], budget: &ConstantBudget, lip: f64) -> Result<Speedup> {
    speedup_with_cap(curve, good_set, budget, lip, f64::INFINITY)
}

/// [`speedup`] with strips no wider than `max_ell`.
pub fn speedup_with_cap(
    curve: &PLCurve,
    good_set: &[(f64, f64)],
    budget: &ConstantBudget,
    lip: f64,
    max_ell: f64,
) -> Result<Speedup> {
    let (t0, t1) = (curve.t0(), curve.t1());
    let bad = complement((t0, t1), good_set);
    if bad.is_empty() {
        return Ok(Speedup {
            curve: curve.clone(),
            tau: TimeChange::identity(t0, t1),
            c: t1 - t0,
            ell: 0.0,
            bad,
        });
    }
    let fast = lip + budget.xi;
    let shortest = good_set
        .iter()
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    // 2 ell K < xi keeps the domain loss below xi; wider strips keep the
    // reparametrized speeds away from rounding noise
    let ell = (budget.xi / (4.0 * bad.len() as f64))
        .min(0.5 * shortest)
        .min(max_ell);
    if !(ell > 0.0) {
        return Err(Error::Budget("no room for speed-up strips".into()));
    }
    let mut strips: Vec<(f64, f64)> = Vec::new();
    for &(p, q) in &bad {
        if p > t0 + PARAM_TOL {
            strips.push((p - ell, p));
        }
        if q < t1 - PARAM_TOL {
            strips.push((q, q + ell));
        }
    }
    strips.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs = vec![t0];
    for &(a, b) in &strips {
        for t in [a, b] {
            if t > *xs.last().unwrap() + PARAM_TOL && t < t1 - PARAM_TOL {
                xs.push(t);
            }
        }
    }
    xs.push(t1);
    let mut ys = vec![t0];
    for w in xs.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let in_strip = strips.iter().any(|&(a, b)| a <= mid && mid <= b);
        let slope = if in_strip {
            let v = curve.segment_speed(curve.segment_at(mid));
            if !curve.is_linear_on(w[0], w[1]) {
                return Err(Error::Budget(format!(
                    "curve is not linear on the strip ({}, {})",
                    w[0], w[1]
                )));
            }
            v / fast
        } else {
            1.0
        };
        ys.push(ys.last().unwrap() + slope * (w[1] - w[0]));
    }
    let tau = TimeChange::new(xs, ys)?;
    let out = tau.push_forward(curve)?;
    let c = tau.range().1 - tau.range().0;
    let len = t1 - t0;
    if !(c <= len + PARAM_TOL && c >= len * (1.0 - budget.xi)) {
        return Err(Error::Accounting(format!(
            "speed-up shrinks the domain to {c}, outside [{}, {len}]",
            len * (1.0 - budget.xi)
        )));
    }
    let bad = bad.iter().map(|&(p, q)| (tau.eval(p), tau.eval(q))).collect();
    Ok(Speedup {
        curve: out,
        tau,
        c,
        ell,
        bad,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shortened {
    pub curve: PLCurve,
    pub tau_tilde: TimeChange,
    /// The shortened intervals `[a_i, b'_i]` in the new parametrization.
    pub smooth: Vec<(f64, f64)>,
}

/// Shortens each bad interval in turn, left to right, at speed `lip_eff`.
pub fn shorten_bad_intervals(
    curve: &PLCurve,
    bad: &[(f64, f64)],
    lip_eff: f64,
    budget: &ConstantBudget,
) -> Result<Shortened> {
    let (t0, t1) = (curve.t0(), curve.t1());
    let mut cur = curve.clone();
    let mut offset = 0.0;
    let mut xs = vec![t0];
    let mut ys = vec![t0];
    let mut smooth = Vec::new();
    for (k, &(p, q)) in bad.iter().enumerate() {
        let (a, b) = (p - offset, q - offset);
        let grid = budget.grid_step.min((b - a) / 8.0);
        let (next, cert, _) = shorten(&cur, a, b, lip_eff, grid).map_err(|e| Error::Arc {
            index: k,
            source: Box::new(e),
        })?;
        if p > *xs.last().unwrap() {
            xs.push(p);
            ys.push(a);
        }
        xs.push(q);
        ys.push(cert.b_prime);
        smooth.push((a, cert.b_prime));
        offset += b - cert.b_prime;
        cur = next;
    }
    if t1 > *xs.last().unwrap() {
        xs.push(t1);
        ys.push(t1 - offset);
    }
    Ok(Shortened {
        curve: cur,
        tau_tilde: TimeChange::new(xs, ys)?,
        smooth,
    })
}

fn resample(curve: &PLCurve, intervals: &[(f64, f64)], k: usize) -> Result<PLCurve> {
    let mut bps = Vec::new();
    let mut vs = Vec::new();
    let mut idx = 0;
    let src_b = curve.breakpoints();
    let src_v = curve.vertices();
    let push = |t: f64, bps: &mut Vec<f64>, vs: &mut Vec<_>| {
        if bps.last().map_or(true, |&l: &f64| t > l + PARAM_TOL) {
            bps.push(t);
            vs.push(curve.eval_unchecked(t));
        }
    };
    for &(a, b) in intervals {
        while idx < src_b.len() && src_b[idx] < a {
            if bps.last().map_or(true, |&l: &f64| src_b[idx] > l + PARAM_TOL) {
                bps.push(src_b[idx]);
                vs.push(src_v[idx]);
            }
            idx += 1;
        }
        let single = curve.restrict(a, b)?.n_segments() == 1;
        let parts = if single { 1 } else { k };
        for m in 0..=parts {
            let t = if m == parts { b } else { a + (b - a) * m as f64 / parts as f64 };
            push(t, &mut bps, &mut vs);
        }
        while idx < src_b.len() && src_b[idx] <= b {
            idx += 1;
        }
    }
    while idx < src_b.len() {
        if bps.last().map_or(true, |&l: &f64| src_b[idx] > l + PARAM_TOL) {
            bps.push(src_b[idx]);
            vs.push(src_v[idx]);
        }
        idx += 1;
    }
    PLCurve::new(bps, vs)
}

/// Replaces each interval by its uniform `k`-subdivision, doubling `k` until
/// the whole curve is `lip_eff (1 + xi)`-biLipschitz and moved by at most `xi`.
pub fn pl_sample_c1(
    curve: &PLCurve,
    smooth: &[(f64, f64)],
    lip_eff: f64,
    budget: &ConstantBudget,
) -> Result<(PLCurve, usize)> {
    if smooth.is_empty() {
        return Ok((curve.clone(), 0));
    }
    let target = lip_eff * (1.0 + budget.xi);
    let mut k = 1;
    while k <= MAX_SUBDIVISIONS {
        let out = resample(curve, smooth, k)?;
        if out.sup_distance(curve) <= budget.xi && check_bilip(&out, target, budget.grid_step, 0.0).0 {
            return Ok((out, k));
        }
        k *= 2;
    }
    Err(Error::Sampling(format!(
        "no subdivision up to {MAX_SUBDIVISIONS} reaches constant {target}"
    )))
}

/// `x -> curve(C' x)` on `[0, 1]`, where `C'` is the domain length.
pub fn rescale(curve: &PLCurve, c_prime: f64, xi: f64) -> Result<PLCurve> {
    if !(c_prime >= 1.0 - 2.0 * xi - PARAM_TOL && c_prime <= 1.0 + PARAM_TOL) {
        return Err(Error::Accounting(format!(
            "final domain length {c_prime} outside [{}, 1]",
            1.0 - 2.0 * xi
        )));
    }
    if (curve.domain_len() - c_prime).abs() > PARAM_TOL || curve.t0() != 0.0 {
        return Err(Error::Accounting("rescale expects the domain [0, C']".into()));
    }
    let mut bps: Vec<f64> = curve.breakpoints().iter().map(|t| t / c_prime).collect();
    *bps.last_mut().unwrap() = 1.0;
    PLCurve::new(bps, curve.vertices().to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stages {
    pub phi1: PLCurve,
    pub partition: PartitionReport,
    pub phi2: PLCurve,
    pub tau: TimeChange,
    pub phi3: PLCurve,
    pub tau_tilde: TimeChange,
    pub phi4: PLCurve,
    pub subdivisions: usize,
    pub c: f64,
    pub c_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub endpoints_exact: bool,
    pub sup_distance: f64,
    pub report: BiLipReport,
    pub bilip_ok: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub curve: PLCurve,
    pub budget: ConstantBudget,
    pub certification: Certification,
    pub stages: Stages,
}

pub fn certify(input: &PLCurve, output: &PLCurve, lip: f64, eps: f64, grid: f64, slack: f64) -> Certification {
    let endpoints_exact = input.start() == output.start() && input.end() == output.end();
    let sup_distance = output.sup_distance(input);
    let (bilip_ok, report) = check_bilip(output, lip + eps, grid, slack);
    Certification {
        endpoints_exact,
        sup_distance,
        report,
        bilip_ok,
        passed: endpoints_exact && bilip_ok && sup_distance <= eps,
    }
}

fn check_input(curve: &PLCurve, lip: f64, budget: &ConstantBudget) -> Result<()> {
    if curve.t0() != 0.0 || curve.t1() != 1.0 {
        return Err(Error::Precondition(format!(
            "domain must be [0, 1], got [{}, {}]",
            curve.t0(),
            curve.t1()
        )));
    }
    let (ok, rep) = check_bilip(curve, lip, budget.grid_step, budget.slack);
    if !ok {
        return Err(Error::Precondition(format!(
            "input is not {lip}-biLipschitz: measured constant {}",
            rep.constant()
        )));
    }
    Ok(())
}

/// Stages 2 to 4 starting from a straightened curve.
fn finish(
    phi1: PLCurve,
    partition: PartitionReport,
    lip: f64,
    budget: &ConstantBudget,
    max_ell: f64,
) -> Result<Stages> {
    let sp = speedup_with_cap(&phi1, &partition.good_set, budget, lip, max_ell).map_err(|e| e.in_stage("speedup"))?;
    let lip_eff = lip + budget.xi;
    let (ok, rep) = check_bilip(&sp.curve, lip_eff, budget.grid_step, budget.slack);
    if !ok {
        return Err(Error::Accounting(format!(
            "sped-up curve has constant {} above {lip_eff}",
            rep.constant()
        ))
        .in_stage("speedup"));
    }
    let sh = shorten_bad_intervals(&sp.curve, &sp.bad, lip_eff, budget).map_err(|e| e.in_stage("shorten"))?;
    let (phi4, subdivisions) =
        pl_sample_c1(&sh.curve, &sh.smooth, lip_eff, budget).map_err(|e| e.in_stage("resample"))?;
    let c_prime = phi4.domain_len();
    Ok(Stages {
        phi1,
        partition,
        phi2: sp.curve,
        tau: sp.tau,
        phi3: sh.curve,
        tau_tilde: sh.tau_tilde,
        phi4,
        subdivisions,
        c: sp.c,
        c_prime,
    })
}

/// Approximates an `L`-biLipschitz curve on `[0, 1]`.
pub fn approximate(curve: &PLCurve, lip: f64, eps: f64) -> Result<Approximation> {
    let budget = choose_constants(lip, eps)?;
    approximate_with_budget(curve, &budget)
}

pub fn approximate_with_budget(curve: &PLCurve, budget: &ConstantBudget) -> Result<Approximation> {
    budget.validate()?;
    let lip = budget.lip;
    check_input(curve, lip, budget)?;
    let (phi1, partition) =
        straighten_lebesgue(curve, budget.xi, lip, budget).map_err(|e| e.in_stage("straighten"))?;
    let stages = finish(phi1, partition, lip, budget, f64::INFINITY)?;
    let out = rescale(&stages.phi4, stages.c_prime, budget.xi).map_err(|e| e.in_stage("rescale"))?;
    let certification = certify(curve, &out, lip, budget.eps, budget.grid_step, budget.slack);
    Ok(Approximation {
        curve: out,
        budget: *budget,
        certification,
        stages,
    })
}

/// Like [`approximate`], but the output coincides with the input on
/// `[0, a']` and `[1 - a', 1]`. The input must be linear on `[0, a]` and
/// `[1 - a, 1]`.
pub fn approximate_pinned(curve: &PLCurve, lip: f64, eps: f64, a: f64, a_prime: f64) -> Result<Approximation> {
    if !(0.0 < a_prime && a_prime < a && a < 0.5) {
        return Err(Error::Precondition(format!(
            "need 0 < a' < a < 1/2, got a = {a}, a' = {a_prime}"
        )));
    }
    if !curve.is_linear_on(0.0, a) || !curve.is_linear_on(1.0 - a, 1.0) {
        return Err(Error::Precondition(format!(
            "curve must be linear on [0, {a}] and [{}, 1]",
            1.0 - a
        )));
    }
    let budget = choose_constants(lip, eps)?;
    let gap = a - a_prime;
    check_input(curve, lip, &budget)?;
    // cells near a corner may fail; keep those failures away from [0, a']
    let min_cells = (8.0 * budget.window_ratio / gap).ceil() as usize;
    let (phi1, partition) = straighten_lebesgue_min_cells(curve, budget.xi, lip, &budget, min_cells)
        .map_err(|e| e.in_stage("straighten"))?;
    if let (Some(first), Some(last)) = (partition.bad_intervals.first(), partition.bad_intervals.last()) {
        if first.0 <= a_prime + gap / 2.0 || last.1 >= 1.0 - a_prime - gap / 2.0 {
            return Err(Error::Accounting("bad intervals reach the pinned ends".into()).in_stage("straighten"));
        }
    }
    let stages = finish(phi1, partition, lip, &budget, gap / 4.0)?;
    let c_prime = stages.c_prime;
    if !(c_prime >= 1.0 - 2.0 * budget.xi - PARAM_TOL && c_prime <= 1.0 + PARAM_TOL) {
        return Err(Error::Accounting(format!("final domain length {c_prime}")).in_stage("rescale"));
    }
    // identity on [0, a], affine on [a, 1 - a], shift on [1 - a, 1]
    let t = TimeChange::new(vec![0.0, a, 1.0 - a, 1.0], vec![0.0, a, c_prime - a, c_prime])?;
    let mid = t.pull_back(&stages.phi4)?;
    let left = curve.restrict(0.0, a_prime)?;
    let right = curve.restrict(1.0 - a_prime, 1.0)?;
    let mut bps: Vec<f64> = left.breakpoints().to_vec();
    let mut vs = left.vertices().to_vec();
    for (&b, &v) in mid.breakpoints().iter().zip(mid.vertices()) {
        if b > a_prime + PARAM_TOL && b < 1.0 - a_prime - PARAM_TOL {
            bps.push(b);
            vs.push(v);
        }
    }
    bps.extend_from_slice(right.breakpoints());
    vs.extend_from_slice(right.vertices());
    let spliced = PLCurve::new(bps, vs)?;
    let moved = spliced.sup_distance(&mid);
    if moved > 1e-12 {
        return Err(Error::Accounting(format!(
            "pinned ends differ from the approximation by {moved}"
        ))
        .in_stage("splice"));
    }
    let certification = certify(curve, &spliced, lip, eps, budget.grid_step, budget.slack);
    Ok(Approximation {
        curve: spliced,
        budget,
        certification,
        stages,
    })
}
