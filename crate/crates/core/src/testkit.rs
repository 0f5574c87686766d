//! Seeded curve generators and a naive brute-force oracle.
//!
//! Every generator is keyed by a 64-bit seed and draws from a ChaCha8 stream;
//! each retry uses its own stream number, so corpora are reproducible and
//! independent of generation order.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{closed_report, default_closed_grid, ClosedPLCurve};
use crate::error::{Error, Result};
use crate::geom::{PLCurve, Point2};
use crate::verify::{check_bilip, max_corner_turn, report, BiLipReport};

pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub target_lip: f64,
    pub vertex_count: usize,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Generated {
    Open(PLCurve),
    Closed(ClosedPLCurve),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedCurve {
    pub curve: Generated,
    pub report: BiLipReport,
    pub rejections: usize,
    /// Turning angle at each interior vertex.
    pub turning: Vec<f64>,
}

impl GeneratedCurve {
    pub fn open(&self) -> Option<&PLCurve> {
        match &self.curve {
            Generated::Open(c) => Some(c),
            Generated::Closed(_) => None,
        }
    }

    pub fn closed(&self) -> Option<&ClosedPLCurve> {
        match &self.curve {
            Generated::Closed(c) => Some(c),
            Generated::Open(_) => None,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn validate(spec: &GenSpec) -> Result<()> {
    if !(spec.target_lip > 1.0 && spec.target_lip.is_finite()) {
        return Err(Error::Precondition(format!("target L must exceed 1, got {}", spec.target_lip)));
    }
    let min = if spec.closed { 3 } else { 2 };
    if spec.vertex_count < min {
        return Err(Error::Precondition(format!("need at least {min} vertices")));
    }
    Ok(())
}

/// Generates a curve that passes the biLipschitz check at `target_lip`
/// with zero slack.
pub fn gen_bilip_curve(spec: &GenSpec) -> Result<GeneratedCurve> {
    validate(spec)?;
    if spec.closed {
        gen_closed(spec)
    } else {
        gen_open(spec, 0.0)
    }
}

/// An open curve on `[0, 1]` that is linear on `[0, pad]` and `[1 - pad, 1]`.
pub fn gen_padded_curve(spec: &GenSpec, pad: f64) -> Result<GeneratedCurve> {
    validate(spec)?;
    if !(pad > 0.0 && pad < 0.25) {
        return Err(Error::Precondition(format!("pad must lie in (0, 1/4), got {pad}")));
    }
    gen_open(&GenSpec { closed: false, ..*spec }, pad)
}

fn turning(vs: &[Point2]) -> Vec<f64> {
    vs.windows(3)
        .map(|w| {
            let (u, v) = (w[1] - w[0], w[2] - w[1]);
            u.cross(v).atan2(u.dot(v)).abs()
        })
        .collect()
}

/// Random walk with bounded turns and speeds, grown one segment at a time;
/// a segment that breaks the constant is redrawn with a smaller turn.
fn gen_open(spec: &GenSpec, pad: f64) -> Result<GeneratedCurve> {
    let lip = spec.target_lip;
    let n = spec.vertex_count - 1;
    let max_turn = max_corner_turn(lip);
    let mut rejections = 0;
    for attempt in 0u64.. {
        let mut rng = rng_for(spec.seed, attempt);
        let mut dts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        if pad > 0.0 && n >= 1 {
            // the end segments take 2 pad each (one segment covering both if n = 1)
            let inner: f64 = dts[1..n.saturating_sub(1).max(1)].iter().sum();
            let ends = if n == 1 { 1 } else { 2 };
            let free = 1.0 - ends as f64 * 2.0 * pad;
            for dt in dts.iter_mut().take(n.saturating_sub(1)).skip(1) {
                *dt *= free / inner;
            }
            dts[0] = 2.0 * pad;
            dts[n - 1] = if n == 1 { 1.0 } else { 2.0 * pad };
        } else {
            let total: f64 = dts.iter().sum();
            dts.iter_mut().for_each(|d| *d /= total);
        }
        let mut bps = vec![0.0];
        for &d in &dts {
            bps.push(bps.last().unwrap() + d);
        }
        *bps.last_mut().unwrap() = 1.0;

        let speed_range = (lip.sqrt().recip(), lip.sqrt());
        let mut dir: f64 = rng.gen_range(0.0..TAU);
        let mut vs = vec![Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))];
        let mut ok = true;
        for i in 0..n {
            let mut scale = 0.5;
            let mut placed = false;
            for _ in 0..20 {
                let turn = if i == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) * scale * max_turn };
                let speed = (rng.gen_range(speed_range.0.ln()..=speed_range.1.ln())).exp();
                let d = dir + turn;
                let len = speed * (bps[i + 1] - bps[i]);
                let next = *vs.last().unwrap() + Point2::new(d.cos(), d.sin()) * len;
                let mut trial = vs.clone();
                trial.push(next);
                let c = PLCurve::new(bps[..=i + 1].to_vec(), trial.clone());
                if let Ok(c) = c {
                    if check_bilip(&c, lip, crate::verify::default_grid(&c), 0.0).0 {
                        vs = trial;
                        dir = d;
                        placed = true;
                        break;
                    }
                }
                rejections += 1;
                scale *= 0.7;
                if rejections >= MAX_REJECTIONS {
                    return Err(Error::Generation(rejections));
                }
            }
            if !placed {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let curve = PLCurve::new(bps, vs)?;
        let rep = report(&curve, crate::verify::default_grid(&curve));
        if !rep.passes(lip, 0.0) {
            rejections += 1;
            continue;
        }
        let turning = turning(curve.vertices());
        return Ok(GeneratedCurve {
            curve: Generated::Open(curve),
            report: rep,
            rejections,
            turning,
        });
    }
    unreachable!()
}

/// Even seeds give jittered regular polygons, odd seeds perturbed ellipses.
fn gen_closed(spec: &GenSpec) -> Result<GeneratedCurve> {
    let lip = spec.target_lip;
    let n = spec.vertex_count;
    let mut rejections = 0;
    let mut rng = rng_for(spec.seed, 0);
    let (mut axis, mut wobble) = if spec.seed % 2 == 0 {
        (1.0, 0.0)
    } else {
        (rng.gen_range(1.0..2.0), rng.gen_range(0.0..0.1))
    };
    let mut jitter = 0.3;
    let scale = rng.gen_range(0.5..2.0);
    let rot = rng.gen_range(0.0..TAU);
    loop {
        let mut r = rng_for(spec.seed, rejections as u64 + 1);
        let angles: Vec<f64> = (0..n)
            .map(|k| (k as f64 + jitter * r.gen_range(-0.5..0.5)) * TAU / n as f64)
            .map(|a| a.rem_euclid(TAU))
            .collect();
        let mut angles = angles;
        angles.sort_by(f64::total_cmp);
        let vs: Vec<Point2> = angles
            .iter()
            .map(|&a| {
                let w = 1.0 + wobble * (3.0 * a + rot).sin();
                let p = Point2::new(a.cos(), a.sin() / axis) * (scale * w);
                Point2::new(p.x * rot.cos() - p.y * rot.sin(), p.x * rot.sin() + p.y * rot.cos())
            })
            .collect();
        if let Ok(c) = ClosedPLCurve::new(angles, vs) {
            let rep = closed_report(&c, default_closed_grid());
            if rep.passes(lip, 0.0) {
                let turning = c.turning_angles();
                return Ok(GeneratedCurve {
                    curve: Generated::Closed(c),
                    report: rep,
                    rejections,
                    turning,
                });
            }
        }
        rejections += 1;
        if rejections >= MAX_REJECTIONS {
            return Err(Error::Generation(rejections));
        }
        // relax towards a round polygon
        axis = 1.0 + 0.8 * (axis - 1.0);
        wobble *= 0.8;
        jitter *= 0.8;
    }
}

/// A curve with a wiggly middle `[a, b]` and straight ends at speed `lip`,
/// the situation the shortening step starts from.
#[derive(Debug, Clone, PartialEq)]
pub struct BadIntervalConfig {
    pub curve: PLCurve,
    pub a: f64,
    pub b: f64,
    pub lip: f64,
}

pub fn gen_bad_interval_config(seed: u64, lip: f64) -> Result<BadIntervalConfig> {
    if !(lip > 1.0) {
        return Err(Error::Precondition(format!("L must exceed 1, got {lip}")));
    }
    let max_turn = max_corner_turn(lip);
    for attempt in 0..MAX_REJECTIONS as u64 {
        let mut rng = rng_for(seed, attempt);
        let a = rng.gen_range(0.15..0.35);
        let b = rng.gen_range(0.65..0.85);
        let k = rng.gen_range(2..=6usize);
        let mut bps = vec![0.0, a];
        let mut cuts: Vec<f64> = (1..k).map(|_| rng.gen_range(a..b)).collect();
        cuts.sort_by(f64::total_cmp);
        bps.extend(cuts);
        bps.push(b);
        bps.push(1.0);
        if bps.windows(2).any(|w| w[1] - w[0] < 0.02) {
            continue;
        }
        let mut dir = rng.gen_range(0.0..TAU);
        let mut vs = vec![Point2::ORIGIN];
        let step = |vs: &mut Vec<Point2>, d: f64, len: f64| {
            let p = *vs.last().unwrap();
            vs.push(p + Point2::new(d.cos(), d.sin()) * len);
        };
        step(&mut vs, dir, lip * a);
        for i in 1..=k {
            dir += rng.gen_range(-1.0..1.0) * 0.6 * max_turn;
            let speed = rng.gen_range(1.0..lip);
            step(&mut vs, dir, speed * (bps[i + 1] - bps[i]));
        }
        dir += rng.gen_range(-1.0..1.0) * 0.6 * max_turn;
        step(&mut vs, dir, lip * (1.0 - b));
        let Ok(curve) = PLCurve::new(bps, vs) else { continue };
        if check_bilip(&curve, lip, crate::verify::default_grid(&curve), 0.0).0 {
            return Ok(BadIntervalConfig { curve, a, b, lip });
        }
    }
    Err(Error::Generation(MAX_REJECTIONS))
}

/// Moves every breakpoint to the nearest multiple of `1 / (resolution - 1)`,
/// so a uniform grid of that resolution contains them all.
pub fn snap_breakpoints(curve: &PLCurve, resolution: usize) -> Result<PLCurve> {
    let m = (resolution - 1) as f64;
    let (t0, d) = (curve.t0(), curve.domain_len());
    let bps: Vec<f64> = curve
        .breakpoints()
        .iter()
        .map(|&t| t0 + d * ((t - t0) / d * m).round() / m)
        .collect();
    PLCurve::new(bps, curve.vertices().to_vec())
}

/// Smallest `|f(x) - f(y)| / |x - y|` over all pairs of a uniform grid.
pub fn oracle_inverse_lipschitz(curve: &PLCurve, resolution: usize) -> f64 {
    let resolution = resolution.max(2);
    let (t0, t1) = (curve.t0(), curve.t1());
    let ts: Vec<f64> = (0..resolution)
        .map(|k| {
            if k + 1 == resolution {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (resolution - 1) as f64
            }
        })
        .collect();
    let ps: Vec<Point2> = ts.iter().map(|&t| curve.eval_unchecked(t)).collect();
    let mut best = f64::INFINITY;
    for i in 0..resolution {
        for j in i + 1..resolution {
            best = best.min(ps[i].dist(ps[j]) / (ts[j] - ts[i]));
        }
    }
    best
}

/// Largest `|f(x) - f(y)| / |x - y|` over all pairs of a uniform grid.
pub fn oracle_lipschitz(curve: &PLCurve, resolution: usize) -> f64 {
    let resolution = resolution.max(2);
    let (t0, t1) = (curve.t0(), curve.t1());
    let ts: Vec<f64> = (0..resolution)
        .map(|k| t0 + (t1 - t0) * k as f64 / (resolution - 1) as f64)
        .collect();
    let ps: Vec<Point2> = ts.iter().map(|&t| curve.eval_unchecked(t)).collect();
    let mut best: f64 = 0.0;
    for i in 0..resolution {
        for j in i + 1..resolution {
            best = best.max(ps[i].dist(ps[j]) / (ts[j] - ts[i]));
        }
    }
    best
}

/// Regular `n`-gon through unit-circle points, a closed fixture.
pub fn regular_polygon(n: usize) -> Result<ClosedPLCurve> {
    ClosedPLCurve::uniform(
        (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                Point2::new(a.cos(), a.sin())
            })
            .collect(),
    )
}

/// Half of a regular `2n`-gon on `[0, pi]`, as an open curve.
pub fn semicircle(n: usize) -> Result<PLCurve> {
    PLCurve::uniform(
        0.0,
        PI,
        (0..=n)
            .map(|k| {
                let a = PI * k as f64 / n as f64;
                Point2::new(a.cos(), a.sin())
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::fixtures::*;
    use crate::verify::inverse_lipschitz;

    fn spec(seed: u64, lip: f64, n: usize) -> GenSpec {
        GenSpec {
            seed,
            target_lip: lip,
            vertex_count: n,
            closed: false,
        }
    }

    #[test]
    fn two_vertices_is_one_segment() {
        let g = gen_bilip_curve(&spec(7, 2.0, 2)).unwrap();
        assert_eq!(g.open().unwrap().n_segments(), 1);
    }

    #[test]
    fn deterministic() {
        let a = gen_bilip_curve(&spec(42, 2.0, 20)).unwrap();
        let b = gen_bilip_curve(&spec(42, 2.0, 20)).unwrap();
        assert_eq!(a, b);
        let c = gen_bilip_curve(&spec(43, 2.0, 20)).unwrap();
        assert_ne!(a.curve, c.curve);
    }

    #[test]
    fn near_straight_for_small_constant() {
        let g = gen_bilip_curve(&spec(3, 1.05, 50)).unwrap();
        let bound = max_corner_turn(1.05);
        assert!(g.turning.iter().all(|&t| t <= bound + 1e-9));
        assert!(g.report.passes(1.05, 0.0));
    }

    #[test]
    fn generated_curves_pass_at_target() {
        for seed in 0..10 {
            for lip in [1.5, 2.0, 4.0] {
                let g = gen_bilip_curve(&spec(seed, lip, 10 + 3 * seed as usize)).unwrap();
                let c = g.open().unwrap();
                assert!(check_bilip(c, lip, crate::verify::default_grid(c), 0.0).0);
            }
        }
    }

    #[test]
    fn padded_curves_are_linear_at_the_ends() {
        let g = gen_padded_curve(&spec(5, 2.0, 12), 0.05).unwrap();
        let c = g.open().unwrap();
        assert!(c.is_linear_on(0.0, 0.1) && c.is_linear_on(0.9, 1.0));
    }

    #[test]
    fn closed_generation() {
        for seed in 0..4 {
            let g = gen_bilip_curve(&GenSpec {
                seed,
                target_lip: 2.5,
                vertex_count: 24,
                closed: true,
            })
            .unwrap();
            assert!(g.report.passes(2.5, 0.0));
        }
    }

    #[test]
    fn bad_interval_configs() {
        for seed in 0..5 {
            let cfg = gen_bad_interval_config(seed, 2.0).unwrap();
            let c = &cfg.curve;
            assert!((c.speed(0).unwrap() - 2.0).abs() < 1e-12);
            assert!((c.speed(c.n_segments() - 1).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        assert!((oracle_inverse_lipschitz(&straight(2.0), 65) - 2.0).abs() < 1e-12);
        let r = right_angle();
        assert!((oracle_inverse_lipschitz(&r, 4097) - 0.5f64.sqrt()).abs() < 1e-3);
        let (v, _) = inverse_lipschitz(&r, 1e-3);
        assert!((oracle_inverse_lipschitz(&r, 4097) - v).abs() < 1e-6);
    }
}
