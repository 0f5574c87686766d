//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. `ACCEPTANCE_ONLY=1,4` runs a subset.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use bilip::budget::{eps_tilde_constraints, ConstantBudget};
use bilip::circle::{
    approximate_closed, chart_metric_holds, closed_report, constant_chain, default_closed_grid, theta_residual,
};
use bilip::geom::{PLCurve, Point2};
use bilip::pipeline::{approximate, approximate_pinned, Approximation};
use bilip::shorten::{discrete_smoothness, is_fast, shorten};
use bilip::testkit::{
    gen_bad_interval_config, gen_bilip_curve, gen_padded_curve, oracle_inverse_lipschitz, semicircle,
    snap_breakpoints, GenSpec,
};
use bilip::verify::{check_bilip, corner_angle_check, inverse_lipschitz, lipschitz_upper};

const EPS: f64 = 0.25;
const GRID: f64 = 1.0 / 2048.0;
const SLACK: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], summary: String) -> Outcome {
    let detail = match failures.first() {
        None => summary,
        Some(f) => format!("{summary}; {} failure(s), first: {f}", failures.len()),
    };
    Outcome {
        pass: failures.is_empty(),
        detail,
    }
}

struct OpenRun {
    seed: u64,
    lip: f64,
    input: PLCurve,
    elapsed: Duration,
    result: Result<Approximation, String>,
}

fn corpus_spec(seed: u64) -> GenSpec {
    GenSpec {
        seed,
        target_lip: [1.5, 2.0, 4.0][(seed % 3) as usize],
        vertex_count: 10 + (seed as usize * 7) % 31,
        closed: false,
    }
}

fn run_corpus() -> Vec<OpenRun> {
    (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let spec = corpus_spec(seed);
            let input = gen_bilip_curve(&spec).expect("corpus generation").open().unwrap().clone();
            let start = Instant::now();
            let result = approximate(&input, spec.target_lip, EPS).map_err(|e| e.to_string());
            OpenRun {
                seed,
                lip: spec.target_lip,
                input,
                elapsed: start.elapsed(),
                result,
            }
        })
        .collect()
}

/// Endpoints exact, sup-distance and constant re-measured independently of
/// the certification stored in the result.
fn certify_open(input: &PLCurve, a: &Approximation, lip: f64) -> Result<(), String> {
    let out = &a.curve;
    if out.start() != input.start() || out.end() != input.end() {
        return Err("endpoints moved".into());
    }
    let sup = out.sup_distance(input);
    if sup > EPS {
        return Err(format!("sup-distance {sup}"));
    }
    let (ok, rep) = check_bilip(out, lip + EPS, GRID, SLACK);
    if !ok {
        return Err(format!("constant {} above {}", rep.constant(), lip + EPS));
    }
    if !a.certification.passed {
        return Err("stored certification failed".into());
    }
    Ok(())
}

fn criterion_1(runs: &[OpenRun]) -> Outcome {
    let mut failures = Vec::new();
    for r in runs {
        match &r.result {
            Err(e) => failures.push(format!("seed {}: {e}", r.seed)),
            Ok(a) => {
                if let Err(e) = certify_open(&r.input, a, r.lip) {
                    failures.push(format!("seed {}: {e}", r.seed));
                }
            }
        }
        if r.elapsed > Duration::from_secs(10) {
            failures.push(format!("seed {}: took {:?}", r.seed, r.elapsed));
        }
    }
    let total: Duration = runs.iter().map(|r| r.elapsed).sum();
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    if total > Duration::from_secs(1800) {
        failures.push(format!("total time {total:?}"));
    }
    let done: Vec<(&OpenRun, &Approximation)> = runs.iter().filter_map(|r| r.result.as_ref().ok().map(|a| (r, a))).collect();
    let max_sup = done.iter().map(|(_, a)| a.certification.sup_distance).fold(0.0, f64::max);
    let grown = done
        .iter()
        .map(|(r, a)| a.curve.n_segments() as f64 / r.input.n_segments() as f64)
        .fold(0.0, f64::max);
    outcome(
        &failures,
        format!(
            "{} curves, total {:.1?}, slowest {:.1?}, max sup {max_sup:.2e}, max segment growth {grown:.1}x",
            runs.len(),
            total,
            slowest
        ),
    )
}

fn criterion_2(runs: &[OpenRun]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for r in runs {
        let Ok(a) = &r.result else {
            failures.push(format!("seed {}: no output", r.seed));
            continue;
        };
        let measured = bilip::verify::report(&a.curve, GRID).constant();
        let bound = (r.lip + EPS).min(4.0 * r.lip) + 1e-6;
        worst = worst.max(measured - (r.lip + EPS));
        if measured > bound {
            failures.push(format!("seed {}: constant {measured} above {bound}", r.seed));
        }
    }
    outcome(&failures, format!("max (measured - (L + eps)) = {worst:.3e}"))
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_speed: f64 = 0.0;
    for k in 0..1000u64 {
        let lip = [1.5, 2.0, 3.0, 4.0][(k % 4) as usize];
        let spec = GenSpec {
            seed: 10_000 + k,
            target_lip: lip,
            vertex_count: 3 + (k as usize % 12),
            closed: false,
        };
        let curve = gen_bilip_curve(&spec).unwrap().open().unwrap().clone();
        let s = rng.gen_range(0.0..0.9);
        let t = rng.gen_range(s + 0.01..1.0);
        let phi_st = match curve.segment_replace(s, t) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("triple {k}: {e}"));
                continue;
            }
        };
        let sup = phi_st.sup_distance(&curve);
        if sup > 2.0 * lip * (t - s) + 1e-12 {
            failures.push(format!("triple {k}: sup {sup} > 2L(t-s)"));
        }
        let (before, after) = (lipschitz_upper(&curve), lipschitz_upper(&phi_st));
        if after > before * (1.0 + 1e-12) {
            failures.push(format!("triple {k}: Lipschitz {before} -> {after}"));
        }
        let (plus, t_plus) = match curve.fast_reparam_segment(s, t, lip) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("triple {k}: fast reparametrization: {e}"));
                continue;
            }
        };
        let chord = curve.eval(s).unwrap().dist(curve.eval(t).unwrap());
        if (t_plus - (s + chord / lip)).abs() > 1e-12 {
            failures.push(format!("triple {k}: t+ = {t_plus}"));
        }
        let i = plus.segment_at(0.5 * (s + t_plus));
        let dev = (plus.speed(i).unwrap() - lip).abs();
        worst_speed = worst_speed.max(dev);
        if dev > 1e-12 * lip.max(1.0) {
            failures.push(format!("triple {k}: speed on [s, t+] off by {dev}"));
        }
    }
    let r = right_angle();
    match r.fast_reparam_segment(0.0, 2.0, SQRT_2) {
        Ok((_, tp)) if (tp - 1.0).abs() <= 1e-15 => {}
        other => failures.push(format!("right angle: {:?}", other.map(|x| x.1))),
    }
    outcome(&failures, format!("1000 triples, worst speed deviation {worst_speed:.1e}"))
}

fn right_angle() -> PLCurve {
    PLCurve::new(
        vec![0.0, 1.0, 2.0],
        vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)],
    )
    .unwrap()
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let configs: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let lip = [1.5, 2.0, 3.0][(seed % 3) as usize];
            let cfg = gen_bad_interval_config(seed, lip).map_err(|e| format!("config {seed}: {e}"))?;
            let grid = GRID.min((cfg.b - cfg.a) / 8.0);
            let (out, cert, _) =
                shorten(&cfg.curve, cfg.a, cfg.b, lip, grid).map_err(|e| format!("config {seed}: {e}"))?;
            let bp = cert.b_prime;
            let lo = cfg.a + (cfg.b - cfg.a) / (lip * lip) - 1e-9;
            if !(bp >= lo && bp <= cfg.b) {
                return Err(format!("config {seed}: b' = {bp} outside [{lo}, {}]", cfg.b));
            }
            let fast = is_fast(&out, cfg.a, bp, lip, grid).map_err(|e| format!("config {seed}: {e}"))?;
            if !fast.is_fast(SLACK) {
                return Err(format!("config {seed}: output not fast"));
            }
            let (ok, rep) = check_bilip(&out, lip, GRID, SLACK);
            if !ok {
                return Err(format!("config {seed}: constant {}", rep.constant()));
            }
            let (again, cert2, _) =
                shorten(&out, cfg.a, bp, lip, grid).map_err(|e| format!("config {seed}: rerun: {e}"))?;
            if again.sup_distance(&out) > 1e-12 || (cert2.b_prime - bp).abs() > 1e-12 {
                return Err(format!("config {seed}: not idempotent"));
            }
            Ok(())
        })
        .collect();
    failures.extend(configs.into_iter().filter_map(|r| r.err()));

    let r = right_angle();
    match shorten(&r, 0.0, 2.0, SQRT_2, GRID) {
        Ok((out, cert, _)) => {
            if out.n_segments() != 1 || (cert.b_prime - 1.0).abs() > 1e-12 {
                failures.push(format!(
                    "right angle: {} segments, b' = {}",
                    out.n_segments(),
                    cert.b_prime
                ));
            }
        }
        Err(e) => failures.push(format!("right angle: {e}")),
    }

    // finer grids never make the shortened interval rougher
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let cfg = gen_bad_interval_config(1000 + seed, 2.0).unwrap();
        let g = GRID.min((cfg.b - cfg.a) / 8.0);
        let run = |grid: f64| {
            shorten(&cfg.curve, cfg.a, cfg.b, 2.0, grid).map(|(c, cert, _)| discrete_smoothness(&c, cfg.a, cert.b_prime))
        };
        match (run(g), run(g / 2.0)) {
            (Ok(coarse), Ok(fine)) => {
                worst = worst.max(fine - coarse);
                if fine > coarse.max(1e-6) + 1e-9 {
                    failures.push(format!("regression curve {seed}: angle {coarse} -> {fine}"));
                }
            }
            (a, b) => failures.push(format!("regression curve {seed}: {:?} {:?}", a.err(), b.err())),
        }
    }
    outcome(&failures, format!("100 configurations, smoothness change {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let spec = GenSpec {
            seed: 20_000 + seed,
            target_lip: [1.5, 2.0, 4.0][(seed % 3) as usize],
            vertex_count: 2 + (seed as usize % 16),
            closed: false,
        };
        let c = gen_bilip_curve(&spec).unwrap().open().unwrap().clone();
        let c = snap_breakpoints(&c, 4097).unwrap();
        let (v, _) = inverse_lipschitz(&c, GRID);
        let o = oracle_inverse_lipschitz(&c, 4097);
        worst = worst.max((v - o).abs());
        if (v - o).abs() > 1e-6 {
            failures.push(format!("curve {seed}: verify {v}, oracle {o}"));
        }
    }
    let (v, _) = inverse_lipschitz(&right_angle(), GRID);
    if (v - FRAC_1_SQRT_2).abs() > 1e-6 {
        failures.push(format!("right angle: {v}"));
    }
    let (v, _) = inverse_lipschitz(&semicircle(32).unwrap(), GRID);
    if (v - 2.0 / PI).abs() > 1e-3 {
        failures.push(format!("semicircle: {v}"));
    }
    outcome(&failures, format!("50 curves, max disagreement {worst:.1e}"))
}

fn criterion_6(runs: &[OpenRun], pinned: &[PinnedRun]) -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut check = |c: &PLCurve, lip: f64, what: String| {
        checked += 1;
        if let Some(v) = corner_angle_check(c, lip).first() {
            failures.push(format!("{what}: turn {} above {}", v.turning, v.bound));
        }
    };
    for r in runs {
        check(&r.input, r.lip, format!("input {}", r.seed));
        if let Ok(a) = &r.result {
            if a.certification.passed {
                check(&a.curve, r.lip + EPS, format!("output {}", r.seed));
            }
        }
    }
    for p in pinned {
        check(&p.input, p.lip, format!("padded input {}", p.seed));
        if let Ok(a) = &p.result {
            if a.certification.passed {
                check(&a.curve, p.lip + EPS, format!("pinned output {}", p.seed));
            }
        }
    }
    outcome(&failures, format!("{checked} curves, bound pi - 2 asin(1/L^2)"))
}

struct PinnedRun {
    seed: u64,
    lip: f64,
    input: PLCurve,
    result: Result<Approximation, String>,
}

const PAD: f64 = 0.05;

fn run_pinned() -> Vec<PinnedRun> {
    (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let spec = GenSpec {
                seed: 30_000 + seed,
                target_lip: [1.5, 2.0, 4.0][(seed % 3) as usize],
                vertex_count: 6 + (seed as usize % 20),
                closed: false,
            };
            let input = gen_padded_curve(&spec, PAD).unwrap().open().unwrap().clone();
            // linear on [0, 2 PAD]; pin [0, PAD]
            let result = approximate_pinned(&input, spec.target_lip, EPS, 2.0 * PAD, PAD).map_err(|e| e.to_string());
            PinnedRun {
                seed,
                lip: spec.target_lip,
                input,
                result,
            }
        })
        .collect()
}

fn criterion_7(runs: &[PinnedRun]) -> Outcome {
    let mut failures = Vec::new();
    for r in runs {
        let a = match &r.result {
            Ok(a) => a,
            Err(e) => {
                failures.push(format!("padded {}: {e}", r.seed));
                continue;
            }
        };
        for (u, v) in [(0.0, PAD), (1.0 - PAD, 1.0)] {
            let (x, y) = (a.curve.restrict(u, v).unwrap(), r.input.restrict(u, v).unwrap());
            if x.breakpoints() != y.breakpoints() || x.vertices() != y.vertices() {
                failures.push(format!("padded {}: restriction to [{u}, {v}] differs", r.seed));
            }
        }
        if let Err(e) = certify_open(&r.input, a, r.lip) {
            failures.push(format!("padded {}: {e}", r.seed));
        }
    }
    outcome(&failures, format!("{} padded curves, pins of width {PAD}", runs.len()))
}

fn criterion_8() -> Outcome {
    let results: Vec<Result<(Duration, f64), String>> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let spec = GenSpec {
                seed: 40_000 + seed,
                target_lip: 3.0,
                vertex_count: 12 + (seed as usize * 5) % 37,
                closed: true,
            };
            let g = gen_bilip_curve(&spec).map_err(|e| format!("closed {seed}: {e}"))?;
            let start = Instant::now();
            let c = g.closed().unwrap();
            let lip = closed_report(c, default_closed_grid()).constant();
            let out = approximate_closed(c, lip, EPS).map_err(|e| format!("closed {seed}: {e}"))?;
            if theta_residual(out.theta, out.eps_prime) > 1e-12 {
                return Err(format!("closed {seed}: theta residual"));
            }
            if constant_chain(lip, out.eps_prime) > lip + EPS {
                return Err(format!("closed {seed}: constant chain"));
            }
            for ch in &out.charts {
                if !(ch.b - ch.a < ch.theta && chart_metric_holds(ch.b - ch.a, ch.eps_prime, 1000)) {
                    return Err(format!("closed {seed}: chart [{}, {}] distorts the metric", ch.a, ch.b));
                }
            }
            // independent re-measurement
            let rep = closed_report(&out.curve, default_closed_grid());
            let sup = out.curve.sup_distance(c);
            if !rep.passes(lip + EPS, SLACK) || sup > EPS || !out.passed {
                return Err(format!(
                    "closed {seed}: constant {} vs {}, sup {sup}",
                    rep.constant(),
                    lip + EPS
                ));
            }
            Ok((start.elapsed(), rep.constant() - lip))
        })
        .collect();
    let failures: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    let ok: Vec<(Duration, f64)> = results.into_iter().filter_map(|r| r.ok()).collect();
    let slowest = ok.iter().map(|r| r.0).max().unwrap_or_default();
    let worst = ok.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        &failures,
        format!("50 closed curves, slowest {slowest:.1?}, max (measured - L) = {worst:.3e}"),
    )
}

fn budget_ok(b: &ConstantBudget, what: &str, failures: &mut Vec<String>) {
    if !eps_tilde_constraints(b.lip, b.eps, b.eps_tilde).iter().all(|&ok| ok) {
        failures.push(format!("{what}: eps_tilde constraints"));
    }
    if b.validate().is_err() {
        failures.push(format!("{what}: budget invalid"));
    }
}

fn criterion_9(runs: &[OpenRun], pinned: &[PinnedRun]) -> Outcome {
    let mut failures = Vec::new();
    let mut n = 0;
    let all = runs
        .iter()
        .map(|r| (r.seed, &r.result))
        .chain(pinned.iter().map(|p| (p.seed, &p.result)));
    for (seed, res) in all {
        let Ok(a) = res else { continue };
        n += 1;
        let b = &a.budget;
        budget_ok(b, &format!("run {seed}"), &mut failures);
        let (c, cp) = (a.stages.c, a.stages.c_prime);
        if !(c >= 1.0 - b.xi - 1e-12 && c <= 1.0 + 1e-12) {
            failures.push(format!("run {seed}: C = {c}"));
        }
        if !(cp >= 1.0 - 2.0 * b.xi - 1e-12 && cp <= 1.0 + 1e-12) {
            failures.push(format!("run {seed}: C' = {cp}"));
        }
    }
    for lip in [1.0, 1.5, 2.0, 4.0, 10.0] {
        for eps in [0.01, 0.1, 0.25, 1.0] {
            match bilip::budget::choose_constants(lip, eps) {
                Ok(b) => budget_ok(&b, &format!("L = {lip}, eps = {eps}"), &mut failures),
                Err(e) => failures.push(format!("L = {lip}, eps = {eps}: {e}")),
            }
        }
    }
    outcome(&failures, format!("{n} runs plus a 5x4 grid of budgets"))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().map_or(true, |v| v.contains(&k));
    let needs_corpus = [1, 2, 6, 9].iter().any(|&k| wanted(k));
    let needs_pinned = [6, 7, 9].iter().any(|&k| wanted(k));
    let corpus = if needs_corpus { run_corpus() } else { Vec::new() };
    let pinned = if needs_pinned { run_pinned() } else { Vec::new() };

    let names = [
        "certified approximation of the open corpus",
        "constant never above min(L + eps, 4L)",
        "chord surgery bounds",
        "shortening",
        "inverse-Lipschitz oracle agreement",
        "corner-angle law",
        "pinned ends",
        "closed curves",
        "budget arithmetic and domain accounting",
    ];
    let mut all_pass = true;
    for (i, name) in names.iter().enumerate() {
        let k = i + 1;
        if !wanted(k) {
            continue;
        }
        let start = Instant::now();
        let o = match k {
            1 => criterion_1(&corpus),
            2 => criterion_2(&corpus),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(&corpus, &pinned),
            7 => criterion_7(&pinned),
            8 => criterion_8(),
            _ => criterion_9(&corpus, &pinned),
        };
        all_pass &= o.pass;
        println!(
            "criterion {k} ({name}): {} [{:.1?}] {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            o.detail
        );
    }
    if !all_pass {
        std::process::exit(1);
    }
}
