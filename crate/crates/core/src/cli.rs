//! Command-line front end. Exit codes: 0 pass, 1 usage or I/O error,
//! 2 certification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::circle::{approximate_closed, check_closed, default_closed_grid, ClosedPLCurve};
use crate::error::Error;
use crate::geom::{PLCurve, Point2};
use crate::pipeline::approximate;
use crate::shorten::shorten;
use crate::testkit::{gen_bilip_curve, GenSpec, Generated};
use crate::verify::{check_bilip, default_grid, BiLipReport, DEFAULT_SLACK};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CERT: i32 = 2;

/// On-disk curve format. Floats are written in shortest round-trip form, so
/// parsing a written file gives back the same bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub kind: CurveKind,
    pub breakpoints: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyCurve {
    Open(PLCurve),
    Closed(ClosedPLCurve),
}

impl AnyCurve {
    fn polyline(&self) -> (Vec<Point2>, bool) {
        match self {
            AnyCurve::Open(c) => (c.vertices().to_vec(), false),
            AnyCurve::Closed(c) => (c.vertices().to_vec(), true),
        }
    }
}

impl CurveFile {
    pub fn from_open(c: &PLCurve) -> CurveFile {
        CurveFile {
            kind: CurveKind::Open,
            breakpoints: c.breakpoints().to_vec(),
            points: c.vertices().iter().map(|p| [p.x, p.y]).collect(),
            metadata: Map::new(),
        }
    }

    pub fn from_closed(c: &ClosedPLCurve) -> CurveFile {
        CurveFile {
            kind: CurveKind::Closed,
            breakpoints: c.angles().to_vec(),
            points: c.vertices().iter().map(|p| [p.x, p.y]).collect(),
            metadata: Map::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: Value) -> CurveFile {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn curve(&self) -> Result<AnyCurve, Error> {
        if self.breakpoints.len() != self.points.len() {
            return Err(Error::InvalidCurve(format!(
                "{} breakpoints but {} points",
                self.breakpoints.len(),
                self.points.len()
            )));
        }
        let pts = self.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
        Ok(match self.kind {
            CurveKind::Open => AnyCurve::Open(PLCurve::new(self.breakpoints.clone(), pts)?),
            CurveKind::Closed => AnyCurve::Closed(ClosedPLCurve::new(self.breakpoints.clone(), pts)?),
        })
    }

    pub fn read(path: &Path) -> Result<CurveFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Io(format!(
                "{}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("curve files serialize");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Io(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bilip", version, about = "Certified piecewise-linear approximation of biLipschitz curves")]
struct Cli {
    /// Print one JSON record per result on standard output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the biLipschitz constant of a curve.
    Verify {
        input: PathBuf,
        #[arg(long = "L")]
        lip: f64,
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
    },
    /// Approximate an open curve on [0, 1].
    Approx {
        input: PathBuf,
        #[arg(long = "L")]
        lip: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        /// Directory for the intermediate curves and time changes.
        #[arg(long)]
        dump_stages: Option<PathBuf>,
    },
    /// Approximate a closed curve.
    ApproxClosed {
        input: PathBuf,
        #[arg(long = "L")]
        lip: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shorten the curve on [a, b].
    Shorten {
        input: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long = "L")]
        lip: f64,
        #[arg(long)]
        out: PathBuf,
        /// File for the step trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate a random biLipschitz curve.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long = "L")]
        lip: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        closed: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw curves as an SVG.
    Render {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 800)]
        height: u32,
    },
}

/// Grid step, overridable through `BILIP_GRID`.
fn grid_or_default(explicit: Option<f64>, default: f64) -> Result<f64, CliError> {
    if let Some(g) = explicit {
        return positive("grid", g);
    }
    match std::env::var("BILIP_GRID") {
        Ok(s) => {
            let g: f64 = s
                .parse()
                .map_err(|_| CliError::Usage(format!("BILIP_GRID is not a number: {s}")))?;
            positive("BILIP_GRID", g)
        }
        Err(_) => Ok(default),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

fn report_json(r: &BiLipReport) -> Value {
    json!({
        "constant": r.constant(),
        "lip_upper": r.lip_upper,
        "inv_lip_lower": r.inv_lip_lower,
        "witness_max": [r.witness_max.0, r.witness_max.1],
        "witness_min": [r.witness_min.0, r.witness_min.1],
        "grid_step": r.grid_step,
    })
}

struct Out {
    json: bool,
    text: String,
}

impl Out {
    fn line(&mut self, s: impl AsRef<str>) {
        if !self.json {
            let _ = writeln!(self.text, "{}", s.as_ref());
        }
    }

    fn record(&mut self, v: Value) {
        if self.json {
            let _ = writeln!(self.text, "{v}");
        }
    }
}

fn describe(out: &mut Out, r: &BiLipReport) {
    out.line(format!(
        "constant {:.9} (Lipschitz {:.9}, inverse {:.9})",
        r.constant(),
        r.lip_upper,
        r.inv_lip_lower
    ));
    out.line(format!(
        "largest ratio at ({}, {}), smallest at ({}, {})",
        r.witness_max.0, r.witness_max.1, r.witness_min.0, r.witness_min.1
    ));
}

fn cmd_verify(out: &mut Out, input: &Path, lip: f64, grid: Option<f64>, slack: f64) -> Result<i32, CliError> {
    positive("L", lip)?;
    let curve = CurveFile::read(input)?.curve()?;
    let (ok, rep) = match &curve {
        AnyCurve::Open(c) => check_bilip(c, lip, grid_or_default(grid, default_grid(c))?, slack),
        AnyCurve::Closed(c) => check_closed(c, lip, grid_or_default(grid, default_closed_grid())?, slack),
    };
    describe(out, &rep);
    out.line(format!("{} at L = {lip}", if ok { "PASS" } else { "FAIL" }));
    if !ok {
        let w = if rep.lip_upper > lip * (1.0 + slack) { rep.witness_max } else { rep.witness_min };
        out.line(format!("witness pair ({}, {})", w.0, w.1));
    }
    out.record(json!({"command": "verify", "lip": lip, "pass": ok, "report": report_json(&rep)}));
    Ok(if ok { EXIT_OK } else { EXIT_CERT })
}

fn cmd_approx(
    out: &mut Out,
    input: &Path,
    lip: f64,
    eps: f64,
    dest: &Path,
    dump: Option<&Path>,
) -> Result<i32, CliError> {
    let AnyCurve::Open(curve) = CurveFile::read(input)?.curve()? else {
        return Err(CliError::Usage("approx expects an open curve; use approx-closed".into()));
    };
    let a = approximate(&curve, lip, eps)?;
    let cert = &a.certification;
    CurveFile::from_open(&a.curve)
        .with_meta("L", json!(lip))
        .with_meta("eps", json!(eps))
        .with_meta("certified", json!(cert.passed))
        .with_meta("constant", json!(cert.report.constant()))
        .with_meta("sup_distance", json!(cert.sup_distance))
        .write(dest)?;
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let s = &a.stages;
        for (name, c) in [("phi1", &s.phi1), ("phi2", &s.phi2), ("phi3", &s.phi3), ("phi4", &s.phi4)] {
            CurveFile::from_open(c).write(&dir.join(format!("{name}.json")))?;
        }
        for (name, t) in [("tau", &s.tau), ("tau_tilde", &s.tau_tilde)] {
            let text = serde_json::to_string_pretty(t).expect("time changes serialize");
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        let text = serde_json::to_string_pretty(&s.partition).expect("partition serializes");
        let path = dir.join("partition.json");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    out.line(format!(
        "{} segments -> {} segments, sup-distance {:.3e}",
        curve.n_segments(),
        a.curve.n_segments(),
        cert.sup_distance
    ));
    describe(out, &cert.report);
    out.line(format!(
        "{} at L + eps = {}",
        if cert.passed { "PASS" } else { "FAIL" },
        lip + eps
    ));
    out.record(json!({
        "command": "approx",
        "lip": lip,
        "eps": eps,
        "pass": cert.passed,
        "endpoints_exact": cert.endpoints_exact,
        "sup_distance": cert.sup_distance,
        "segments": a.curve.n_segments(),
        "report": report_json(&cert.report),
    }));
    Ok(if cert.passed { EXIT_OK } else { EXIT_CERT })
}

fn cmd_approx_closed(out: &mut Out, input: &Path, lip: f64, eps: f64, dest: &Path) -> Result<i32, CliError> {
    let AnyCurve::Closed(curve) = CurveFile::read(input)?.curve()? else {
        return Err(CliError::Usage("approx-closed expects a closed curve".into()));
    };
    let a = approximate_closed(&curve, lip, eps)?;
    CurveFile::from_closed(&a.curve)
        .with_meta("L", json!(lip))
        .with_meta("eps", json!(eps))
        .with_meta("certified", json!(a.passed))
        .with_meta("constant", json!(a.report.constant()))
        .with_meta("sup_distance", json!(a.sup_distance))
        .write(dest)?;
    out.line(format!(
        "{} charts, theta {:.6}, eps' {}, sup-distance {:.3e}",
        a.charts.len(),
        a.theta,
        a.eps_prime,
        a.sup_distance
    ));
    describe(out, &a.report);
    out.line(format!("{} at L + eps = {}", if a.passed { "PASS" } else { "FAIL" }, lip + eps));
    out.record(json!({
        "command": "approx-closed",
        "lip": lip,
        "eps": eps,
        "pass": a.passed,
        "theta": a.theta,
        "eps_prime": a.eps_prime,
        "charts": a.charts.len(),
        "sup_distance": a.sup_distance,
        "report": report_json(&a.report),
    }));
    Ok(if a.passed { EXIT_OK } else { EXIT_CERT })
}

fn cmd_shorten(
    out: &mut Out,
    input: &Path,
    a: f64,
    b: f64,
    lip: f64,
    dest: &Path,
    trace: Option<&Path>,
) -> Result<i32, CliError> {
    let AnyCurve::Open(curve) = CurveFile::read(input)?.curve()? else {
        return Err(CliError::Usage("shorten expects an open curve".into()));
    };
    let grid = grid_or_default(None, default_grid(&curve))?.min((b - a) / 8.0);
    let (c, cert, tr) = shorten(&curve, a, b, lip, grid)?;
    let ok = cert.is_fast(DEFAULT_SLACK);
    CurveFile::from_open(&c)
        .with_meta("a", json!(a))
        .with_meta("b_prime", json!(cert.b_prime))
        .with_meta("L", json!(lip))
        .write(dest)?;
    if let Some(path) = trace {
        let text = serde_json::to_string_pretty(&tr).expect("traces serialize");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    out.line(format!(
        "[{a}, {b}] shortened to [{a}, {}] with {} accepted and {} rejected steps",
        cert.b_prime,
        tr.accepted(),
        tr.rejected()
    ));
    out.line(format!("{}: smallest chord ratio {:.9}", if ok { "fast" } else { "NOT fast" }, cert.mild_min.min(cert.internal_min)));
    out.record(json!({
        "command": "shorten",
        "a": a,
        "b": b,
        "b_prime": cert.b_prime,
        "fast": ok,
        "accepted": tr.accepted(),
        "rejected": tr.rejected(),
    }));
    Ok(if ok { EXIT_OK } else { EXIT_CERT })
}

fn cmd_gen(out: &mut Out, seed: u64, lip: f64, n: usize, closed: bool, dest: &Path) -> Result<i32, CliError> {
    let g = gen_bilip_curve(&GenSpec {
        seed,
        target_lip: lip,
        vertex_count: n,
        closed,
    })?;
    let file = match &g.curve {
        Generated::Open(c) => CurveFile::from_open(c),
        Generated::Closed(c) => CurveFile::from_closed(c),
    };
    file.with_meta("seed", json!(seed))
        .with_meta("target_L", json!(lip))
        .with_meta("measured_L", json!(g.report.constant()))
        .write(dest)?;
    out.line(format!(
        "{} curve with {n} vertices, measured constant {:.9} after {} rejections",
        if closed { "closed" } else { "open" },
        g.report.constant(),
        g.rejections
    ));
    out.record(json!({"command": "gen", "seed": seed, "measured_L": g.report.constant(), "rejections": g.rejections}));
    Ok(EXIT_OK)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Overlaid polylines in a shared view box with a 5% margin, y pointing up.
pub fn render_svg(curves: &[AnyCurve], width: u32, height: u32) -> String {
    let pts: Vec<Point2> = curves.iter().flat_map(|c| c.polyline().0).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let m = 0.05 * span;
    let (vx, vy, vw, vh) = (x0 - m, -(y1 + m), (x1 - x0) + 2.0 * m, (y1 - y0) + 2.0 * m);
    let stroke = 0.004 * span;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="{vx} {vy} {vw} {vh}">"#
    );
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let (vs, closed) = c.polyline();
        let coords: Vec<String> = vs.iter().map(|p| format!("{},{}", p.x, -p.y)).collect();
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            s,
            r#"  <{tag} fill="none" stroke="{color}" stroke-width="{stroke}" points="{}"/>"#,
            coords.join(" ")
        );
        for p in &vs {
            let _ = writeln!(
                s,
                r#"  <circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
                p.x,
                -p.y,
                1.5 * stroke
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn cmd_render(out: &mut Out, inputs: &[PathBuf], dest: &Path, width: u32, height: u32) -> Result<i32, CliError> {
    let curves = inputs
        .iter()
        .map(|p| Ok(CurveFile::read(p)?.curve()?))
        .collect::<Result<Vec<_>, CliError>>()?;
    std::fs::write(dest, render_svg(&curves, width, height))
        .map_err(|e| CliError::Io(format!("{}: {e}", dest.display())))?;
    out.line(format!("wrote {} curve(s) to {}", curves.len(), dest.display()));
    out.record(json!({"command": "render", "curves": curves.len(), "out": dest.display().to_string()}));
    Ok(EXIT_OK)
}

/// Runs the command line and returns `(exit code, standard output, standard error)`.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK { (code, text, String::new()) } else { (code, String::new(), text) };
        }
    };
    let mut out = Out {
        json: cli.json,
        text: String::new(),
    };
    let res = match &cli.command {
        Command::Verify { input, lip, grid, slack } => cmd_verify(&mut out, input, *lip, *grid, *slack),
        Command::Approx {
            input,
            lip,
            eps,
            out: dest,
            dump_stages,
        } => cmd_approx(&mut out, input, *lip, *eps, dest, dump_stages.as_deref()),
        Command::ApproxClosed { input, lip, eps, out: dest } => cmd_approx_closed(&mut out, input, *lip, *eps, dest),
        Command::Shorten {
            input,
            a,
            b,
            lip,
            out: dest,
            trace,
        } => cmd_shorten(&mut out, input, *a, *b, *lip, dest, trace.as_deref()),
        Command::Gen {
            seed,
            lip,
            n,
            closed,
            out: dest,
        } => cmd_gen(&mut out, *seed, *lip, *n, *closed, dest),
        Command::Render {
            inputs,
            out: dest,
            width,
            height,
        } => cmd_render(&mut out, inputs, dest, *width, *height),
    };
    match res {
        Ok(code) => (code, out.text, String::new()),
        Err(e) => {
            if cli.json {
                let _ = writeln!(out.text, "{}", json!({"error": e.to_string()}));
            }
            (EXIT_USAGE, out.text, format!("error: {e}\n"))
        }
    }
}
