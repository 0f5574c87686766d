use std::path::Path;
use std::process::{Command, Output};

use bilip::cli::{CurveFile, CurveKind};

fn bilip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilip")).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, kind: CurveKind, bps: Vec<f64>, pts: Vec<[f64; 2]>) {
    CurveFile {
        kind,
        breakpoints: bps,
        points: pts,
        metadata: Default::default(),
    }
    .write(path)
    .unwrap();
}

#[test]
fn generated_curve_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.json");
    let f = f.to_str().unwrap();
    let o = bilip(&["gen", "--seed", "42", "--L", "2", "--n", "20", "--out", f]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bilip(&["verify", f, "--L", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).contains("PASS"));
    // same seed, same bytes
    let g = dir.path().join("h.json");
    bilip(&["gen", "--seed", "42", "--L", "2", "--n", "20", "--out", g.to_str().unwrap()]);
    assert_eq!(std::fs::read(f).unwrap(), std::fs::read(&g).unwrap());
}

#[test]
fn right_angle_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("r.json");
    write(&f, CurveKind::Open, vec![0.0, 1.0, 2.0], vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
    let o = bilip(&["verify", f.to_str().unwrap(), "--L", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("witness pair (0, 2)"), "{}", text(&o));
    let o = bilip(&["--json", "verify", f.to_str().unwrap(), "--L", "1.2"]);
    let rec: serde_json::Value = serde_json::from_str(text(&o).lines().next().unwrap()).unwrap();
    assert_eq!(rec["pass"], false);
    assert!((rec["report"]["inv_lip_lower"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
}

#[test]
fn straight_segment_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.json");
    let out = dir.path().join("o.json");
    let stages = dir.path().join("stages");
    write(&f, CurveKind::Open, vec![0.0, 1.0], vec![[0.0, 0.0], [1.5, 0.5]]);
    let o = bilip(&[
        "approx",
        f.to_str().unwrap(),
        "--L",
        "2",
        "--eps",
        "0.25",
        "--out",
        out.to_str().unwrap(),
        "--dump-stages",
        stages.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let a = CurveFile::read(&f).unwrap();
    let b = CurveFile::read(&out).unwrap();
    assert_eq!(a.breakpoints, b.breakpoints);
    assert_eq!(a.points, b.points);
    for name in ["phi1", "phi2", "phi3", "phi4", "tau", "tau_tilde", "partition"] {
        assert!(stages.join(format!("{name}.json")).exists(), "{name}");
    }
}

#[test]
fn approx_closed_shorten_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let o = bilip(&["gen", "--seed", "2", "--L", "3", "--n", "8", "--closed", "--out", &p("c.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lip = CurveFile::read(Path::new(&p("c.json"))).unwrap().metadata["measured_L"].as_f64().unwrap();
    let o = bilip(&["approx-closed", &p("c.json"), "--L", &lip.to_string(), "--eps", "0.5", "--out", &p("co.json")]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o), String::from_utf8_lossy(&o.stderr));

    write(
        Path::new(&p("r.json")),
        CurveKind::Open,
        vec![0.0, 1.0, 2.0],
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
    );
    let o = bilip(&[
        "--json",
        "shorten",
        &p("r.json"),
        "--a",
        "0",
        "--b",
        "2",
        "--L",
        "1.4142135623730951",
        "--out",
        &p("ro.json"),
        "--trace",
        &p("trace.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: serde_json::Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert!((rec["b_prime"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(Path::new(&p("trace.json")).exists());

    let o = bilip(&["render", &p("c.json"), &p("co.json"), "--out", &p("x.svg")]);
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(p("x.svg")).unwrap();
    assert_eq!(svg.matches("<polygon").count(), 2);
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(bilip(&["verify"]).status.code(), Some(1));
    assert_eq!(bilip(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bilip(&["verify", "/nonexistent.json", "--L", "2"]).status.code(), Some(1));
    assert_eq!(bilip(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{\n  \"kind\": \"open\",\n  \"breakpoints\": [0, 1],\n  \"points\": oops\n}").unwrap();
    let o = bilip(&["verify", f.to_str().unwrap(), "--L", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    let g = dir.path().join("g.json");
    write(&g, CurveKind::Open, vec![0.0, 1.0], vec![[0.0, 0.0], [1.0, 0.0]]);
    let o = Command::new(env!("CARGO_BIN_EXE_bilip"))
        .args(["verify", g.to_str().unwrap(), "--L", "2"])
        .env("BILIP_GRID", "nope")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
