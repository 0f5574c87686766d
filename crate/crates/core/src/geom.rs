//! Planar points and piecewise-linear parametric curves.
//!
//! A [`PLCurve`] is a list of strictly increasing breakpoints with one vertex
//! per breakpoint; evaluation interpolates linearly between consecutive
//! vertices. Surgeries at parameters that are not breakpoints first insert a
//! breakpoint there, so every output stays exactly piecewise linear.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when comparing parameters.
pub const PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// `self + s * (o - self)`
    pub fn lerp(self, o: Point2, s: f64) -> Point2 {
        Point2::new(self.x + s * (o.x - self.x), self.y + s * (o.y - self.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// A unit direction in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirVec {
    pub ux: f64,
    pub uy: f64,
}

impl DirVec {
    /// Normalizes `v`; `None` for the zero vector.
    pub fn from_vector(v: Point2) -> Option<DirVec> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(DirVec {
            ux: v.x / n,
            uy: v.y / n,
        })
    }

    pub fn from_angle(a: f64) -> DirVec {
        DirVec {
            ux: a.cos(),
            uy: a.sin(),
        }
    }

    pub fn as_point(self) -> Point2 {
        Point2::new(self.ux, self.uy)
    }

    pub fn dot(self, o: DirVec) -> f64 {
        self.ux * o.ux + self.uy * o.uy
    }

    /// Unsigned angle in `[0, pi]` between two directions.
    pub fn angle_to(self, o: DirVec) -> f64 {
        let c = self.ux * o.ux + self.uy * o.uy;
        let s = self.ux * o.uy - self.uy * o.ux;
        s.atan2(c).abs()
    }
}

/// Open parameter interval `(lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidCurve(format!(
                "interval requires lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }
}

/// Open piecewise-linear parametric curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLCurve {
    breakpoints: Vec<f64>,
    vertices: Vec<Point2>,
}

impl PLCurve {
    pub fn new(breakpoints: Vec<f64>, vertices: Vec<Point2>) -> Result<PLCurve> {
        if breakpoints.len() != vertices.len() {
            return Err(Error::InvalidCurve(format!(
                "{} breakpoints but {} vertices",
                breakpoints.len(),
                vertices.len()
            )));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidCurve("need at least two vertices".into()));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) || vertices.iter().any(|p| !p.is_finite())
        {
            return Err(Error::InvalidCurve("non-finite coordinate".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidCurve(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(PLCurve {
            breakpoints,
            vertices,
        })
    }

    /// Curve through `points` with uniformly spaced breakpoints on `[t0, t1]`.
    pub fn uniform(t0: f64, t1: f64, points: Vec<Point2>) -> Result<PLCurve> {
        let n = points.len();
        if n < 2 {
            return Err(Error::InvalidCurve("need at least two vertices".into()));
        }
        let mut bps: Vec<f64> = (0..n)
            .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
            .collect();
        bps[n - 1] = t1;
        PLCurve::new(bps, points)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn n_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn t1(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn domain_len(&self) -> f64 {
        self.t1() - self.t0()
    }

    pub fn start(&self) -> Point2 {
        self.vertices[0]
    }

    pub fn end(&self) -> Point2 {
        *self.vertices.last().unwrap()
    }

    fn check_param(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.t0(), self.t1());
        if !(t >= lo - PARAM_TOL && t <= hi + PARAM_TOL) {
            return Err(Error::Domain { t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    /// Index `i` of the segment `[t_i, t_{i+1}]` containing `t` (the left one
    /// at interior breakpoints is never returned: breakpoints belong to the
    /// segment that starts there, except the final one).
    pub fn segment_at(&self, t: f64) -> usize {
        let n = self.n_segments();
        let i = self.breakpoints.partition_point(|&b| b <= t);
        i.saturating_sub(1).min(n - 1)
    }

    /// Breakpoint index within `PARAM_TOL` of `t`, if any.
    pub fn breakpoint_near(&self, t: f64) -> Option<usize> {
        let i = self.breakpoints.partition_point(|&b| b < t);
        [i.wrapping_sub(1), i]
            .into_iter()
            .filter(|&j| j < self.breakpoints.len())
            .filter(|&j| (self.breakpoints[j] - t).abs() <= PARAM_TOL)
            .min_by(|&a, &b| {
                (self.breakpoints[a] - t)
                    .abs()
                    .total_cmp(&(self.breakpoints[b] - t).abs())
            })
    }

    /// Snaps `t` onto a breakpoint when within tolerance.
    pub fn snap(&self, t: f64) -> f64 {
        match self.breakpoint_near(t) {
            Some(i) => self.breakpoints[i],
            None => t,
        }
    }

    pub fn eval(&self, t: f64) -> Result<Point2> {
        let t = self.check_param(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// Evaluation without domain checks; parameters outside the domain are
    /// clamped.
    pub fn eval_unchecked(&self, t: f64) -> Point2 {
        let t = t.clamp(self.t0(), self.t1());
        let i = self.segment_at(t);
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        if t == a {
            return self.vertices[i];
        }
        if t == b {
            return self.vertices[i + 1];
        }
        self.vertices[i].lerp(self.vertices[i + 1], (t - a) / (b - a))
    }

    pub fn velocity(&self, i: usize) -> Point2 {
        let dt = self.breakpoints[i + 1] - self.breakpoints[i];
        (self.vertices[i + 1] - self.vertices[i]) * (1.0 / dt)
    }

    pub fn speed(&self, segment_index: usize) -> Result<f64> {
        if segment_index >= self.n_segments() {
            return Err(Error::SegmentIndex {
                index: segment_index,
                len: self.n_segments(),
            });
        }
        Ok(self.segment_speed(segment_index))
    }

    pub(crate) fn segment_speed(&self, i: usize) -> f64 {
        self.vertices[i].dist(self.vertices[i + 1]) / (self.breakpoints[i + 1] - self.breakpoints[i])
    }

    pub fn speeds(&self) -> Vec<f64> {
        (0..self.n_segments()).map(|i| self.segment_speed(i)).collect()
    }

    /// Length of the image of `[u, v]`.
    pub fn arclength(&self, u: f64, v: f64) -> Result<f64> {
        let u = self.check_param(u)?;
        let v = self.check_param(v)?;
        if u > v {
            return Err(Error::Domain {
                t: u,
                lo: self.t0(),
                hi: v,
            });
        }
        if u == v {
            return Ok(0.0);
        }
        let mut pts = vec![self.eval_unchecked(u)];
        let i0 = self.breakpoints.partition_point(|&b| b <= u);
        let i1 = self.breakpoints.partition_point(|&b| b < v);
        pts.extend_from_slice(&self.vertices[i0..i1]);
        pts.push(self.eval_unchecked(v));
        Ok(pts.windows(2).map(|w| w[0].dist(w[1])).sum())
    }

    /// Copy with a breakpoint at `t` (no-op when `t` is already within
    /// tolerance of a breakpoint). Returns the curve and the exact parameter
    /// used.
    pub fn with_breakpoint(&self, t: f64) -> Result<(PLCurve, f64)> {
        let t = self.check_param(t)?;
        if let Some(i) = self.breakpoint_near(t) {
            return Ok((self.clone(), self.breakpoints[i]));
        }
        let p = self.eval_unchecked(t);
        let i = self.breakpoints.partition_point(|&b| b < t);
        let mut bps = self.breakpoints.clone();
        let mut vs = self.vertices.clone();
        bps.insert(i, t);
        vs.insert(i, p);
        Ok((PLCurve {
            breakpoints: bps,
            vertices: vs,
        }, t))
    }

    /// Chord replacement on `(s, t)`: the curve is unchanged outside the
    /// interval and linear from `eval(s)` to `eval(t)` inside it.
    pub fn segment_replace(&self, s: f64, t: f64) -> Result<PLCurve> {
        let s = self.snap(self.check_param(s)?);
        let t = self.snap(self.check_param(t)?);
        if s > t {
            return Err(Error::Domain {
                t: s,
                lo: self.t0(),
                hi: t,
            });
        }
        if t - s <= PARAM_TOL {
            return Ok(self.clone());
        }
        let (ps, pt) = (self.eval_unchecked(s), self.eval_unchecked(t));
        let mut bps = Vec::with_capacity(self.breakpoints.len() + 2);
        let mut vs = Vec::with_capacity(self.breakpoints.len() + 2);
        for (&b, &v) in self.breakpoints.iter().zip(&self.vertices) {
            if b < s {
                bps.push(b);
                vs.push(v);
            }
        }
        bps.push(s);
        vs.push(ps);
        bps.push(t);
        vs.push(pt);
        for (&b, &v) in self.breakpoints.iter().zip(&self.vertices) {
            if b > t {
                bps.push(b);
                vs.push(v);
            }
        }
        PLCurve::new(bps, vs)
    }

    /// Chord replacement on `(s, t)` traversed at speed `lip`; the rest of the
    /// curve after `t` is shifted left by `t - t_plus` where
    /// `t_plus = s + |eval(t) - eval(s)| / lip`.
    pub fn fast_reparam_segment(&self, s: f64, t: f64, lip: f64) -> Result<(PLCurve, f64)> {
        let s = self.snap(self.check_param(s)?);
        let t = self.snap(self.check_param(t)?);
        if !(s < t) {
            return Err(Error::Domain {
                t: s,
                lo: self.t0(),
                hi: t,
            });
        }
        let (ps, pt) = (self.eval_unchecked(s), self.eval_unchecked(t));
        let chord = ps.dist(pt);
        if chord == 0.0 {
            return Err(Error::DegenerateChord { s, t });
        }
        let mut t_plus = s + chord / lip;
        if t_plus > t + PARAM_TOL * (1.0 + t.abs()) {
            return Err(Error::NotLipschitz {
                s,
                t,
                lip,
                speed: chord / (t - s),
            });
        }
        if t_plus > t {
            t_plus = t;
        }
        let shift = t - t_plus;
        let mut bps = Vec::with_capacity(self.breakpoints.len() + 2);
        let mut vs = Vec::with_capacity(self.breakpoints.len() + 2);
        for (&b, &v) in self.breakpoints.iter().zip(&self.vertices) {
            if b < s {
                bps.push(b);
                vs.push(v);
            }
        }
        bps.push(s);
        vs.push(ps);
        bps.push(t_plus);
        vs.push(pt);
        for (&b, &v) in self.breakpoints.iter().zip(&self.vertices) {
            if b > t {
                bps.push(if shift == 0.0 { b } else { b - shift });
                vs.push(v);
            }
        }
        // a zero-length tail would collide with t_plus
        if bps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidCurve(
                "reparametrized segment collapsed a breakpoint".into(),
            ));
        }
        Ok((PLCurve::new(bps, vs)?, t_plus))
    }

    /// Restriction to `[u, v]`.
    pub fn restrict(&self, u: f64, v: f64) -> Result<PLCurve> {
        let u = self.snap(self.check_param(u)?);
        let v = self.snap(self.check_param(v)?);
        if !(u < v) {
            return Err(Error::Domain {
                t: u,
                lo: self.t0(),
                hi: v,
            });
        }
        let mut bps = vec![u];
        let mut vs = vec![self.eval_unchecked(u)];
        for (&b, &p) in self.breakpoints.iter().zip(&self.vertices) {
            if b > u && b < v {
                bps.push(b);
                vs.push(p);
            }
        }
        bps.push(v);
        vs.push(self.eval_unchecked(v));
        PLCurve::new(bps, vs)
    }

    /// Glues `right` after `self`; the junction vertex is taken from `self`.
    pub fn concat(&self, right: &PLCurve) -> Result<PLCurve> {
        let gap = (right.t0() - self.t1()).abs();
        if gap > PARAM_TOL * (1.0 + self.t1().abs()) {
            return Err(Error::Junction(format!(
                "domains do not abut: {} vs {}",
                self.t1(),
                right.t0()
            )));
        }
        let d = self.end().dist(right.start());
        if d > PARAM_TOL * (1.0 + self.end().norm()) {
            return Err(Error::Junction(format!("junction points differ by {d}")));
        }
        let mut bps = self.breakpoints.clone();
        let mut vs = self.vertices.clone();
        bps.extend_from_slice(&right.breakpoints[1..]);
        vs.extend_from_slice(&right.vertices[1..]);
        PLCurve::new(bps, vs)
    }

    pub fn shift_domain(&self, offset: f64) -> PLCurve {
        PLCurve {
            breakpoints: self.breakpoints.iter().map(|b| b + offset).collect(),
            vertices: self.vertices.clone(),
        }
    }

    /// Affine change of parameter `t -> t0' + (t - t0) * factor`.
    pub fn scale_domain(&self, new_t0: f64, factor: f64) -> Result<PLCurve> {
        let t0 = self.t0();
        let bps = self
            .breakpoints
            .iter()
            .map(|b| new_t0 + (b - t0) * factor)
            .collect();
        PLCurve::new(bps, self.vertices.clone())
    }

    /// Drops interior vertices that lie on the chord of their neighbours at
    /// the interpolated parameter, so evaluation changes by at most
    /// `1e-12 * (1 + |coordinates|)`.
    pub fn merge_collinear(&self) -> PLCurve {
        let n = self.breakpoints.len();
        let mut keep = vec![0usize];
        let mut anchor = 0usize;
        let mut i = 1;
        while i < n - 1 {
            // try extending the chord from `anchor` to `i + 1`
            let (ta, tb) = (self.breakpoints[anchor], self.breakpoints[i + 1]);
            let (pa, pb) = (self.vertices[anchor], self.vertices[i + 1]);
            let scale = 1.0 + pa.norm().max(pb.norm());
            let ok = (anchor + 1..=i).all(|k| {
                let s = (self.breakpoints[k] - ta) / (tb - ta);
                pa.lerp(pb, s).dist(self.vertices[k]) <= PARAM_TOL * scale
            });
            if !ok {
                keep.push(i);
                anchor = i;
            }
            i += 1;
        }
        keep.push(n - 1);
        PLCurve {
            breakpoints: keep.iter().map(|&k| self.breakpoints[k]).collect(),
            vertices: keep.iter().map(|&k| self.vertices[k]).collect(),
        }
    }

    /// Turning angle in `[0, pi]` at interior vertex `i` (between segments
    /// `i - 1` and `i`); `None` when either segment is degenerate.
    pub fn turning_angle(&self, i: usize) -> Option<f64> {
        if i == 0 || i + 1 >= self.breakpoints.len() {
            return None;
        }
        let d0 = DirVec::from_vector(self.vertices[i] - self.vertices[i - 1])?;
        let d1 = DirVec::from_vector(self.vertices[i + 1] - self.vertices[i])?;
        Some(d0.angle_to(d1))
    }

    /// True when the derivative jumps at interior breakpoint `i`.
    pub fn is_corner(&self, i: usize) -> bool {
        if i == 0 || i + 1 >= self.breakpoints.len() {
            return false;
        }
        let (a, b) = (self.velocity(i - 1), self.velocity(i));
        (a - b).norm() > 1e-12 * (1.0 + a.norm().max(b.norm()))
    }

    /// Parameters of interior breakpoints where the derivative jumps.
    pub fn corner_params(&self) -> Vec<f64> {
        (1..self.n_segments())
            .filter(|&i| self.is_corner(i))
            .map(|i| self.breakpoints[i])
            .collect()
    }

    /// True when `[u, v]` contains no corner strictly inside.
    pub fn is_linear_on(&self, u: f64, v: f64) -> bool {
        (1..self.n_segments())
            .filter(|&i| self.breakpoints[i] > u + PARAM_TOL && self.breakpoints[i] < v - PARAM_TOL)
            .all(|i| !self.is_corner(i))
    }

    /// Maximum of `|self(t) - other(t)|` over the common domain. Both curves
    /// are linear between consecutive points of the merged breakpoint set, so
    /// the maximum is attained there.
    pub fn sup_distance(&self, other: &PLCurve) -> f64 {
        let lo = self.t0().max(other.t0());
        let hi = self.t1().min(other.t1());
        let mut ts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .filter(|&t| t >= lo && t <= hi)
            .collect();
        ts.push(lo);
        ts.push(hi);
        ts.iter()
            .map(|&t| self.eval_unchecked(t).dist(other.eval_unchecked(t)))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn straight(speed: f64) -> PLCurve {
        PLCurve::new(vec![0.0, 1.0], vec![Point2::new(0.0, 0.0), Point2::new(speed, 0.0)]).unwrap()
    }

    pub fn right_angle() -> PLCurve {
        PLCurve::new(
            vec![0.0, 1.0, 2.0],
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn eval_midpoints_and_breakpoints() {
        let c = PLCurve::new(vec![0.0, 1.0], vec![Point2::ORIGIN, Point2::new(2.0, 0.0)]).unwrap();
        assert_eq!(c.eval(0.5).unwrap(), Point2::new(1.0, 0.0));
        let r = right_angle();
        assert_eq!(r.eval(1.5).unwrap(), Point2::new(1.0, 0.5));
        for (t, v) in r.breakpoints().iter().zip(r.vertices()) {
            assert_eq!(r.eval(*t).unwrap(), *v);
        }
        assert!(matches!(r.eval(2.5), Err(Error::Domain { .. })));
        assert!(matches!(r.eval(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn speeds() {
        assert_eq!(straight(2.0).speed(0).unwrap(), 2.0);
        assert_eq!(right_angle().speed(1).unwrap(), 1.0);
        assert!(matches!(right_angle().speed(2), Err(Error::SegmentIndex { .. })));
        let degenerate = PLCurve::new(
            vec![0.0, 1.0, 2.0],
            vec![Point2::ORIGIN, Point2::ORIGIN, Point2::new(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(degenerate.speed(0).unwrap(), 0.0);
    }

    #[test]
    fn arclength_examples() {
        let r = right_angle();
        assert_eq!(r.arclength(0.0, 2.0).unwrap(), 2.0);
        assert_eq!(straight(2.0).arclength(0.0, 1.0).unwrap(), 2.0);
        assert!((r.arclength(0.5, 1.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(r.arclength(1.5, 0.5).is_err());
        let total = r.arclength(0.0, 2.0).unwrap();
        let split = r.arclength(0.0, 1.0).unwrap() + r.arclength(1.0, 2.0).unwrap();
        assert_eq!(total, split);
    }

    #[test]
    fn segment_replace_examples() {
        let r = right_angle();
        let out = r.segment_replace(0.5, 1.5).unwrap();
        assert_eq!(out.breakpoints(), &[0.0, 0.5, 1.5, 2.0]);
        assert_eq!(out.eval(0.5).unwrap(), Point2::new(0.5, 0.0));
        assert_eq!(out.eval(1.5).unwrap(), Point2::new(1.0, 0.5));
        assert_eq!(out.eval(1.0).unwrap(), Point2::new(0.75, 0.25));
        assert_eq!(out.eval(0.25).unwrap(), r.eval(0.25).unwrap());

        let s = straight(1.0);
        let out = s.segment_replace(0.2, 0.7).unwrap();
        assert!(out.sup_distance(&s) < 1e-15);
        assert_eq!(out.merge_collinear(), s);

        assert_eq!(r.segment_replace(1.0, 1.0).unwrap(), r);
    }

    #[test]
    fn fast_reparam_examples() {
        let r = right_angle();
        let l = 2f64.sqrt();
        let (out, tp) = r.fast_reparam_segment(0.0, 2.0, l).unwrap();
        assert!((tp - 1.0).abs() < 1e-15);
        assert_eq!(out.n_segments(), 1);
        assert!((out.t1() - 1.0).abs() < 1e-15);
        assert_eq!(out.end(), Point2::new(1.0, 1.0));
        assert!((out.speed(0).unwrap() - l).abs() < 1e-12);

        let s = straight(2.0);
        let (out, tp) = s.fast_reparam_segment(0.25, 0.75, 2.0).unwrap();
        assert_eq!(tp, 0.75);
        assert!(out.sup_distance(&s) < 1e-15);

        let (out, tp) = straight(1.0).fast_reparam_segment(0.0, 1.0, 2.0).unwrap();
        assert_eq!(tp, 0.5);
        assert_eq!(out.t1(), 0.5);

        assert!(matches!(
            straight(3.0).fast_reparam_segment(0.0, 1.0, 2.0),
            Err(Error::NotLipschitz { .. })
        ));
        let loop_back = PLCurve::new(
            vec![0.0, 1.0, 2.0],
            vec![Point2::ORIGIN, Point2::new(1.0, 0.0), Point2::ORIGIN],
        )
        .unwrap();
        assert!(matches!(
            loop_back.fast_reparam_segment(0.0, 2.0, 2.0),
            Err(Error::DegenerateChord { .. })
        ));
    }

    #[test]
    fn restrict_concat_shift() {
        let r = right_angle();
        let left = r.restrict(0.0, 1.0).unwrap();
        assert_eq!(left, PLCurve::new(vec![0.0, 1.0], vec![Point2::ORIGIN, Point2::new(1.0, 0.0)]).unwrap());
        let right = r.restrict(1.0, 2.0).unwrap();
        assert_eq!(left.concat(&right).unwrap(), r);
        let shifted = r.shift_domain(1.0);
        for t in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert!(shifted.eval(t + 1.0).unwrap().dist(r.eval(t).unwrap()) < 1e-15);
        }
        let bad = PLCurve::new(vec![1.0, 2.0], vec![Point2::new(5.0, 5.0), Point2::new(6.0, 5.0)]).unwrap();
        assert!(matches!(left.concat(&bad), Err(Error::Junction(_))));
    }

    #[test]
    fn corners_and_turning() {
        let r = right_angle();
        assert_eq!(r.corner_params(), vec![1.0]);
        assert!((r.turning_angle(1).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(!r.is_linear_on(0.0, 2.0));
        assert!(r.is_linear_on(0.0, 1.0));
    }

    #[test]
    fn invalid_curves_rejected() {
        assert!(PLCurve::new(vec![0.0], vec![Point2::ORIGIN]).is_err());
        assert!(PLCurve::new(vec![0.0, 0.0], vec![Point2::ORIGIN, Point2::ORIGIN]).is_err());
        assert!(PLCurve::new(vec![0.0, 1.0], vec![Point2::ORIGIN, Point2::new(f64::NAN, 0.0)]).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    use proptest::prelude::*;

    fn arb_curve() -> impl Strategy<Value = PLCurve> {
        prop::collection::vec((0.05f64..1.0, -2.0f64..2.0, -2.0f64..2.0), 2..10).prop_map(|raw| {
            let mut t = 0.0;
            let mut bps = Vec::new();
            let mut vs = Vec::new();
            for (dt, x, y) in raw {
                bps.push(t);
                vs.push(Point2::new(x, y));
                t += dt;
            }
            PLCurve::new(bps, vs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn restrict_concat_roundtrip(c in arb_curve(), k in 0usize..8) {
            let k = 1 + k % (c.n_segments().max(2) - 1).max(1);
            prop_assume!(k < c.n_segments());
            let cut = c.breakpoints()[k];
            let joined = c.restrict(c.t0(), cut).unwrap().concat(&c.restrict(cut, c.t1()).unwrap()).unwrap();
            prop_assert_eq!(joined, c);
        }

        #[test]
        fn arclength_additive(c in arb_curve(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (t0, t1) = (c.t0(), c.t1());
            let mid = t0 + (t1 - t0) * a.min(b);
            let hi = t0 + (t1 - t0) * a.max(b);
            let whole = c.arclength(t0, hi).unwrap();
            let parts = c.arclength(t0, mid).unwrap() + c.arclength(mid, hi).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole));
        }

        #[test]
        fn eval_commutes_with_restrict(c in arb_curve(), a in 0.0f64..1.0, b in 0.0f64..1.0, s in 0.0f64..1.0) {
            let (t0, t1) = (c.t0(), c.t1());
            let u = t0 + (t1 - t0) * a.min(b);
            let v = t0 + (t1 - t0) * a.max(b);
            prop_assume!(v - u > 1e-6);
            let r = c.restrict(u, v).unwrap();
            let t = u + (v - u) * s;
            prop_assert!(r.eval(t).unwrap().dist(c.eval(t).unwrap()) < 1e-12);
        }
    }
}
