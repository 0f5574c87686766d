use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{PLCurve, PARAM_TOL};

/// Increasing piecewise-linear map between parameter intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChange {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TimeChange {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<TimeChange> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Accounting("time change needs matching knots".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || ys.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Accounting("time change must be strictly increasing".into()));
        }
        Ok(TimeChange { xs, ys })
    }

    pub fn identity(t0: f64, t1: f64) -> TimeChange {
        TimeChange {
            xs: vec![t0, t1],
            ys: vec![t0, t1],
        }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    fn interp(from: &[f64], to: &[f64], t: f64) -> f64 {
        let n = from.len();
        let i = from.partition_point(|&k| k <= t).saturating_sub(1).min(n - 2);
        if t == from[i] {
            return to[i];
        }
        if t == from[i + 1] {
            return to[i + 1];
        }
        to[i] + (to[i + 1] - to[i]) * (t - from[i]) / (from[i + 1] - from[i])
    }

    pub fn eval(&self, x: f64) -> f64 {
        Self::interp(&self.xs, &self.ys, x)
    }

    pub fn inverse_eval(&self, y: f64) -> f64 {
        Self::interp(&self.ys, &self.xs, y)
    }

    pub fn inverse(&self) -> TimeChange {
        TimeChange {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }

    /// `x -> self(inner(x))`.
    pub fn compose(&self, inner: &TimeChange) -> Result<TimeChange> {
        let mut xs: Vec<f64> = inner.xs.clone();
        xs.extend(self.xs.iter().map(|&y| inner.inverse_eval(y)));
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= PARAM_TOL);
        let ys = xs.iter().map(|&x| self.eval(inner.eval(x))).collect();
        TimeChange::new(xs, ys)
    }

    /// The curve `g` with `g(self(x)) = curve(x)`.
    pub fn push_forward(&self, curve: &PLCurve) -> Result<PLCurve> {
        let mut ts: Vec<f64> = curve.breakpoints().to_vec();
        ts.extend(self.xs.iter().copied());
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= PARAM_TOL);
        let vs = ts.iter().map(|&t| curve.eval_unchecked(t)).collect();
        PLCurve::new(ts.iter().map(|&t| self.eval(t)).collect(), vs)
    }

    /// The curve `x -> curve(self(x))`.
    pub fn pull_back(&self, curve: &PLCurve) -> Result<PLCurve> {
        self.inverse().push_forward(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::fixtures::right_angle;

    #[test]
    fn compose_and_invert() {
        let a = TimeChange::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 0.75]).unwrap();
        let b = TimeChange::new(vec![0.0, 0.3, 0.75], vec![0.0, 0.3, 0.6]).unwrap();
        let ba = b.compose(&a).unwrap();
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((ba.eval(x) - b.eval(a.eval(x))).abs() < 1e-12);
            assert!((a.inverse_eval(a.eval(x)) - x).abs() < 1e-12);
        }
        assert!(ba.slopes().iter().all(|&s| s > 0.0 && s <= 1.0));
        let c = TimeChange::new(vec![0.0, 0.6], vec![0.0, 0.5]).unwrap();
        let left = c.compose(&b).unwrap().compose(&a).unwrap();
        let right = c.compose(&b.compose(&a).unwrap()).unwrap();
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((left.eval(x) - right.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn push_and_pull() {
        let r = right_angle();
        let t = TimeChange::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.5]).unwrap();
        let g = t.push_forward(&r).unwrap();
        for k in 0..=10 {
            let x = 0.2 * k as f64;
            assert!(g.eval(t.eval(x)).unwrap().dist(r.eval(x).unwrap()) < 1e-15);
        }
        assert_eq!(t.pull_back(&g).unwrap(), r);
    }
}
