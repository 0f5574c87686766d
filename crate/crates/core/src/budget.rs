//! Concrete choice of the small constants used by the approximation
//! pipeline, with their consistency checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantBudget {
    /// Target biLipschitz constant of the input.
    pub lip: f64,
    /// Allowed loss in the constant and sup-distance.
    pub eps: f64,
    /// Per-stage loss; the stages together spend well under `eps`.
    pub xi: f64,
    /// Relative size of the central part of a partition cell.
    pub eps_tilde: f64,
    /// Initial number of partition cells.
    pub n: usize,
    /// Width of the speed-up strips next to each bad interval.
    pub ell: f64,
    /// Threshold for the derivative-deviation average.
    pub delta: f64,
    pub grid_step: f64,
    pub slack: f64,
    /// Half-width of the deviation search window, in units of the cell
    /// half-width.
    pub window_ratio: f64,
}

/// `1/L - 4 L e / (1 - e)` and friends: the four conditions on `eps_tilde`.
pub fn eps_tilde_constraints(lip: f64, eps: f64, e: f64) -> [bool; 4] {
    let target = 1.0 / (lip + eps);
    [
        e < eps / 5.0,
        e.cos() / (lip + e) >= target,
        1.0 / lip - 4.0 * lip * e / (1.0 - e) >= target,
        1.0 / lip - 18.0 * lip * e >= target,
    ]
}

pub fn choose_constants(lip: f64, eps: f64) -> Result<ConstantBudget> {
    if !(lip >= 1.0 && lip.is_finite()) {
        return Err(Error::Budget(format!("L must be finite and >= 1, got {lip}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Budget(format!("eps must be positive, got {eps}")));
    }
    let xi = eps.min(1.0) / (20.0 * (lip + 1.0));
    let mut eps_tilde = 0.5;
    while !eps_tilde_constraints(lip, eps, eps_tilde).iter().all(|&ok| ok) {
        eps_tilde *= 0.5;
    }
    let n = (1.0 / (eps * eps)).ceil() as usize;
    let b = ConstantBudget {
        lip,
        eps,
        xi,
        eps_tilde,
        n,
        ell: xi / (4.0 * n as f64),
        delta: eps * eps * eps_tilde / (12.0 * lip),
        grid_step: 1.0 / 2048.0,
        slack: crate::verify::DEFAULT_SLACK,
        window_ratio: 4.0,
    };
    b.validate()?;
    Ok(b)
}

impl ConstantBudget {
    /// Checks every invariant; callers that edit fields should re-validate.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.xi,
            self.eps_tilde,
            self.ell,
            self.delta,
            self.grid_step,
            self.window_ratio,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) || self.n == 0 || !(self.slack >= 0.0) {
            return Err(Error::Budget("all constants must be positive".into()));
        }
        if !(2.0 * self.ell * (self.n as f64) < self.xi) {
            return Err(Error::Budget(format!(
                "2 ell N = {} is not below xi = {}",
                2.0 * self.ell * self.n as f64,
                self.xi
            )));
        }
        if let Some(k) = eps_tilde_constraints(self.lip, self.eps, self.eps_tilde)
            .iter()
            .position(|&ok| !ok)
        {
            return Err(Error::Budget(format!(
                "eps_tilde = {} violates condition {}",
                self.eps_tilde,
                k + 1
            )));
        }
        if self.delta > self.eps * self.eps * self.eps_tilde / (12.0 * self.lip) {
            return Err(Error::Budget(format!("delta = {} too large", self.delta)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let b = choose_constants(2.0, 0.1).unwrap();
        assert!((b.xi - 0.1 / 60.0).abs() < 1e-18);
        assert_eq!(b.eps_tilde, 2f64.powi(-11));
        // the next dyadic up fails only the last condition
        let c = eps_tilde_constraints(2.0, 0.1, 2f64.powi(-10));
        assert_eq!(c, [true, true, true, false]);
        assert!(2.0 * b.ell * b.n as f64 <= b.xi);
    }

    #[test]
    fn monotone_in_eps() {
        let mut last = 0.0;
        for eps in [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 10.0] {
            let b = choose_constants(2.0, eps).unwrap();
            assert!(b.eps_tilde >= last);
            last = b.eps_tilde;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(choose_constants(0.5, 0.1).is_err());
        assert!(choose_constants(2.0, 0.0).is_err());
        let mut b = choose_constants(2.0, 0.1).unwrap();
        b.ell = b.xi;
        assert!(b.validate().is_err());
    }
}
