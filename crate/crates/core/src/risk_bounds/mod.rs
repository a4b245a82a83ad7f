//! Risk and confidence bounds of the scenario approach.
//!
//! Four families are covered:
//!
//! * the classic bound for a program with `d` decision variables
//!   ([`beta_basic`], inverted by [`min_samples_basic`]),
//! * the sampling-and-discarding bound for `R` removed scenarios
//!   ([`beta_discard`], [`min_samples_discard`]),
//! * the a-posteriori risk `ε(k)` given `k` observed support constraints
//!   ([`eps_wait_judge`]),
//! * the a-posteriori risk `ε(k, R)` after additionally removing `R`
//!   scenarios ([`eps_discard_support`]), together with the removal-budget
//!   rule [`choose_removals`] and the lookup table [`RiskTable`].
//!
//! Everything is evaluated in log space. Combinatorial factors such as
//! `C(N+R, R)` overflow `f64` long before the sample sizes of interest, so no
//! binomial coefficient is ever materialised outside a logarithm.

mod binomial;
mod support_risk;
mod table;

pub use binomial::{
    beta_basic, beta_discard, ln_beta_basic, ln_beta_discard, ln_choose, min_samples_basic,
    min_samples_discard,
};
pub use support_risk::{
    dual_feasible_on_grid, eps_discard_support, eps_wait_judge, ln_risk_balance, risk_balance_sign,
    ROOT_TOLERANCE,
};
pub use table::{choose_removals, RemovalChoice, RemovalCountBasis, RiskCache, RiskTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the bound kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    /// The risk equation showed no sign change on `[0, 1]`. Never expected
    /// for valid inputs; treat as an internal bug signal.
    #[error("risk equation not bracketed on [0, 1] (k={k}, R={removed}, N={n})")]
    Bracketing { k: u64, removed: u64, n: u64 },
    #[error("risk table entry (k={k}, R={removed}): {source}")]
    TableEntry {
        k: u64,
        removed: u64,
        source: Box<BoundError>,
    },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> BoundError {
    BoundError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_unit_open(name: &'static str, x: f64) -> Result<(), BoundError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {x}")))
    }
}

/// The `(N, d, ε, β, R, k)` bundle shared by every bound equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// `N`: scenarios kept in the program.
    pub n_scenarios: u64,
    /// `d`: number of decision variables.
    pub n_decision: u64,
    /// `ε`: risk level.
    pub risk: f64,
    /// `β`: confidence parameter.
    pub confidence: f64,
    /// `R`: scenarios removed.
    pub n_removed: u64,
    /// `k`: observed support constraints.
    pub n_support: u64,
}

impl BoundParams {
    pub fn new(n_scenarios: u64, n_decision: u64, risk: f64, confidence: f64) -> Self {
        Self {
            n_scenarios,
            n_decision,
            risk,
            confidence,
            n_removed: 0,
            n_support: 0,
        }
    }

    pub fn with_removed(mut self, n_removed: u64) -> Self {
        self.n_removed = n_removed;
        self
    }

    pub fn with_support(mut self, n_support: u64) -> Self {
        self.n_support = n_support;
        self
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        if self.n_scenarios < 1 {
            return Err(invalid("n_scenarios", "must be at least 1"));
        }
        if self.n_decision < 1 {
            return Err(invalid("n_decision", "must be at least 1"));
        }
        check_unit_open("risk", self.risk)?;
        check_unit_open("confidence", self.confidence)?;
        if self.n_support > self.n_decision {
            return Err(invalid(
                "n_support",
                format!("k={} exceeds d={}", self.n_support, self.n_decision),
            ));
        }
        if self.n_removed >= self.n_scenarios {
            return Err(invalid(
                "n_removed",
                format!("R={} must be below N={}", self.n_removed, self.n_scenarios),
            ));
        }
        Ok(())
    }

    pub fn beta_basic(&self) -> Result<f64, BoundError> {
        self.validate()?;
        beta_basic(self.n_scenarios, self.n_decision, self.risk)
    }

    pub fn beta_discard(&self) -> Result<f64, BoundError> {
        self.validate()?;
        beta_discard(self.n_scenarios, self.n_removed, self.n_decision, self.risk)
    }

    pub fn eps_discard_support(&self) -> Result<f64, BoundError> {
        self.validate()?;
        eps_discard_support(
            self.n_support,
            self.n_removed,
            self.n_scenarios,
            self.confidence,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let p = BoundParams::new(100, 5, 0.05, 1e-3);
        assert!(p.validate().is_ok());
        assert!(p.with_support(6).validate().is_err());
        assert!(p.with_removed(100).validate().is_err());
        assert!(BoundParams::new(100, 5, 1.0, 1e-3).validate().is_err());
        assert!(BoundParams::new(100, 5, 0.1, 0.0).validate().is_err());
        assert!(BoundParams::new(0, 5, 0.1, 0.1).validate().is_err());
    }

    #[test]
    fn params_dispatch() {
        let p = BoundParams::new(20, 3, 0.1, 0.5)
            .with_removed(1)
            .with_support(1);
        assert_eq!(
            p.beta_discard().unwrap(),
            beta_discard(20, 1, 3, 0.1).unwrap()
        );
        assert_eq!(p.beta_basic().unwrap(), beta_basic(20, 3, 0.1).unwrap());
        assert_eq!(
            p.eps_discard_support().unwrap(),
            eps_discard_support(1, 1, 20, 0.5).unwrap()
        );
    }
}
