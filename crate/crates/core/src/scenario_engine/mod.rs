//! Generic scenario programs: solve under a scenario subset, detect support
//! constraints, run the support-aware removal loop and estimate violation
//! frequencies on fresh samples.

mod lp_program;
mod removal;
mod support;
mod violation;

pub(crate) use lp_program::lp_to_program;
pub use lp_program::{row_violated, LpScenarioProgram};
pub use removal::{
    removal_loop, verify_removed_violated, Budget, IterationAction, IterationRecord,
    RemovalOutcome, RemovalPolicy, RemovalTrace, Termination,
};
pub use support::{find_support_set, support_tolerance, SupportReport};
pub use violation::{estimate_violation, ViolationEstimate, WILSON_Z95};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk_bounds::BoundError;

/// Scenarios currently enforced, as a mask over `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    mask: Vec<bool>,
    count: usize,
}

impl ActiveSet {
    pub fn all(n: usize) -> Self {
        Self {
            mask: vec![true; n],
            count: n,
        }
    }

    pub fn none(n: usize) -> Self {
        Self {
            mask: vec![false; n],
            count: 0,
        }
    }

    /// Every scenario except `removed`.
    pub fn without_indices(n: usize, removed: &[usize]) -> Self {
        let mut s = Self::all(n);
        for &i in removed {
            s.remove(i);
        }
        s
    }

    /// Only `kept`.
    pub fn only(n: usize, kept: &[usize]) -> Self {
        let mut s = Self::none(n);
        for &i in kept {
            if i < n && !s.mask[i] {
                s.mask[i] = true;
                s.count += 1;
            }
        }
        s
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.mask.len() && self.mask[i] {
            self.mask[i] = false;
            self.count -= 1;
        }
    }

    pub fn without(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.remove(i);
        s
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    /// Number of active scenarios.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Size of the index universe.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
    }
}

/// Solution of a scenario program together with its objective value.
///
/// The engine uses a maximisation convention: removing scenarios can only
/// increase `objective`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved<S> {
    pub solution: S,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("program is unbounded on this scenario set")]
    Unbounded,
    #[error("program is infeasible on this scenario set")]
    Infeasible,
    #[error("solver failure: {0}")]
    Solver(String),
}

/// A convex program with one constraint set per scenario.
///
/// `solve` must be deterministic for a fixed active set and callable
/// concurrently.
pub trait ScenarioProgram: Sync {
    type Solution: Clone + Send + Sync;

    /// Total number of scenarios `Ñ` (the index universe).
    fn n_scenarios(&self) -> usize;

    /// Number of decision variables `d`.
    fn n_decision(&self) -> usize;

    fn solve(&self, active: &ActiveSet) -> Result<Solved<Self::Solution>, ProgramError>;

    /// Whether `solution` violates the constraint of `scenario`.
    fn violates(&self, solution: &Self::Solution, scenario: usize) -> bool;

    /// Scenarios that may be support constraints of `solution`. Every
    /// support constraint must be included; the default is the whole
    /// active set.
    fn support_candidates(&self, _solution: &Self::Solution, active: &ActiveSet) -> Vec<usize> {
        active.iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{context}: {source}")]
    Solve {
        context: String,
        source: ProgramError,
    },
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("configuration: {0}")]
    Config(String),
}

impl EngineError {
    pub(crate) fn solve(context: impl Into<String>, source: ProgramError) -> Self {
        EngineError::Solve {
            context: context.into(),
            source,
        }
    }
}
