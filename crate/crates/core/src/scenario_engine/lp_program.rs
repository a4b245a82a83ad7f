use super::{ActiveSet, ProgramError, ScenarioProgram, Solved};
use crate::linear_solver::{
    solve_lp, LinearProgram, LpError, LpSolution, LpStatus, FEASIBILITY_TOL,
};

/// Scenario program whose scenario `i` is the set of LP rows tagged `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpScenarioProgram {
    lp: LinearProgram,
    n_scenarios: usize,
    /// Offer only scenarios with a binding row as support candidates. Sound
    /// for convex programs: dropping a slack constraint keeps `x*` optimal.
    pub narrow_to_binding: bool,
}

impl LpScenarioProgram {
    /// Row tags must lie in `0..n_scenarios`.
    pub fn new(lp: LinearProgram, n_scenarios: usize) -> Self {
        debug_assert!(lp.constraints.iter().all(|c| c.tag < n_scenarios));
        Self {
            lp,
            n_scenarios,
            narrow_to_binding: false,
        }
    }

    pub fn narrowed(mut self) -> Self {
        self.narrow_to_binding = true;
        self
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    fn restricted(&self, active: &ActiveSet) -> LinearProgram {
        LinearProgram {
            objective: self.lp.objective.clone(),
            constraints: self
                .lp
                .constraints
                .iter()
                .filter(|c| active.contains(c.tag))
                .cloned()
                .collect(),
            lower: self.lp.lower.clone(),
            upper: self.lp.upper.clone(),
        }
    }
}

/// Row `a·x <= b` is violated beyond solver tolerance.
pub fn row_violated(coeffs: &[f64], rhs: f64, x: &[f64]) -> bool {
    let lhs: f64 = coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
    lhs - rhs > FEASIBILITY_TOL * (1.0 + rhs.abs())
}

pub(crate) fn lp_to_program(
    result: Result<LpSolution, LpError>,
) -> Result<Solved<LpSolution>, ProgramError> {
    let sol = result.map_err(|e| ProgramError::Solver(e.to_string()))?;
    match sol.status {
        LpStatus::Optimal => Ok(Solved {
            objective: sol.objective_value,
            solution: sol,
        }),
        LpStatus::Infeasible => Err(ProgramError::Infeasible),
        LpStatus::Unbounded => Err(ProgramError::Unbounded),
    }
}

impl ScenarioProgram for LpScenarioProgram {
    type Solution = LpSolution;

    fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    fn n_decision(&self) -> usize {
        self.lp.n_vars()
    }

    fn solve(&self, active: &ActiveSet) -> Result<Solved<LpSolution>, ProgramError> {
        lp_to_program(solve_lp(&self.restricted(active)))
    }

    fn violates(&self, solution: &LpSolution, scenario: usize) -> bool {
        self.lp
            .constraints
            .iter()
            .filter(|c| c.tag == scenario)
            .any(|c| row_violated(&c.coeffs, c.rhs, &solution.x))
    }

    fn support_candidates(&self, solution: &LpSolution, active: &ActiveSet) -> Vec<usize> {
        if self.narrow_to_binding {
            solution
                .active_set
                .iter()
                .copied()
                .filter(|&i| active.contains(i))
                .collect()
        } else {
            active.iter().collect()
        }
    }
}
