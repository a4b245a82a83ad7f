use serde::{Deserialize, Serialize};

use super::{ActiveSet, EngineError, ProgramError, ScenarioProgram, Solved};
use crate::exec::Execution;

/// Relative tolerance for "strictly improves" in support detection.
pub fn support_tolerance(objective: f64) -> f64 {
    1e-9 * (1.0 + objective.abs())
}

/// Support constraints of a solved scenario program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// Sorted scenario indices.
    pub support_set: Vec<usize>,
    pub k: usize,
    pub objective: f64,
    pub tolerance: f64,
    /// `(index, objective gain when the index alone is dropped)` for every
    /// support constraint, in index order. Unbounded gains are `+∞`.
    pub improvements: Vec<(usize, f64)>,
    /// Re-solving with only the support constraints did not reproduce the
    /// objective.
    pub degenerate: bool,
}

impl SupportReport {
    /// Support indices ordered by decreasing gain, ties by lower index.
    pub fn by_gain(&self) -> Vec<usize> {
        let mut v = self.improvements.clone();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(i, _)| i).collect()
    }
}

/// Leave-one-out support detection over the program's candidate set.
pub fn find_support_set<P: ScenarioProgram>(
    program: &P,
    active: &ActiveSet,
    base: &Solved<P::Solution>,
    exec: Execution,
) -> Result<SupportReport, EngineError> {
    let tol = support_tolerance(base.objective);
    let mut candidates: Vec<usize> = program
        .support_candidates(&base.solution, active)
        .into_iter()
        .filter(|&i| active.contains(i))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let gains = exec.map_slice(&candidates, |&i| match program.solve(&active.without(i)) {
        Ok(s) => Ok(s.objective - base.objective),
        Err(ProgramError::Unbounded) => Ok(f64::INFINITY),
        Err(e) => Err(EngineError::solve(
            format!("leave-one-out without scenario {i}"),
            e,
        )),
    });
    let mut improvements = Vec::new();
    for (&i, gain) in candidates.iter().zip(gains) {
        let gain = gain?;
        if gain > tol {
            improvements.push((i, gain));
        }
    }
    let support_set: Vec<usize> = improvements.iter().map(|(i, _)| *i).collect();

    let degenerate = match program.solve(&ActiveSet::only(active.universe(), &support_set)) {
        Ok(s) => (s.objective - base.objective).abs() > tol,
        Err(_) => true,
    };
    Ok(SupportReport {
        k: support_set.len(),
        support_set,
        objective: base.objective,
        tolerance: tol,
        improvements,
        degenerate,
    })
}
