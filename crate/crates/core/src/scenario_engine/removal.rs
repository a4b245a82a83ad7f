//! The iterative support-aware removal loop.
//!
//! Each round solves with the removed set `I` excluded, observes the number
//! `k` of support constraints, looks up the admissible removal budget
//! `R_target(k)` and removes up to `min(k, R_target - |I|)` support
//! constraints, largest objective gain first. The loop stops once the budget
//! is met, when nothing removable is left, or at the iteration cap. A final
//! repair pass swaps out removed scenarios that the final solution does not
//! actually violate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::support::{find_support_set, SupportReport};
use super::{ActiveSet, EngineError, ScenarioProgram, Solved};
use crate::exec::Execution;
use crate::risk_bounds::RiskCache;

/// How many scenarios the loop may remove.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Budget {
    /// Remove exactly this many support constraints when possible.
    Fixed { removals: u64 },
    /// Largest `R` with `ε(k, R) <= eps_target` for the observed `k`.
    RiskDriven { eps_target: f64 },
}

/// Budget rule plus the `ε(k, R)` lookup for the drawn scenario count.
#[derive(Debug, Clone, Copy)]
pub struct RemovalPolicy<'a> {
    pub budget: Budget,
    pub risk: &'a RiskCache,
    /// Parallelism of the leave-one-out re-solves.
    pub execution: Execution,
}

impl<'a> RemovalPolicy<'a> {
    pub fn new(budget: Budget, risk: &'a RiskCache) -> Self {
        Self {
            budget,
            risk,
            execution: Execution::Sequential,
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn target(&self, k: usize) -> Result<u64, EngineError> {
        let t = match self.budget {
            Budget::Fixed { removals } => removals,
            Budget::RiskDriven { eps_target } => self.risk.choose(k as u64, eps_target)?.removals,
        };
        Ok(t.min(self.risk.r_max()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `|I|` reached the removal budget for the observed `k`.
    BudgetReached,
    /// Budget left but no support constraint may be removed.
    NoRemovableSupport,
    /// Iteration cap (`Ñ` rounds) hit.
    IterationCap,
    /// A removed scenario was not violated and no replacement was found.
    ViolationRepairExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IterationAction {
    Remove {
        indices: Vec<usize>,
    },
    /// Budget shrank below `|I|`; most recent removals put back.
    Restore {
        indices: Vec<usize>,
    },
    /// Non-violated `restored` put back, `replacement` removed instead.
    Repair {
        restored: usize,
        replacement: Option<usize>,
    },
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// `I` at the start of the round; the active set is its complement.
    pub removed_before: Vec<usize>,
    pub objective: f64,
    pub k: usize,
    pub support_set: Vec<usize>,
    pub r_target: u64,
    pub all_removed_violated: bool,
    pub degenerate: bool,
    pub action: IterationAction,
}

/// Full record of one removal-loop run. Serialises to the JSON trace format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalTrace {
    pub n_scenarios: usize,
    pub iterations: Vec<IterationRecord>,
    /// Final removed set `I`, in removal order.
    pub removed: Vec<usize>,
    pub final_support: SupportReport,
    pub final_k: usize,
    pub final_r_target: u64,
    pub final_objective: f64,
    /// `ε(k_final, |I|)`; `None` if fewer than `k_final + 1` scenarios remain.
    pub final_bound: Option<f64>,
    pub all_removed_violated: bool,
    /// Some round saw a support set that does not reproduce the solution.
    pub degenerate: bool,
    pub termination: Termination,
}

impl RemovalTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialises")
    }
}

/// Final solution together with its trace.
#[derive(Debug, Clone)]
pub struct RemovalOutcome<S> {
    pub solution: Solved<S>,
    pub trace: RemovalTrace,
}

/// Indices of `removed` that `solution` does **not** violate.
pub fn verify_removed_violated<P: ScenarioProgram>(
    program: &P,
    solution: &P::Solution,
    removed: &[usize],
) -> (bool, Vec<usize>) {
    let offending: Vec<usize> = removed
        .iter()
        .copied()
        .filter(|&i| !program.violates(solution, i))
        .collect();
    (offending.is_empty(), offending)
}

struct Round<S> {
    solved: Solved<S>,
    report: SupportReport,
    target: u64,
}

fn solve_round<P: ScenarioProgram>(
    program: &P,
    policy: &RemovalPolicy<'_>,
    removed: &[usize],
) -> Result<Round<P::Solution>, EngineError> {
    let active = ActiveSet::without_indices(program.n_scenarios(), removed);
    let solved = program
        .solve(&active)
        .map_err(|e| EngineError::solve(format!("solve with {} removed", removed.len()), e))?;
    let report = find_support_set(program, &active, &solved, policy.execution)?;
    let target = policy.target(report.k)?;
    Ok(Round {
        solved,
        report,
        target,
    })
}

fn record<P: ScenarioProgram>(
    program: &P,
    round: &Round<P::Solution>,
    removed: &[usize],
    action: IterationAction,
) -> IterationRecord {
    IterationRecord {
        removed_before: removed.to_vec(),
        objective: round.solved.objective,
        k: round.report.k,
        support_set: round.report.support_set.clone(),
        r_target: round.target,
        all_removed_violated: verify_removed_violated(program, &round.solved.solution, removed).0,
        degenerate: round.report.degenerate,
        action,
    }
}

/// Runs the removal loop over all `Ñ = program.n_scenarios()` scenarios.
pub fn removal_loop<P: ScenarioProgram>(
    program: &P,
    policy: RemovalPolicy<'_>,
) -> Result<RemovalOutcome<P::Solution>, EngineError> {
    let n = program.n_scenarios();
    if policy.risk.n_total() != n as u64 {
        return Err(EngineError::Config(format!(
            "risk lookup built for {} scenarios, program has {n}",
            policy.risk.n_total()
        )));
    }
    let mut removed: Vec<usize> = Vec::new();
    // scenarios put back once are never removed again, so the loop cannot cycle
    let mut banned: BTreeSet<usize> = BTreeSet::new();
    let mut iterations = Vec::new();
    let mut degenerate = false;
    let cap = n.max(1);

    let (mut round, mut termination) = loop {
        let round = solve_round(program, &policy, &removed)?;
        degenerate |= round.report.degenerate;
        let have = removed.len() as u64;
        if have > round.target {
            let excess = (have - round.target) as usize;
            let back: Vec<usize> = removed.split_off(removed.len() - excess);
            banned.extend(&back);
            iterations.push(record(
                program,
                &round,
                &removed_with(&removed, &back),
                IterationAction::Restore { indices: back },
            ));
        } else if have == round.target {
            iterations.push(record(program, &round, &removed, IterationAction::Stop));
            break (round, Termination::BudgetReached);
        } else {
            let room = (round.target - have) as usize;
            let picks: Vec<usize> = round
                .report
                .by_gain()
                .into_iter()
                .filter(|i| !banned.contains(i))
                .take(room)
                .collect();
            if picks.is_empty() {
                iterations.push(record(program, &round, &removed, IterationAction::Stop));
                break (round, Termination::NoRemovableSupport);
            }
            iterations.push(record(
                program,
                &round,
                &removed,
                IterationAction::Remove {
                    indices: picks.clone(),
                },
            ));
            removed.extend(picks);
        }
        if iterations.len() >= cap {
            let round = solve_round(program, &policy, &removed)?;
            iterations.push(record(program, &round, &removed, IterationAction::Stop));
            break (round, Termination::IterationCap);
        }
    };

    // violation repair
    for _ in 0..n {
        let (ok, offending) = verify_removed_violated(program, &round.solved.solution, &removed);
        if ok {
            break;
        }
        let restored = offending[0];
        let before = removed.clone();
        removed.retain(|&i| i != restored);
        banned.insert(restored);
        let intermediate = solve_round(program, &policy, &removed)?;
        let replacement = intermediate
            .report
            .by_gain()
            .into_iter()
            .find(|i| !banned.contains(i) && !removed.contains(i));
        iterations.push(record(
            program,
            &round,
            &before,
            IterationAction::Repair {
                restored,
                replacement,
            },
        ));
        match replacement {
            Some(j) => {
                removed.push(j);
                round = solve_round(program, &policy, &removed)?;
            }
            None => {
                round = intermediate;
                termination = Termination::ViolationRepairExhausted;
                break;
            }
        }
        degenerate |= round.report.degenerate;
    }

    let (all_removed_violated, _) =
        verify_removed_violated(program, &round.solved.solution, &removed);
    let final_k = round.report.k;
    let final_bound = policy.risk.epsilon(final_k as u64, removed.len() as u64)?;
    Ok(RemovalOutcome {
        trace: RemovalTrace {
            n_scenarios: n,
            iterations,
            final_k,
            final_r_target: round.target,
            final_objective: round.solved.objective,
            final_bound,
            all_removed_violated,
            degenerate,
            termination,
            final_support: round.report,
            removed,
        },
        solution: round.solved,
    })
}

fn removed_with(removed: &[usize], back: &[usize]) -> Vec<usize> {
    removed.iter().chain(back).copied().collect()
}
