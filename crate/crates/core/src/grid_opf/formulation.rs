use serde::{Deserialize, Serialize};

use super::{GridError, GridModel};
use crate::linear_solver::{solve_lp, LinearProgram, LpSolution};
use crate::scenario_engine::{row_violated, ActiveSet, ProgramError, ScenarioProgram, Solved};

/// Box on the decision vector `(ΔP₁..ΔP_g, ΔQ₁..ΔQ_g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GenBounds {
    /// `0 <= setpoint + Δ <= cap`, with the active-power cap scaled by
    /// `availability` and the reactive cap fixed.
    pub fn around(grid: &GridModel, availability: f64, p_set: &[f64], q_set: &[f64]) -> Self {
        let g = grid.n_generators();
        let mut lower = vec![0.0; 2 * g];
        let mut upper = vec![0.0; 2 * g];
        for (j, gen) in grid.generators.iter().enumerate() {
            let p_cap = gen.p_cap * availability.clamp(0.0, 1.0);
            lower[j] = -p_set[j];
            upper[j] = (p_cap - p_set[j]).max(lower[j]);
            lower[g + j] = -q_set[j];
            upper[g + j] = (gen.q_cap - q_set[j]).max(lower[g + j]);
        }
        Self { lower, upper }
    }

    /// Zero setpoints.
    pub fn from_zero(grid: &GridModel, availability: f64) -> Self {
        let zero = vec![0.0; grid.n_generators()];
        Self::around(grid, availability, &zero, &zero)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// Generator increments chosen by one approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfDecision {
    pub dp: Vec<f64>,
    pub dq: Vec<f64>,
    /// `Σ ΔP + ΔQ`.
    pub objective: f64,
}

impl OpfDecision {
    pub fn from_x(n_gen: usize, x: &[f64]) -> Self {
        Self {
            dp: x[..n_gen].to_vec(),
            dq: x[n_gen..].to_vec(),
            objective: x.iter().sum(),
        }
    }

    pub fn x(&self) -> Vec<f64> {
        self.dp.iter().chain(&self.dq).copied().collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn base_lp(grid: &GridModel, bounds: &GenBounds) -> Result<LinearProgram, GridError> {
    let d = grid.n_decision();
    if bounds.lower.len() != d || bounds.upper.len() != d {
        return Err(GridError::Dimension(format!(
            "bounds have {} / {} entries, expected {d}",
            bounds.lower.len(),
            bounds.upper.len()
        )));
    }
    Ok(LinearProgram::new(vec![1.0; d]).with_bounds(bounds.lower.clone(), bounds.upper.clone()))
}

fn check_samples(grid: &GridModel, samples: &[Vec<f64>]) -> Result<(), GridError> {
    if samples.is_empty() {
        return Err(GridError::Dimension("no voltage samples".into()));
    }
    if let Some(i) = samples.iter().position(|s| s.len() != grid.n_nodes) {
        return Err(GridError::Dimension(format!(
            "sample {i} has {} nodes, expected {}",
            samples[i].len(),
            grid.n_nodes
        )));
    }
    Ok(())
}

/// Full formulation: `2n` rows per scenario, each tagged with its scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOpf {
    pub lp: LinearProgram,
    pub n_scenarios: usize,
}

pub fn build_scenario_opf(
    grid: &GridModel,
    samples: &[Vec<f64>],
    bounds: &GenBounds,
) -> Result<ScenarioOpf, GridError> {
    check_samples(grid, samples)?;
    let sens = grid.sensitivities();
    let mut lp = base_lp(grid, bounds)?;
    for (i, v) in samples.iter().enumerate() {
        for (l, s) in sens.iter().enumerate() {
            lp.push_row(s.clone(), grid.v_max - v[l], i);
            lp.push_row(s.iter().map(|c| -c).collect(), v[l] - grid.v_min, i);
        }
    }
    Ok(ScenarioOpf {
        lp,
        n_scenarios: samples.len(),
    })
}

/// Most limiting scenarios at one node (lowest index on ties).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeExtremes {
    pub min: f64,
    pub argmin: usize,
    pub max: f64,
    pub argmax: usize,
}

/// Per-node extremes formulation: `2n` rows in total. The upper row of node
/// `l` is tagged with its argmax scenario, the lower row with its argmin.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOpf {
    pub lp: LinearProgram,
    pub extremes: Vec<NodeExtremes>,
}

impl ReducedOpf {
    /// Distinct scenarios appearing in the extreme map, sorted.
    pub fn extreme_scenarios(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .extremes
            .iter()
            .flat_map(|e| [e.argmin, e.argmax])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn extremes_over(
    samples: &[Vec<f64>],
    n_nodes: usize,
    active: &ActiveSet,
) -> Option<Vec<NodeExtremes>> {
    let mut out: Option<Vec<NodeExtremes>> = None;
    for i in active.iter() {
        let v = &samples[i];
        match out.as_mut() {
            None => {
                out = Some(
                    v.iter()
                        .map(|&x| NodeExtremes {
                            min: x,
                            argmin: i,
                            max: x,
                            argmax: i,
                        })
                        .collect(),
                )
            }
            Some(ex) => {
                for (e, &x) in ex.iter_mut().zip(v) {
                    if x < e.min {
                        e.min = x;
                        e.argmin = i;
                    }
                    if x > e.max {
                        e.max = x;
                        e.argmax = i;
                    }
                }
            }
        }
    }
    debug_assert!(out.as_ref().is_none_or(|e| e.len() == n_nodes));
    out
}

fn reduced_lp(
    grid: &GridModel,
    sens: &[Vec<f64>],
    extremes: &[NodeExtremes],
    bounds: &GenBounds,
) -> Result<LinearProgram, GridError> {
    let mut lp = base_lp(grid, bounds)?;
    for (s, e) in sens.iter().zip(extremes) {
        lp.push_row(s.clone(), grid.v_max - e.max, e.argmax);
        lp.push_row(s.iter().map(|c| -c).collect(), e.min - grid.v_min, e.argmin);
    }
    Ok(lp)
}

pub fn build_reduced_opf(
    grid: &GridModel,
    samples: &[Vec<f64>],
    bounds: &GenBounds,
) -> Result<ReducedOpf, GridError> {
    check_samples(grid, samples)?;
    let extremes = extremes_over(samples, grid.n_nodes, &ActiveSet::all(samples.len()))
        .expect("at least one sample");
    let lp = reduced_lp(grid, &grid.sensitivities(), &extremes, bounds)?;
    Ok(ReducedOpf { lp, extremes })
}

/// Voltage of every node under increments `x` on top of profile `v`.
pub fn realized_voltage(sens: &[Vec<f64>], v: &[f64], x: &[f64]) -> Vec<f64> {
    sens.iter().zip(v).map(|(s, vl)| vl + dot(s, x)).collect()
}

/// Scenario program over sampled voltage profiles, solved through the
/// per-node extremes reduction of whichever scenarios are active.
#[derive(Debug, Clone, PartialEq)]
pub struct OpfScenarioProgram {
    grid: GridModel,
    sens: Vec<Vec<f64>>,
    samples: Vec<Vec<f64>>,
    bounds: GenBounds,
    /// Offer only extreme-map scenarios as support candidates.
    pub narrow_candidates: bool,
}

impl OpfScenarioProgram {
    pub fn new(
        grid: &GridModel,
        samples: Vec<Vec<f64>>,
        bounds: GenBounds,
    ) -> Result<Self, GridError> {
        check_samples(grid, &samples)?;
        base_lp(grid, &bounds)?;
        Ok(Self {
            sens: grid.sensitivities(),
            grid: grid.clone(),
            samples,
            bounds,
            narrow_candidates: true,
        })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn sensitivities(&self) -> &[Vec<f64>] {
        &self.sens
    }

    pub fn bounds(&self) -> &GenBounds {
        &self.bounds
    }

    /// Whether profile `v` leaves the band under increments `x`.
    pub fn profile_violated(&self, v: &[f64], x: &[f64]) -> bool {
        self.sens.iter().zip(v).any(|(s, &vl)| {
            row_violated(s, self.grid.v_max - vl, x)
                || row_violated(
                    &s.iter().map(|c| -c).collect::<Vec<_>>(),
                    vl - self.grid.v_min,
                    x,
                )
        })
    }

    pub fn reduced_for(&self, active: &ActiveSet) -> Result<Option<ReducedOpf>, GridError> {
        let Some(extremes) = extremes_over(&self.samples, self.grid.n_nodes, active) else {
            return Ok(None);
        };
        let lp = reduced_lp(&self.grid, &self.sens, &extremes, &self.bounds)?;
        Ok(Some(ReducedOpf { lp, extremes }))
    }
}

impl ScenarioProgram for OpfScenarioProgram {
    type Solution = LpSolution;

    fn n_scenarios(&self) -> usize {
        self.samples.len()
    }

    fn n_decision(&self) -> usize {
        self.grid.n_decision()
    }

    fn solve(&self, active: &ActiveSet) -> Result<Solved<LpSolution>, ProgramError> {
        let lp = match self.reduced_for(active) {
            Ok(Some(r)) => r.lp,
            Ok(None) => base_lp(&self.grid, &self.bounds)
                .map_err(|e| ProgramError::Solver(e.to_string()))?,
            Err(e) => return Err(ProgramError::Solver(e.to_string())),
        };
        crate::scenario_engine::lp_to_program(solve_lp(&lp))
    }

    fn violates(&self, solution: &LpSolution, scenario: usize) -> bool {
        self.profile_violated(&self.samples[scenario], &solution.x)
    }

    fn support_candidates(&self, _solution: &LpSolution, active: &ActiveSet) -> Vec<usize> {
        if !self.narrow_candidates {
            return active.iter().collect();
        }
        match extremes_over(&self.samples, self.grid.n_nodes, active) {
            Some(ex) => {
                let mut v: Vec<usize> = ex.iter().flat_map(|e| [e.argmin, e.argmax]).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => Vec::new(),
        }
    }
}
