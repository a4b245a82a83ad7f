use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::formulation::{realized_voltage, GenBounds, OpfDecision, OpfScenarioProgram};
use super::sampler::{LoadProfile, LoadSampler};
use super::{GridError, GridModel};
use crate::exec::Execution;
use crate::numfmt::format_sig;
use crate::risk_bounds::{min_samples_basic, RemovalCountBasis, RiskCache};
use crate::rng;
use crate::scenario_engine::{
    estimate_violation, find_support_set, removal_loop, ActiveSet, Budget, RemovalPolicy,
    ScenarioProgram, ViolationEstimate,
};

const PURPOSE_SAMPLES: u64 = 1;
const PURPOSE_TRUTH: u64 = 2;
const PURPOSE_FRESH: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpfApproach {
    /// The realised load is known in advance.
    Optimum,
    /// Sample-mean voltage profile, uncertainty ignored.
    Expectation,
    /// All `Ñ` scenarios enforced.
    Standard,
    /// Removal loop with the `ε(k, R)` budget.
    New,
}

impl OpfApproach {
    pub const ALL: [OpfApproach; 4] = [
        OpfApproach::Optimum,
        OpfApproach::Expectation,
        OpfApproach::Standard,
        OpfApproach::New,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OpfApproach::Optimum => "optimum",
            OpfApproach::Expectation => "expectation",
            OpfApproach::Standard => "standard",
            OpfApproach::New => "new",
        }
    }

    fn is_scenario(self) -> bool {
        matches!(self, OpfApproach::Standard | OpfApproach::New)
    }
}

impl fmt::Display for OpfApproach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OpfApproach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpfApproach::ALL
            .into_iter()
            .find(|a| a.label() == s.trim())
            .ok_or_else(|| format!("unknown approach `{s}` (optimum, expectation, standard, new)"))
    }
}

/// Whether scenarios are redrawn every step or drawn once and rescaled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePool {
    #[default]
    PerStep,
    /// The same underlying draws at every step, applied to that step's
    /// expected loads.
    Persistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub risk: f64,
    pub confidence: f64,
    /// `Ñ`; sized by the classic bound at `(risk, confidence, 2g)` when unset.
    pub n_scenarios: Option<usize>,
    /// Cap on the removal budget of the new approach.
    pub r_max: u64,
    /// Fresh samples per step for the empirical violation estimate.
    pub n_fresh: usize,
    pub seed: u64,
    pub approaches: Vec<OpfApproach>,
    pub pool: SamplePool,
    pub basis: RemovalCountBasis,
    pub execution: Execution,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            risk: 0.05,
            confidence: 1e-3,
            n_scenarios: None,
            r_max: 200,
            n_fresh: 10_000,
            seed: 0,
            approaches: OpfApproach::ALL.to_vec(),
            pool: SamplePool::PerStep,
            basis: RemovalCountBasis::Remaining,
            execution: Execution::default(),
        }
    }
}

/// Outcome of one approach at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub time: String,
    pub approach: OpfApproach,
    /// `Σ ΔP + ΔQ`; NaN when the step failed.
    pub objective: f64,
    pub v_max_true: f64,
    pub v_min_true: f64,
    /// Realised voltages left `[v_min, v_max]`.
    pub violated: bool,
    pub decision: Option<OpfDecision>,
    /// Support constraints (scenario approaches).
    pub k: Option<usize>,
    pub removed: Option<usize>,
    /// `ε(k, |I|)` (scenario approaches).
    pub bound: Option<f64>,
    pub fresh: Option<ViolationEstimate>,
    pub error: Option<String>,
}

impl StepRecord {
    fn failed(t: usize, time: String, approach: OpfApproach, error: String) -> Self {
        Self {
            t,
            time,
            approach,
            objective: f64::NAN,
            v_max_true: f64::NAN,
            v_min_true: f64::NAN,
            violated: false,
            decision: None,
            k: None,
            removed: None,
            bound: None,
            fresh: None,
            error: Some(error),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Aggregates of one approach over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachSummary {
    pub approach: OpfApproach,
    pub steps: usize,
    pub failures: usize,
    pub violations: usize,
    pub violation_frequency: f64,
    pub v_max_mean: f64,
    pub v_max_std: f64,
    pub v_min_mean: f64,
    pub v_min_std: f64,
    pub total_generation: f64,
    /// Total generation relative to the standard scenario approach, in %.
    pub generation_pct_of_standard: Option<f64>,
    pub mean_bound: Option<f64>,
    pub mean_fresh_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n_scenarios: usize,
    pub n_decision: usize,
    pub steps: usize,
    pub config: SimulationConfig,
    pub records: Vec<StepRecord>,
    pub summaries: Vec<ApproachSummary>,
}

impl SimulationReport {
    pub fn records_for(&self, approach: OpfApproach) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(move |r| r.approach == approach)
    }

    pub fn summary(&self, approach: OpfApproach) -> Option<&ApproachSummary> {
        self.summaries.iter().find(|s| s.approach == approach)
    }

    /// Summary JSON: aggregates, sizes and per-step failures.
    pub fn summary_json(&self) -> String {
        let failures: Vec<_> = self
            .records
            .iter()
            .filter_map(|r| {
                r.error
                    .as_ref()
                    .map(|e| serde_json::json!({ "t": r.time, "approach": r.approach, "error": e }))
            })
            .collect();
        let v = serde_json::json!({
            "n_scenarios": self.n_scenarios,
            "n_decision": self.n_decision,
            "steps": self.steps,
            "config": self.config,
            "summaries": self.summaries,
            "failures": failures,
        });
        serde_json::to_string_pretty(&v).expect("summary serialises")
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Recomputes per-approach aggregates from step records.
pub fn summarise(records: &[StepRecord], approaches: &[OpfApproach]) -> Vec<ApproachSummary> {
    let total = |a: OpfApproach| -> f64 {
        records
            .iter()
            .filter(|r| r.approach == a && r.ok())
            .map(|r| r.objective)
            .sum()
    };
    let standard = approaches
        .contains(&OpfApproach::Standard)
        .then(|| total(OpfApproach::Standard));
    approaches
        .iter()
        .map(|&a| {
            let rs: Vec<&StepRecord> = records.iter().filter(|r| r.approach == a).collect();
            let ok: Vec<&&StepRecord> = rs.iter().filter(|r| r.ok()).collect();
            let vmax: Vec<f64> = ok.iter().map(|r| r.v_max_true).collect();
            let vmin: Vec<f64> = ok.iter().map(|r| r.v_min_true).collect();
            let (v_max_mean, v_max_std) = mean_std(&vmax);
            let (v_min_mean, v_min_std) = mean_std(&vmin);
            let violations = ok.iter().filter(|r| r.violated).count();
            let gen = total(a);
            let bounds: Vec<f64> = ok.iter().filter_map(|r| r.bound).collect();
            let fresh: Vec<f64> = ok.iter().filter_map(|r| r.fresh.map(|f| f.rate)).collect();
            let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            ApproachSummary {
                approach: a,
                steps: rs.len(),
                failures: rs.len() - ok.len(),
                violations,
                violation_frequency: violations as f64 / ok.len().max(1) as f64,
                v_max_mean,
                v_max_std,
                v_min_mean,
                v_min_std,
                total_generation: gen,
                generation_pct_of_standard: standard.filter(|s| *s > 0.0).map(|s| 100.0 * gen / s),
                mean_bound: avg(&bounds),
                mean_fresh_rate: avg(&fresh),
            }
        })
        .collect()
}

struct StepContext<'a> {
    grid: &'a GridModel,
    profile: &'a LoadProfile,
    sampler: &'a LoadSampler,
    cfg: &'a SimulationConfig,
    risk: &'a RiskCache,
    n_scenarios: usize,
}

fn voltages(
    ctx: &StepContext<'_>,
    t: usize,
    n: usize,
    rng: &mut rng::StreamRng,
) -> Result<Vec<Vec<f64>>, GridError> {
    (0..n)
        .map(|_| ctx.sampler.sample(ctx.profile, t, rng).voltage(ctx.grid))
        .collect()
}

fn run_step(ctx: &StepContext<'_>, t: usize) -> Vec<StepRecord> {
    let time = ctx.profile.time_label(t);
    let prepared = (|| -> Result<_, GridError> {
        let stream_t = match ctx.cfg.pool {
            SamplePool::PerStep => t as u64,
            SamplePool::Persistent => 0,
        };
        let samples = voltages(
            ctx,
            t,
            ctx.n_scenarios,
            &mut rng::substream(ctx.cfg.seed, stream_t, PURPOSE_SAMPLES),
        )?;
        let truth = voltages(
            ctx,
            t,
            1,
            &mut rng::substream(ctx.cfg.seed, t as u64, PURPOSE_TRUTH),
        )?
        .remove(0);
        let fresh = if ctx.cfg.approaches.iter().any(|a| a.is_scenario()) {
            voltages(
                ctx,
                t,
                ctx.cfg.n_fresh,
                &mut rng::substream(ctx.cfg.seed, t as u64, PURPOSE_FRESH),
            )?
        } else {
            Vec::new()
        };
        Ok((samples, truth, fresh))
    })();
    let (samples, truth, fresh) = match prepared {
        Ok(p) => p,
        Err(e) => {
            return ctx
                .cfg
                .approaches
                .iter()
                .map(|&a| StepRecord::failed(t, time.clone(), a, e.to_string()))
                .collect()
        }
    };
    let bounds = GenBounds::from_zero(ctx.grid, ctx.profile.availability[t]);
    ctx.cfg
        .approaches
        .iter()
        .map(|&a| {
            solve_approach(ctx, a, &samples, &truth, &fresh, &bounds)
                .map(|mut r| {
                    r.t = t;
                    r.time = time.clone();
                    r
                })
                .unwrap_or_else(|e| StepRecord::failed(t, time.clone(), a, e.to_string()))
        })
        .collect()
}

fn solve_approach(
    ctx: &StepContext<'_>,
    approach: OpfApproach,
    samples: &[Vec<f64>],
    truth: &[f64],
    fresh: &[Vec<f64>],
    bounds: &GenBounds,
) -> Result<StepRecord, GridError> {
    let single = |v: Vec<f64>| OpfScenarioProgram::new(ctx.grid, vec![v], bounds.clone());
    let (program, x, k, removed, bound) = match approach {
        OpfApproach::Optimum | OpfApproach::Expectation => {
            let v = if approach == OpfApproach::Optimum {
                truth.to_vec()
            } else {
                let n = samples.len() as f64;
                (0..ctx.grid.n_nodes)
                    .map(|l| samples.iter().map(|s| s[l]).sum::<f64>() / n)
                    .collect()
            };
            let prog = single(v)?;
            let sol = solve_all(&prog)?;
            (prog, sol.solution.x, None, None, None)
        }
        OpfApproach::Standard => {
            let prog = OpfScenarioProgram::new(ctx.grid, samples.to_vec(), bounds.clone())?;
            let active = ActiveSet::all(samples.len());
            let sol = solve_all(&prog)?;
            let rep = find_support_set(&prog, &active, &sol, Execution::Sequential)?;
            let bound = ctx.risk.epsilon(rep.k as u64, 0)?;
            (prog, sol.solution.x, Some(rep.k), Some(0), bound)
        }
        OpfApproach::New => {
            let prog = OpfScenarioProgram::new(ctx.grid, samples.to_vec(), bounds.clone())?;
            let out = removal_loop(
                &prog,
                RemovalPolicy::new(
                    Budget::RiskDriven {
                        eps_target: ctx.cfg.risk,
                    },
                    ctx.risk,
                ),
            )?;
            let tr = out.trace;
            (
                prog,
                out.solution.solution.x,
                Some(tr.final_k),
                Some(tr.removed.len()),
                tr.final_bound,
            )
        }
    };
    let realized = realized_voltage(program.sensitivities(), truth, &x);
    let fresh_est = approach
        .is_scenario()
        .then(|| estimate_violation(fresh, |v| program.profile_violated(v, &x)));
    let decision = OpfDecision::from_x(ctx.grid.n_generators(), &x);
    Ok(StepRecord {
        t: 0,
        time: String::new(),
        approach,
        objective: decision.objective,
        v_max_true: realized.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        v_min_true: realized.iter().copied().fold(f64::INFINITY, f64::min),
        violated: program.profile_violated(truth, &x),
        decision: Some(decision),
        k,
        removed,
        bound,
        fresh: fresh_est,
        error: None,
    })
}

fn solve_all(
    prog: &OpfScenarioProgram,
) -> Result<crate::scenario_engine::Solved<crate::linear_solver::LpSolution>, GridError> {
    prog.solve(&ActiveSet::all(prog.n_scenarios()))
        .map_err(|e| {
            GridError::Engine(crate::scenario_engine::EngineError::Solve {
                context: "scenario OPF".into(),
                source: e,
            })
        })
}

/// Runs every configured approach at every step of `profile`.
///
/// Step `t` draws its scenarios, its realised load and its fresh validation
/// samples from separate streams of `(seed, t)`, so steps can run in any
/// order. Solver failures are recorded per step and do not stop the run.
pub fn run_four_approach_simulation(
    grid: &GridModel,
    profile: &LoadProfile,
    sampler: &LoadSampler,
    cfg: &SimulationConfig,
) -> Result<SimulationReport, GridError> {
    grid.validate()?;
    if let LoadSampler::Empirical { rows } = sampler {
        if rows.is_empty()
            || rows
                .iter()
                .any(|r| r.p.len() != grid.n_nodes || r.q.len() != grid.n_nodes)
        {
            return Err(GridError::LoadData(
                "load rows do not match the grid".into(),
            ));
        }
    }
    if profile
        .p
        .iter()
        .chain(&profile.q)
        .any(|v| v.len() != grid.n_nodes)
        || profile.availability.len() != profile.n_steps()
        || profile.q.len() != profile.n_steps()
    {
        return Err(GridError::Dimension(
            "load profile does not match the grid".into(),
        ));
    }
    let d = grid.n_decision();
    let n_scenarios = match cfg.n_scenarios {
        Some(n) => n,
        None => min_samples_basic(cfg.risk, cfg.confidence, d as u64)? as usize,
    };
    if n_scenarios == 0 {
        return Err(GridError::InvalidModel("need at least one scenario".into()));
    }
    let risk = RiskCache::new(
        n_scenarios as u64,
        cfg.confidence,
        cfg.r_max,
        d as u64,
        cfg.basis,
    )?;
    let ctx = StepContext {
        grid,
        profile,
        sampler,
        cfg,
        risk: &risk,
        n_scenarios,
    };
    let records: Vec<StepRecord> = cfg
        .execution
        .map(profile.n_steps(), |t| run_step(&ctx, t))
        .into_iter()
        .flatten()
        .collect();
    Ok(SimulationReport {
        n_scenarios,
        n_decision: d,
        steps: profile.n_steps(),
        summaries: summarise(&records, &cfg.approaches),
        config: cfg.clone(),
        records,
    })
}

/// Per-step CSV: `t,approach,objective,v_max_true,v_min_true,violated`.
pub fn write_report_csv<W: Write>(report: &SimulationReport, mut out: W) -> io::Result<()> {
    writeln!(out, "t,approach,objective,v_max_true,v_min_true,violated")?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.time,
            r.approach,
            format_sig(r.objective, 12),
            format_sig(r.v_max_true, 12),
            format_sig(r.v_min_true, 12),
            r.violated
        )?;
    }
    Ok(())
}
