//! The random-radius sphere: minimise `cᵀx` subject to `‖x‖₂ ≤ δ⁽ⁱ⁾` for
//! every drawn radius.
//!
//! The optimum is `x* = -δ_min c/‖c‖`, the smallest active radius is the only
//! support constraint, and the violation probability of any solution is the
//! radius CDF at `‖x*‖`. This makes the sphere an exact testbed for the
//! removal loop and the Monte Carlo reproduction of the sample-size table.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal as NormalSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::exec::Execution;
use crate::numfmt::format_sig;
use crate::risk_bounds::{BoundError, RemovalCountBasis, RiskCache};
use crate::rng;
use crate::scenario_engine::{
    removal_loop, ActiveSet, Budget, EngineError, ProgramError, RemovalPolicy, RemovalTrace,
    ScenarioProgram, Solved,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("no active radius left")]
    EmptyActiveSet,
    #[error("cost vector must be nonzero and finite")]
    ZeroCost,
    #[error("radius {index} is not a finite number")]
    InvalidRadius { index: usize },
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Law of the random radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RadiusDistribution {
    /// Uniform on `(0, 1)`.
    Uniform,
    /// Normal. Draws may be negative, in which case the sampled program is
    /// infeasible and the reported binding radius is negative.
    Normal { mean: f64, std_dev: f64 },
    /// Normal conditioned on a positive draw (negative draws are redrawn).
    TruncatedNormal { mean: f64, std_dev: f64 },
}

impl RadiusDistribution {
    pub fn standard_normal_shifted(mean: f64) -> Self {
        RadiusDistribution::Normal { mean, std_dev: 1.0 }
    }

    pub fn label(&self) -> String {
        match self {
            RadiusDistribution::Uniform => "uniform".to_string(),
            RadiusDistribution::Normal { mean, std_dev } => format!("normal({mean};{std_dev})"),
            RadiusDistribution::TruncatedNormal { mean, std_dev } => {
                format!("truncnormal({mean};{std_dev})")
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RadiusDistribution::Uniform => loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    return u;
                }
            },
            RadiusDistribution::Normal { mean, std_dev } => NormalSampler::new(mean, std_dev)
                .expect("valid normal parameters")
                .sample(rng),
            RadiusDistribution::TruncatedNormal { mean, std_dev } => {
                let law = NormalSampler::new(mean, std_dev).expect("valid normal parameters");
                loop {
                    let x = law.sample(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// `P(δ < r)` under the sampling law. This is the exact violation
    /// probability of a solution with norm `r`.
    pub fn cdf(&self, r: f64) -> f64 {
        match *self {
            RadiusDistribution::Uniform => r.clamp(0.0, 1.0),
            RadiusDistribution::Normal { mean, std_dev } => normal(mean, std_dev).cdf(r),
            RadiusDistribution::TruncatedNormal { mean, std_dev } => {
                if r <= 0.0 {
                    return 0.0;
                }
                let n = normal(mean, std_dev);
                let f0 = n.cdf(0.0);
                (n.cdf(r) - f0) / (1.0 - f0)
            }
        }
    }

    /// Largest radius bound `δ_ε` with violation probability `ε`: the
    /// `ε`-quantile of the sampling law.
    pub fn exact_quantile(&self, eps: f64) -> Result<f64, SphereError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(BoundError::InvalidParameter {
                name: "risk",
                reason: format!("must lie in (0, 1), got {eps}"),
            }
            .into());
        }
        Ok(match *self {
            RadiusDistribution::Uniform => eps,
            RadiusDistribution::Normal { mean, std_dev } => normal(mean, std_dev).inverse_cdf(eps),
            RadiusDistribution::TruncatedNormal { mean, std_dev } => {
                let n = normal(mean, std_dev);
                let f0 = n.cdf(0.0);
                n.inverse_cdf(f0 + eps * (1.0 - f0))
            }
        })
    }
}

fn normal(mean: f64, std_dev: f64) -> Normal {
    Normal::new(mean, std_dev).expect("valid normal parameters")
}

/// One drawn sphere program.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereInstance {
    c: Vec<f64>,
    c_norm: f64,
    radii: Vec<f64>,
    /// Offer only the binding radius to leave-one-out support detection.
    /// Sound because every other radius is slack at the optimum.
    pub narrow_candidates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereSolution {
    pub x: Vec<f64>,
    /// `‖x*‖ = δ_min` over the active radii.
    pub radius: f64,
    /// Index of the binding radius (lowest index on ties).
    pub support: usize,
}

impl SphereInstance {
    pub fn new(c: Vec<f64>, radii: Vec<f64>) -> Result<Self, SphereError> {
        let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(c_norm > 0.0 && c_norm.is_finite()) {
            return Err(SphereError::ZeroCost);
        }
        if let Some(index) = radii.iter().position(|r| !r.is_finite()) {
            return Err(SphereError::InvalidRadius { index });
        }
        Ok(Self {
            c,
            c_norm,
            radii,
            narrow_candidates: true,
        })
    }

    /// `d`-dimensional instance with `c = (1, …, 1)` and `n` radii from `dist`.
    pub fn sample<R: Rng + ?Sized>(
        d: usize,
        n: usize,
        dist: &RadiusDistribution,
        rng: &mut R,
    ) -> Self {
        Self::new(vec![1.0; d.max(1)], dist.sample_n(n, rng)).expect("sampled radii are finite")
    }

    pub fn with_full_candidates(mut self) -> Self {
        self.narrow_candidates = false;
        self
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn cost(&self) -> &[f64] {
        &self.c
    }

    fn solve_active(&self, active: &ActiveSet) -> Result<SphereSolution, SphereError> {
        let mut best: Option<(usize, f64)> = None;
        for i in active.iter() {
            let r = self.radii[i];
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((i, r));
            }
        }
        let (support, radius) = best.ok_or(SphereError::EmptyActiveSet)?;
        let x = self.c.iter().map(|ci| -radius * ci / self.c_norm).collect();
        Ok(SphereSolution { x, radius, support })
    }
}

/// Closed-form solution with `removed` excluded, together with the objective
/// `cᵀx* = -‖c‖ δ_min`.
pub fn solve_sphere(
    instance: &SphereInstance,
    removed: &[usize],
) -> Result<(SphereSolution, f64), SphereError> {
    let active = ActiveSet::without_indices(instance.radii.len(), removed);
    let sol = instance.solve_active(&active)?;
    let objective = -instance.c_norm * sol.radius;
    Ok((sol, objective))
}

/// The `j`-th smallest radius (1-based), by selection.
pub fn order_statistic(radii: &[f64], j: usize) -> f64 {
    assert!(j >= 1 && j <= radii.len(), "order statistic out of range");
    let mut v = radii.to_vec();
    let (_, x, _) = v.select_nth_unstable_by(j - 1, f64::total_cmp);
    *x
}

impl ScenarioProgram for SphereInstance {
    type Solution = SphereSolution;

    fn n_scenarios(&self) -> usize {
        self.radii.len()
    }

    fn n_decision(&self) -> usize {
        self.c.len()
    }

    fn solve(&self, active: &ActiveSet) -> Result<Solved<SphereSolution>, ProgramError> {
        match self.solve_active(active) {
            Ok(sol) => Ok(Solved {
                objective: self.c_norm * sol.radius,
                solution: sol,
            }),
            // with no radius left, x can run off to infinity along -c
            Err(_) => Err(ProgramError::Unbounded),
        }
    }

    fn violates(&self, solution: &SphereSolution, scenario: usize) -> bool {
        solution.radius > self.radii[scenario]
    }

    fn support_candidates(&self, solution: &SphereSolution, active: &ActiveSet) -> Vec<usize> {
        if self.narrow_candidates {
            active
                .iter()
                .filter(|&i| self.radii[i] == solution.radius)
                .collect()
        } else {
            active.iter().collect()
        }
    }
}

/// The three solution strategies compared in the sample-size table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    /// All `N` samples enforced.
    Basic,
    /// Remove exactly `r` support constraints.
    Discard,
    /// Removal budget driven by `ε(k, R) ≤ ε`, capped at `r`.
    New,
}

impl Approach {
    pub fn label(self) -> &'static str {
        match self {
            Approach::Basic => "basic",
            Approach::Discard => "discard",
            Approach::New => "new",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachSpec {
    pub approach: Approach,
    pub n_scenarios: usize,
    /// Removal count (`Discard`) or removal cap (`New`); ignored by `Basic`.
    pub removals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOneConfig {
    pub d: usize,
    pub risk: f64,
    pub confidence: f64,
    pub approaches: Vec<ApproachSpec>,
    pub distributions: Vec<RadiusDistribution>,
    pub trials: usize,
    pub seed: u64,
    pub basis: RemovalCountBasis,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachResult {
    pub spec: ApproachSpec,
    pub mean_radius: f64,
    /// Standard error of the mean; infinite for a single trial.
    pub stderr: f64,
    pub trials: usize,
    /// Smallest and largest number of removals over the trials.
    pub removals_used: (u64, u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOneRow {
    pub distribution: RadiusDistribution,
    /// Analytic `δ_ε`.
    pub exact: f64,
    pub results: Vec<ApproachResult>,
}

/// Binding radius and removal count of one trial.
fn run_trial(
    cfg: &TableOneConfig,
    spec: &ApproachSpec,
    dist: &RadiusDistribution,
    risk: Option<&RiskCache>,
    rng: &mut rng::StreamRng,
) -> Result<(f64, u64), SphereError> {
    let inst = SphereInstance::sample(cfg.d, spec.n_scenarios, dist, rng);
    let budget = match spec.approach {
        Approach::Basic => {
            let (sol, _) = solve_sphere(&inst, &[])?;
            return Ok((sol.radius, 0));
        }
        Approach::Discard => Budget::Fixed {
            removals: spec.removals,
        },
        Approach::New => Budget::RiskDriven {
            eps_target: cfg.risk,
        },
    };
    let risk = risk.expect("risk cache for removal approaches");
    let out = removal_loop(&inst, RemovalPolicy::new(budget, risk))?;
    Ok((out.solution.solution.radius, out.trace.removed.len() as u64))
}

/// Monte Carlo mean of the binding radius per distribution and approach.
///
/// Trial `t` of distribution `a` and approach `b` draws from its own stream,
/// so results do not depend on scheduling or on which other cells run.
pub fn reproduce_table_one(cfg: &TableOneConfig) -> Result<Vec<TableOneRow>, SphereError> {
    let mut rows = Vec::with_capacity(cfg.distributions.len());
    for (a, dist) in cfg.distributions.iter().enumerate() {
        let exact = dist.exact_quantile(cfg.risk)?;
        let mut results = Vec::with_capacity(cfg.approaches.len());
        for (b, spec) in cfg.approaches.iter().enumerate() {
            let risk = match spec.approach {
                Approach::Basic => None,
                _ => Some(RiskCache::new(
                    spec.n_scenarios as u64,
                    cfg.confidence,
                    spec.removals,
                    cfg.d as u64,
                    cfg.basis,
                )?),
            };
            let purpose = (a as u64) << 8 | b as u64;
            let trials = cfg.execution.map(cfg.trials, |t| {
                let mut rng = rng::substream(cfg.seed, t as u64, purpose);
                run_trial(cfg, spec, dist, risk.as_ref(), &mut rng)
            });
            let trials: Vec<(f64, u64)> = trials.into_iter().collect::<Result<_, _>>()?;
            results.push(summarise(*spec, &trials));
        }
        rows.push(TableOneRow {
            distribution: *dist,
            exact,
            results,
        });
    }
    Ok(rows)
}

fn summarise(spec: ApproachSpec, trials: &[(f64, u64)]) -> ApproachResult {
    let n = trials.len();
    let mean = trials.iter().map(|t| t.0).sum::<f64>() / n.max(1) as f64;
    let stderr = if n > 1 {
        let var = trials.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    let lo = trials.iter().map(|t| t.1).min().unwrap_or(0);
    let hi = trials.iter().map(|t| t.1).max().unwrap_or(0);
    ApproachResult {
        spec,
        mean_radius: if n == 0 { f64::NAN } else { mean },
        stderr,
        trials: n,
        removals_used: (lo, hi),
    }
}

/// Writes `dist,approach,N,r,mean_radius,stderr,trials,seed`. The analytic
/// column appears as approach `exact` with empty `N` and `r`. For removal
/// approaches `r` is the count actually removed (`lo..hi` if it varied).
pub fn write_table_one_csv<W: Write>(
    rows: &[TableOneRow],
    seed: u64,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "dist,approach,N,r,mean_radius,stderr,trials,seed")?;
    for row in rows {
        let dist = row.distribution.label();
        writeln!(
            out,
            "{dist},exact,,,{},0,0,{seed}",
            format_sig(row.exact, 10)
        )?;
        for res in &row.results {
            let (lo, hi) = res.removals_used;
            let r = if lo == hi {
                lo.to_string()
            } else {
                format!("{lo}..{hi}")
            };
            writeln!(
                out,
                "{dist},{},{},{r},{},{},{},{seed}",
                res.spec.approach.label(),
                res.spec.n_scenarios,
                format_sig(res.mean_radius, 10),
                format_sig(res.stderr, 4),
                res.trials,
            )?;
        }
    }
    Ok(())
}

/// Repeated removal-loop runs on fresh sphere draws, checking the risk
/// certificate against the exact violation probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessConfig {
    pub d: usize,
    pub n_scenarios: usize,
    pub risk: f64,
    pub confidence: f64,
    pub runs: usize,
    pub seed: u64,
    pub distribution: RadiusDistribution,
    pub basis: RemovalCountBasis,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub runs: usize,
    /// Runs with `V(x*) > ε(k_final, |I|)`.
    pub exceedances: usize,
    pub frequency: f64,
    /// Mean certificate `ε(k_final, |I|)`.
    pub mean_bound: f64,
    pub mean_violation: f64,
    pub removals_used: (u64, u64),
}

pub fn soundness_experiment(cfg: &SoundnessConfig) -> Result<SoundnessReport, SphereError> {
    let r_max = cfg.n_scenarios.saturating_sub(cfg.d + 1) as u64;
    let risk = RiskCache::new(
        cfg.n_scenarios as u64,
        cfg.confidence,
        r_max,
        cfg.d as u64,
        cfg.basis,
    )?;
    let runs = cfg
        .execution
        .map(cfg.runs, |t| -> Result<(f64, f64, u64), SphereError> {
            let mut rng = rng::stream(cfg.seed, t as u64);
            let inst = SphereInstance::sample(cfg.d, cfg.n_scenarios, &cfg.distribution, &mut rng);
            let out = removal_loop(
                &inst,
                RemovalPolicy::new(
                    Budget::RiskDriven {
                        eps_target: cfg.risk,
                    },
                    &risk,
                ),
            )?;
            let v = cfg.distribution.cdf(out.solution.solution.radius);
            let bound = out.trace.final_bound.unwrap_or(1.0);
            Ok((v, bound, out.trace.removed.len() as u64))
        });
    let runs: Vec<(f64, f64, u64)> = runs.into_iter().collect::<Result<_, _>>()?;
    let n = runs.len().max(1) as f64;
    let exceedances = runs.iter().filter(|(v, b, _)| v > b).count();
    Ok(SoundnessReport {
        runs: runs.len(),
        exceedances,
        frequency: exceedances as f64 / n,
        mean_bound: runs.iter().map(|r| r.1).sum::<f64>() / n,
        mean_violation: runs.iter().map(|r| r.0).sum::<f64>() / n,
        removals_used: (
            runs.iter().map(|r| r.2).min().unwrap_or(0),
            runs.iter().map(|r| r.2).max().unwrap_or(0),
        ),
    })
}

/// Trace of a removal-loop run on a single instance, for inspection.
pub fn trace_instance(
    inst: &SphereInstance,
    budget: Budget,
    risk: &RiskCache,
) -> Result<RemovalTrace, SphereError> {
    Ok(removal_loop(inst, RemovalPolicy::new(budget, risk))?.trace)
}
