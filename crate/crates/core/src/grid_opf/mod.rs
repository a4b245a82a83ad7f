//! Chance-constrained optimal power flow on a radial distribution feeder.
//!
//! Voltage magnitudes follow the linear coupled model
//! `|V| = |V₀| + diag(|V₀|)⁻¹ (Zp P + Zq Q)` with injections positive and
//! loads negative. Generators choose increments `ΔP_G, ΔQ_G` to maximise
//! `Σ ΔP + ΔQ` while every sampled voltage profile stays within
//! `[v_min, v_max]`.

mod feeder;
mod formulation;
mod sampler;
mod simulation;

pub use feeder::{
    demo_feeder, demo_generators, demo_lines, generate_synthetic_feeder, random_radial_feeder,
    Line, DEMO_FEEDER_JSON,
};
pub use formulation::{
    build_reduced_opf, build_scenario_opf, realized_voltage, GenBounds, NodeExtremes, OpfDecision,
    OpfScenarioProgram, ReducedOpf, ScenarioOpf,
};
pub use sampler::{read_load_csv, LoadProfile, LoadSampler, LoadScenario};
pub use simulation::{
    run_four_approach_simulation, summarise, write_report_csv, ApproachSummary, OpfApproach,
    SamplePool, SimulationConfig, SimulationReport, StepRecord,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk_bounds::BoundError;
use crate::scenario_engine::EngineError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid grid model: {0}")]
    InvalidModel(String),
    #[error("feeder is not radial: {0}")]
    NonRadial(String),
    #[error("load data: {0}")]
    LoadData(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub node: usize,
    pub p_cap: f64,
    pub q_cap: f64,
}

/// Feeder model in per-unit. Node 0 is conventionally the slack bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    pub n_nodes: usize,
    pub v0: Vec<f64>,
    pub zp: Vec<Vec<f64>>,
    pub zq: Vec<Vec<f64>>,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    pub generators: Vec<Generator>,
}

fn default_v_min() -> f64 {
    0.95
}

fn default_v_max() -> f64 {
    1.05
}

fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn check_len(what: &str, got: usize, want: usize) -> Result<(), GridError> {
    if got != want {
        return Err(GridError::Dimension(format!(
            "{what} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

impl GridModel {
    pub fn validate(&self) -> Result<(), GridError> {
        let n = self.n_nodes;
        if n == 0 {
            return Err(GridError::InvalidModel("no nodes".into()));
        }
        check_len("v0", self.v0.len(), n)?;
        for (name, m) in [("zp", &self.zp), ("zq", &self.zq)] {
            check_len(name, m.len(), n)?;
            for row in m.iter() {
                check_len(name, row.len(), n)?;
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(GridError::InvalidModel(format!(
                        "{name} has non-finite entries"
                    )));
                }
            }
        }
        if self.v0.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GridError::InvalidModel(
                "v0 entries must be positive".into(),
            ));
        }
        if !(self.v_min < self.v_max) {
            return Err(GridError::InvalidModel(format!(
                "v_min {} must be below v_max {}",
                self.v_min, self.v_max
            )));
        }
        for (j, g) in self.generators.iter().enumerate() {
            if g.node >= n {
                return Err(GridError::InvalidModel(format!(
                    "generator {j} at node {} of {n}",
                    g.node
                )));
            }
            if !(g.p_cap >= 0.0 && g.q_cap >= 0.0) {
                return Err(GridError::InvalidModel(format!(
                    "generator {j} has negative capacity"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        let grid: GridModel =
            serde_json::from_str(text).map_err(|e| GridError::InvalidModel(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serialises")
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    /// Number of decision variables, `2g`.
    pub fn n_decision(&self) -> usize {
        2 * self.generators.len()
    }

    /// Voltage sensitivities to the decision vector `(ΔP₁..ΔP_g, ΔQ₁..ΔQ_g)`:
    /// row `l` holds `∂|V|_l / ∂x`.
    pub fn sensitivities(&self) -> Vec<Vec<f64>> {
        let g = self.generators.len();
        (0..self.n_nodes)
            .map(|l| {
                let mut row = vec![0.0; 2 * g];
                for (j, gen) in self.generators.iter().enumerate() {
                    row[j] = self.zp[l][gen.node] / self.v0[l];
                    row[g + j] = self.zq[l][gen.node] / self.v0[l];
                }
                row
            })
            .collect()
    }

    /// Scatters per-generator values to node dimension.
    pub fn scatter(&self, per_gen: &[f64]) -> Result<Vec<f64>, GridError> {
        check_len("generator vector", per_gen.len(), self.generators.len())?;
        let mut out = vec![0.0; self.n_nodes];
        for (g, v) in self.generators.iter().zip(per_gen) {
            out[g.node] += v;
        }
        Ok(out)
    }
}

/// Linear coupled power flow: `|V| = |V₀| + diag(|V₀|)⁻¹ (Zp(P_G+P_L) + Zq(Q_G+Q_L))`.
/// All vectors are in node dimension.
pub fn voltage_from_loads(
    grid: &GridModel,
    p_load: &[f64],
    q_load: &[f64],
    p_gen: &[f64],
    q_gen: &[f64],
) -> Result<Vec<f64>, GridError> {
    let n = grid.n_nodes;
    for (what, v) in [
        ("P_L", p_load),
        ("Q_L", q_load),
        ("P_G", p_gen),
        ("Q_G", q_gen),
    ] {
        check_len(what, v.len(), n)?;
    }
    let p: Vec<f64> = p_gen.iter().zip(p_load).map(|(a, b)| a + b).collect();
    let q: Vec<f64> = q_gen.iter().zip(q_load).map(|(a, b)| a + b).collect();
    let dp = matvec(&grid.zp, &p);
    let dq = matvec(&grid.zq, &q);
    Ok((0..n)
        .map(|l| grid.v0[l] + (dp[l] + dq[l]) / grid.v0[l])
        .collect())
}

/// Voltage after generator increments: `|V| + diag(|V₀|)⁻¹ (Zp ΔP_G + Zq ΔQ_G)`.
/// `dp`, `dq` are per generator.
pub fn voltage_increment(
    grid: &GridModel,
    v: &[f64],
    dp: &[f64],
    dq: &[f64],
) -> Result<Vec<f64>, GridError> {
    check_len("|V|", v.len(), grid.n_nodes)?;
    let dp = grid.scatter(dp)?;
    let dq = grid.scatter(dq)?;
    let a = matvec(&grid.zp, &dp);
    let b = matvec(&grid.zq, &dq);
    Ok((0..grid.n_nodes)
        .map(|l| v[l] + (a[l] + b[l]) / grid.v0[l])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GridModel {
        GridModel {
            n_nodes: 1,
            v0: vec![1.0],
            zp: vec![vec![0.1]],
            zq: vec![vec![0.0]],
            v_min: 0.95,
            v_max: 1.05,
            generators: vec![Generator {
                node: 0,
                p_cap: 1.0,
                q_cap: 1.0,
            }],
        }
    }

    #[test]
    fn single_node_by_hand() {
        let g = toy();
        let v = voltage_from_loads(&g, &[0.0], &[0.0], &[0.2], &[0.0]).unwrap();
        assert!((v[0] - 1.02).abs() < 1e-15);
        let w = voltage_increment(&g, &v, &[0.1], &[0.0]).unwrap();
        assert!((w[0] - v[0] - 0.01).abs() < 1e-15);
        let z = voltage_from_loads(&g, &[0.0], &[0.0], &[0.0], &[0.0]).unwrap();
        assert_eq!(z, g.v0);
    }

    #[test]
    fn dimension_errors() {
        let g = toy();
        assert!(matches!(
            voltage_from_loads(&g, &[0.0, 1.0], &[0.0], &[0.0], &[0.0]),
            Err(GridError::Dimension(_))
        ));
        assert!(voltage_increment(&g, &[1.0], &[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let g = toy();
        assert_eq!(GridModel::from_json(&g.to_json()).unwrap(), g);
        let mut bad = g.clone();
        bad.v_min = 1.1;
        assert!(bad.validate().is_err());
        let mut bad = g;
        bad.generators[0].node = 3;
        assert!(bad.validate().is_err());
    }
}
