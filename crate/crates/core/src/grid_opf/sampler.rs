use std::io::Read;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{voltage_from_loads, GridError, GridModel};
use crate::rng;

/// One load realisation in node dimension (p.u., loads negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadScenario {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LoadScenario {
    /// Voltage profile with all generators at zero output.
    pub fn voltage(&self, grid: &GridModel) -> Result<Vec<f64>, GridError> {
        let zero = vec![0.0; grid.n_nodes];
        voltage_from_loads(grid, &self.p, &self.q, &zero, &zero)
    }
}

/// Expected loads and generation availability over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// `p[t][node]`
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// Fraction of active-power capacity available at each step.
    pub availability: Vec<f64>,
    pub start_minute: u32,
    pub step_minutes: u32,
}

impl LoadProfile {
    /// Residential-style loads with an evening peak and a solar-like
    /// availability curve with small seeded noise. Node 0 carries no load.
    pub fn synthetic(
        grid: &GridModel,
        steps: usize,
        start_minute: u32,
        step_minutes: u32,
        seed: u64,
    ) -> Self {
        let mut rng = rng::substream(seed, 0, 0x10AD);
        let n = grid.n_nodes;
        let base: Vec<f64> = (0..n)
            .map(|l| {
                if l == 0 {
                    0.0
                } else {
                    rng.random_range(0.04..0.08)
                }
            })
            .collect();
        let mut p = Vec::with_capacity(steps);
        let mut q = Vec::with_capacity(steps);
        let mut availability = Vec::with_capacity(steps);
        for t in 0..steps {
            let h = (start_minute + t as u32 * step_minutes) as f64 / 60.0;
            let shape = 0.7
                + 0.1 * (-((h - 12.5) / 1.5).powi(2)).exp()
                + 0.4 * (-((h - 19.0) / 1.5).powi(2)).exp();
            p.push(base.iter().map(|b| -b * shape).collect());
            q.push(base.iter().map(|b| -0.3 * b * shape).collect());
            let sun = (std::f64::consts::PI * (h - 6.0) / 14.0).sin().max(0.0);
            let noise: f64 = rng.random_range(-0.05..0.05);
            availability.push((sun * (1.0 + noise)).clamp(0.0, 1.0));
        }
        Self {
            p,
            q,
            availability,
            start_minute,
            step_minutes,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.p.len()
    }

    /// Clock label `HH:MM` of step `t`.
    pub fn time_label(&self, t: usize) -> String {
        let m = self.start_minute + t as u32 * self.step_minutes;
        format!("{:02}:{:02}", m / 60, m % 60)
    }

    pub fn expected(&self, t: usize) -> LoadScenario {
        LoadScenario {
            p: self.p[t].clone(),
            q: self.q[t].clone(),
        }
    }
}

/// Source of load scenarios. Real-time measurement updates would plug in
/// here as another variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LoadSampler {
    /// Mean-one lognormal multiplier per node, `exp(σ(√w z₀ + √(1-w) z_l) - σ²/2)`,
    /// with a factor `z₀` shared by all nodes.
    Lognormal { sigma: f64, shared: f64 },
    /// Bootstrap over measured load rows (used as is, whatever the step).
    Empirical { rows: Vec<LoadScenario> },
    /// Always the expected profile: no uncertainty.
    Deterministic,
}

impl LoadSampler {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        profile: &LoadProfile,
        t: usize,
        rng: &mut R,
    ) -> LoadScenario {
        match self {
            LoadSampler::Deterministic => profile.expected(t),
            LoadSampler::Empirical { rows } => rows[rng.random_range(0..rows.len())].clone(),
            LoadSampler::Lognormal { sigma, shared } => {
                let w = shared.clamp(0.0, 1.0);
                let z0: f64 = StandardNormal.sample(rng);
                let n = profile.p[t].len();
                let mut p = Vec::with_capacity(n);
                let mut q = Vec::with_capacity(n);
                for l in 0..n {
                    let zl: f64 = StandardNormal.sample(rng);
                    let z = w.sqrt() * z0 + (1.0 - w).sqrt() * zl;
                    let m = (sigma * z - 0.5 * sigma * sigma).exp();
                    p.push(profile.p[t][l] * m);
                    q.push(profile.q[t][l] * m);
                }
                LoadScenario { p, q }
            }
        }
    }
}

/// Reads load rows with header `p_1..p_n,q_1..q_n`.
pub fn read_load_csv<R: Read>(reader: R, n_nodes: usize) -> Result<Vec<LoadScenario>, GridError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| GridError::LoadData(e.to_string()))?
        .clone();
    let expected: Vec<String> = (1..=n_nodes)
        .map(|i| format!("p_{i}"))
        .chain((1..=n_nodes).map(|i| format!("q_{i}")))
        .collect();
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(GridError::LoadData(format!(
            "header must be {}",
            expected.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| GridError::LoadData(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GridError::LoadData(format!("row {}: {e}", i + 1)))?;
        if vals.len() != 2 * n_nodes || vals.iter().any(|v| !v.is_finite()) {
            return Err(GridError::LoadData(format!("row {} is malformed", i + 1)));
        }
        rows.push(LoadScenario {
            p: vals[..n_nodes].to_vec(),
            q: vals[n_nodes..].to_vec(),
        });
    }
    if rows.is_empty() {
        return Err(GridError::LoadData("no load rows".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_opf::demo_feeder;

    #[test]
    fn lognormal_has_unit_mean() {
        let grid = demo_feeder();
        let prof = LoadProfile::synthetic(&grid, 3, 600, 15, 1);
        let s = LoadSampler::Lognormal {
            sigma: 0.3,
            shared: 0.5,
        };
        let mut rng = rng::stream(4, 0);
        let m = 20_000;
        let mean: f64 = (0..m)
            .map(|_| s.sample(&prof, 1, &mut rng).p[3])
            .sum::<f64>()
            / m as f64;
        assert!((mean / prof.p[1][3] - 1.0).abs() < 0.02);
    }

    #[test]
    fn csv_round_trip() {
        let text = "p_1,p_2,q_1,q_2\n-0.1,-0.2,-0.01,-0.02\n# comment\n-0.3,-0.4,-0.03,-0.04\n";
        let rows = read_load_csv(text.as_bytes(), 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].q, vec![-0.03, -0.04]);
        assert!(read_load_csv("p_1,q_1\n".as_bytes(), 2).is_err());
        assert!(read_load_csv("p_1,q_1\nx,1\n".as_bytes(), 1).is_err());
    }

    #[test]
    fn time_labels() {
        let grid = demo_feeder();
        let prof = LoadProfile::synthetic(&grid, 41, 600, 15, 1);
        assert_eq!(prof.time_label(0), "10:00");
        assert_eq!(prof.time_label(40), "20:00");
    }
}
