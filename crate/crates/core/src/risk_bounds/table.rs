//! Lookup tables of `ε(k, R)` and the removal-budget rule built on them.

use std::io::{self, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::support_risk::eps_discard_support;
use super::{check_unit_open, BoundError};
use crate::exec::Execution;
use crate::numfmt::format_sig;

/// Which count plays the role of `N` in `ε(k, R)` when `Ñ` scenarios were
/// drawn and `R` of them are removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalCountBasis {
    /// `N = Ñ - R`: the scenarios that remain after removal.
    #[default]
    Remaining,
    /// `N = Ñ`: the drawn count, regardless of removals. Slightly less
    /// conservative; kept for comparison runs.
    Drawn,
}

impl RemovalCountBasis {
    /// The `N` argument for candidate removal count `removed`, or `None` when
    /// fewer than `k + 1` scenarios would remain.
    fn kept(self, n_total: u64, removed: u64, k: u64) -> Option<u64> {
        let n = match self {
            RemovalCountBasis::Remaining => n_total.checked_sub(removed)?,
            RemovalCountBasis::Drawn => {
                if removed >= n_total {
                    return None;
                }
                n_total
            }
        };
        (n > k).then_some(n)
    }
}

/// Outcome of [`choose_removals`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovalChoice {
    /// Largest admissible `R` (0 when none is admissible).
    pub removals: u64,
    /// `ε(k, removals)`.
    pub epsilon: f64,
    /// `false` when even `ε(k, 0)` exceeds the target.
    pub admissible: bool,
    /// `true` when the search stopped at `R_max` while still admissible.
    pub saturated: bool,
}

/// Largest `R <= r_max` with `ε(k, R) <= eps_target`, where `ε(k, R)` is
/// evaluated with `N = n_total - R` kept scenarios.
pub fn choose_removals(
    k: u64,
    eps_target: f64,
    n_total: u64,
    beta: f64,
    r_max: u64,
) -> Result<RemovalChoice, BoundError> {
    RiskCache::new(n_total, beta, r_max, k, RemovalCountBasis::Remaining)?.choose(k, eps_target)
}

/// Lazily filled `ε(k, R)` grid for a fixed draw of `Ñ` scenarios.
///
/// Shared by reference across Monte Carlo trials; each cell is computed at
/// most once, by whichever thread asks first.
#[derive(Debug)]
pub struct RiskCache {
    n_total: u64,
    beta: f64,
    r_max: u64,
    k_max: u64,
    basis: RemovalCountBasis,
    cells: Vec<OnceLock<Result<f64, BoundError>>>,
}

impl RiskCache {
    pub fn new(
        n_total: u64,
        beta: f64,
        r_max: u64,
        k_max: u64,
        basis: RemovalCountBasis,
    ) -> Result<Self, BoundError> {
        check_unit_open("confidence", beta)?;
        let len = ((k_max + 1) * (r_max + 2)) as usize;
        Ok(Self {
            n_total,
            beta,
            r_max,
            k_max,
            basis,
            cells: (0..len).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn confidence(&self) -> f64 {
        self.beta
    }

    pub fn r_max(&self) -> u64 {
        self.r_max
    }

    pub fn basis(&self) -> RemovalCountBasis {
        self.basis
    }

    /// `ε(k, R)` for this draw, or `None` if too few scenarios would remain.
    pub fn epsilon(&self, k: u64, removed: u64) -> Result<Option<f64>, BoundError> {
        let Some(n) = self.basis.kept(self.n_total, removed, k) else {
            return Ok(None);
        };
        if k > self.k_max || removed > self.r_max + 1 {
            return eps_discard_support(k, removed, n, self.beta).map(Some);
        }
        let idx = (k * (self.r_max + 2) + removed) as usize;
        self.cells[idx]
            .get_or_init(|| eps_discard_support(k, removed, n, self.beta))
            .clone()
            .map(Some)
    }

    /// Removal budget for `k` observed support constraints.
    pub fn choose(&self, k: u64, eps_target: f64) -> Result<RemovalChoice, BoundError> {
        check_unit_open("risk", eps_target)?;
        let Some(eps0) = self.epsilon(k, 0)? else {
            return Ok(RemovalChoice {
                removals: 0,
                epsilon: 1.0,
                admissible: false,
                saturated: false,
            });
        };
        if eps0 > eps_target {
            return Ok(RemovalChoice {
                removals: 0,
                epsilon: eps0,
                admissible: false,
                saturated: false,
            });
        }
        let mut best = (0, eps0);
        for r in 1..=self.r_max {
            match self.epsilon(k, r)? {
                Some(e) if e <= eps_target => best = (r, e),
                _ => break,
            }
        }
        Ok(RemovalChoice {
            removals: best.0,
            epsilon: best.1,
            admissible: true,
            saturated: best.0 == self.r_max,
        })
    }
}

/// Precomputed `ε(k, R)` for `k ∈ 0..=d`, `R ∈ 0..=R_max` at fixed `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub n_scenarios: u64,
    pub confidence: f64,
    pub n_decision: u64,
    pub r_max: u64,
    /// `entries[k][R]`.
    pub entries: Vec<Vec<f64>>,
}

impl RiskTable {
    pub fn build(n: u64, d: u64, beta: f64, r_max: u64) -> Result<Self, BoundError> {
        Self::build_with(n, d, beta, r_max, Execution::default())
    }

    pub fn build_with(
        n: u64,
        d: u64,
        beta: f64,
        r_max: u64,
        exec: Execution,
    ) -> Result<Self, BoundError> {
        check_unit_open("confidence", beta)?;
        if d < 1 {
            return Err(super::invalid("n_decision", "must be at least 1"));
        }
        let width = (r_max + 1) as usize;
        let cells = exec.map(((d + 1) as usize) * width, |i| {
            let (k, r) = ((i / width) as u64, (i % width) as u64);
            eps_discard_support(k, r, n, beta).map_err(|e| BoundError::TableEntry {
                k,
                removed: r,
                source: Box::new(e),
            })
        });
        let flat = cells.into_iter().collect::<Result<Vec<_>, _>>()?;
        let entries = flat.chunks(width).map(<[f64]>::to_vec).collect();
        Ok(Self {
            n_scenarios: n,
            confidence: beta,
            n_decision: d,
            r_max,
            entries,
        })
    }

    pub fn get(&self, k: u64, removed: u64) -> Option<f64> {
        self.entries.get(k as usize)?.get(removed as usize).copied()
    }

    /// Nondecreasing along both `k` and `R`, all entries in `(0, 1)`.
    pub fn is_monotone(&self) -> bool {
        let in_range = self.entries.iter().flatten().all(|&e| e > 0.0 && e < 1.0);
        let along_r = self
            .entries
            .iter()
            .all(|row| row.windows(2).all(|w| w[0] <= w[1]));
        let along_k = self
            .entries
            .windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b));
        in_range && along_r && along_k
    }

    /// `k,R,epsilon` rows, `ε` with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,R,epsilon")?;
        for (k, row) in self.entries.iter().enumerate() {
            for (r, e) in row.iter().enumerate() {
                writeln!(out, "{k},{r},{}", format_sig(*e, 12))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::eps_wait_judge;
    use super::*;

    #[test]
    fn no_admissible_removal() {
        let c = choose_removals(1, 0.001, 923, 1e-3, 20).unwrap();
        assert_eq!(c.removals, 0);
        assert!(!c.admissible);
    }

    #[test]
    fn budget_for_sphere_presets() {
        let c = choose_removals(1, 0.05, 923, 1e-3, 50).unwrap();
        assert_eq!(c.removals, 5);
        assert!(c.admissible && !c.saturated);
        let c = choose_removals(1, 0.05, 2230, 1e-3, 50).unwrap();
        assert_eq!(c.removals, 16);
        let drawn = RiskCache::new(2230, 1e-3, 50, 1, RemovalCountBasis::Drawn).unwrap();
        assert_eq!(drawn.choose(1, 0.05).unwrap().removals, 17);
    }

    #[test]
    fn choice_brackets_target() {
        let cache = RiskCache::new(500, 1e-2, 40, 4, RemovalCountBasis::Remaining).unwrap();
        for k in 0..=4 {
            let c = cache.choose(k, 0.08).unwrap();
            if c.admissible && !c.saturated {
                let next = cache.epsilon(k, c.removals + 1).unwrap().unwrap();
                assert!(c.epsilon <= 0.08 && 0.08 < next);
            }
        }
    }

    #[test]
    fn saturation_reported() {
        let c = choose_removals(0, 0.5, 100, 0.1, 3).unwrap();
        assert_eq!(c.removals, 3);
        assert!(c.saturated);
    }

    #[test]
    fn small_table_properties() {
        let t = RiskTable::build(200, 5, 1e-2, 6).unwrap();
        assert!(t.is_monotone());
        for k in 0..=5 {
            let wj = eps_wait_judge(k, 200, 1e-2).unwrap();
            assert!((t.get(k, 0).unwrap() - wj).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,R,epsilon\n0,0,"));
        assert_eq!(text.lines().count(), 1 + 6 * 7);
    }

    #[test]
    fn sequential_and_parallel_tables_match() {
        let a = RiskTable::build_with(150, 4, 0.05, 5, Execution::Sequential).unwrap();
        let b = RiskTable::build_with(150, 4, 0.05, 5, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
