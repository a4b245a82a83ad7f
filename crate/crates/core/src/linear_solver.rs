//! Dense two-phase tableau simplex for small linear programs.
//!
//! Solves `maximize cᵀx  s.t.  Ax <= b,  l <= x <= u` with infinite bounds
//! allowed. Bland's rule is used in both phases, so the pivot path is a
//! deterministic function of the input. Rows carry an opaque `tag` that
//! callers use to map rows back to scenarios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative feasibility tolerance; also the active-set threshold.
pub const FEASIBILITY_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("numeric breakdown: {0}")]
    NumericBreakdown(String),
}

/// One inequality row `coeffs · x <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub tag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    /// Maximized.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Program over `n` unbounded variables with no rows yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, rhs: f64, tag: usize) {
        self.constraints.push(Constraint { coeffs, rhs, tag });
    }

    /// Copy without the rows whose tag is in `excluded`.
    pub fn excluding(&self, excluded: &[usize]) -> Self {
        Self {
            objective: self.objective.clone(),
            constraints: self
                .constraints
                .iter()
                .filter(|c| !excluded.contains(&c.tag))
                .cloned()
                .collect(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{n} objective coefficients but {} lower / {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some((i, c)) = self
            .constraints
            .iter()
            .enumerate()
            .find(|(_, c)| c.coeffs.len() != n)
        {
            return Err(LpError::DimensionMismatch(format!(
                "row {i} has {} coefficients, expected {n}",
                c.coeffs.len()
            )));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self
                .constraints
                .iter()
                .all(|c| c.rhs.is_finite() && c.coeffs.iter().all(|v| v.is_finite()));
        if !finite || self.lower.iter().chain(&self.upper).any(|v| v.is_nan()) {
            return Err(LpError::NonFinite("objective, rows or bounds".into()));
        }
        Ok(())
    }

    /// `b - Ax` per row.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.rhs - dot(&c.coeffs, x))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Sorted, deduplicated tags of rows with residual within tolerance.
    pub active_set: Vec<usize>,
    /// Multipliers `y >= 0` of the rows, in row order.
    pub row_duals: Vec<f64>,
    /// `Aᵀy - c`: positive at a binding lower bound, negative at an upper.
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective_value: match status {
                LpStatus::Unbounded => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            },
            active_set: Vec::new(),
            row_duals: Vec::new(),
            reduced_costs: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Largest violation of the KKT conditions carried by the dual
    /// certificate: dual sign, complementary slackness on rows and bounds,
    /// and stationarity of free directions.
    pub fn certificate_residual(&self, lp: &LinearProgram) -> f64 {
        if !self.is_optimal() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (y, s) in self.row_duals.iter().zip(lp.residuals(&self.x)) {
            worst = worst.max(-y).max((y * s).abs());
        }
        for j in 0..lp.n_vars() {
            let r = self.reduced_costs[j];
            let x = self.x[j];
            let at_lower = if lp.lower[j].is_finite() {
                x - lp.lower[j]
            } else {
                f64::INFINITY
            };
            let at_upper = if lp.upper[j].is_finite() {
                lp.upper[j] - x
            } else {
                f64::INFINITY
            };
            let gap = if r > 0.0 { at_lower } else { at_upper };
            let term = if gap.is_finite() {
                (r * gap).abs()
            } else {
                r.abs()
            };
            worst = worst.max(term);
        }
        worst
    }
}

/// Solves `lp` to a vertex optimum.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.n_vars();
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return Ok(LpSolution::without_point(LpStatus::Infeasible));
    }
    let std = StandardForm::build(lp);
    let mut tab = Tableau::new(&std);
    match tab.run()? {
        Phase::Infeasible => return Ok(LpSolution::without_point(LpStatus::Infeasible)),
        Phase::Unbounded => return Ok(LpSolution::without_point(LpStatus::Unbounded)),
        Phase::Optimal => {}
    }
    let y = tab.primal();
    let x = std.recover_x(&y);
    let residuals = lp.residuals(&x);
    for (i, (r, c)) in residuals.iter().zip(&lp.constraints).enumerate() {
        if *r < -FEASIBILITY_TOL * (1.0 + c.rhs.abs()) {
            return Err(LpError::NumericBreakdown(format!(
                "row {i} violated by {:.3e} at the reported optimum",
                -r
            )));
        }
    }
    for j in 0..n {
        let slack_l = x[j] - lp.lower[j];
        let slack_u = lp.upper[j] - x[j];
        if slack_l < -FEASIBILITY_TOL * (1.0 + lp.lower[j].abs())
            || slack_u < -FEASIBILITY_TOL * (1.0 + lp.upper[j].abs())
        {
            return Err(LpError::NumericBreakdown(format!(
                "bound of x[{j}] violated"
            )));
        }
    }
    let mut active_set: Vec<usize> = residuals
        .iter()
        .zip(&lp.constraints)
        .filter(|(r, c)| **r <= FEASIBILITY_TOL * (1.0 + c.rhs.abs()))
        .map(|(_, c)| c.tag)
        .collect();
    active_set.sort_unstable();
    active_set.dedup();

    let row_duals: Vec<f64> = (0..lp.constraints.len())
        .map(|i| match std.row_of_constraint[i] {
            Some(r) => tab.slack_reduced_cost(r) / std.row_scale[r],
            None => 0.0,
        })
        .collect();
    let reduced_costs = (0..n)
        .map(|j| {
            lp.constraints
                .iter()
                .zip(&row_duals)
                .map(|(c, y)| c.coeffs[j] * y)
                .sum::<f64>()
                - lp.objective[j]
        })
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: dot(&lp.objective, &x),
        x,
        active_set,
        row_duals,
        reduced_costs,
    })
}

/// Solves `lp` with every row tagged by one of `excluded` dropped.
pub fn solve_lp_excluding(lp: &LinearProgram, excluded: &[usize]) -> Result<LpSolution, LpError> {
    solve_lp(&lp.excluding(excluded))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = shift + y[col]`
    Up { col: usize, shift: f64 },
    /// `x = shift - y[col]`
    Down { col: usize, shift: f64 },
    /// `x = y[pos] - y[neg]`
    Free { pos: usize, neg: usize },
}

/// `max c'y  s.t.  A'y <= b', y >= 0`, rows scaled to unit max-norm.
struct StandardForm {
    n_cols: usize,
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    row_scale: Vec<f64>,
    /// Tableau row of each original constraint (None for all-zero rows).
    row_of_constraint: Vec<Option<usize>>,
    vars: Vec<VarMap>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let mut vars = Vec::with_capacity(n);
        let mut n_cols = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let map = if l.is_finite() {
                if u.is_finite() {
                    bound_rows.push((n_cols, u - l));
                }
                VarMap::Up {
                    col: n_cols,
                    shift: l,
                }
            } else if u.is_finite() {
                VarMap::Down {
                    col: n_cols,
                    shift: u,
                }
            } else {
                n_cols += 1;
                VarMap::Free {
                    pos: n_cols - 1,
                    neg: n_cols,
                }
            };
            n_cols += 1;
            vars.push(map);
        }
        let mut cost = vec![0.0; n_cols];
        let transform = |coeffs: &[f64]| -> (Vec<f64>, f64) {
            let mut row = vec![0.0; n_cols];
            let mut shift_total = 0.0;
            for (j, &a) in coeffs.iter().enumerate() {
                match vars[j] {
                    VarMap::Up { col, shift } => {
                        row[col] += a;
                        shift_total += a * shift;
                    }
                    VarMap::Down { col, shift } => {
                        row[col] -= a;
                        shift_total += a * shift;
                    }
                    VarMap::Free { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            (row, shift_total)
        };
        let (c_row, _) = transform(&lp.objective);
        cost.copy_from_slice(&c_row);

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut row_scale = Vec::new();
        let mut row_of_constraint = Vec::with_capacity(lp.constraints.len());
        let mut push = |row: Vec<f64>, b: f64| -> Option<usize> {
            let scale = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                // trivially true or false; infeasibility caught by the rhs
                // check below via a dedicated row
                if b >= -FEASIBILITY_TOL * (1.0 + b.abs()) {
                    return None;
                }
                rows.push(row);
                rhs.push(b);
                row_scale.push(1.0);
                return Some(rows.len() - 1);
            }
            rows.push(row.iter().map(|v| v / scale).collect());
            rhs.push(b / scale);
            row_scale.push(scale);
            Some(rows.len() - 1)
        };
        for c in &lp.constraints {
            let (row, shift) = transform(&c.coeffs);
            row_of_constraint.push(push(row, c.rhs - shift));
        }
        for (col, width) in bound_rows {
            let mut row = vec![0.0; n_cols];
            row[col] = 1.0;
            push(row, width);
        }
        Self {
            n_cols,
            cost,
            rows,
            rhs,
            row_scale,
            row_of_constraint,
            vars,
        }
    }

    fn recover_x(&self, y: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .map(|v| match *v {
                VarMap::Up { col, shift } => shift + y[col],
                VarMap::Down { col, shift } => shift - y[col],
                VarMap::Free { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }
}

enum Phase {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Columns: structural `0..n`, slacks `n..n+m`, artificials after that.
struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    /// `m` rows of `width + 1` entries, rhs last.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs `c_B B⁻¹ A_j - c_j` and objective value last.
    obj: Vec<f64>,
    n_artificial: usize,
    cost: Vec<f64>,
    max_iter: usize,
}

impl Tableau {
    fn new(std: &StandardForm) -> Self {
        let m = std.rows.len();
        let n = std.n_cols;
        let n_artificial = std.rhs.iter().filter(|b| **b < 0.0).count();
        let width = n + m + n_artificial;
        let mut data = vec![0.0; m * (width + 1)];
        let mut basis = vec![0; m];
        let mut art = n + m;
        for i in 0..m {
            let sign = if std.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[i * (width + 1)..(i + 1) * (width + 1)];
            for j in 0..n {
                row[j] = sign * std.rows[i][j];
            }
            row[n + i] = sign;
            row[width] = sign * std.rhs[i];
            if sign < 0.0 {
                row[art] = 1.0;
                basis[i] = art;
                art += 1;
            } else {
                basis[i] = n + i;
            }
        }
        Self {
            m,
            n,
            width,
            data,
            basis,
            obj: vec![0.0; width + 1],
            n_artificial,
            cost: std.cost.clone(),
            max_iter: 50 * (m + width) + 1000,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    fn column_cost(&self, j: usize, phase_one: bool) -> f64 {
        if phase_one {
            if self.is_artificial(j) {
                -1.0
            } else {
                0.0
            }
        } else if j < self.n {
            self.cost[j]
        } else {
            0.0
        }
    }

    fn price(&mut self, phase_one: bool) {
        let costs: Vec<f64> = (0..self.width)
            .map(|j| self.column_cost(j, phase_one))
            .collect();
        let cb: Vec<f64> = self.basis.iter().map(|&b| costs[b]).collect();
        for j in 0..=self.width {
            let mut z = 0.0;
            for i in 0..self.m {
                z += cb[i] * self.at(i, j);
            }
            self.obj[j] = if j < self.width { z - costs[j] } else { z };
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width + 1;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + c] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.data[i * w + j] -= f * self.data[r * w + j];
                }
                self.data[i * w + c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * self.data[r * w + j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Bland iterations until optimal; `Err(())` on an unbounded ray.
    fn iterate(
        &mut self,
        allow_artificial: bool,
        iters: &mut usize,
    ) -> Result<Result<(), ()>, LpError> {
        loop {
            *iters += 1;
            if *iters > self.max_iter {
                return Err(LpError::NumericBreakdown("iteration cap reached".into()));
            }
            let entering = (0..self.width)
                .filter(|&j| allow_artificial || !self.is_artificial(j))
                .find(|&j| self.obj[j] < -COST_TOL);
            let Some(c) = entering else {
                return Ok(Ok(()));
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 * (1.0 + lr.abs())
                                || (ratio <= lr + 1e-12 * (1.0 + lr.abs())
                                    && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(Err(())),
            }
        }
    }

    fn run(&mut self) -> Result<Phase, LpError> {
        let mut iters = 0;
        if self.n_artificial > 0 {
            self.price(true);
            if self.iterate(true, &mut iters)?.is_err() {
                return Err(LpError::NumericBreakdown("phase one unbounded".into()));
            }
            let scale = 1.0 + (0..self.m).map(|i| self.rhs(i).abs()).fold(0.0, f64::max);
            if -self.obj[self.width] > FEASIBILITY_TOL * scale {
                return Ok(Phase::Infeasible);
            }
            // drive zero-level artificials out where a real column allows it;
            // rows where none does are redundant and keep their artificial at 0
            for r in 0..self.m {
                if self.is_artificial(self.basis[r]) {
                    if let Some(c) = (0..self.n + self.m).find(|&j| self.at(r, j).abs() > PIVOT_TOL)
                    {
                        self.pivot(r, c);
                    }
                }
            }
        }
        self.price(false);
        match self.iterate(false, &mut iters)? {
            Ok(()) => Ok(Phase::Optimal),
            Err(()) => Ok(Phase::Unbounded),
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                y[b] = self.rhs(i).max(0.0);
            }
        }
        y
    }

    fn slack_reduced_cost(&self, row: usize) -> f64 {
        self.obj[self.n + row]
    }
}
