//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use scenopt::linear_solver::LinearProgram;

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Maximum of the objective over all feasible vertices of a bounded LP
/// (every variable must have finite bounds). `None` if no vertex is feasible.
pub fn vertex_enumeration_max(lp: &LinearProgram) -> Option<f64> {
    let n = lp.n_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.upper[j]));
        e[j] = -1.0;
        planes.push((e, -lp.lower[j]));
    }
    let mut best: Option<f64> = None;
    for subset in combinations(planes.len(), n) {
        let a = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b = subset.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_dense(a, b) else { continue };
        let feasible = planes.iter().all(|(row, rhs)| {
            let lhs: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            lhs <= rhs + 1e-9 * (1.0 + rhs.abs())
        });
        if feasible {
            let v: f64 = lp.objective.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}
