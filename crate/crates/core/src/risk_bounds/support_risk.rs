//! Posterior risk given the observed number of support constraints.
//!
//! For `k` support constraints, `R` removed scenarios and `N` scenarios kept,
//! the certified risk `ε(k, R)` is the unique root in `(0, 1)` of
//!
//! ```text
//! g(ε) = β/(N+1) · Σ_{m=k}^{N} C(m, k) (1-ε)^(m-k)  -  C(N+R, R) · C(N, k) · (1-ε)^(N-k)
//! ```
//!
//! `R = 0` gives the wait-and-judge risk `ε(k)`. The root is found by
//! bisection on the log-ratio of the two terms, which has the same sign as
//! `g` and never overflows.

use super::binomial::ln_choose;
use super::{check_unit_open, invalid, BoundError};

/// Absolute bisection tolerance on `ε`.
pub const ROOT_TOLERANCE: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

const RESCALE_AT: f64 = 1e250;
const LN_RESCALE: f64 = 575.646_273_248_511_4; // ln(1e250)

/// `ln Σ_{m=k}^{n} C(m, k) q^(m-k)` via `t_{m+1} = t_m · q · (m+1)/(m+1-k)`.
fn ln_support_series(k: u64, n: u64, q: f64) -> f64 {
    if q == 0.0 || n == k {
        return 0.0;
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut ln_scale = 0.0;
    for m in k..n {
        let ratio = q * (m + 1) as f64 / (m + 1 - k) as f64;
        term *= ratio;
        sum += term;
        if sum > RESCALE_AT {
            term /= RESCALE_AT;
            sum /= RESCALE_AT;
            ln_scale += LN_RESCALE;
        }
        // ratios decrease in m, so the tail is dominated by a geometric series
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < sum * 1e-17 {
            break;
        }
    }
    ln_scale + sum.ln()
}

/// `ln(first term) - ln(second term)` of the risk equation at `eps`.
///
/// Positive exactly where `g(eps) > 0`; `+∞` at `eps = 1`.
pub fn ln_risk_balance(k: u64, removed: u64, n: u64, beta: f64, eps: f64) -> f64 {
    let q = 1.0 - eps;
    let lhs = beta.ln() - ((n + 1) as f64).ln() + ln_support_series(k, n, q);
    let rhs = ln_choose(n + removed, removed)
        + ln_choose(n, k)
        + if eps >= 1.0 {
            f64::NEG_INFINITY
        } else {
            (n - k) as f64 * (-eps).ln_1p()
        };
    lhs - rhs
}

/// Sign of `g(eps)` as -1, 0 or 1.
pub fn risk_balance_sign(k: u64, removed: u64, n: u64, beta: f64, eps: f64) -> i8 {
    let h = ln_risk_balance(k, removed, n, beta, eps);
    if h > 0.0 {
        1
    } else if h < 0.0 {
        -1
    } else {
        0
    }
}

fn check_root_args(k: u64, n: u64, beta: f64) -> Result<(), BoundError> {
    check_unit_open("confidence", beta)?;
    if n <= k {
        return Err(invalid(
            "n_scenarios",
            format!("N={n} must exceed the support count k={k}"),
        ));
    }
    Ok(())
}

/// `ε(k, R)`: risk certified after observing `k` support constraints with
/// `R` scenarios removed and `N` scenarios kept (`N + R` drawn in total).
pub fn eps_discard_support(k: u64, removed: u64, n: u64, beta: f64) -> Result<f64, BoundError> {
    check_root_args(k, n, beta)?;
    let h = |e: f64| ln_risk_balance(k, removed, n, beta, e);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if !(h(lo) < 0.0 && h(hi) > 0.0) {
        return Err(BoundError::Bracketing { k, removed, n });
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= ROOT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ε(k)`: wait-and-judge risk for `k` observed support constraints.
pub fn eps_wait_judge(k: u64, n: u64, beta: f64) -> Result<f64, BoundError> {
    eps_discard_support(k, 0, n, beta)
}

/// Checks the constant dual point `λ_m = β/(N+1)` against every grid point
/// `υ = root + j·step` in `(root, 1)`: the weighted support series must
/// dominate `C(N+R, R) C(N, k) (1-υ)^(N-k)` there.
pub fn dual_feasible_on_grid(
    k: u64,
    removed: u64,
    n: u64,
    beta: f64,
    root: f64,
    step: f64,
) -> bool {
    (1..)
        .map(|j| root + j as f64 * step)
        .take_while(|&v| v < 1.0)
        .all(|v| ln_risk_balance(k, removed, n, beta, v) >= 0.0)
}
