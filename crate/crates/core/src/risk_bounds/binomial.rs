//! Binomial lower tails and their inversion in the sample count.

use super::{check_unit_open, invalid, BoundError};

/// `ln C(n, k)`, accumulated as a sum of logarithms of exact ratios.
///
/// Uses `min(k, n-k)` factors, which is both exact to a few ulps per term and
/// cheap for the small `k` (or small `n - k`) that occur here.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let base = (n - k) as f64;
    (1..=k).map(|j| ((base + j as f64) / j as f64).ln()).sum()
}

/// `ln Σ exp(xs)` without overflow.
pub(crate) fn ln_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

/// `ln P(Bin(n, eps) <= upper)` for `upper < n`.
fn ln_binomial_lower_tail(n: u64, upper: u64, eps: f64) -> f64 {
    debug_assert!(upper < n);
    let ln_eps = eps.ln();
    let ln_q = (-eps).ln_1p();
    let mut ln_coef = 0.0;
    let mut terms = Vec::with_capacity(upper as usize + 1);
    for i in 0..=upper {
        if i > 0 {
            ln_coef += ((n - i + 1) as f64 / i as f64).ln();
        }
        terms.push(ln_coef + i as f64 * ln_eps + (n - i) as f64 * ln_q);
    }
    ln_sum_exp(&terms)
}

fn check_counts(n: u64, d: u64) -> Result<(), BoundError> {
    if n < 1 {
        return Err(invalid("n_scenarios", "must be at least 1"));
    }
    if d < 1 {
        return Err(invalid("n_decision", "must be at least 1"));
    }
    Ok(())
}

/// `ln` of [`beta_basic`].
pub fn ln_beta_basic(n: u64, d: u64, eps: f64) -> Result<f64, BoundError> {
    check_counts(n, d)?;
    check_unit_open("risk", eps)?;
    if d - 1 >= n {
        return Ok(0.0);
    }
    Ok(ln_binomial_lower_tail(n, d - 1, eps))
}

/// Confidence parameter of the classic scenario bound:
/// `Σ_{i<d} C(N, i) ε^i (1-ε)^(N-i)`, i.e. `P(Bin(N, ε) <= d-1)`.
///
/// Exactly `1.0` once `d - 1 >= N`.
pub fn beta_basic(n: u64, d: u64, eps: f64) -> Result<f64, BoundError> {
    ln_beta_basic(n, d, eps).map(f64::exp)
}

/// `ln` of [`beta_discard`].
pub fn ln_beta_discard(n: u64, removed: u64, d: u64, eps: f64) -> Result<f64, BoundError> {
    check_counts(n, d)?;
    check_unit_open("risk", eps)?;
    let upper = removed + d - 1;
    if upper >= n {
        return Err(invalid(
            "n_removed",
            format!("R + d - 1 = {upper} must be below N = {n}"),
        ));
    }
    Ok(ln_choose(upper, removed) + ln_binomial_lower_tail(n, upper, eps))
}

/// Confidence parameter of the sampling-and-discarding bound:
/// `C(R+d-1, R) Σ_{i<=R+d-1} C(N, i) ε^i (1-ε)^(N-i)`.
///
/// The value may exceed 1; it is returned unclamped.
pub fn beta_discard(n: u64, removed: u64, d: u64, eps: f64) -> Result<f64, BoundError> {
    ln_beta_discard(n, removed, d, eps).map(f64::exp)
}

/// Smallest `n >= lo` with `ln_beta(n) <= target`, for `ln_beta`
/// nonincreasing in `n`. `lo` itself may fail the test.
fn invert_decreasing(
    lo: u64,
    target_ln: f64,
    ln_beta: impl Fn(u64) -> Result<f64, BoundError>,
) -> Result<u64, BoundError> {
    if ln_beta(lo)? <= target_ln {
        return Ok(lo);
    }
    // exponential bracketing: `fail` always fails, `pass` always passes
    let mut fail = lo;
    let mut step = lo.max(1);
    let mut pass = loop {
        let cand = fail
            .checked_add(step)
            .ok_or_else(|| invalid("confidence", "sample size search overflowed"))?;
        if ln_beta(cand)? <= target_ln {
            break cand;
        }
        fail = cand;
        step = step.saturating_mul(2);
    };
    while pass - fail > 1 {
        let mid = fail + (pass - fail) / 2;
        if ln_beta(mid)? <= target_ln {
            pass = mid;
        } else {
            fail = mid;
        }
    }
    Ok(pass)
}

/// Smallest `N` with `beta_basic(N, d, ε) <= β`.
pub fn min_samples_basic(eps: f64, beta: f64, d: u64) -> Result<u64, BoundError> {
    check_unit_open("risk", eps)?;
    check_unit_open("confidence", beta)?;
    check_counts(1, d)?;
    invert_decreasing(1, beta.ln(), |n| ln_beta_basic(n, d, eps))
}

/// Smallest `N` with `beta_discard(N, R, d, ε) <= β`.
///
/// The binomial tail is nonincreasing in `N` and the prefactor does not depend
/// on `N`, so bisection over `N > R + d - 1` is exact.
pub fn min_samples_discard(eps: f64, beta: f64, d: u64, removed: u64) -> Result<u64, BoundError> {
    check_unit_open("risk", eps)?;
    check_unit_open("confidence", beta)?;
    check_counts(1, d)?;
    invert_decreasing(removed + d, beta.ln(), |n| {
        ln_beta_discard(n, removed, d, eps)
    })
}
