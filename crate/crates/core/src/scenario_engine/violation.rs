use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const WILSON_Z95: f64 = 1.959_963_984_540_054;

/// Monte Carlo estimate of the violation probability `V(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationEstimate {
    pub n_fresh: usize,
    pub violations: usize,
    pub rate: f64,
    /// Wilson score interval at 95%.
    pub lower: f64,
    pub upper: f64,
}

impl ViolationEstimate {
    pub fn from_counts(violations: usize, n_fresh: usize) -> Self {
        if n_fresh == 0 {
            return Self {
                n_fresh,
                violations,
                rate: 0.0,
                lower: 0.0,
                upper: 1.0,
            };
        }
        let n = n_fresh as f64;
        let p = violations as f64 / n;
        let z2 = WILSON_Z95 * WILSON_Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = WILSON_Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            n_fresh,
            violations,
            rate: p,
            lower: (center - half).max(0.0).min(p),
            upper: (center + half).min(1.0).max(p),
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Violation frequency of a solution over fresh, independently drawn
/// scenarios.
pub fn estimate_violation<T>(fresh: &[T], violates: impl Fn(&T) -> bool) -> ViolationEstimate {
    let violations = fresh.iter().filter(|s| violates(s)).count();
    ViolationEstimate::from_counts(violations, fresh.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_violations() {
        let e = estimate_violation(&[1.0, 2.0, 3.0], |x: &f64| *x < 0.0);
        assert_eq!(e.rate, 0.0);
        assert_eq!(e.lower, 0.0);
        assert!(e.upper > 0.0);
    }

    #[test]
    fn single_sample() {
        let e = estimate_violation(&[1.0], |_| true);
        assert_eq!(e.rate, 1.0);
        let e = estimate_violation(&[1.0], |_| false);
        assert_eq!(e.rate, 0.0);
    }

    #[test]
    fn known_wilson_interval() {
        // 10 / 100: Wilson 95% interval (0.0552, 0.1744)
        let e = ViolationEstimate::from_counts(10, 100);
        assert!((e.lower - 0.05522).abs() < 1e-4);
        assert!((e.upper - 0.17437).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn interval_contains_rate(v in 0usize..500, extra in 0usize..500) {
            let e = ViolationEstimate::from_counts(v, v + extra + 1);
            prop_assert!((0.0..=1.0).contains(&e.rate));
            prop_assert!(e.lower <= e.rate && e.rate <= e.upper);
        }
    }
}
