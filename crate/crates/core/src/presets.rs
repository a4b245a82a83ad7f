//! Every published parameter the toolkit reproduces, in one place.

use crate::exec::Execution;
use crate::grid_opf::LoadSampler;
use crate::risk_bounds::RemovalCountBasis;
use crate::sphere_example::{Approach, ApproachSpec, RadiusDistribution, TableOneConfig};

/// Target risk `ε` of the sample-size table and the OPF study.
pub const RISK: f64 = 0.05;
/// Confidence parameter `β` of the sample-size table and the OPF study.
pub const CONFIDENCE: f64 = 1e-3;

/// Risk curves: `N = 1000`, `d = 30`, `β = 10⁻³`.
pub const FIGURE1_N: u64 = 1000;
pub const FIGURE1_D: u64 = 30;
pub const FIGURE1_BETA: f64 = 1e-3;
pub const FIGURE1_R_MAX: u64 = 50;

/// Monte Carlo repetitions per cell of the sample-size table.
pub const TABLE1_TRIALS: usize = 10_000;
pub const NORMAL_MEAN: f64 = 3.0;
pub const NORMAL_STD: f64 = 1.0;

/// Sample sizes and removal counts as printed for one half of the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperSizes {
    pub d: usize,
    pub basic_n: usize,
    pub discard_n: usize,
    pub discard_r: u64,
    pub new_n: usize,
    pub new_r: u64,
    /// Printed means `[basic, discard, new]` for the uniform radius.
    pub uniform_means: [f64; 3],
    /// Printed means `[basic, discard, new]` for the normal radius.
    pub normal_means: [f64; 3],
}

pub const TABLE1A: PaperSizes = PaperSizes {
    d: 30,
    basic_n: 923,
    discard_n: 1535,
    discard_r: 5,
    new_n: 923,
    new_r: 5,
    uniform_means: [0.001, 0.004, 0.007],
    normal_means: [-0.21, 0.31, 0.49],
};

pub const TABLE1B: PaperSizes = PaperSizes {
    d: 100,
    basic_n: 2230,
    discard_n: 4920,
    discard_r: 17,
    new_n: 2230,
    new_r: 17,
    uniform_means: [0.0004, 0.004, 0.008],
    normal_means: [-0.46, 0.31, 0.58],
};

/// Printed exact values `δ_ε`: uniform, normal.
pub const TABLE1_EXACT: [f64; 2] = [0.05, 1.35];

/// Uniform and `N(3, 1)` radii. Normal draws may be negative (an infeasible
/// sample); `truncated` redraws them instead.
pub fn table1_distributions(truncated: bool) -> Vec<RadiusDistribution> {
    let normal = if truncated {
        RadiusDistribution::TruncatedNormal {
            mean: NORMAL_MEAN,
            std_dev: NORMAL_STD,
        }
    } else {
        RadiusDistribution::Normal {
            mean: NORMAL_MEAN,
            std_dev: NORMAL_STD,
        }
    };
    vec![RadiusDistribution::Uniform, normal]
}

impl PaperSizes {
    pub fn approaches(&self) -> Vec<ApproachSpec> {
        vec![
            ApproachSpec {
                approach: Approach::Basic,
                n_scenarios: self.basic_n,
                removals: 0,
            },
            ApproachSpec {
                approach: Approach::Discard,
                n_scenarios: self.discard_n,
                removals: self.discard_r,
            },
            ApproachSpec {
                approach: Approach::New,
                n_scenarios: self.new_n,
                removals: self.new_r,
            },
        ]
    }

    pub fn table_config(
        &self,
        trials: usize,
        seed: u64,
        basis: RemovalCountBasis,
        execution: Execution,
    ) -> TableOneConfig {
        TableOneConfig {
            d: self.d,
            risk: RISK,
            confidence: CONFIDENCE,
            approaches: self.approaches(),
            distributions: table1_distributions(false),
            trials,
            seed,
            basis,
            execution,
        }
    }
}

/// OPF horizon: 10:00 to 20:00 every 15 minutes.
pub const OPF_STEPS: usize = 41;
pub const OPF_START_MINUTE: u32 = 10 * 60;
pub const OPF_STEP_MINUTES: u32 = 15;
/// Fresh samples per step for the empirical violation estimate.
pub const OPF_FRESH_SAMPLES: usize = 10_000;

/// Default load uncertainty of the synthetic OPF study.
pub fn opf_default_sampler() -> LoadSampler {
    LoadSampler::Lognormal {
        sigma: 0.25,
        shared: 0.5,
    }
}
