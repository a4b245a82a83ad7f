//! Scenario optimization with support-aware constraint removal.
//!
//! * [`risk_bounds`]: classic, discarding, wait-and-judge and
//!   support-and-removal risk bounds, sample-size inversion, lookup tables.
//! * [`linear_solver`]: dense two-phase simplex with Bland's rule.
//! * [`scenario_engine`]: generic scenario programs, support detection and
//!   the iterative removal loop.
//! * [`sphere_example`]: closed-form random-radius sphere testbed.
//! * [`grid_opf`]: linear voltage model, scenario OPF and the four-approach
//!   simulation.
//! * [`cli`]: the `scenopt` command line.

pub mod cli;
pub mod exec;
pub mod grid_opf;
pub mod linear_solver;
pub mod numfmt;
pub mod presets;
pub mod risk_bounds;
pub mod rng;
pub mod scenario_engine;
pub mod sphere_example;

pub use exec::Execution;
