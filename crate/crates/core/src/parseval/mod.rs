//! Parseval-type convolution sums `Σ_{n≤N} f(n) g(n+h)` against their
//! predicted main terms `N · Σ_r f̂(r) ĝ(r) w_r(h)`, the error envelopes, and
//! empirical fits of the error exponent.
//!
//! Implied constants of the error terms are unknown, so experiments fit one
//! scale per run (and per `h`) and check that it stays put across the grid.

mod constants;
mod convolution;
mod experiment;
mod fit;

pub use constants::{
    corollary1_constant, delta_constant, error_bound_new, error_bound_old, sigma_mean_constant,
    MIN_DELTA_TOL,
};
pub use convolution::{
    brute_force_convolution, brute_force_convolution_chunked, main_term, main_term_ladder,
    MainTerm, DEFAULT_CHUNKS,
};
pub use experiment::{
    finite_series_table, run_experiment, ConvolutionReport, CrossCheck, ExperimentConfig,
    ExperimentRun, GrowthGate, PairSpec, DEFAULT_TAIL_TARGET, GROWTH_TOLERANCE,
    MAX_CUSTOM_COEFFICIENTS, MAX_EXPERIMENT_N,
};
pub use fit::{fit_exponent, fit_power_law, ExponentFit, NEGLIGIBLE_ERROR};
