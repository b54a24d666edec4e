//! Closed-form hat-class oracles, worst-case error search, Monte-Carlo
//! concentration checks and rate fitting.

mod hat;
mod stats;
mod trials;

pub use hat::{
    hat_kolmogorov_width, hat_sampling_number, hat_sampling_number_truncated,
    peak_interpolation_design, HatClassSpec,
};
pub use stats::{fit_rate, fit_slope, median, wilson_interval, RateFit};
pub use trials::{
    calibrate_c1, concentration_trials, oliveira_bound, run_trial, run_trials, sample_count,
    trial_seed, worst_case_error, ConcentrationReport, ConcentrationSetup, TrialReport, TrialSetup,
    C1_CANDIDATES, DEFAULT_C1,
};
