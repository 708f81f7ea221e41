//! Test integrands, baseline rules and the experiments built on them.

pub mod baseline;
pub mod experiment;
pub mod genz;

pub use crate::quadrature::gauss_legendre_1d;
pub use baseline::{legendre_nodes_per_axis, product_legendre_rule, qmc_rule};
pub use experiment::{
    fit_power_law, run_error_experiment, run_ratio_experiment, ErrorRow, ErrorTable, ExperimentConfig, FitResult,
    RatioConfig, RatioResult, RatioRow,
};
pub use genz::{genz_eval, genz_reference, GenzFunction, GenzKind, IntegrandKind, TestIntegrand};
