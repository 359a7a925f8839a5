//! Synthetic data, Monte Carlo size/power studies and a permutation oracle.

mod model;
mod permutation;
mod study;

pub use model::{
    basis_functions, component_weights, gen_sample, mean_functions, benchmark_mean, psi, replication_rng, ContrastChoice, DataModel,
    Innovation, MeanPreset, SampleSizes, Scenario, SimConfig, BENCH_P,
};
pub use permutation::{permutation_pvalue, Statistic};
pub use study::{are_metric, are_rows, size_power_study, size_power_study_with, write_results_csv, StudyPlan, StudyResult, CSV_HEADER};
