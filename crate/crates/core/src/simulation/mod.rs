//! Data-generating scenarios and the Monte Carlo harness.

mod report;
mod scenario;
mod study;

pub use report::{format_table, write_replicates_csv, write_report_csv, write_report_json, REPORT_HEADER};
pub use scenario::{efficiency_bound, generate, LatentSample, ScenarioKind, ScenarioSpec};
pub use study::{
    replicate_seed, run_study, splitmix64, Estimator, MonteCarloReport, Parameter, ReplicateRecord, ReportCell, Study,
    StudyConfig,
};

/// Sample sizes used by default for simulation sweeps.
pub const DEFAULT_SAMPLE_SIZES: [usize; 7] = [300, 500, 800, 1000, 1500, 2000, 3000];
