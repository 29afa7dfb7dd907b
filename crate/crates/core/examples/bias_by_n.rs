//! Bias of both estimators across sample sizes at p = 0.7.
//!
//! Writes long-format per-replicate estimates for plotting and prints the mean
//! estimate of beta and p per cell with a 95% band for the mean.
//!
//! cargo run --release --example bias_by_n -- [out.csv]

use mommix::simulation::{
    run_study, write_replicates_csv, Estimator, Parameter, ScenarioKind, ScenarioSpec, StudyConfig,
    DEFAULT_SAMPLE_SIZES,
};

fn main() -> mommix::Result<()> {
    let mut specs = Vec::new();
    for kind in ScenarioKind::ALL {
        for n in DEFAULT_SAMPLE_SIZES {
            specs.push(ScenarioSpec::new(kind, n, 0.7, 0)?);
        }
    }
    let config = StudyConfig {
        replicates: 100,
        estimators: vec![Estimator::Moment, Estimator::Em],
        ..StudyConfig::default()
    };
    let study = run_study(&specs, &config)?;

    for c in study.report.cells.iter().filter(|c| c.parameter == Parameter::Beta) {
        let (Some(mean), Some(sd)) = (c.mean_estimate, c.empirical_se) else {
            continue;
        };
        let half = 1.96 * sd / (c.replicates as f64).sqrt();
        println!(
            "{:<26} {:>6} n={:>5}  beta {:.3} [{:.3}, {:.3}]",
            c.scenario.name(),
            c.estimator.name(),
            c.n,
            mean,
            mean - half,
            mean + half
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        write_replicates_csv(&study.records, std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
