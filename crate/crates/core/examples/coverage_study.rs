//! Monte Carlo study over the four scenarios, printed as a table.
//!
//! cargo run --release --example coverage_study -- [replicates] [n,n,...]

use mommix::simulation::{format_table, run_study, Estimator, ScenarioKind, ScenarioSpec, StudyConfig};

fn main() -> mommix::Result<()> {
    let mut args = std::env::args().skip(1);
    let replicates = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let sizes: Vec<usize> = args
        .next()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_else(|| vec![300, 2000]);

    let mut specs = Vec::new();
    for kind in ScenarioKind::ALL {
        for &n in &sizes {
            specs.push(ScenarioSpec::new(kind, n, 0.5, 0)?);
        }
    }
    let config = StudyConfig {
        replicates,
        estimators: vec![Estimator::Moment],
        ..StudyConfig::default()
    };
    let study = run_study(&specs, &config)?;
    print!("{}", format_table(&study.report));
    Ok(())
}
