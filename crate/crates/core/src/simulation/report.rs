//! CSV, JSON and plain-text renderings of a study.

use std::fmt::Write as _;
use std::io::Write;

use super::study::{MonteCarloReport, Parameter, ReplicateRecord};
use crate::error::Result;

pub const REPORT_HEADER: [&str; 12] = [
    "scenario",
    "n",
    "estimator",
    "parameter",
    "true_value",
    "mean_estimate",
    "empirical_se",
    "mean_estimated_se",
    "coverage",
    "relative_efficiency",
    "failures",
    "replicates",
];

pub const REPLICATE_HEADER: [&str; 12] = [
    "scenario",
    "n",
    "p",
    "replicate",
    "seed",
    "estimator",
    "parameter",
    "estimate",
    "std_error",
    "ci_low",
    "ci_high",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell, full precision.
pub fn write_report_csv<W: Write>(report: &MonteCarloReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for c in &report.cells {
        w.write_record([
            c.scenario.name().to_string(),
            c.n.to_string(),
            c.estimator.name().to_string(),
            c.parameter.name().to_string(),
            c.true_value.to_string(),
            opt(c.mean_estimate),
            opt(c.empirical_se),
            opt(c.mean_estimated_se),
            opt(c.coverage),
            opt(c.relative_efficiency),
            c.failures.to_string(),
            c.replicates.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(report: &MonteCarloReport, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Long format: one row per replicate x estimator x parameter.
pub fn write_replicates_csv<W: Write>(records: &[ReplicateRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPLICATE_HEADER)?;
    for r in records {
        w.write_record([
            r.scenario.name().to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            r.estimator.name().to_string(),
            r.parameter.name().to_string(),
            opt(r.estimate),
            opt(r.std_error),
            opt(r.ci_low),
            opt(r.ci_high),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cell3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

/// Table grouped by scenario, three decimals, two for relative efficiency.
pub fn format_table(report: &MonteCarloReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>6} {:>9} {:>8} {:>8} {:>7} {:>9} {:>6}",
        "", "N", "True", "Estimate", "Emp.SE", "Est.SE", "95%CP", "Rel.eff", "Fail"
    );
    let mut current = None;
    for c in &report.cells {
        let key = (c.scenario, c.estimator);
        if current != Some(key) {
            let _ = writeln!(out, "{} [{}]", c.scenario.title(), c.estimator);
            current = Some(key);
        }
        let name = match c.parameter {
            Parameter::Beta => "beta",
            Parameter::P => "p",
        };
        let _ = writeln!(
            out,
            "  {:<8} {:>6} {:>6} {:>9} {:>8} {:>8} {:>7} {:>9} {:>6}",
            name,
            c.n,
            format!("{:.1}", c.true_value),
            cell3(c.mean_estimate),
            cell3(c.empirical_se),
            cell3(c.mean_estimated_se),
            cell3(c.coverage),
            c.relative_efficiency.map(|x| format!("{x:.2}")).unwrap_or_default(),
            c.failures
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{run_study, Estimator, ScenarioKind, ScenarioSpec, StudyConfig};

    fn small_study() -> crate::simulation::Study {
        let specs = [ScenarioSpec::new(ScenarioKind::GaussianMixture, 300, 0.5, 0).unwrap()];
        let config = StudyConfig {
            replicates: 3,
            estimators: vec![Estimator::Moment, Estimator::Em],
            ..StudyConfig::default()
        };
        run_study(&specs, &config).unwrap()
    }

    #[test]
    fn report_csv_has_exact_header_and_one_row_per_cell() {
        let study = small_study();
        let mut buf = Vec::new();
        write_report_csv(&study.report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,n,estimator,parameter,true_value,mean_estimate,empirical_se,mean_estimated_se,coverage,relative_efficiency,failures,replicates"
        );
        assert_eq!(lines.count(), study.report.cells.len());
    }

    #[test]
    fn json_mirrors_cells() {
        let study = small_study();
        let mut buf = Vec::new();
        write_report_json(&study.report, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let cells = v["cells"].as_array().unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0]["scenario"], "gaussian_mixture");
        assert_eq!(cells[0]["mean_estimate"].as_f64(), study.report.cells[0].mean_estimate);
    }

    #[test]
    fn replicate_rows() {
        let study = small_study();
        let mut buf = Vec::new();
        write_replicates_csv(&study.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 2 * 2);
        assert!(format_table(&study.report).contains("Gaussian mixture [moment]"));
    }
}
