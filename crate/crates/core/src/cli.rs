//! Library side of the `mommix` command: model fitting on delimited files and
//! simulation studies, with text, JSON and CSV renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::asymptotics::{normal_critical_value, summarize};
use crate::data::{read_table, CsvOptions, Dataset};
use crate::em::{em_fit, EmOptions};
use crate::error::{Error, Result};
use crate::moment;
use crate::numkit::{weighted_least_squares, Matrix};
use crate::simulation::{
    format_table, run_study, write_replicates_csv, write_report_csv, write_report_json, Estimator, ScenarioKind,
    ScenarioSpec, Study, StudyConfig,
};

/// Environment variable capping the number of simulation workers.
pub const THREADS_ENV: &str = "MOMMIX_THREADS";

pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV}='{v}' is not a positive integer"))),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitEstimator {
    Moment,
    Em,
    Ols,
}

impl FromStr for FitEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "moment" => Ok(FitEstimator::Moment),
            "em" => Ok(FitEstimator::Em),
            "ols" => Ok(FitEstimator::Ols),
            other => Err(Error::InvalidInput(format!(
                "unknown estimator '{other}' (expected moment, em or ols)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidInput(format!(
                "unknown format '{other}' (expected text, json or csv)"
            ))),
        }
    }
}

/// Parses a single-character delimiter; `tab` and `\t` mean a tab.
pub fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(Error::InvalidInput(format!(
            "delimiter '{s}' must be a single ASCII character"
        ))),
    }
}

/// One reported quantity. `std_error` is `None` where no standard error exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl EstimateRow {
    fn bare(name: impl Into<String>, estimate: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: None,
            ci_low: None,
            ci_high: None,
        }
    }

    fn with_se(name: impl Into<String>, estimate: f64, se: f64, z: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: Some(se),
            ci_low: Some(estimate - z * se),
            ci_high: Some(estimate + z * se),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub estimator: FitEstimator,
    pub response: String,
    pub covariates: Vec<String>,
    pub n: usize,
    pub m: usize,
    pub dropped_rows: usize,
    pub level: f64,
    pub estimates: Vec<EstimateRow>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn estimate(&self, name: &str) -> Option<&EstimateRow> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Text => Ok(self.to_text()),
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = format!("{}% CI", (self.level * 1e4).round() / 100.0);
        let _ = writeln!(
            out,
            "{:?} fit of {} on {} (n = {}, dropped rows = {})",
            self.estimator,
            self.response,
            self.covariates.join(", "),
            self.n,
            self.dropped_rows
        );
        let _ = writeln!(
            out,
            "{:<24} {:>11} {:>11}   {}",
            "parameter", "estimate", "std.error", pct
        );
        for e in &self.estimates {
            let se = e.std_error.map(sig4).unwrap_or_else(|| "-".into());
            let ci = match (e.ci_low, e.ci_high) {
                (Some(lo), Some(hi)) => format!("({}, {})", sig4(lo), sig4(hi)),
                _ => "-".into(),
            };
            let _ = writeln!(out, "{:<24} {:>11} {:>11}   {}", e.name, sig4(e.estimate), se, ci);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["parameter", "estimate", "std_error", "ci_low", "ci_high"])?;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.estimates {
            w.write_record([
                e.name.clone(),
                e.estimate.to_string(),
                f(e.std_error),
                f(e.ci_low),
                f(e.ci_high),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Four significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (3 - mag).max(0) as usize, x)
    } else {
        format!("{x:.3e}")
    }
}

/// Plain least squares with classical standard errors; needs only n > m + 1 rows.
fn ols_rows(y: &[f64], x: &Matrix, covariates: &[String], z: f64) -> Result<Vec<EstimateRow>> {
    let design = x.with_intercept();
    if y.len() <= design.cols() {
        return Err(Error::InvalidInput(format!(
            "least squares with {} coefficients needs more than {} rows",
            design.cols(),
            design.cols()
        )));
    }
    let ols = weighted_least_squares(&design, y, &vec![1.0; y.len()])?;
    let dof = (y.len() - design.cols()) as f64;
    let sigma2 = ols.residuals.iter().map(|r| r * r).sum::<f64>() / dof;
    let inv = ols.gram_inverse();
    let names = std::iter::once("intercept".to_string()).chain(covariates.iter().map(|c| format!("beta[{c}]")));
    Ok(names
        .enumerate()
        .map(|(j, name)| {
            let se = (sigma2 * inv.get(j, j)).max(0.0).sqrt();
            EstimateRow::with_se(name, ols.coefficients[j], se, z)
        })
        .collect())
}

/// Fits `estimator` to an in-memory dataset; `covariates` names the columns of `data.x()`.
pub fn fit_dataset(
    data: &Dataset,
    response: &str,
    covariates: &[String],
    estimator: FitEstimator,
    level: f64,
    seed: u64,
) -> Result<FitReport> {
    let z = normal_critical_value(level)?;
    let mut warnings = Vec::new();
    let mut estimates = Vec::new();
    match estimator {
        FitEstimator::Moment => {
            let fit = moment::fit(data)?;
            let s = summarize(data, &fit, level)?;
            for (j, name) in covariates.iter().enumerate() {
                estimates.push(EstimateRow::with_se(
                    format!("beta[{name}]"),
                    fit.beta[j],
                    s.se_beta[j],
                    z,
                ));
            }
            estimates.push(EstimateRow::with_se("mu1", fit.mu1, s.se_mu1, z));
            estimates.push(EstimateRow::with_se("p", fit.p, s.se_p, z));
            for (j, name) in covariates.iter().enumerate() {
                estimates.push(EstimateRow::with_se(
                    format!("lambda1[{name}]"),
                    fit.lambda1[j],
                    s.se_lambda1[j],
                    z,
                ));
            }
            estimates.push(EstimateRow::with_se("lambda2", fit.lambda2, s.se_lambda2, z));
            estimates.push(EstimateRow::with_se("lambda3", fit.lambda3, s.se_lambda3, z));
            estimates.push(EstimateRow::bare("alpha_tilde", fit.alpha_tilde));
            if !fit.p_in_range {
                warnings.push(format!("estimated p = {} lies outside (0, 1]", fit.p));
            }
        }
        FitEstimator::Em => {
            let fit = em_fit(
                data,
                &EmOptions {
                    seed,
                    ..EmOptions::default()
                },
            )?;
            for (j, name) in covariates.iter().enumerate() {
                estimates.push(EstimateRow::bare(format!("beta[{name}]"), fit.beta[j]));
            }
            estimates.push(EstimateRow::bare("mu1", fit.mu1));
            estimates.push(EstimateRow::bare("sigma1_sq", fit.sigma1_sq));
            estimates.push(EstimateRow::bare("mu2", fit.mu2));
            estimates.push(EstimateRow::bare("sigma2_sq", fit.sigma2_sq));
            estimates.push(EstimateRow::bare("p", fit.p));
            estimates.push(EstimateRow::bare("loglik", fit.loglik));
            if fit.variance_floored {
                warnings.push("a component variance hit the floor of 1e-8".into());
            }
            if !fit.converged {
                warnings.push(format!(
                    "EM stopped after {} iterations without converging",
                    fit.iterations
                ));
            }
        }
        FitEstimator::Ols => estimates = ols_rows(data.y(), data.x(), covariates, z)?,
    }
    Ok(FitReport {
        estimator,
        response: response.to_string(),
        covariates: covariates.to_vec(),
        n: data.n(),
        m: data.m(),
        dropped_rows: 0,
        level,
        estimates,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub csv_path: PathBuf,
    pub response: String,
    pub covariates: Vec<String>,
    pub level: f64,
    pub estimator: FitEstimator,
    pub delimiter: u8,
    pub seed: u64,
}

/// Reads the file, drops incomplete rows, and fits.
pub fn cmd_fit(options: &FitOptions) -> Result<FitReport> {
    if options.covariates.is_empty() {
        return Err(Error::InvalidInput("at least one covariate is required".into()));
    }
    let mut columns = vec![options.response.clone()];
    columns.extend(options.covariates.iter().cloned());
    let table = read_table(
        &options.csv_path,
        &columns,
        CsvOptions {
            delimiter: options.delimiter,
        },
    )?;
    let mut report = if options.estimator == FitEstimator::Ols {
        let (y, x) = table.to_arrays(&options.response, &options.covariates)?;
        let z = normal_critical_value(options.level)?;
        FitReport {
            estimator: FitEstimator::Ols,
            response: options.response.clone(),
            covariates: options.covariates.clone(),
            n: y.len(),
            m: x.cols(),
            dropped_rows: 0,
            level: options.level,
            estimates: ols_rows(&y, &x, &options.covariates, z)?,
            warnings: Vec::new(),
        }
    } else {
        let data = table.to_dataset(&options.response, &options.covariates)?;
        fit_dataset(
            &data,
            &options.response,
            &options.covariates,
            options.estimator,
            options.level,
            options.seed,
        )?
    };
    report.dropped_rows = table.dropped_rows;
    if table.dropped_rows > 0 {
        report
            .warnings
            .push(format!("dropped {} rows with missing values", table.dropped_rows));
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub scenarios: Vec<ScenarioKind>,
    pub n_list: Vec<usize>,
    pub p: f64,
    pub beta: f64,
    pub replicates: usize,
    pub level: f64,
    pub estimators: Vec<Estimator>,
    pub base_seed: u64,
    /// Directory receiving `report.csv`, `report.json` and `replicates.csv`.
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl SimulateOptions {
    pub fn specs(&self) -> Result<Vec<ScenarioSpec>> {
        let mut specs = Vec::new();
        for &kind in &self.scenarios {
            for &n in &self.n_list {
                specs.push(ScenarioSpec::new(kind, n, self.p, self.base_seed)?.with_beta(self.beta)?);
            }
        }
        Ok(specs)
    }
}

pub fn write_study(study: &Study, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_report_csv(&study.report, fs::File::create(dir.join("report.csv"))?)?;
    write_report_json(&study.report, fs::File::create(dir.join("report.json"))?)?;
    write_replicates_csv(&study.records, fs::File::create(dir.join("replicates.csv"))?)?;
    Ok(())
}

/// Runs the study, writes the report files when `out` is set, and returns the
/// study with its printed table.
pub fn cmd_simulate(options: &SimulateOptions) -> Result<(Study, String)> {
    if options.scenarios.is_empty() || options.n_list.is_empty() {
        return Err(Error::InvalidInput(
            "at least one scenario and sample size are required".into(),
        ));
    }
    let config = StudyConfig {
        replicates: options.replicates,
        estimators: options.estimators.clone(),
        level: options.level,
        base_seed: options.base_seed,
        em: EmOptions::default(),
        threads: options.threads,
    };
    let study = run_study(&options.specs()?, &config)?;
    if let Some(dir) = &options.out {
        write_study(&study, dir)?;
    }
    let table = format_table(&study.report);
    Ok((study, table))
}

/// Comma-separated list parsed item by item.
pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse())
        .collect()
}

/// Scenario list; `all` selects the four built-in scenarios.
pub fn parse_scenarios(s: &str) -> Result<Vec<ScenarioKind>> {
    if s.trim() == "all" {
        return Ok(ScenarioKind::ALL.to_vec());
    }
    parse_list(s)
}
