use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{efficiency_bound, generate, ScenarioKind, ScenarioSpec};
use crate::asymptotics::summarize;
use crate::em::{em_fit, EmOptions};
use crate::error::{Error, Result};
use crate::moment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Moment,
    Em,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Moment => "moment",
            Estimator::Em => "em",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "moment" => Ok(Estimator::Moment),
            "em" => Ok(Estimator::Em),
            other => Err(Error::InvalidInput(format!(
                "unknown estimator '{other}' (expected moment or em)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Beta,
    P,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Beta => "beta",
            Parameter::P => "p",
        }
    }
}

/// 64-bit finalizer from SplitMix64.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` of scenario `scenario`.
pub fn replicate_seed(base_seed: u64, scenario: usize, replicate: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ scenario as u64) ^ replicate as u64)
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub replicates: usize,
    pub estimators: Vec<Estimator>,
    pub level: f64,
    pub base_seed: u64,
    /// Settings for the EM comparator; its seed is derived per replicate.
    pub em: EmOptions,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            estimators: vec![Estimator::Moment],
            level: 0.95,
            base_seed: 42,
            em: EmOptions::default(),
            threads: None,
        }
    }
}

/// One estimate from one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub p: f64,
    pub replicate: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub parameter: Parameter,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub error: Option<String>,
}

/// Aggregates for one scenario x n x estimator x parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportCell {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub p: f64,
    pub estimator: Estimator,
    pub parameter: Parameter,
    pub true_value: f64,
    pub mean_estimate: Option<f64>,
    pub empirical_se: Option<f64>,
    pub mean_estimated_se: Option<f64>,
    pub coverage: Option<f64>,
    pub relative_efficiency: Option<f64>,
    pub failures: usize,
    /// Successful replicates entering the aggregates.
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub base_seed: u64,
    pub level: f64,
    pub requested_replicates: usize,
    pub cells: Vec<ReportCell>,
}

impl MonteCarloReport {
    pub fn cell(
        &self,
        scenario: ScenarioKind,
        n: usize,
        estimator: Estimator,
        parameter: Parameter,
    ) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.n == n && c.estimator == estimator && c.parameter == parameter)
    }
}

/// Report plus the per-replicate estimates behind it.
#[derive(Debug, Clone)]
pub struct Study {
    pub report: MonteCarloReport,
    pub records: Vec<ReplicateRecord>,
}

fn replicate_records(spec: &ScenarioSpec, replicate: usize, config: &StudyConfig) -> Vec<ReplicateRecord> {
    let data = generate(spec);
    let mut out = Vec::with_capacity(config.estimators.len() * 2);
    let record = |estimator, parameter| ReplicateRecord {
        scenario: spec.kind,
        n: spec.n,
        p: spec.p,
        replicate,
        seed: spec.seed,
        estimator,
        parameter,
        estimate: None,
        std_error: None,
        ci_low: None,
        ci_high: None,
        error: None,
    };
    for &estimator in &config.estimators {
        let mut beta = record(estimator, Parameter::Beta);
        let mut p = record(estimator, Parameter::P);
        match estimator {
            Estimator::Moment => {
                match moment::fit(&data).and_then(|f| summarize(&data, &f, config.level).map(|s| (f, s))) {
                    Ok((f, s)) => {
                        beta.estimate = Some(f.beta[0]);
                        beta.std_error = Some(s.se_beta[0]);
                        (beta.ci_low, beta.ci_high) = (Some(s.ci_beta[0].0), Some(s.ci_beta[0].1));
                        p.estimate = Some(f.p);
                        p.std_error = Some(s.se_p);
                        (p.ci_low, p.ci_high) = (Some(s.ci_p.0), Some(s.ci_p.1));
                    }
                    Err(e) => {
                        beta.error = Some(e.code().to_string());
                        p.error = Some(e.code().to_string());
                    }
                }
            }
            Estimator::Em => {
                let options = EmOptions {
                    seed: splitmix64(spec.seed ^ 0x0E11),
                    ..config.em
                };
                match em_fit(&data, &options) {
                    Ok(f) => {
                        beta.estimate = Some(f.beta[0]);
                        p.estimate = Some(f.p);
                    }
                    Err(e) => {
                        beta.error = Some(e.code().to_string());
                        p.error = Some(e.code().to_string());
                    }
                }
            }
        }
        out.push(beta);
        out.push(p);
    }
    out
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

fn aggregate(
    spec: &ScenarioSpec,
    estimator: Estimator,
    parameter: Parameter,
    records: &[&ReplicateRecord],
) -> ReportCell {
    let true_value = match parameter {
        Parameter::Beta => spec.beta,
        Parameter::P => spec.p,
    };
    let ok: Vec<&&ReplicateRecord> = records.iter().filter(|r| r.estimate.is_some()).collect();
    let estimates: Vec<f64> = ok.iter().filter_map(|r| r.estimate).collect();
    let (mean_estimated_se, coverage, relative_efficiency) = if estimator == Estimator::Moment && !ok.is_empty() {
        let ses: Vec<f64> = ok.iter().filter_map(|r| r.std_error).collect();
        let covered = ok
            .iter()
            .filter(|r| matches!((r.ci_low, r.ci_high), (Some(lo), Some(hi)) if lo <= true_value && true_value <= hi))
            .count();
        let mean_se = mean(&ses);
        let rel = match parameter {
            Parameter::Beta => efficiency_bound(spec.kind.sigma1_sq(), spec.p, spec.n, 1.0)
                .ok()
                .zip(mean_se)
                .map(|(bound, se)| se / bound.sqrt()),
            Parameter::P => None,
        };
        (mean_se, Some(covered as f64 / ok.len() as f64), rel)
    } else {
        (None, None, None)
    };
    ReportCell {
        scenario: spec.kind,
        n: spec.n,
        p: spec.p,
        estimator,
        parameter,
        true_value,
        mean_estimate: mean(&estimates),
        empirical_se: sample_sd(&estimates),
        mean_estimated_se,
        coverage,
        relative_efficiency,
        failures: records.len() - ok.len(),
        replicates: ok.len(),
    }
}

/// Runs every estimator on `config.replicates` datasets per spec.
///
/// The seed stored in each spec is ignored: replicate `r` of spec `s` is drawn
/// with [`replicate_seed`]`(base_seed, s, r)`. Output does not depend on the
/// number of worker threads.
pub fn run_study(specs: &[ScenarioSpec], config: &StudyConfig) -> Result<Study> {
    if config.replicates < 2 {
        return Err(Error::InvalidInput("a study needs at least 2 replicates".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::InvalidInput("no estimators requested".into()));
    }
    crate::asymptotics::normal_critical_value(config.level)?;
    let specs: Vec<ScenarioSpec> = specs.iter().map(|s| s.validated()).collect::<Result<_>>()?;

    let items: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|s| (0..config.replicates).map(move |r| (s, r)))
        .collect();
    let work = || -> Vec<Vec<ReplicateRecord>> {
        items
            .par_iter()
            .map(|&(s, r)| {
                let spec = specs[s].with_seed(replicate_seed(config.base_seed, s, r));
                replicate_records(&spec, r, config)
            })
            .collect()
    };
    let per_item = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let records: Vec<ReplicateRecord> = per_item.into_iter().flatten().collect();

    let mut cells = Vec::new();
    let per_spec = config.replicates * config.estimators.len() * 2;
    for (s, spec) in specs.iter().enumerate() {
        let block = &records[s * per_spec..(s + 1) * per_spec];
        for &estimator in &config.estimators {
            for parameter in [Parameter::Beta, Parameter::P] {
                let rs: Vec<&ReplicateRecord> = block
                    .iter()
                    .filter(|r| r.estimator == estimator && r.parameter == parameter)
                    .collect();
                cells.push(aggregate(spec, estimator, parameter, &rs));
            }
        }
    }
    Ok(Study {
        report: MonteCarloReport {
            base_seed: config.base_seed,
            level: config.level,
            requested_replicates: config.replicates,
            cells,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ScenarioKind, n: usize) -> ScenarioSpec {
        ScenarioSpec::new(kind, n, 0.5, 0).unwrap()
    }

    #[test]
    fn seeds_differ_across_cells() {
        let a = replicate_seed(1, 0, 0);
        assert_ne!(a, replicate_seed(1, 0, 1));
        assert_ne!(a, replicate_seed(1, 1, 0));
        assert_ne!(a, replicate_seed(2, 0, 0));
        assert_eq!(a, replicate_seed(1, 0, 0));
    }

    #[test]
    fn two_replicates_give_two_point_sd() {
        let config = StudyConfig {
            replicates: 2,
            estimators: vec![Estimator::Moment, Estimator::Em],
            ..StudyConfig::default()
        };
        let study = run_study(&[spec(ScenarioKind::GaussianMixture, 300)], &config).unwrap();
        assert_eq!(study.report.cells.len(), 4);
        for cell in &study.report.cells {
            let est: Vec<f64> = study
                .records
                .iter()
                .filter(|r| r.estimator == cell.estimator && r.parameter == cell.parameter)
                .filter_map(|r| r.estimate)
                .collect();
            assert_eq!(est.len(), 2);
            let sd = (est[0] - est[1]).abs() / 2f64.sqrt();
            assert!((cell.empirical_se.unwrap() - sd).abs() < 1e-12);
            assert_eq!(cell.replicates + cell.failures, 2);
        }
        let em = study
            .report
            .cell(ScenarioKind::GaussianMixture, 300, Estimator::Em, Parameter::Beta)
            .unwrap();
        assert!(em.coverage.is_none() && em.mean_estimated_se.is_none());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let specs = [
            spec(ScenarioKind::ExpGaussianMixture, 200),
            spec(ScenarioKind::ZeroInflatedGaussian, 300),
        ];
        let mut config = StudyConfig {
            replicates: 12,
            estimators: vec![Estimator::Moment, Estimator::Em],
            threads: Some(1),
            ..StudyConfig::default()
        };
        let a = run_study(&specs, &config).unwrap();
        config.threads = Some(4);
        let b = run_study(&specs, &config).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn coverage_is_binomial_proportion() {
        let config = StudyConfig {
            replicates: 25,
            ..StudyConfig::default()
        };
        let study = run_study(&[spec(ScenarioKind::ZeroInflatedExponential, 100)], &config).unwrap();
        for cell in &study.report.cells {
            let k = cell.coverage.unwrap() * cell.replicates as f64;
            assert!((k - k.round()).abs() < 1e-9);
            assert!(cell.empirical_se.unwrap() >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        let s = [spec(ScenarioKind::GaussianMixture, 100)];
        let c = StudyConfig {
            replicates: 1,
            ..StudyConfig::default()
        };
        assert!(run_study(&s, &c).is_err());
        let c = StudyConfig {
            estimators: vec![],
            ..StudyConfig::default()
        };
        assert!(run_study(&s, &c).is_err());
        let c = StudyConfig {
            level: 2.0,
            ..StudyConfig::default()
        };
        assert!(run_study(&s, &c).is_err());
    }
}
