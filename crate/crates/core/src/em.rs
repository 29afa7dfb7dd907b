//! Two-component Gaussian mixture of regressions fitted by EM.
//!
//! Component 1 is `N(mu1 + beta'x, sigma1^2)` and carries every covariate;
//! component 2 is `N(mu2, sigma2^2)` and ignores them, so labels cannot switch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{dot, weighted_least_squares, Matrix};

pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Minimum responsibility mass each component must keep.
const MIN_COMPONENT_MASS: f64 = 2.0;

/// Probability of flipping an observation's initial label on restarts after the first.
const RESTART_FLIP_PROB: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative log-likelihood change that counts as converged.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iter: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianMixFit {
    pub beta: Vec<f64>,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub mu2: f64,
    pub sigma2_sq: f64,
    pub p: f64,
    pub loglik: f64,
    /// Posterior probability of component 1 used in the final M-step.
    #[serde(skip)]
    pub responsibilities: Vec<f64>,
    /// Log-likelihood after every M-step of the selected run.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub variance_floored: bool,
    /// Index of the restart that produced this fit.
    pub restart: usize,
}

#[derive(Debug, Clone)]
struct Params {
    beta: Vec<f64>,
    mu1: f64,
    sigma1_sq: f64,
    mu2: f64,
    sigma2_sq: f64,
    p: f64,
    floored: bool,
}

fn log_normal_density(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

fn m_step(design: &Matrix, y: &[f64], resp: &[f64]) -> Result<Params> {
    let n = y.len();
    let mass1: f64 = resp.iter().sum();
    let mass2 = n as f64 - mass1;
    if mass1 < MIN_COMPONENT_MASS {
        return Err(Error::DegenerateComponent {
            component: 1,
            mass: mass1,
        });
    }
    if mass2 < MIN_COMPONENT_MASS {
        return Err(Error::DegenerateComponent {
            component: 2,
            mass: mass2,
        });
    }

    let wls = weighted_least_squares(design, y, resp)?;
    let ss1: f64 = resp.iter().zip(&wls.residuals).map(|(r, e)| r * e * e).sum();
    let mu2 = y.iter().zip(resp).map(|(v, r)| (1.0 - r) * v).sum::<f64>() / mass2;
    let ss2: f64 = y.iter().zip(resp).map(|(v, r)| (1.0 - r) * (v - mu2).powi(2)).sum();

    let raw1 = ss1 / mass1;
    let raw2 = ss2 / mass2;
    Ok(Params {
        mu1: wls.coefficients[0],
        beta: wls.coefficients[1..].to_vec(),
        sigma1_sq: raw1.max(VARIANCE_FLOOR),
        mu2,
        sigma2_sq: raw2.max(VARIANCE_FLOOR),
        p: mass1 / n as f64,
        floored: raw1 < VARIANCE_FLOOR || raw2 < VARIANCE_FLOOR,
    })
}

/// Log-likelihood and posterior probabilities of component 1.
fn e_step(data: &Dataset, params: &Params, resp: &mut [f64]) -> f64 {
    let (lp1, lp2) = (params.p.ln(), (1.0 - params.p).ln());
    let mut loglik = 0.0;
    for (i, r) in resp.iter_mut().enumerate() {
        let y = data.y()[i];
        let mean1 = params.mu1 + dot(&params.beta, data.x().row(i));
        let l1 = lp1 + log_normal_density(y, mean1, params.sigma1_sq);
        let l2 = lp2 + log_normal_density(y, params.mu2, params.sigma2_sq);
        let top = l1.max(l2);
        let lse = top + ((l1 - top).exp() + (l2 - top).exp()).ln();
        loglik += lse;
        *r = (l1 - lse).exp();
    }
    loglik
}

fn run_once(
    data: &Dataset,
    design: &Matrix,
    init: Vec<f64>,
    options: &EmOptions,
    restart: usize,
) -> Result<GaussianMixFit> {
    let mut resp = init;
    let mut scratch = vec![0.0; resp.len()];
    let mut trace: Vec<f64> = Vec::new();
    let mut floored = false;
    let mut converged = false;
    let mut params = m_step(design, data.y(), &resp)?;
    let mut iterations = 0;

    loop {
        floored |= params.floored;
        let loglik = e_step(data, &params, &mut scratch);
        if let Some(&prev) = trace.last() {
            let change: f64 = loglik - prev;
            if change.abs() <= options.tol * prev.abs().max(1.0) {
                converged = true;
            }
        }
        trace.push(loglik);
        if converged || iterations >= options.max_iter || !loglik.is_finite() {
            break;
        }
        let next = m_step(design, data.y(), &scratch)?;
        std::mem::swap(&mut resp, &mut scratch);
        params = next;
        iterations += 1;
    }

    Ok(GaussianMixFit {
        beta: params.beta,
        mu1: params.mu1,
        sigma1_sq: params.sigma1_sq,
        mu2: params.mu2,
        sigma2_sq: params.sigma2_sq,
        p: params.p,
        loglik: *trace.last().expect("at least one evaluation"),
        responsibilities: resp,
        loglik_trace: trace,
        iterations,
        converged,
        variance_floored: floored,
        restart,
    })
}

/// Hard labels from splitting an overall least-squares fit at its median residual.
fn median_split(data: &Dataset, design: &Matrix) -> Result<Vec<f64>> {
    let ols = weighted_least_squares(design, data.y(), &vec![1.0; data.n()])?;
    let mut sorted = ols.residuals.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Ok(ols
        .residuals
        .iter()
        .map(|&r| if r >= median { 1.0 } else { 0.0 })
        .collect())
}

/// Best of `options.restarts` EM runs by final log-likelihood; ties go to the
/// lowest restart index.
pub fn em_fit(data: &Dataset, options: &EmOptions) -> Result<GaussianMixFit> {
    if options.restarts == 0 {
        return Err(Error::InvalidInput("at least one EM restart is required".into()));
    }
    let design = data.x().with_intercept();
    let base = median_split(data, &design)?;

    let mut best: Option<GaussianMixFit> = None;
    let mut last_err = None;
    for restart in 0..options.restarts {
        let init = if restart == 0 {
            base.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(restart as u64);
            base.iter()
                .map(|&r| if rng.random_bool(RESTART_FLIP_PROB) { 1.0 - r } else { r })
                .collect()
        };
        match run_once(data, &design, init, options, restart) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("every restart failed"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{generate, ScenarioKind, ScenarioSpec};

    fn scenario(kind: ScenarioKind, n: usize, p: f64, seed: u64) -> Dataset {
        generate(&ScenarioSpec::new(kind, n, p, seed).unwrap())
    }

    fn assert_monotone(trace: &[f64]) {
        for w in trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0),
                "loglik decreased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn recovers_gaussian_mixture() {
        let d = scenario(ScenarioKind::GaussianMixture, 2000, 0.7, 1);
        let f = em_fit(&d, &EmOptions::default()).unwrap();
        assert!((f.beta[0] - 1.0).abs() < 0.15, "{}", f.beta[0]);
        assert!((f.p - 0.7).abs() < 0.15, "{}", f.p);
        assert_monotone(&f.loglik_trace);
    }

    #[test]
    fn responsibilities_average_to_p() {
        for kind in ScenarioKind::ALL {
            let d = scenario(kind, 500, 0.5, 2);
            let f = em_fit(&d, &EmOptions::default()).unwrap();
            let mean = f.responsibilities.iter().sum::<f64>() / d.n() as f64;
            assert!((mean - f.p).abs() < 1e-10);
            assert!(f.responsibilities.iter().all(|r| (0.0..=1.0).contains(r)));
            assert!(f.sigma1_sq >= VARIANCE_FLOOR && f.sigma2_sq >= VARIANCE_FLOOR);
            assert!(f.p > 0.0 && f.p < 1.0);
            assert_monotone(&f.loglik_trace);
        }
    }

    #[test]
    fn zero_inflation_hits_variance_floor() {
        let d = scenario(ScenarioKind::ZeroInflatedGaussian, 1000, 0.5, 3);
        let f = em_fit(&d, &EmOptions::default()).unwrap();
        assert!(f.variance_floored);
        assert!(f.mu2.abs() < 1e-6);
        assert!((f.p - 0.5).abs() < 0.06);
    }

    #[test]
    fn single_component_data() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 5000;
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 1.0 + v + Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let d = Dataset::univariate(y.clone(), &x).unwrap();
        let ols = weighted_least_squares(&d.x().with_intercept(), &y, &vec![1.0; n]).unwrap();
        let f = em_fit(
            &d,
            &EmOptions {
                seed: 9,
                ..EmOptions::default()
            },
        )
        .unwrap();
        assert!((f.beta[0] - 1.0).abs() < 0.05, "{}", f.beta[0]);
        assert!((ols.coefficients[1] - 1.0).abs() < 0.05);
        assert!(f.p > 0.5, "p = {}", f.p);
    }

    #[test]
    fn deterministic_given_seed() {
        let d = scenario(ScenarioKind::ExpGaussianMixture, 400, 0.5, 4);
        let o = EmOptions {
            seed: 77,
            ..EmOptions::default()
        };
        let a = em_fit(&d, &o).unwrap();
        let b = em_fit(&d, &o).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.loglik_trace, b.loglik_trace);
    }

    #[test]
    fn best_restart_wins() {
        let d = scenario(ScenarioKind::ExpGaussianMixture, 600, 0.5, 8);
        let all = em_fit(&d, &EmOptions::default()).unwrap();
        let first = em_fit(
            &d,
            &EmOptions {
                restarts: 1,
                ..EmOptions::default()
            },
        )
        .unwrap();
        assert!(all.loglik >= first.loglik);
    }

    #[test]
    fn rejects_zero_restarts() {
        let d = scenario(ScenarioKind::GaussianMixture, 100, 0.5, 4);
        assert!(em_fit(
            &d,
            &EmOptions {
                restarts: 0,
                ..EmOptions::default()
            }
        )
        .is_err());
    }

    #[test]
    fn collapsed_component_is_reported() {
        let design = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]).unwrap();
        let err = m_step(&design, &[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 1.0, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DegenerateComponent { component: 2, .. }));
    }
}
