//! Moment-based estimator for the two-component mixture regression
//!
//! ```text
//! Y = P Y1 + (1 - P) Y2,   E(Y1 | X) = mu1 + beta'X,   Y2 independent of X
//! ```
//!
//! The first moment is linear in X with slope `lambda1 = p * beta`. Writing
//! `eta = lambda1'X`, the second moment is
//!
//! ```text
//! E(Y^2 | X) = alpha~ + lambda2 * eta + lambda3 * eta^2,   lambda2 = 2 mu1,  lambda3 = 1 / p
//! ```
//!
//! so a weighted regression of Y^2 on (1, eta, eta^2) identifies the remaining
//! parameters, and `beta = lambda3 * lambda1`, `mu1 = lambda2 / 2`, `p = 1 / lambda3`.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{dot, weighted_least_squares, weighted_mean};

/// Tolerances and switches for [`fit_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    /// Refit the first moment once with weights `1 / (1 + eta^2)`.
    pub reweight_first_stage: bool,
    /// `NonIdentifiable` when `|g3| < tol * (a1 a3 + a2^2 + 1e-300)`.
    pub identifiability_tol: f64,
    /// `DegenerateMixture` when `|lambda3|` falls below this.
    pub degeneracy_tol: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            reweight_first_stage: true,
            identifiability_tol: 1e-12,
            degeneracy_tol: 1e-8,
        }
    }
}

/// Second-stage weight `1 / (1 + eta^4)`.
pub fn second_moment_weight(eta: f64) -> f64 {
    1.0 / (1.0 + eta.powi(4))
}

/// First-stage weight `1 / (1 + eta^2)`.
pub fn first_moment_weight(eta: f64) -> f64 {
    1.0 / (1.0 + eta * eta)
}

/// Output of the first-moment regression.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStage {
    pub lambda1: Vec<f64>,
    pub intercept: f64,
    pub eta: Vec<f64>,
    /// Weights of the final pass; all ones without reweighting.
    pub v_weights: Vec<f64>,
}

/// Regresses Y on (1, X). With `reweight`, a second weighted pass uses
/// `v_i = 1 / (1 + eta_i^2)` computed from the unweighted slopes.
pub fn fit_lambda1(data: &Dataset, reweight: bool) -> Result<FirstStage> {
    let design = data.x().with_intercept();
    let n = data.n();
    let ones = vec![1.0; n];
    let ols = weighted_least_squares(&design, data.y(), &ones)?;
    let (coefficients, v_weights) = if reweight {
        let eta = data.x().mul_vec(&ols.coefficients[1..]);
        let v: Vec<f64> = eta.iter().map(|&e| first_moment_weight(e)).collect();
        (weighted_least_squares(&design, data.y(), &v)?.coefficients, v)
    } else {
        (ols.coefficients, ones)
    };
    let lambda1 = coefficients[1..].to_vec();
    Ok(FirstStage {
        eta: data.x().mul_vec(&lambda1),
        intercept: coefficients[0],
        lambda1,
        v_weights,
    })
}

/// Weighted centred moments of eta and Y^2 feeding the ratio estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentStats {
    /// (a1, a2, a3) = (Var_w(eta^2), Cov_w(eta, eta^2), Var_w(eta)).
    pub a: [f64; 3],
    /// (b1, b2) = (Cov_w(eta, Y^2), Cov_w(eta^2, Y^2)).
    pub b: [f64; 2],
    /// g1 = a1 b1 - a2 b2, g2 = a3 b2 - a2 b1, g3 = a1 a3 - a2^2.
    pub g: [f64; 3],
    /// Weighted means of eta, eta^2 and Y^2.
    pub mean_eta: f64,
    pub mean_eta2: f64,
    pub mean_y2: f64,
}

impl SecondMomentStats {
    pub fn lambda2(&self) -> f64 {
        self.g[0] / self.g[2]
    }

    pub fn lambda3(&self) -> f64 {
        self.g[1] / self.g[2]
    }
}

/// Computes the a/b/g statistics under weights `w`.
///
/// Each covariance is accumulated around the weighted means, which is
/// algebraically the same as `P(fg) - P(f)P(g)` but avoids cancellation.
pub fn second_moment_stats(y: &[f64], eta: &[f64], w: &[f64]) -> Result<SecondMomentStats> {
    second_moment_stats_with_tol(y, eta, w, MomentConfig::default().identifiability_tol)
}

fn second_moment_stats_with_tol(y: &[f64], eta: &[f64], w: &[f64], tol: f64) -> Result<SecondMomentStats> {
    if y.len() != eta.len() || y.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "y ({}), eta ({}) and weights ({}) differ in length",
            y.len(),
            eta.len(),
            w.len()
        )));
    }
    let eta2: Vec<f64> = eta.iter().map(|e| e * e).collect();
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mean_eta = weighted_mean(eta, w)?;
    let mean_eta2 = weighted_mean(&eta2, w)?;
    let mean_y2 = weighted_mean(&y2, w)?;
    let total: f64 = w.iter().sum();

    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let d1 = eta[i] - mean_eta;
        let d2 = eta2[i] - mean_eta2;
        let dy = y2[i] - mean_y2;
        let wi = w[i];
        s11 += wi * d1 * d1;
        s12 += wi * d1 * d2;
        s22 += wi * d2 * d2;
        s1y += wi * d1 * dy;
        s2y += wi * d2 * dy;
    }
    let a = [s22 / total, s12 / total, s11 / total];
    let b = [s1y / total, s2y / total];
    let g = [
        a[0] * b[0] - a[1] * b[1],
        a[2] * b[1] - a[1] * b[0],
        a[0] * a[2] - a[1] * a[1],
    ];
    // eta without spread (up to rounding in its mean) identifies nothing
    let no_spread = a[2] <= 1e-24 * (mean_eta2 + f64::MIN_POSITIVE);
    if no_spread || !(g[2].abs() >= tol * (a[0] * a[2] + a[1] * a[1] + 1e-300)) {
        return Err(Error::NonIdentifiable { g3: g[2] });
    }
    Ok(SecondMomentStats {
        a,
        b,
        g,
        mean_eta,
        mean_eta2,
        mean_y2,
    })
}

/// `(lambda2^n(l1), lambda3^n(l1))`: the plug-in ratio estimators evaluated
/// at an arbitrary first-stage slope, recomputing eta and w from the data.
pub fn lambda_plugins(data: &Dataset, lambda1: &[f64]) -> Result<(f64, f64)> {
    let eta = data.x().mul_vec(lambda1);
    let w: Vec<f64> = eta.iter().map(|&e| second_moment_weight(e)).collect();
    let stats = second_moment_stats(data.y(), &eta, &w)?;
    Ok((stats.lambda2(), stats.lambda3()))
}

/// A fitted moment model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentFit {
    pub lambda1: Vec<f64>,
    pub lambda2: f64,
    pub lambda3: f64,
    pub alpha_tilde: f64,
    pub beta: Vec<f64>,
    pub mu1: f64,
    /// Raw `1 / lambda3`; may fall outside (0, 1].
    pub p: f64,
    pub eta: Vec<f64>,
    /// Intercept of the first-moment regression, `p mu1 + (1 - p) mu2`.
    pub first_intercept: f64,
    pub w_weights: Vec<f64>,
    pub v_weights: Vec<f64>,
    pub stats: SecondMomentStats,
    pub p_in_range: bool,
}

impl MomentFit {
    pub fn a_stats(&self) -> [f64; 3] {
        self.stats.a
    }

    pub fn b_stats(&self) -> [f64; 2] {
        self.stats.b
    }

    pub fn g_stats(&self) -> [f64; 3] {
        self.stats.g
    }

    /// `alpha~ + lambda2 eta + lambda3 eta^2`, the fitted E(Y^2 | X).
    pub fn second_moment_fitted(&self) -> Vec<f64> {
        self.eta
            .iter()
            .map(|e| self.alpha_tilde + self.lambda2 * e + self.lambda3 * e * e)
            .collect()
    }

    /// Fitted first moment `first_intercept + lambda1'x` for a covariate row.
    pub fn first_moment_at(&self, x: &[f64]) -> f64 {
        self.first_intercept + dot(&self.lambda1, x)
    }
}

/// Fits with [`MomentConfig::default`].
pub fn fit(data: &Dataset) -> Result<MomentFit> {
    fit_with(data, &MomentConfig::default())
}

pub fn fit_with(data: &Dataset, config: &MomentConfig) -> Result<MomentFit> {
    let first = fit_lambda1(data, config.reweight_first_stage)?;
    let w: Vec<f64> = first.eta.iter().map(|&e| second_moment_weight(e)).collect();
    let stats = second_moment_stats_with_tol(data.y(), &first.eta, &w, config.identifiability_tol)?;

    let lambda2 = stats.lambda2();
    let lambda3 = stats.lambda3();
    if !(lambda3.abs() >= config.degeneracy_tol) {
        return Err(Error::DegenerateMixture { lambda3 });
    }
    let alpha_tilde = stats.mean_y2 - lambda2 * stats.mean_eta - lambda3 * stats.mean_eta2;
    let beta = first.lambda1.iter().map(|l| l * lambda3).collect();
    let p = 1.0 / lambda3;

    Ok(MomentFit {
        lambda1: first.lambda1,
        lambda2,
        lambda3,
        alpha_tilde,
        beta,
        mu1: lambda2 / 2.0,
        p,
        eta: first.eta,
        first_intercept: first.intercept,
        w_weights: w,
        v_weights: first.v_weights,
        stats,
        p_in_range: p > 0.0 && p <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Matrix;
    use crate::simulation::{generate, ScenarioKind, ScenarioSpec};
    use approx::assert_relative_eq;

    /// P_n^w of each product computed separately, straight from the definitions.
    fn naive_stats(y: &[f64], eta: &[f64], w: &[f64]) -> ([f64; 3], [f64; 2]) {
        let sw: f64 = w.iter().sum();
        let pm = |f: &dyn Fn(usize) -> f64| (0..y.len()).map(|i| f(i) * w[i]).sum::<f64>() / sw;
        let e1 = pm(&|i| eta[i]);
        let e2 = pm(&|i| eta[i].powi(2));
        let e3 = pm(&|i| eta[i].powi(3));
        let e4 = pm(&|i| eta[i].powi(4));
        let y2 = pm(&|i| y[i].powi(2));
        let ey2 = pm(&|i| eta[i] * y[i].powi(2));
        let e2y2 = pm(&|i| eta[i].powi(2) * y[i].powi(2));
        (
            [e4 - e2 * e2, e3 - e1 * e2, e2 - e1 * e1],
            [ey2 - e1 * y2, e2y2 - e2 * y2],
        )
    }

    fn scenario(kind: ScenarioKind, n: usize, p: f64, seed: u64) -> Dataset {
        generate(&ScenarioSpec::new(kind, n, p, seed).unwrap())
    }

    #[test]
    fn noiseless_first_stage() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let d = Dataset::univariate(y, &x).unwrap();
        let s = fit_lambda1(&d, false).unwrap();
        assert_relative_eq!(s.lambda1[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.intercept, 2.0, epsilon = 1e-12);
        for (e, xi) in s.eta.iter().zip(&x) {
            assert_relative_eq!(*e, 3.0 * xi, epsilon = 1e-11);
        }
        assert!(s.v_weights.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_response_has_zero_slope() {
        let x = [0.3, -1.0, 2.0, 4.5, 0.0, 1.1];
        let d = Dataset::univariate(vec![5.0; 6], &x).unwrap();
        for reweight in [false, true] {
            let s = fit_lambda1(&d, reweight).unwrap();
            assert!(s.lambda1[0].abs() < 1e-12);
            assert_relative_eq!(s.intercept, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn first_stage_is_consistent_for_p_beta() {
        let d = scenario(ScenarioKind::GaussianMixture, 100_000, 0.7, 2024);
        let s = fit_lambda1(&d, true).unwrap();
        assert!((s.lambda1[0] - 0.7).abs() < 0.02, "{}", s.lambda1[0]);
    }

    #[test]
    fn reweighting_uses_first_pass_eta() {
        let d = scenario(ScenarioKind::GaussianMixture, 500, 0.5, 3);
        let ols = fit_lambda1(&d, false).unwrap();
        let wls = fit_lambda1(&d, true).unwrap();
        for (v, e) in wls.v_weights.iter().zip(&ols.eta) {
            assert_eq!(*v, first_moment_weight(*e));
        }
        assert_ne!(ols.lambda1, wls.lambda1);
    }

    #[test]
    fn constant_eta_is_not_identifiable() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let eta = [0.7; 4];
        let err = second_moment_stats(&y, &eta, &[1.0; 4]).unwrap_err();
        assert!(matches!(err, Error::NonIdentifiable { .. }));
    }

    #[test]
    fn two_valued_eta_is_not_identifiable() {
        // eta^2 is affine in eta when eta takes two values
        let eta = [-1.0, 1.0, -1.0, 1.0, 1.0];
        let y = [0.5, 1.0, 2.0, 0.1, 3.0];
        let err = second_moment_stats(&y, &eta, &[1.0; 5]).unwrap_err();
        assert!(matches!(err, Error::NonIdentifiable { .. }));
    }

    #[test]
    fn hand_computed_stats() {
        // y^2 = [1, 0, 1]
        let s = second_moment_stats_with_tol(&[1.0, 0.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0; 3], 0.0);
        // g3 = a1 a3 - a2^2 = (2/9)(2/3) > 0
        let s = s.unwrap();
        assert_relative_eq!(s.a[2], 2.0 / 3.0, epsilon = 1e-15);
        assert!(s.a[1].abs() < 1e-15);
        assert_relative_eq!(s.a[0], 2.0 / 9.0, epsilon = 1e-15);
        assert!(s.b[0].abs() < 1e-15);
        assert_relative_eq!(s.b[1], 2.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(s.g[2], 4.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn stats_match_naive_oracle() {
        let d = scenario(ScenarioKind::ExpGaussianMixture, 400, 0.5, 17);
        let eta: Vec<f64> = d.x().column(0).iter().map(|x| 0.5 * x + 0.1).collect();
        let w: Vec<f64> = eta.iter().map(|&e| second_moment_weight(e)).collect();
        let s = second_moment_stats(d.y(), &eta, &w).unwrap();
        let (a, b) = naive_stats(d.y(), &eta, &w);
        for k in 0..3 {
            assert_relative_eq!(s.a[k], a[k], epsilon = 1e-12, max_relative = 1e-12);
        }
        for k in 0..2 {
            assert_relative_eq!(s.b[k], b[k], epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn identity_chain_is_exact() {
        let d = scenario(ScenarioKind::ZeroInflatedGaussian, 800, 0.5, 5);
        let f = fit(&d).unwrap();
        assert_eq!(f.beta[0], f.lambda1[0] * f.lambda3);
        assert_eq!(f.mu1, f.lambda2 / 2.0);
        assert_eq!(f.p, 1.0 / f.lambda3);
        assert_eq!(f.lambda2, f.g_stats()[0] / f.g_stats()[2]);
        assert_eq!(f.lambda3, f.g_stats()[1] / f.g_stats()[2]);
        assert_eq!(f.p_in_range, f.p > 0.0 && f.p <= 1.0);
    }

    #[test]
    fn ratio_formulas_solve_second_moment_regression() {
        let d = scenario(ScenarioKind::GaussianMixture, 1000, 0.5, 8);
        let f = fit(&d).unwrap();
        let rows: Vec<Vec<f64>> = f.eta.iter().map(|e| vec![1.0, *e, e * e]).collect();
        let design = Matrix::from_rows(&rows).unwrap();
        let y2: Vec<f64> = d.y().iter().map(|v| v * v).collect();
        let oracle = weighted_least_squares(&design, &y2, &f.w_weights).unwrap();
        assert_relative_eq!(f.alpha_tilde, oracle.coefficients[0], max_relative = 1e-8);
        assert_relative_eq!(f.lambda2, oracle.coefficients[1], max_relative = 1e-8);
        assert_relative_eq!(f.lambda3, oracle.coefficients[2], max_relative = 1e-8);
    }

    #[test]
    fn covariate_scaling_is_absorbed_by_lambda1() {
        let d = scenario(ScenarioKind::ExpGaussianMixture, 2000, 0.5, 9);
        let scaled = d.with_scaled_covariates(3.5).unwrap();
        let a = fit(&d).unwrap();
        let b = fit(&scaled).unwrap();
        assert_relative_eq!(b.lambda1[0], a.lambda1[0] / 3.5, max_relative = 1e-8);
        assert_relative_eq!(b.lambda2, a.lambda2, max_relative = 1e-8);
        assert_relative_eq!(b.lambda3, a.lambda3, max_relative = 1e-8);
        assert_relative_eq!(b.p, a.p, max_relative = 1e-8);
        for (ea, eb) in a.eta.iter().zip(&b.eta) {
            assert_relative_eq!(*ea, *eb, epsilon = 1e-10, max_relative = 1e-8);
        }
    }

    #[test]
    fn single_component_limit() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let x: Vec<f64> = (0..50_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = x.iter().map(|v| 1.0 + v + noise.sample(&mut rng)).collect();
        let f = fit(&Dataset::univariate(y, &x).unwrap()).unwrap();
        assert!((0.95..=1.05).contains(&f.p), "p = {}", f.p);
        assert!((0.97..=1.03).contains(&f.beta[0]), "beta = {}", f.beta[0]);
        assert!(f.p_in_range || f.p > 1.0);
    }

    #[test]
    fn multivariate_covariates() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 50_000;
        let beta = [1.0, -0.5];
        let mut xs = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x1: f64 = StandardNormal.sample(&mut rng);
            let x2: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            let u: f64 = rand::Rng::random(&mut rng);
            xs.extend([x1, x2]);
            y.push(if u < 0.6 {
                1.0 + beta[0] * x1 + beta[1] * x2 + e
            } else {
                e
            });
        }
        let d = Dataset::new(y, Matrix::new(n, 2, xs).unwrap()).unwrap();
        let f = fit(&d).unwrap();
        assert!((f.p - 0.6).abs() < 0.06, "p = {}", f.p);
        assert!((f.beta[0] - 1.0).abs() < 0.1, "{:?}", f.beta);
        assert!((f.beta[1] + 0.5).abs() < 0.1, "{:?}", f.beta);
    }

    #[test]
    fn degeneracy_tolerance_is_configurable() {
        let d = scenario(ScenarioKind::GaussianMixture, 300, 0.5, 1);
        let config = MomentConfig {
            degeneracy_tol: 1e6,
            ..MomentConfig::default()
        };
        assert!(matches!(fit_with(&d, &config), Err(Error::DegenerateMixture { .. })));
    }
}
