//! Standard errors from per-observation influence terms.
//!
//! `sqrt(n) (beta^ - beta)` is asymptotically `n^{-1/2} sum_i xi_i` with
//!
//! ```text
//! xi_i   = lambda3 eps_i + lambda1 zeta_i
//! zeta_i = D lambda3' eps_i + w_i (a3 f2_i - a2 f1_i) / (g3 Pw)
//! psi_i  = D lambda2' eps_i + w_i (a1 f1_i - a2 f2_i) / (g3 Pw)
//! ```
//!
//! where `eps_i` is the influence of the first-moment slopes, `zeta_i` and
//! `psi_i` those of `lambda3^` and `lambda2^`, and the gradients of the plug-in
//! maps `lambda1 -> lambda{2,3}^n(lambda1)` are taken numerically.
//! Population quantities are replaced by their sample counterparts.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::moment::{lambda_plugins, MomentFit};
use crate::numkit::{dot, finite_diff_gradient, weighted_least_squares, weighted_mean, Matrix};

/// Two-sided standard normal quantile `z` with `P(|Z| <= z) = level`.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level {level} must lie in (0, 1)"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Influence of the first-moment slopes, one row per observation.
///
/// `eps_i = A(m) (n^{-1} X~'VX~)^{-1} X~_i v_i r_i`, with `v` the first-stage
/// weights of the fit (all ones for plain least squares) and `r_i` the
/// first-stage residual.
pub fn epsilon_terms(data: &Dataset, fit: &MomentFit) -> Result<Matrix> {
    let design = data.x().with_intercept();
    let gram = weighted_least_squares(&design, data.y(), &fit.v_weights)?;
    let n = data.n();
    let m = data.m();
    let mut eps = Matrix::zeros(n, m);
    for i in 0..n {
        let x = data.x().row(i);
        let resid = data.y()[i] - fit.first_moment_at(x);
        let scale = n as f64 * fit.v_weights[i] * resid;
        let z = gram.solve_gram(design.row(i));
        for (out, zj) in eps.row_mut(i).iter_mut().zip(&z[1..]) {
            *out = scale * zj;
        }
    }
    Ok(eps)
}

/// Centred second-moment residual products `f1_i` and `f2_i`.
pub fn f_terms(data: &Dataset, fit: &MomentFit) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = &fit.w_weights;
    let eta2: Vec<f64> = fit.eta.iter().map(|e| e * e).collect();
    let mean_eta = weighted_mean(&fit.eta, w)?;
    let mean_eta2 = weighted_mean(&eta2, w)?;
    let fitted = fit.second_moment_fitted();
    let mut f1 = Vec::with_capacity(data.n());
    let mut f2 = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let resid = data.y()[i] * data.y()[i] - fitted[i];
        f1.push((fit.eta[i] - mean_eta) * resid);
        f2.push((eta2[i] - mean_eta2) * resid);
    }
    Ok((f1, f2))
}

/// Every per-observation piece of the influence decomposition.
#[derive(Debug, Clone)]
pub struct Influence {
    pub epsilon: Matrix,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Gradient of `lambda1 -> lambda2^n(lambda1)` at the estimate.
    pub grad_lambda2: Vec<f64>,
    /// Gradient of `lambda1 -> lambda3^n(lambda1)` at the estimate.
    pub grad_lambda3: Vec<f64>,
    /// Influence of `lambda2^`.
    pub psi: Vec<f64>,
    /// Influence of `lambda3^`.
    pub zeta: Vec<f64>,
    /// Influence of `beta^`, n x m.
    pub xi: Matrix,
}

/// Gradients of the plug-in maps for `lambda2` and `lambda3`.
pub fn plugin_gradients(data: &Dataset, fit: &MomentFit) -> Result<(Vec<f64>, Vec<f64>)> {
    let eval = |l1: &[f64], pick: fn((f64, f64)) -> f64| lambda_plugins(data, l1).map(pick).unwrap_or(f64::NAN);
    let g2 = finite_diff_gradient(|l1| eval(l1, |t| t.0), &fit.lambda1)?;
    let g3 = finite_diff_gradient(|l1| eval(l1, |t| t.1), &fit.lambda1)?;
    Ok((g2, g3))
}

pub fn influence(data: &Dataset, fit: &MomentFit) -> Result<Influence> {
    let (grad_lambda2, grad_lambda3) = plugin_gradients(data, fit)?;
    influence_with_gradients(data, fit, grad_lambda2, grad_lambda3)
}

/// Assembles the decomposition from supplied plug-in gradients.
pub fn influence_with_gradients(
    data: &Dataset,
    fit: &MomentFit,
    grad_lambda2: Vec<f64>,
    grad_lambda3: Vec<f64>,
) -> Result<Influence> {
    let n = data.n();
    let m = data.m();
    let epsilon = epsilon_terms(data, fit)?;
    let (f1, f2) = f_terms(data, fit)?;
    let [a1, a2, a3] = fit.a_stats();
    let g3 = fit.g_stats()[2];
    let mean_w = fit.w_weights.iter().sum::<f64>() / n as f64;
    let denom = g3 * mean_w;
    if !(denom.abs() > 0.0) {
        return Err(Error::NonIdentifiable { g3 });
    }

    let mut psi = Vec::with_capacity(n);
    let mut zeta = Vec::with_capacity(n);
    let mut xi = Matrix::zeros(n, m);
    for i in 0..n {
        let eps = epsilon.row(i);
        let wi = fit.w_weights[i];
        let z = dot(&grad_lambda3, eps) + wi * (a3 * f2[i] - a2 * f1[i]) / denom;
        psi.push(dot(&grad_lambda2, eps) + wi * (a1 * f1[i] - a2 * f2[i]) / denom);
        zeta.push(z);
        for (j, out) in xi.row_mut(i).iter_mut().enumerate() {
            *out = fit.lambda3 * eps[j] + fit.lambda1[j] * z;
        }
    }
    Ok(Influence {
        epsilon,
        f1,
        f2,
        grad_lambda2,
        grad_lambda3,
        psi,
        zeta,
        xi,
    })
}

/// `beta^` influence rows only.
pub fn xi_decomposition(data: &Dataset, fit: &MomentFit) -> Result<Matrix> {
    Ok(influence(data, fit)?.xi)
}

/// Standard errors and Wald intervals for a moment fit.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticSummary {
    pub level: f64,
    pub se_beta: Vec<f64>,
    pub se_lambda1: Vec<f64>,
    pub se_lambda2: f64,
    pub se_lambda3: f64,
    pub se_mu1: f64,
    pub se_p: f64,
    /// `n^{-1} sum_i xi_i xi_i'`.
    pub var_xi: Matrix,
    #[serde(skip)]
    pub xi_matrix: Matrix,
    pub ci_beta: Vec<(f64, f64)>,
    pub ci_p: (f64, f64),
}

/// `n^{-1} sum_i r_i r_i'` over the rows of `terms`.
pub fn empirical_second_moment(terms: &Matrix) -> Matrix {
    let (n, m) = (terms.rows(), terms.cols());
    let mut out = Matrix::zeros(m, m);
    for i in 0..n {
        let r = terms.row(i);
        for a in 0..m {
            for b in a..m {
                let v = out.get(a, b) + r[a] * r[b];
                out.set(a, b, v);
            }
        }
    }
    for a in 0..m {
        for b in a..m {
            let v = out.get(a, b) / n as f64;
            out.set(a, b, v);
            out.set(b, a, v);
        }
    }
    out
}

fn se_of(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    (values.iter().map(|v| v * v).sum::<f64>() / n / n).sqrt()
}

fn interval(estimate: f64, se: f64, z: f64) -> (f64, f64) {
    (estimate - z * se, estimate + z * se)
}

pub fn summarize(data: &Dataset, fit: &MomentFit, level: f64) -> Result<AsymptoticSummary> {
    let z = normal_critical_value(level)?;
    let inf = influence(data, fit)?;
    Ok(summary_from_influence(data, fit, &inf, level, z))
}

fn summary_from_influence(data: &Dataset, fit: &MomentFit, inf: &Influence, level: f64, z: f64) -> AsymptoticSummary {
    let n = data.n() as f64;
    let var_xi = empirical_second_moment(&inf.xi);
    let se_beta: Vec<f64> = (0..data.m()).map(|j| (var_xi.get(j, j) / n).sqrt()).collect();
    let var_eps = empirical_second_moment(&inf.epsilon);
    let se_lambda1 = (0..data.m()).map(|j| (var_eps.get(j, j) / n).sqrt()).collect();
    let se_lambda2 = se_of(&inf.psi);
    let se_lambda3 = se_of(&inf.zeta);
    // delta method for p = 1 / lambda3
    let se_p = se_lambda3 / (fit.lambda3 * fit.lambda3);
    let ci_beta = fit
        .beta
        .iter()
        .zip(&se_beta)
        .map(|(b, s)| interval(*b, *s, z))
        .collect();
    AsymptoticSummary {
        level,
        se_beta,
        se_lambda1,
        se_lambda2,
        se_lambda3,
        se_mu1: se_lambda2 / 2.0,
        se_p,
        var_xi,
        xi_matrix: inf.xi.clone(),
        ci_beta,
        ci_p: interval(fit.p, se_p, z),
    }
}
