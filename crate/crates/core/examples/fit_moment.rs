//! Fit the moment estimator to simulated Gaussian-mixture data.
//!
//! cargo run --example fit_moment

use mommix::moment;
use mommix::simulation::{generate, ScenarioKind, ScenarioSpec};

fn main() -> mommix::Result<()> {
    let spec = ScenarioSpec::new(ScenarioKind::GaussianMixture, 5000, 0.6, 7)?.with_beta(1.5)?;
    let data = generate(&spec);
    let fit = moment::fit(&data)?;

    println!("n = {}, true beta = {}, true p = {}", data.n(), spec.beta, spec.p);
    println!("lambda1     = {:.4}  (p * beta)", fit.lambda1[0]);
    println!("lambda2     = {:.4}  (2 * mu1)", fit.lambda2);
    println!("lambda3     = {:.4}  (1 / p)", fit.lambda3);
    println!("alpha_tilde = {:.4}", fit.alpha_tilde);
    println!();
    println!("beta = {:.4}", fit.beta[0]);
    println!("mu1  = {:.4}", fit.mu1);
    println!(
        "p    = {:.4}{}",
        fit.p,
        if fit.p_in_range { "" } else { "  (outside (0, 1])" }
    );
    Ok(())
}
