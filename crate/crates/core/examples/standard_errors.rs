//! Asymptotic standard errors and Wald intervals, checked against a bootstrap.
//!
//! cargo run --release --example standard_errors

use mommix::asymptotics::summarize;
use mommix::moment;
use mommix::simulation::{generate, ScenarioKind, ScenarioSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mommix::Result<()> {
    let data = generate(&ScenarioSpec::new(ScenarioKind::ExpGaussianMixture, 2000, 0.5, 3)?);
    let fit = moment::fit(&data)?;
    let s = summarize(&data, &fit, 0.95)?;

    let (lo, hi) = s.ci_beta[0];
    println!(
        "beta = {:.3}  SE {:.3}  95% CI ({lo:.3}, {hi:.3})",
        fit.beta[0], s.se_beta[0]
    );
    println!(
        "p    = {:.3}  SE {:.3}  95% CI ({:.3}, {:.3})",
        fit.p, s.se_p, s.ci_p.0, s.ci_p.1
    );
    println!("mu1  = {:.3}  SE {:.3}", fit.mu1, s.se_mu1);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = data.n();
    let draws: Vec<f64> = (0..200)
        .filter_map(|_| {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            moment::fit(&data.resample(&idx).ok()?).ok().map(|f| f.beta[0])
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    println!("bootstrap SE of beta over {} resamples: {:.3}", draws.len(), var.sqrt());
    Ok(())
}
