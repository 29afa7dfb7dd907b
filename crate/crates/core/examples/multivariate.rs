//! Two covariates: every slope is scaled by the same 1 / p.
//!
//! cargo run --example multivariate

use mommix::asymptotics::summarize;
use mommix::numkit::Matrix;
use mommix::{moment, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> mommix::Result<()> {
    let (n, p, beta) = (20_000, 0.65, [0.8, -1.2]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = StandardNormal.sample(&mut rng);
        let x2: f64 = StandardNormal.sample(&mut rng);
        let e: f64 = StandardNormal.sample(&mut rng);
        y.push(if rng.random::<f64>() < p {
            0.5 + beta[0] * x1 + beta[1] * x2 + e
        } else {
            2.0 + e
        });
        x.extend([x1, x2]);
    }
    let data = Dataset::new(y, Matrix::new(n, 2, x)?)?;
    let fit = moment::fit(&data)?;
    let s = summarize(&data, &fit, 0.95)?;
    for j in 0..2 {
        let (lo, hi) = s.ci_beta[j];
        println!(
            "beta[{j}] = {:.3} (true {})  95% CI ({lo:.3}, {hi:.3})",
            fit.beta[j], beta[j]
        );
    }
    println!("p = {:.3} (true {p})  SE {:.3}", fit.p, s.se_p);
    println!("var(xi) =\n  {:?}\n  {:?}", s.var_xi.row(0), s.var_xi.row(1));
    Ok(())
}
