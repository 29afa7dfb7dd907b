//! Oracle variance bound for the slope and the resulting relative efficiency.
//!
//! cargo run --example efficiency_bound

use mommix::simulation::efficiency_bound;

fn main() -> mommix::Result<()> {
    println!("{:>6} {:>5} {:>10}", "n", "p", "bound SE");
    for n in [300, 1000, 2000, 3000] {
        for p in [0.3, 0.5, 0.7] {
            let se = efficiency_bound(1.0, p, n, 1.0)?.sqrt();
            println!("{n:>6} {p:>5} {se:>10.4}");
        }
    }
    // A moment-estimator SE of 0.121 at n = 2000, p = 0.5:
    let rel = 0.121 / efficiency_bound(1.0, 0.5, 2000, 1.0)?.sqrt();
    println!("relative efficiency of SE 0.121 at n = 2000, p = 0.5: {rel:.2}");
    match efficiency_bound(1.0, 0.001, 500, 1.0) {
        Err(e) => println!("p * n <= 1: {e}"),
        Ok(v) => println!("unexpected bound {v}"),
    }
    Ok(())
}
