//! Moment-based estimation for two-component mixtures of regressions in
//! which only one component depends on the covariates.
//!
//! - [`moment`]: the closed-form estimator of `beta`, `mu1` and the mixing proportion `p`
//! - [`asymptotics`]: influence-function standard errors and Wald intervals
//! - [`em`]: a Gaussian mixture-of-regressions comparator fitted by EM
//! - [`simulation`]: scenario generators and a reproducible Monte Carlo harness
//! - [`cli`]: the `fit` and `simulate` commands behind the `mommix` binary
//!
//! ```
//! use mommix::simulation::{generate, ScenarioKind, ScenarioSpec};
//!
//! let spec = ScenarioSpec::new(ScenarioKind::GaussianMixture, 2000, 0.5, 7).unwrap();
//! let data = generate(&spec);
//! let fit = mommix::moment::fit(&data).unwrap();
//! let se = mommix::asymptotics::summarize(&data, &fit, 0.95).unwrap();
//! assert!((fit.beta[0] - 1.0).abs() < 5.0 * se.se_beta[0]);
//! ```

pub mod asymptotics;
pub mod cli;
pub mod data;
pub mod em;
pub mod error;
pub mod moment;
pub mod numkit;
pub mod simulation;

pub use data::Dataset;
pub use error::{Error, Result};
pub use numkit::Matrix;
