use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// The four data-generating processes. In every case X ~ N(0, 1),
/// P ~ Bernoulli(p) and Y = P Y1 + (1 - P) Y2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Y1 ~ N(1 + beta X, 1), Y2 ~ N(0, 1).
    GaussianMixture,
    /// Y1 ~ N(1 + beta X, 1), Y2 = 0.
    ZeroInflatedGaussian,
    /// Y1 = beta X + Exp(1), Y2 ~ N(0, 0.5^2).
    ExpGaussianMixture,
    /// Y1 = beta X + Exp(1), Y2 = 0.
    ZeroInflatedExponential,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::GaussianMixture,
        ScenarioKind::ZeroInflatedGaussian,
        ScenarioKind::ExpGaussianMixture,
        ScenarioKind::ZeroInflatedExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::GaussianMixture => "gaussian_mixture",
            ScenarioKind::ZeroInflatedGaussian => "zero_inflated_gaussian",
            ScenarioKind::ExpGaussianMixture => "exp_gaussian_mixture",
            ScenarioKind::ZeroInflatedExponential => "zero_inflated_exponential",
        }
    }

    /// Heading used in printed tables.
    pub fn title(self) -> &'static str {
        match self {
            ScenarioKind::GaussianMixture => "Gaussian mixture",
            ScenarioKind::ZeroInflatedGaussian => "Zero-inflated Gaussian",
            ScenarioKind::ExpGaussianMixture => "Exponential-Gaussian mixture",
            ScenarioKind::ZeroInflatedExponential => "Zero-inflated exponential",
        }
    }

    /// Conditional variance of Y1 given X; both N(., 1) and Exp(1) have unit variance.
    pub fn sigma1_sq(self) -> f64 {
        1.0
    }

    /// E(Y1 | X = 0).
    pub fn mu1(self) -> f64 {
        1.0
    }

    /// (E Y2, Var Y2).
    pub fn contamination_moments(self) -> (f64, f64) {
        match self {
            ScenarioKind::GaussianMixture => (0.0, 1.0),
            ScenarioKind::ExpGaussianMixture => (0.0, 0.25),
            ScenarioKind::ZeroInflatedGaussian | ScenarioKind::ZeroInflatedExponential => (0.0, 0.0),
        }
    }

    /// Draws `n` observations with their latent memberships. `p` may be 0 or 1 here.
    pub fn sample<R: Rng + ?Sized>(self, n: usize, p: f64, beta: f64, rng: &mut R) -> LatentSample {
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut membership = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: f64 = StandardNormal.sample(rng);
            let first = rng.random::<f64>() < p;
            // both components are always drawn so the stream layout is fixed
            let (y1, y2) = match self {
                ScenarioKind::GaussianMixture => {
                    let e1: f64 = StandardNormal.sample(rng);
                    let e2: f64 = StandardNormal.sample(rng);
                    (1.0 + beta * xi + e1, e2)
                }
                ScenarioKind::ZeroInflatedGaussian => {
                    let e1: f64 = StandardNormal.sample(rng);
                    (1.0 + beta * xi + e1, 0.0)
                }
                ScenarioKind::ExpGaussianMixture => {
                    let e1: f64 = Exp1.sample(rng);
                    let e2: f64 = StandardNormal.sample(rng);
                    (beta * xi + e1, 0.5 * e2)
                }
                ScenarioKind::ZeroInflatedExponential => {
                    let e1: f64 = Exp1.sample(rng);
                    (beta * xi + e1, 0.0)
                }
            };
            x.push(xi);
            y.push(if first { y1 } else { y2 });
            membership.push(first);
        }
        LatentSample { x, y, membership }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "1" | "gaussian_mixture" => Ok(ScenarioKind::GaussianMixture),
            "2" | "zero_inflated_gaussian" => Ok(ScenarioKind::ZeroInflatedGaussian),
            "3" | "exp_gaussian_mixture" => Ok(ScenarioKind::ExpGaussianMixture),
            "4" | "zero_inflated_exponential" => Ok(ScenarioKind::ZeroInflatedExponential),
            _ => Err(Error::InvalidInput(format!(
                "unknown scenario '{s}' (expected one of gaussian_mixture, zero_inflated_gaussian, \
                 exp_gaussian_mixture, zero_inflated_exponential)"
            ))),
        }
    }
}

/// Simulated observations together with the latent component labels.
#[derive(Debug, Clone)]
pub struct LatentSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `true` where the observation came from the covariate component.
    pub membership: Vec<bool>,
}

impl LatentSample {
    pub fn into_dataset(self) -> Result<Dataset> {
        Dataset::new(self.y, Matrix::column_vector(&self.x)?)
    }
}

/// One simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Spec with the default slope `beta = 1`.
    pub fn new(kind: ScenarioKind, n: usize, p: f64, seed: u64) -> Result<Self> {
        Self {
            kind,
            n,
            p,
            beta: 1.0,
            seed,
        }
        .validated()
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validated()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if self.n < 10 {
            return Err(Error::InvalidInput(format!("n = {} must be at least 10", self.n)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidInput(format!("p = {} must lie in (0, 1)", self.p)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidInput("beta must be finite".into()));
        }
        Ok(self)
    }

    pub fn sample(&self) -> LatentSample {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.kind.sample(self.n, self.p, self.beta, &mut rng)
    }
}

/// Draws the dataset described by `spec`; deterministic in `spec.seed`.
pub fn generate(spec: &ScenarioSpec) -> Dataset {
    spec.sample()
        .into_dataset()
        .expect("generated data are finite and n >= 10")
}

/// sigma1^2 / ((p n - 1) Var X): variance of the slope when memberships are known.
pub fn efficiency_bound(sigma1_sq: f64, p: f64, n: usize, var_x: f64) -> Result<f64> {
    let pn = p * n as f64;
    if !(pn > 1.0) {
        return Err(Error::InvalidBound { pn });
    }
    if !(var_x > 0.0) {
        return Err(Error::InvalidInput(format!("Var(X) = {var_x} must be positive")));
    }
    Ok(sigma1_sq / ((pn - 1.0) * var_x))
}
