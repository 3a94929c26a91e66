//! Response distribution families.
//!
//! A family bundles everything the boosting loop needs: the log-likelihood,
//! a link function per parameter, analytic gradient/Hessian of the negative
//! log-likelihood on the link scale, cdf/quantile/sampler and the
//! unconditional maximum-likelihood fit used as training offsets.
//!
//! All derivatives are taken with respect to the link-scale value
//! η_k = link.forward(θ_k), holding the other parameters fixed, with the
//! negative sign convention so the booster minimizes.

mod expectile;
mod gamma;
mod lognormal;
mod normal;

pub use expectile::Expectile;
pub use gamma::Gamma;
pub use lognormal::LogNormal;
pub use normal::Normal;

use crate::error::{Error, Result};
use crate::math::pairwise_sum;
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Floor applied to Hessians so Newton leaf weights never divide by ~0.
pub const HESSIAN_FLOOR: f64 = 1e-6;

/// Monotone map between a parameter's natural domain and the unconstrained
/// scale the ensembles are trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Log,
}

impl Link {
    /// Natural scale θ → link scale η.
    pub fn forward(self, theta: f64) -> f64 {
        match self {
            Link::Identity => theta,
            Link::Log => theta.ln(),
        }
    }

    /// Link scale η → natural scale θ.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Log => eta.exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    RealLine,
    PositiveReal,
}

impl Support {
    pub fn contains(self, y: f64) -> bool {
        match self {
            Support::RealLine => y.is_finite(),
            Support::PositiveReal => y.is_finite() && y > 0.0,
        }
    }
}

/// A parametric response distribution, pluggable into the trainer.
pub trait Family: Send + Sync {
    fn name(&self) -> &'static str;
    fn param_names(&self) -> &'static [&'static str];
    fn links(&self) -> &'static [Link];
    fn support(&self) -> Support;

    fn n_params(&self) -> usize {
        self.param_names().len()
    }

    fn check_support(&self, y: f64) -> Result<()> {
        if self.support().contains(y) {
            Ok(())
        } else {
            Err(Error::OutsideSupport {
                family: self.name().to_string(),
                value: y,
            })
        }
    }

    /// ln f(y | θ), natural-scale parameters.
    fn loglik(&self, y: f64, theta: &[f64]) -> Result<f64>;

    /// (g, h) of the NEGATIVE log-likelihood w.r.t. η_k; h is floored at
    /// [`HESSIAN_FLOOR`].
    fn grad_hess(&self, y: f64, theta: &[f64], k: usize) -> Result<(f64, f64)>;

    /// Whether cdf/quantile/sample are available (false for the expectile
    /// pseudo-family).
    fn has_distribution(&self) -> bool {
        true
    }

    fn cdf(&self, y: f64, theta: &[f64]) -> Result<f64>;

    fn quantile(&self, p: f64, theta: &[f64]) -> Result<f64>;

    fn sample(&self, theta: &[f64], rng: &mut dyn RngCore, n: usize) -> Result<Vec<f64>>;

    /// Unconditional ML estimate over a response vector; used as the
    /// link-scale offsets of the ensembles.
    fn fit_unconditional(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// Point forecast (the distribution mean).
    fn mean(&self, theta: &[f64]) -> f64;
}

/// Sum log-likelihood over a response slice at a fixed θ.
pub fn total_loglik(family: &dyn Family, y: &[f64], theta: &[f64]) -> Result<f64> {
    let terms: Result<Vec<f64>> = y.iter().map(|&yi| family.loglik(yi, theta)).collect();
    Ok(pairwise_sum(&terms?))
}

/// Generalized Akaike information criterion of the unconditional fit:
/// −2·max-loglik + penalty·K. Penalty 2 is the AIC convention.
pub fn gaic(family: &dyn Family, y: &[f64], penalty: f64) -> Result<f64> {
    let theta = family.fit_unconditional(y)?;
    let ll = total_loglik(family, y, &theta)?;
    Ok(-2.0 * ll + penalty * family.n_params() as f64)
}

/// Serializable family identifier; the registry between model files, the CLI
/// and the trait objects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FamilySpec {
    Normal,
    Gamma,
    Lognormal,
    Expectile { tau: f64 },
}

impl FamilySpec {
    /// Parse a CLI-facing name. `tau` only applies to `expectile` and
    /// defaults to 0.5.
    pub fn parse(name: &str, tau: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(FamilySpec::Normal),
            "gamma" => Ok(FamilySpec::Gamma),
            "lognormal" => Ok(FamilySpec::Lognormal),
            "expectile" => {
                let tau = tau.unwrap_or(0.5);
                if !(tau > 0.0 && tau < 1.0) {
                    return Err(Error::InvalidProbability(tau));
                }
                Ok(FamilySpec::Expectile { tau })
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn build(&self) -> Box<dyn Family> {
        match self {
            FamilySpec::Normal => Box::new(Normal),
            FamilySpec::Gamma => Box::new(Gamma),
            FamilySpec::Lognormal => Box::new(LogNormal),
            FamilySpec::Expectile { tau } => Box::new(Expectile::new(*tau)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FamilySpec::Normal => "normal".to_string(),
            FamilySpec::Gamma => "gamma".to_string(),
            FamilySpec::Lognormal => "lognormal".to_string(),
            FamilySpec::Expectile { tau } => format!("expectile(tau={tau})"),
        }
    }
}

/// Asymmetric-least-squares gradient/Hessian, exposed on its own because the
/// expectile loss is also useful outside the pseudo-family wrapper.
///
/// Loss is ℓ_τ(y, f) = |τ − 1(y < f)|·(y − f)²; returns the derivatives of
/// ℓ_τ w.r.t. f.
pub fn expectile_grad_hess(tau: f64, y: f64, f: f64) -> (f64, f64) {
    let w = if y >= f { tau } else { 1.0 - tau };
    (-2.0 * w * (y - f), 2.0 * w)
}
