use super::{Family, Link, Support, HESSIAN_FLOOR};
use crate::error::{Error, Result};
use crate::math::{mean, variance_mle};
use rand::RngCore;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

const LN_2PI: f64 = 1.8378770664093453;

/// Normal distribution N(μ, σ²) with identity link on μ and log link on σ.
#[derive(Clone, Copy, Debug)]
pub struct Normal;

impl Normal {
    fn dist(theta: &[f64]) -> statrs::distribution::Normal {
        statrs::distribution::Normal::new(theta[0], theta[1]).expect("valid normal parameters")
    }
}

impl Family for Normal {
    fn name(&self) -> &'static str {
        "normal"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu", "sigma"]
    }

    fn links(&self) -> &'static [Link] {
        &[Link::Identity, Link::Log]
    }

    fn support(&self) -> Support {
        Support::RealLine
    }

    fn loglik(&self, y: f64, theta: &[f64]) -> Result<f64> {
        self.check_support(y)?;
        let (mu, sigma) = (theta[0], theta[1]);
        let z = (y - mu) / sigma;
        Ok(-0.5 * LN_2PI - sigma.ln() - 0.5 * z * z)
    }

    fn grad_hess(&self, y: f64, theta: &[f64], k: usize) -> Result<(f64, f64)> {
        self.check_support(y)?;
        let (mu, sigma) = (theta[0], theta[1]);
        let r = y - mu;
        let s2 = sigma * sigma;
        let (g, h) = match k {
            // η = μ
            0 => (-r / s2, 1.0 / s2),
            // η = ln σ
            1 => {
                let z2 = r * r / s2;
                (1.0 - z2, 2.0 * z2)
            }
            _ => panic!("normal has 2 parameters, got index {k}"),
        };
        Ok((g, h.max(HESSIAN_FLOOR)))
    }

    fn cdf(&self, y: f64, theta: &[f64]) -> Result<f64> {
        self.check_support(y)?;
        Ok(Self::dist(theta).cdf(y))
    }

    fn quantile(&self, p: f64, theta: &[f64]) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self::dist(theta).inverse_cdf(p))
    }

    fn sample(&self, theta: &[f64], rng: &mut dyn RngCore, n: usize) -> Result<Vec<f64>> {
        let d = rand_distr::Normal::new(theta[0], theta[1])
            .map_err(|e| Error::Invalid(e.to_string()))?;
        Ok((0..n).map(|_| d.sample(rng)).collect())
    }

    fn fit_unconditional(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for &yi in y {
            self.check_support(yi)?;
        }
        let mu = mean(y);
        let var = variance_mle(y);
        if var <= 0.0 {
            return Err(Error::DegenerateData);
        }
        Ok(vec![mu, var.sqrt()])
    }

    fn mean(&self, theta: &[f64]) -> f64 {
        theta[0]
    }
}
