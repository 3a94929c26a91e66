use super::{Family, Link, Support, HESSIAN_FLOOR};
use crate::error::{Error, Result};
use crate::math::{mean, variance_mle};
use rand::RngCore;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

const LN_2PI: f64 = 1.8378770664093453;

/// Log-Normal: ln y ~ N(μ, σ²). Identity link on μ, log link on σ.
#[derive(Clone, Copy, Debug)]
pub struct LogNormal;

impl Family for LogNormal {
    fn name(&self) -> &'static str {
        "lognormal"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu", "sigma"]
    }

    fn links(&self) -> &'static [Link] {
        &[Link::Identity, Link::Log]
    }

    fn support(&self) -> Support {
        Support::PositiveReal
    }

    fn loglik(&self, y: f64, theta: &[f64]) -> Result<f64> {
        self.check_support(y)?;
        let (mu, sigma) = (theta[0], theta[1]);
        let z = (y.ln() - mu) / sigma;
        Ok(-y.ln() - 0.5 * LN_2PI - sigma.ln() - 0.5 * z * z)
    }

    fn grad_hess(&self, y: f64, theta: &[f64], k: usize) -> Result<(f64, f64)> {
        self.check_support(y)?;
        let (mu, sigma) = (theta[0], theta[1]);
        let r = y.ln() - mu;
        let s2 = sigma * sigma;
        let (g, h) = match k {
            0 => (-r / s2, 1.0 / s2),
            1 => {
                let z2 = r * r / s2;
                (1.0 - z2, 2.0 * z2)
            }
            _ => panic!("lognormal has 2 parameters, got index {k}"),
        };
        Ok((g, h.max(HESSIAN_FLOOR)))
    }

    fn cdf(&self, y: f64, theta: &[f64]) -> Result<f64> {
        self.check_support(y)?;
        let d = statrs::distribution::Normal::new(theta[0], theta[1])
            .expect("valid lognormal parameters");
        Ok(d.cdf(y.ln()))
    }

    fn quantile(&self, p: f64, theta: &[f64]) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        let d = statrs::distribution::Normal::new(theta[0], theta[1])
            .expect("valid lognormal parameters");
        Ok(d.inverse_cdf(p).exp())
    }

    fn sample(&self, theta: &[f64], rng: &mut dyn RngCore, n: usize) -> Result<Vec<f64>> {
        let d = rand_distr::Normal::new(theta[0], theta[1])
            .map_err(|e| Error::Invalid(e.to_string()))?;
        Ok((0..n).map(|_| d.sample(rng).exp()).collect())
    }

    fn fit_unconditional(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for &yi in y {
            self.check_support(yi)?;
        }
        let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let mu = mean(&logs);
        let var = variance_mle(&logs);
        if var <= 0.0 {
            return Err(Error::DegenerateData);
        }
        Ok(vec![mu, var.sqrt()])
    }

    fn mean(&self, theta: &[f64]) -> f64 {
        (theta[0] + 0.5 * theta[1] * theta[1]).exp()
    }
}
