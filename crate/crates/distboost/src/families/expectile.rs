use super::{expectile_grad_hess, Family, Link, Support, HESSIAN_FLOOR};
use crate::error::{Error, Result};
use crate::math::mean;
use rand::RngCore;

/// One-parameter pseudo-family for expectile regression.
///
/// The "log-likelihood" is the negated asymmetric least-squares loss, so the
/// deviance machinery still works, but there is no predictive distribution:
/// predictions are the expectile curve only.
#[derive(Clone, Copy, Debug)]
pub struct Expectile {
    tau: f64,
}

impl Expectile {
    pub fn new(tau: f64) -> Self {
        assert!(tau > 0.0 && tau < 1.0, "tau must lie in (0,1), got {tau}");
        Self { tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

impl Family for Expectile {
    fn name(&self) -> &'static str {
        "expectile"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["e"]
    }

    fn links(&self) -> &'static [Link] {
        &[Link::Identity]
    }

    fn support(&self) -> Support {
        Support::RealLine
    }

    fn has_distribution(&self) -> bool {
        false
    }

    fn loglik(&self, y: f64, theta: &[f64]) -> Result<f64> {
        self.check_support(y)?;
        let f = theta[0];
        let w = if y >= f { self.tau } else { 1.0 - self.tau };
        Ok(-w * (y - f) * (y - f))
    }

    fn grad_hess(&self, y: f64, theta: &[f64], k: usize) -> Result<(f64, f64)> {
        self.check_support(y)?;
        assert_eq!(k, 0, "expectile has a single parameter");
        let (g, h) = expectile_grad_hess(self.tau, y, theta[0]);
        Ok((g, h.max(HESSIAN_FLOOR)))
    }

    fn cdf(&self, _y: f64, _theta: &[f64]) -> Result<f64> {
        Err(Error::NoPredictiveDistribution(self.name().to_string()))
    }

    fn quantile(&self, _p: f64, _theta: &[f64]) -> Result<f64> {
        Err(Error::NoPredictiveDistribution(self.name().to_string()))
    }

    fn sample(&self, _theta: &[f64], _rng: &mut dyn RngCore, _n: usize) -> Result<Vec<f64>> {
        Err(Error::NoPredictiveDistribution(self.name().to_string()))
    }

    fn fit_unconditional(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        // Fixed-point iteration on the weighted-mean characterization of the
        // τ-expectile; at τ=0.5 this is the mean after one step.
        let mut e = mean(y);
        for _ in 0..500 {
            let mut num = 0.0;
            let mut den = 0.0;
            for &yi in y {
                let w = if yi >= e { self.tau } else { 1.0 - self.tau };
                num += w * yi;
                den += w;
            }
            let next = num / den;
            let done = (next - e).abs() < 1e-13 * e.abs().max(1.0);
            e = next;
            if done {
                break;
            }
        }
        Ok(vec![e])
    }

    fn mean(&self, theta: &[f64]) -> f64 {
        theta[0]
    }
}
