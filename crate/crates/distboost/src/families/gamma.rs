use super::{Family, Link, Support, HESSIAN_FLOOR};
use crate::error::{Error, Result};
use crate::math::{mean, trigamma, variance_mle};
use rand::RngCore;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;
use statrs::function::gamma::{digamma, ln_gamma};

/// Gamma in mean/dispersion form: shape a = 1/σ², mean μ, so
/// Var(y) = σ²μ². Log links on both parameters.
#[derive(Clone, Copy, Debug)]
pub struct Gamma;

fn shape(sigma: f64) -> f64 {
    1.0 / (sigma * sigma)
}

impl Gamma {
    fn dist(theta: &[f64]) -> statrs::distribution::Gamma {
        let a = shape(theta[1]);
        statrs::distribution::Gamma::new(a, a / theta[0]).expect("valid gamma parameters")
    }
}

impl Family for Gamma {
    fn name(&self) -> &'static str {
        "gamma"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu", "sigma"]
    }

    fn links(&self) -> &'static [Link] {
        &[Link::Log, Link::Log]
    }

    fn support(&self) -> Support {
        Support::PositiveReal
    }

    fn loglik(&self, y: f64, theta: &[f64]) -> Result<f64> {
        self.check_support(y)?;
        let (mu, sigma) = (theta[0], theta[1]);
        let a = shape(sigma);
        Ok(a * (a.ln() - mu.ln()) + (a - 1.0) * y.ln() - a * y / mu - ln_gamma(a))
    }

    fn grad_hess(&self, y: f64, theta: &[f64], k: usize) -> Result<(f64, f64)> {
        self.check_support(y)?;
        let (mu, sigma) = (theta[0], theta[1]);
        let a = shape(sigma);
        let (g, h) = match k {
            // η = ln μ: dℓ/dη = a(y/μ − 1), d²ℓ/dη² = −a·y/μ
            0 => (-a * (y / mu - 1.0), a * y / mu),
            // η = ln σ with a = e^{−2η}
            1 => {
                let dl_da = a.ln() + 1.0 - mu.ln() + y.ln() - y / mu - digamma(a);
                let d2l_da2 = 1.0 / a - trigamma(a);
                let dl_deta = -2.0 * a * dl_da;
                let d2l_deta2 = 4.0 * a * dl_da + 4.0 * a * a * d2l_da2;
                (-dl_deta, -d2l_deta2)
            }
            _ => panic!("gamma has 2 parameters, got index {k}"),
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
        // Bisection on the log scale. The generic statrs inverse searches on
        // the absolute scale and cannot resolve the tiny lower quantiles that
        // small shapes produce.
        let d = Self::dist(theta);
        let mut lo = f64::MIN_POSITIVE.ln();
        let mut hi = theta[0].ln().max(0.0) + 1.0;
        while d.cdf(hi.exp()) < p {
            hi += 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d.cdf(mid.exp()) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    fn sample(&self, theta: &[f64], rng: &mut dyn RngCore, n: usize) -> Result<Vec<f64>> {
        let a = shape(theta[1]);
        let d = rand_distr::Gamma::new(a, theta[0] / a).map_err(|e| Error::Invalid(e.to_string()))?;
        Ok((0..n).map(|_| d.sample(rng)).collect())
    }

    fn fit_unconditional(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for &yi in y {
            self.check_support(yi)?;
        }
        if variance_mle(y) <= 0.0 {
            return Err(Error::DegenerateData);
        }
        let mu = mean(y);
        let mean_log = mean(&y.iter().map(|v| v.ln()).collect::<Vec<_>>());
        // MLE of the shape solves ln a − ψ(a) = ln ȳ − mean(ln y).
        let s = mu.ln() - mean_log;
        let mut a = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
        for _ in 0..200 {
            let f = a.ln() - digamma(a) - s;
            let fp = 1.0 / a - trigamma(a);
            let step = f / fp;
            a -= step;
            if a <= 0.0 {
                a = 1e-8;
            }
            if step.abs() < 1e-12 * a.max(1.0) {
                break;
            }
        }
        Ok(vec![mu, 1.0 / a.sqrt()])
    }

    fn mean(&self, theta: &[f64]) -> f64 {
        theta[0]
    }
}
