//! Heteroskedastic benchmark generator: y ~ N(10, s(x)²) with
//! s(x) = 1 + 4·1(0.3 < x < 0.5) + 2·1(x > 0.7) read as the standard
//! deviation, plus ten uniform noise features. Pass
//! `scale_is_variance = true` for the alternative reading where s(x) is the
//! variance.

use crate::data::Dataset;
use crate::error::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const N_NOISE: usize = 10;

/// Scale factor at x: {1, 5, 3} over the three regimes (sd reading).
pub fn scale_at(x: f64) -> f64 {
    let mut s = 1.0;
    if x > 0.3 && x < 0.5 {
        s += 4.0;
    }
    if x > 0.7 {
        s += 2.0;
    }
    s
}

/// True (μ, σ) at x under the chosen reading.
pub fn true_params(x: f64, scale_is_variance: bool) -> (f64, f64) {
    let s = scale_at(x);
    let sd = if scale_is_variance { s.sqrt() } else { s };
    (10.0, sd)
}

pub fn simulate_hetero(n: usize, seed: u64, scale_is_variance: bool) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = vec!["x".to_string()];
    for i in 1..=N_NOISE {
        names.push(format!("X{i}"));
    }
    let mut features = Vec::with_capacity(n * (1 + N_NOISE));
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(0.0..1.0);
        features.push(x);
        for _ in 0..N_NOISE {
            features.push(rng.random_range(0.0..1.0));
        }
        let (mu, sd) = true_params(x, scale_is_variance);
        let z: f64 = StandardNormal.sample(&mut rng);
        y.push(mu + sd * z);
    }
    Dataset::from_parts(names, features, "y".to_string(), y)
}
