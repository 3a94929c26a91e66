//! Seeded random search over the six boosting knobs, scored by K-fold
//! cross-validated global deviance of a Step-1 fit.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::trainer::{global_deviance, train_step1, ParamConfig, TrainConfig};
use crate::tree::TreeParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Log-uniform.
    pub eta: (f64, f64),
    pub gamma: (f64, f64),
    pub max_depth: (usize, usize),
    /// Log-uniform.
    pub min_child_weight: (f64, f64),
    pub subsample: (f64, f64),
    pub colsample_bytree: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            eta: (0.01, 0.3),
            gamma: (0.0, 5.0),
            max_depth: (1, 10),
            min_child_weight: (0.1, 20.0),
            subsample: (0.5, 1.0),
            colsample_bytree: (0.5, 1.0),
        }
    }
}

impl SearchSpace {
    pub fn sample(&self, rounds: usize, rng: &mut ChaCha8Rng) -> ParamConfig {
        let log_uniform = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| -> f64 {
            (rng.random_range(lo.ln()..hi.ln())).exp()
        };
        ParamConfig {
            rounds,
            eta: log_uniform(self.eta.0, self.eta.1, rng),
            tree: TreeParams {
                max_depth: rng.random_range(self.max_depth.0..=self.max_depth.1),
                min_child_weight: log_uniform(self.min_child_weight.0, self.min_child_weight.1, rng),
                lambda: TreeParams::default().lambda,
                gamma: rng.random_range(self.gamma.0..self.gamma.1),
                subsample: rng.random_range(self.subsample.0..self.subsample.1),
                colsample_bytree: rng.random_range(self.colsample_bytree.0..self.colsample_bytree.1),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub config: ParamConfig,
    /// Mean held-out deviance across folds; None for a failed trial.
    pub cv_deviance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_index: usize,
    pub best: ParamConfig,
    pub trials: Vec<TrialRecord>,
    /// Whether the time budget cut the search short.
    pub budget_exhausted: bool,
}

/// Deterministic fold labels: rows shuffled by seed, then striped over the
/// folds. Partitions 0..n exactly.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut labels = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        labels[row] = pos % folds;
    }
    labels
}

/// Uniform random search: up to `n_trials` configs, each scored by K-fold CV
/// of a Step-1 fit on held-out global deviance. Stops early once the time
/// budget is exhausted. Fully deterministic given `seed` apart from the time
/// cutoff, which is recorded in the result.
#[allow(clippy::too_many_arguments)]
pub fn random_search(
    family: &FamilySpec,
    data: &Dataset,
    space: &SearchSpace,
    n_trials: usize,
    folds: usize,
    rounds: usize,
    time_budget: Option<Duration>,
    seed: u64,
) -> Result<TuneResult> {
    if folds < 2 {
        return Err(Error::Invalid(format!("need at least 2 folds, got {folds}")));
    }
    if n_trials == 0 {
        return Err(Error::Invalid("need at least 1 trial".into()));
    }
    let n = data.n_rows();
    if n < folds {
        return Err(Error::Invalid(format!("{n} rows cannot fill {folds} folds")));
    }
    let labels = fold_assignment(n, folds, seed);
    let started = Instant::now();
    let mut config_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0ff_ee00_0001);

    let mut trials = Vec::with_capacity(n_trials);
    let mut budget_exhausted = false;
    for index in 0..n_trials {
        // Sample before the budget check so the config stream is a pure
        // function of (seed, index).
        let config = space.sample(rounds, &mut config_rng);
        if let Some(budget) = time_budget {
            if index > 0 && started.elapsed() >= budget {
                budget_exhausted = true;
                break;
            }
        }
        match cv_deviance(family, data, &labels, folds, &config, seed, index) {
            Ok(dev) => trials.push(TrialRecord {
                index,
                config,
                cv_deviance: Some(dev),
                error: None,
            }),
            Err(e) => trials.push(TrialRecord {
                index,
                config,
                cv_deviance: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let best = trials
        .iter()
        .filter(|t| t.cv_deviance.is_some())
        .min_by(|a, b| {
            a.cv_deviance
                .unwrap()
                .partial_cmp(&b.cv_deviance.unwrap())
                .unwrap()
                .then(a.index.cmp(&b.index))
        })
        .ok_or_else(|| Error::Invalid("every tuning trial failed".into()))?;
    Ok(TuneResult {
        best_index: best.index,
        best: best.config.clone(),
        trials: trials.clone(),
        budget_exhausted,
    })
}

/// Mean held-out deviance of one config across the folds.
pub fn cv_deviance(
    family: &FamilySpec,
    data: &Dataset,
    labels: &[usize],
    folds: usize,
    config: &ParamConfig,
    seed: u64,
    trial: usize,
) -> Result<f64> {
    let train_cfg = TrainConfig::shared(config.clone());
    let mut total = 0.0;
    for fold in 0..folds {
        let train_rows: Vec<usize> = (0..data.n_rows()).filter(|&r| labels[r] != fold).collect();
        let test_rows: Vec<usize> = (0..data.n_rows()).filter(|&r| labels[r] == fold).collect();
        let train = data.subset(&train_rows)?;
        let test = data.subset(&test_rows)?;
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (fold as u64) << 48,
        );
        let model = train_step1(family, &train, &train_cfg, &mut rng)?;
        total += global_deviance(&model, &test)? / test.n_rows() as f64;
    }
    Ok(total / folds as f64)
}
