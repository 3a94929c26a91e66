//! Two-step training of one Newton-boosted ensemble per distribution
//! parameter.
//!
//! Step 1 fits each parameter's ensemble independently, with every other
//! parameter frozen at its unconditional maximum-likelihood estimate (the
//! link-scale offset of the ensemble). Step 2 then cycles over the
//! parameters, appending trees against derivatives taken at the *current*
//! estimates of all parameters, until the relative change in global deviance
//! drops below epsilon or max_iter cycles have run.

use crate::booster::{boost, Ensemble};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::{Family, FamilySpec, Link};
use crate::math::pairwise_sum;
use crate::tree::{grow_tree, TreeParams};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamConfig {
    pub rounds: usize,
    pub eta: f64,
    #[serde(flatten)]
    pub tree: TreeParams,
}

impl Default for ParamConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            eta: 0.1,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Config {
    /// Stop once |Δdeviance| / |deviance| falls below this.
    pub epsilon: f64,
    /// Hard cap on update cycles.
    pub max_iter: usize,
    /// Trees appended per parameter per cycle.
    pub rounds_per_update: usize,
}

impl Default for Step2Config {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iter: 100,
            rounds_per_update: 1,
        }
    }
}

/// Optional per-parameter early stopping on a held-out split during Step 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// One entry per distribution parameter; a single entry is broadcast.
    pub per_param: Vec<ParamConfig>,
    pub step2: Step2Config,
    #[serde(default)]
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            per_param: vec![ParamConfig::default()],
            step2: Step2Config::default(),
            early_stopping: None,
        }
    }
}

impl TrainConfig {
    /// Same knobs for every parameter.
    pub fn shared(cfg: ParamConfig) -> Self {
        Self {
            per_param: vec![cfg],
            ..Self::default()
        }
    }

    fn resolved(&self, k: usize) -> Result<Vec<ParamConfig>> {
        if self.per_param.len() == k {
            Ok(self.per_param.clone())
        } else if self.per_param.len() == 1 {
            Ok(vec![self.per_param[0].clone(); k])
        } else {
            Err(Error::Invalid(format!(
                "config has {} parameter entries, family has {} parameters",
                self.per_param.len(),
                k
            )))
        }
    }
}

/// A trained distributional boosting model: K link-scale ensembles plus the
/// unconditional-fit offsets they started from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LssModel {
    pub family: FamilySpec,
    pub feature_names: Vec<String>,
    pub ensembles: Vec<Ensemble>,
    /// Link-scale unconditional ML estimates.
    pub offsets: Vec<f64>,
    pub config: TrainConfig,
    pub seed: u64,
    /// Step-2 cycles actually run.
    pub step2_rounds_used: usize,
    /// Deviance after Step 1, then after every Step-2 cycle.
    pub deviance_trace: Vec<f64>,
}

impl LssModel {
    pub fn build_family(&self) -> Box<dyn Family> {
        self.family.build()
    }

    /// Map model feature index → column index of `data`; errors list every
    /// model column the data lacks.
    pub fn align_columns(&self, data: &Dataset) -> Result<Vec<usize>> {
        let mut map = Vec::with_capacity(self.feature_names.len());
        let mut missing = Vec::new();
        for name in &self.feature_names {
            match data.feature_index(name) {
                Ok(i) => map.push(i),
                Err(_) => missing.push(name.clone()),
            }
        }
        if missing.is_empty() {
            Ok(map)
        } else {
            Err(Error::ColumnMismatch { missing })
        }
    }

    /// Per-parameter link-scale predictions.
    pub fn predict_link(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        let map = self.align_columns(data)?;
        Ok(self
            .ensembles
            .iter()
            .map(|e| e.predict_with_map(data, &map))
            .collect())
    }
}

fn link_theta(links: &[Link], link_preds: &[Vec<f64>], row: usize, buf: &mut [f64]) {
    for (j, link) in links.iter().enumerate() {
        buf[j] = link.inverse(link_preds[j][row]);
    }
}

fn deviance_of(family: &dyn Family, links: &[Link], y: &[f64], link_preds: &[Vec<f64>]) -> Result<f64> {
    let k = links.len();
    let mut theta = vec![0.0; k];
    let mut terms = Vec::with_capacity(y.len());
    for (row, &yi) in y.iter().enumerate() {
        link_theta(links, link_preds, row, &mut theta);
        terms.push(family.loglik(yi, &theta)?);
    }
    Ok(-2.0 * pairwise_sum(&terms))
}

/// −2 Σ ln f(y_i | θ̂(x_i)) under the model's predictions.
pub fn global_deviance(model: &LssModel, data: &Dataset) -> Result<f64> {
    let family = model.build_family();
    let link_preds = model.predict_link(data)?;
    deviance_of(family.as_ref(), family.links(), data.y(), &link_preds)
}

/// Step 1: one ensemble per parameter, others frozen at the unconditional
/// fit.
pub fn train_step1(
    family_spec: &FamilySpec,
    data: &Dataset,
    config: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Result<LssModel> {
    let family = family_spec.build();
    let k = family.n_params();
    let per_param = config.resolved(k)?;
    let links = family.links();

    let theta_hat = family.fit_unconditional(data.y())?;
    let offsets: Vec<f64> = (0..k).map(|j| links[j].forward(theta_hat[j])).collect();

    // Independent derived streams per parameter, so the K fits do not
    // interact through the rng.
    let seeds: Vec<u64> = (0..k).map(|_| rng.next_u64()).collect();

    let mut ensembles = Vec::with_capacity(k);
    for j in 0..k {
        let cfg = &per_param[j];
        let mut param_rng = ChaCha8Rng::seed_from_u64(seeds[j]);
        let ensemble = if cfg.rounds == 0 {
            Ensemble::new(cfg.eta, offsets[j])
        } else {
            let y = data.y();
            let mut theta = theta_hat.clone();
            match &config.early_stopping {
                None => boost(
                    data,
                    offsets[j],
                    cfg.eta,
                    cfg.rounds,
                    &cfg.tree,
                    |row, pred| {
                        theta[j] = links[j].inverse(pred);
                        family.grad_hess(y[row], &theta, j)
                    },
                    &mut param_rng,
                )?,
                Some(es) => boost_with_validation(
                    family.as_ref(),
                    data,
                    &theta_hat,
                    j,
                    offsets[j],
                    cfg,
                    es,
                    &mut param_rng,
                )?,
            }
        };
        ensembles.push(ensemble);
    }

    let mut model = LssModel {
        family: family_spec.clone(),
        feature_names: data.feature_names().to_vec(),
        ensembles,
        offsets,
        config: config.clone(),
        seed: 0,
        step2_rounds_used: 0,
        deviance_trace: Vec::new(),
    };
    let dev = global_deviance(&model, data)?;
    model.deviance_trace.push(dev);
    Ok(model)
}

/// Step-1 boosting with held-out monitoring: trees train on a subsample and
/// the ensemble is truncated at the best held-out deviance.
#[allow(clippy::too_many_arguments)]
fn boost_with_validation(
    family: &dyn Family,
    data: &Dataset,
    theta_hat: &[f64],
    param: usize,
    offset: f64,
    cfg: &ParamConfig,
    es: &EarlyStopping,
    rng: &mut ChaCha8Rng,
) -> Result<Ensemble> {
    let n = data.n_rows();
    let n_val = ((es.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let (val_rows, train_rows) = order.split_at(n_val);
    let train = data.subset(train_rows)?;
    let val = data.subset(val_rows)?;
    let links = family.links();
    let identity: Vec<usize> = (0..data.n_cols()).collect();

    let mut ensemble = Ensemble::new(cfg.eta, offset);
    let mut train_preds = vec![offset; train.n_rows()];
    let mut val_preds = vec![offset; val.n_rows()];
    let mut g = vec![0.0; train.n_rows()];
    let mut h = vec![0.0; train.n_rows()];
    let mut theta = theta_hat.to_vec();

    let val_loss = |preds: &[f64], theta: &mut Vec<f64>| -> Result<f64> {
        let mut acc = 0.0;
        for (row, &yi) in val.y().iter().enumerate() {
            theta[param] = links[param].inverse(preds[row]);
            acc -= family.loglik(yi, theta)?;
        }
        Ok(acc)
    };

    let mut best_loss = val_loss(&val_preds, &mut theta)?;
    let mut best_len = 0usize;
    for m in 0..cfg.rounds {
        for (row, &yi) in train.y().iter().enumerate() {
            theta[param] = links[param].inverse(train_preds[row]);
            let (gi, hi) = family.grad_hess(yi, &theta, param)?;
            if !gi.is_finite() || !hi.is_finite() {
                return Err(Error::NonFiniteGradient { row });
            }
            g[row] = gi;
            h[row] = hi;
        }
        let tree = grow_tree(&train, &g, &h, &cfg.tree, rng)?;
        for (row, pred) in train_preds.iter_mut().enumerate() {
            *pred += cfg.eta * tree.predict_row(train.row(row), &identity);
        }
        for (row, pred) in val_preds.iter_mut().enumerate() {
            *pred += cfg.eta * tree.predict_row(val.row(row), &identity);
        }
        ensemble.trees.push(tree);
        let loss = val_loss(&val_preds, &mut theta)?;
        if loss < best_loss {
            best_loss = loss;
            best_len = m + 1;
        } else if m + 1 - best_len >= es.patience {
            break;
        }
    }
    ensemble.trees.truncate(best_len);
    Ok(ensemble)
}

/// Step 2: cyclic refresh of each parameter against current estimates of the
/// others, stopping on the relative-deviance rule.
pub fn train_step2(
    mut model: LssModel,
    data: &Dataset,
    cfg: &Step2Config,
    rng: &mut dyn RngCore,
) -> Result<LssModel> {
    // The relative-deviance diff needs a previous cycle to compare against;
    // an infinite epsilon therefore short-circuits before any cycle runs.
    if cfg.max_iter == 0 || !cfg.epsilon.is_finite() {
        return Ok(model);
    }
    let family = model.build_family();
    let k = family.n_params();
    let per_param = model.config.resolved(k)?;
    let links = family.links();
    let y = data.y();
    let n = data.n_rows();
    let identity: Vec<usize> = (0..data.n_cols()).collect();

    let mut link_preds = model.predict_link(data)?;
    let mut prev_dev = match model.deviance_trace.last() {
        Some(&d) => d,
        None => deviance_of(family.as_ref(), links, y, &link_preds)?,
    };
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut theta = vec![0.0; k];

    for cycle in 0..cfg.max_iter {
        for j in 0..k {
            let pcfg = &per_param[j];
            for _ in 0..cfg.rounds_per_update {
                // Staircase update: derivatives see every parameter already
                // refreshed within this cycle.
                for row in 0..n {
                    link_theta(links, &link_preds, row, &mut theta);
                    let (gi, hi) = family.grad_hess(y[row], &theta, j)?;
                    if !gi.is_finite() || !hi.is_finite() {
                        return Err(Error::NonFiniteGradient { row });
                    }
                    g[row] = gi;
                    h[row] = hi;
                }
                let tree = grow_tree(data, &g, &h, &pcfg.tree, rng)?;
                for row in 0..n {
                    link_preds[j][row] += pcfg.eta * tree.predict_row(data.row(row), &identity);
                }
                model.ensembles[j].trees.push(tree);
            }
        }
        let dev = deviance_of(family.as_ref(), links, y, &link_preds)?;
        if !dev.is_finite() {
            return Err(Error::NonFiniteDeviance { cycle });
        }
        let diff = (dev - prev_dev).abs() / prev_dev.abs();
        model.deviance_trace.push(dev);
        model.step2_rounds_used = cycle + 1;
        prev_dev = dev;
        if diff < cfg.epsilon {
            break;
        }
    }
    Ok(model)
}

/// Algorithm end to end: Step 1 then Step 2.
pub fn train(
    family_spec: &FamilySpec,
    data: &Dataset,
    config: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Result<LssModel> {
    let model = train_step1(family_spec, data, config, rng)?;
    let step2 = config.step2.clone();
    train_step2(model, data, &step2, rng)
}
