//! Newton boosting: accumulate shrunken trees against recomputed (g, h).

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tree::{grow_tree, TreeNode, TreeParams};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// An additive tree model on the link scale:
/// predict(x) = base_offset + η · Σ_m tree_m(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub trees: Vec<TreeNode>,
    pub eta: f64,
    pub base_offset: f64,
}

impl Ensemble {
    pub fn new(eta: f64, base_offset: f64) -> Self {
        Self {
            trees: Vec::new(),
            eta,
            base_offset,
        }
    }

    pub fn predict_row(&self, row: &[f64], col_map: &[usize]) -> f64 {
        let mut acc = self.base_offset;
        for tree in &self.trees {
            acc += self.eta * tree.predict_row(row, col_map);
        }
        acc
    }

    /// Link-scale predictions, columns taken in dataset order.
    pub fn predict(&self, data: &Dataset) -> Vec<f64> {
        let map: Vec<usize> = (0..data.n_cols()).collect();
        self.predict_with_map(data, &map)
    }

    /// Link-scale predictions with an explicit model-feature → data-column
    /// map.
    pub fn predict_with_map(&self, data: &Dataset, col_map: &[usize]) -> Vec<f64> {
        (0..data.n_rows())
            .map(|r| self.predict_row(data.row(r), col_map))
            .collect()
    }
}

/// Run `rounds` Newton boosting iterations. `signal(row, current_prediction)`
/// returns the per-row (g, h) of the loss at the current link-scale
/// prediction; it is re-evaluated before every round.
pub fn boost(
    data: &Dataset,
    base_offset: f64,
    eta: f64,
    rounds: usize,
    params: &TreeParams,
    mut signal: impl FnMut(usize, f64) -> Result<(f64, f64)>,
    rng: &mut dyn RngCore,
) -> Result<Ensemble> {
    if rounds == 0 {
        return Err(Error::ZeroRounds);
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    let n = data.n_rows();
    let mut ensemble = Ensemble::new(eta, base_offset);
    let mut preds = vec![base_offset; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let identity: Vec<usize> = (0..data.n_cols()).collect();

    for _ in 0..rounds {
        for row in 0..n {
            let (gi, hi) = signal(row, preds[row])?;
            if !gi.is_finite() || !hi.is_finite() {
                return Err(Error::NonFiniteGradient { row });
            }
            g[row] = gi;
            h[row] = hi;
        }
        let tree = grow_tree(data, &g, &h, params, rng)?;
        for row in 0..n {
            preds[row] += eta * tree.predict_row(data.row(row), &identity);
        }
        ensemble.trees.push(tree);
    }
    Ok(ensemble)
}
