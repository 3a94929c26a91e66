//! Regression trees for Newton boosting.
//!
//! Exact greedy split finding: at every node, all (column-sampled) features
//! are scanned over the midpoints between consecutive distinct sorted values,
//! and the split maximizing the second-order gain is taken. Missing values
//! are routed to whichever side gives the higher gain at training time and
//! that direction is stored on the node.
//!
//! Determinism contract: with a fixed rng, data and params the grown tree is
//! identical across runs. Equal-gain ties resolve to the lowest feature
//! index, then the lowest threshold (the scan visits candidates in exactly
//! that order and only a strictly better gain displaces the incumbent).

use crate::data::Dataset;
use crate::error::{Error, Result};
use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Where rows with a missing value of `feature` go.
        missing_left: bool,
        /// Realized gain of this split; feeds feature importance.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Link-scale weight, pre-shrinkage.
        weight: f64,
    },
}

impl TreeNode {
    /// Evaluate one feature row. `col_map[feature]` gives the position of a
    /// model feature inside `row`, so prediction survives column reordering.
    pub fn predict_row(&self, row: &[f64], col_map: &[usize]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let v = row[col_map[*feature]];
                    let go_left = if v.is_nan() { *missing_left } else { v < *threshold };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    /// Visit every split node.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum Σh required in each child.
    pub min_child_weight: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Per-leaf penalty subtracted from every split gain.
    pub gamma: f64,
    /// Per-tree row subsampling fraction, (0, 1].
    pub subsample: f64,
    /// Per-tree feature subsampling fraction, (0, 1].
    pub colsample_bytree: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_child_weight: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
        }
    }
}

/// Optimal Newton leaf weight −G/(H+λ), the argmin of G·w + ½(H+λ)w².
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64) -> f64 {
    -g_sum / (h_sum + lambda)
}

/// Gain of splitting a node with children stats (G_L,H_L) and (G_R,H_R):
/// ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ.
pub fn split_gain(g_l: f64, h_l: f64, g_r: f64, h_r: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (g_l * g_l / (h_l + lambda) + g_r * g_r / (h_r + lambda)
        - (g_l + g_r) * (g_l + g_r) / (h_l + h_r + lambda))
        - gamma
}

/// Per-feature presorted row lists for one node. `sorted[j]` holds the node's
/// rows with a present value of sampled feature j, ascending by value (row
/// index breaks value ties); `missing[j]` the rows where it is absent.
struct NodeColumns {
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

struct Grower<'a> {
    data: &'a Dataset,
    g: &'a [f64],
    h: &'a [f64],
    /// Sampled feature indices, ascending.
    features: Vec<usize>,
    params: &'a TreeParams,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    missing_left: bool,
}

impl<'a> Grower<'a> {
    fn node_totals(&self, rows: &[u32]) -> (f64, f64) {
        let mut gs = 0.0;
        let mut hs = 0.0;
        for &r in rows {
            gs += self.g[r as usize];
            hs += self.h[r as usize];
        }
        (gs, hs)
    }

    fn grow(&self, rows: Vec<u32>, cols: NodeColumns, depth: usize) -> TreeNode {
        let (g_tot, h_tot) = self.node_totals(&rows);
        let as_leaf = TreeNode::Leaf {
            weight: leaf_weight(g_tot, h_tot, self.params.lambda),
        };
        if depth >= self.params.max_depth || rows.len() < 2 {
            return as_leaf;
        }
        let best = match self.best_split(&cols, g_tot, h_tot) {
            Some(b) => b,
            None => return as_leaf,
        };

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&r| self.goes_left(r, best.feature, best.threshold, best.missing_left));
        let (left_cols, right_cols) = self.partition_columns(cols, &best);

        let left = self.grow(left_rows, left_cols, depth + 1);
        let right = self.grow(right_rows, right_cols, depth + 1);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            missing_left: best.missing_left,
            gain: best.gain,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn goes_left(&self, row: u32, feature: usize, threshold: f64, missing_left: bool) -> bool {
        let v = self.data.value(row as usize, feature);
        if v.is_nan() {
            missing_left
        } else {
            v < threshold
        }
    }

    fn best_split(&self, cols: &NodeColumns, g_tot: f64, h_tot: f64) -> Option<BestSplit> {
        let mcw = self.params.min_child_weight;
        let lambda = self.params.lambda;
        let gamma = self.params.gamma;
        let mut best: Option<BestSplit> = None;

        for (pos, &feature) in self.features.iter().enumerate() {
            let sorted = &cols.sorted[pos];
            if sorted.len() < 2 {
                continue;
            }
            let (g_miss, h_miss) = self.node_totals(&cols.missing[pos]);
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for i in 0..sorted.len() - 1 {
                let r = sorted[i] as usize;
                g_left += self.g[r];
                h_left += self.h[r];
                let v = self.data.value(r, feature);
                let v_next = self.data.value(sorted[i + 1] as usize, feature);
                if v_next <= v {
                    continue; // duplicate value, not a boundary
                }
                let threshold = 0.5 * (v + v_next);
                if !(threshold > v) {
                    continue; // adjacent floats, midpoint collapses
                }
                // Present-value child stats; the missing block is then tried
                // on each side.
                let g_right = g_tot - g_miss - g_left;
                let h_right = h_tot - h_miss - h_left;
                for &missing_left in &[true, false] {
                    let (gl, hl, gr, hr) = if missing_left {
                        (g_left + g_miss, h_left + h_miss, g_right, h_right)
                    } else {
                        (g_left, h_left, g_right + g_miss, h_right + h_miss)
                    };
                    if hl < mcw || hr < mcw {
                        continue;
                    }
                    let gain = split_gain(gl, hl, gr, hr, lambda, gamma);
                    if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                        best = Some(BestSplit {
                            gain,
                            feature,
                            threshold,
                            missing_left,
                        });
                    }
                }
            }
        }
        best
    }

    /// Stable-partition every feature's sorted list by the chosen split, so
    /// children inherit presorted columns without re-sorting.
    fn partition_columns(&self, cols: NodeColumns, best: &BestSplit) -> (NodeColumns, NodeColumns) {
        let mut left = NodeColumns {
            sorted: Vec::with_capacity(cols.sorted.len()),
            missing: Vec::with_capacity(cols.missing.len()),
        };
        let mut right = NodeColumns {
            sorted: Vec::with_capacity(cols.sorted.len()),
            missing: Vec::with_capacity(cols.missing.len()),
        };
        for list in cols.sorted {
            let (l, r) = list
                .into_iter()
                .partition(|&row| self.goes_left(row, best.feature, best.threshold, best.missing_left));
            left.sorted.push(l);
            right.sorted.push(r);
        }
        for list in cols.missing {
            let (l, r) = list
                .into_iter()
                .partition(|&row| self.goes_left(row, best.feature, best.threshold, best.missing_left));
            left.missing.push(l);
            right.missing.push(r);
        }
        (left, right)
    }
}

/// Grow one tree on (g, h) by exact greedy gain maximization. Row and column
/// subsampling per `params` draw from `rng`.
pub fn grow_tree(
    data: &Dataset,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
    rng: &mut dyn RngCore,
) -> Result<TreeNode> {
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    assert_eq!(g.len(), n, "gradient length must match rows");
    assert_eq!(h.len(), n, "hessian length must match rows");

    let rows: Vec<u32> = if params.subsample < 1.0 {
        let k = ((params.subsample * n as f64).floor() as usize).max(1);
        let mut picked: Vec<u32> = rand::seq::index::sample(rng, n, k)
            .iter()
            .map(|i| i as u32)
            .collect();
        picked.sort_unstable();
        picked
    } else {
        (0..n as u32).collect()
    };

    let p = data.n_cols();
    let features: Vec<usize> = if params.colsample_bytree < 1.0 && p > 0 {
        let k = ((params.colsample_bytree * p as f64).floor() as usize).max(1);
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, p, k).iter().collect();
        picked.sort_unstable();
        picked
    } else {
        (0..p).collect()
    };

    let mut cols = NodeColumns {
        sorted: Vec::with_capacity(features.len()),
        missing: Vec::with_capacity(features.len()),
    };
    for &f in &features {
        let mut present: Vec<u32> = Vec::new();
        let mut missing: Vec<u32> = Vec::new();
        for &r in &rows {
            if data.value(r as usize, f).is_nan() {
                missing.push(r);
            } else {
                present.push(r);
            }
        }
        present.sort_by(|&a, &b| {
            data.value(a as usize, f)
                .partial_cmp(&data.value(b as usize, f))
                .unwrap()
                .then(a.cmp(&b))
        });
        cols.sorted.push(present);
        cols.missing.push(missing);
    }

    let grower = Grower {
        data,
        g,
        h,
        features,
        params,
    };
    Ok(grower.grow(rows, cols, 0))
}
