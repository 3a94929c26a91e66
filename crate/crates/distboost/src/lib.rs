//! Distributional gradient boosting.
//!
//! Every parameter of a parametric response distribution (location, scale,
//! shape) gets its own Newton-boosted tree ensemble, trained on the link
//! scale. Training is two-step: each parameter is first fit with the others
//! frozen at their unconditional maximum-likelihood estimates, then all
//! parameters are refreshed cyclically until the global deviance settles.
//! Trained models expose full predictive distributions with quantiles,
//! interval coverage, CRPS/log-score evaluation and calibration
//! diagnostics.

pub mod booster;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod families;
pub mod math;
pub mod model_io;
pub mod scoring;
pub mod simulate;
pub mod trainer;
pub mod tree;
pub mod tune;

pub use booster::{boost, Ensemble};
pub use data::Dataset;
pub use error::{Error, Result};
pub use families::{expectile_grad_hess, gaic, Family, FamilySpec, Link, Support};
pub use model_io::{load_model, save_model};
pub use scoring::{
    crps, empirical_coverage, log_score, point_metrics, predict_params, predict_quantiles,
    score_report, PredictiveDistribution, ScoreReport,
};
pub use simulate::simulate_hetero;
pub use trainer::{
    global_deviance, train, train_step1, train_step2, LssModel, ParamConfig, Step2Config,
    TrainConfig,
};
pub use tree::{grow_tree, leaf_weight, split_gain, TreeNode, TreeParams};
pub use tune::{random_search, SearchSpace, TuneResult};
