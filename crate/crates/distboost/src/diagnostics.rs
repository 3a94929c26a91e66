//! Model criticism: quantile residuals, gain-based feature importance per
//! distribution parameter, and partial-dependence grids.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scoring::{predict_params, PredictiveDistribution};
use crate::trainer::LssModel;
use statrs::distribution::ContinuousCDF;

/// Quantile residuals r_i = Φ⁻¹(F(y_i | θ̂(x_i))) with a KS statistic
/// against the standard Normal. Residuals are standard Normal when the model
/// matches the data-generating distribution.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    /// sup |F_empirical − Φ|.
    pub ks_statistic: f64,
    /// (min, q25, median, q75, max) of the residuals.
    pub summary: [f64; 5],
}

const U_CLAMP: f64 = 1e-10;

pub fn quantile_residuals(model: &LssModel, data: &Dataset) -> Result<ResidualReport> {
    let pred = predict_params(model, data)?;
    residuals_of(&pred, data.y())
}

/// Residuals straight from parameter vectors; also serves the
/// true-parameter oracle in calibration checks.
pub fn residuals_of(pred: &PredictiveDistribution, y: &[f64]) -> Result<ResidualReport> {
    let family = pred.family.build();
    if !family.has_distribution() {
        return Err(Error::NoPredictiveDistribution(family.name().to_string()));
    }
    let std_normal = statrs::distribution::Normal::standard();
    let mut residuals = Vec::with_capacity(y.len());
    for (theta, &yi) in pred.params.iter().zip(y) {
        let u = family.cdf(yi, theta)?.clamp(U_CLAMP, 1.0 - U_CLAMP);
        residuals.push(std_normal.inverse_cdf(u));
    }

    let mut sorted = residuals.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &r) in sorted.iter().enumerate() {
        let cdf = std_normal.cdf(r);
        let d_plus = (i as f64 + 1.0) / n - cdf;
        let d_minus = cdf - i as f64 / n;
        ks = ks.max(d_plus).max(d_minus);
    }
    let quant = |p: f64| -> f64 {
        let idx = (p * (n - 1.0)).round() as usize;
        sorted[idx]
    };
    let summary = [sorted[0], quant(0.25), quant(0.5), quant(0.75), sorted[sorted.len() - 1]];
    Ok(ResidualReport {
        residuals,
        ks_statistic: ks,
        summary,
    })
}

/// Per-parameter split-gain importance, normalized to sum 1; empty when an
/// ensemble never split.
#[derive(Clone, Debug)]
pub struct ImportanceTable {
    /// (parameter name, descending [(feature name, share)]).
    pub per_param: Vec<(String, Vec<(String, f64)>)>,
}

pub fn feature_importance(model: &LssModel) -> ImportanceTable {
    let family = model.build_family();
    let names = model.feature_names.clone();
    let mut per_param = Vec::with_capacity(model.ensembles.len());
    for (k, ensemble) in model.ensembles.iter().enumerate() {
        let mut gains = vec![0.0; names.len()];
        for tree in &ensemble.trees {
            tree.for_each_split(&mut |feature, gain| gains[feature] += gain);
        }
        let total: f64 = gains.iter().sum();
        let mut entries: Vec<(String, f64)> = if total > 0.0 {
            names
                .iter()
                .zip(&gains)
                .filter(|(_, &g)| g > 0.0)
                .map(|(n, &g)| (n.clone(), g / total))
                .collect()
        } else {
            Vec::new()
        };
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        per_param.push((family.param_names()[k].to_string(), entries));
    }
    ImportanceTable { per_param }
}

/// Mean natural-scale θ̂_k over the background set with one feature
/// overwritten by each grid value. With `squared` the parameter is squared
/// before averaging (variance curves for a Normal σ).
pub fn partial_dependence(
    model: &LssModel,
    background: &Dataset,
    feature: &str,
    grid: &[f64],
    param_k: usize,
    squared: bool,
) -> Result<Vec<(f64, f64)>> {
    // Resolve against the model's features; alignment with the background
    // data happens inside predict_params.
    if !model.feature_names.iter().any(|n| n == feature) {
        return Err(Error::UnknownFeature(feature.to_string()));
    }
    let col = background.feature_index(feature)?;
    let mut curve = Vec::with_capacity(grid.len());
    let mut work = background.clone();
    for &v in grid {
        work.overwrite_column(col, v);
        let pred = predict_params(model, &work)?;
        let vals: Vec<f64> = pred
            .params
            .iter()
            .map(|t| if squared { t[param_k] * t[param_k] } else { t[param_k] })
            .collect();
        curve.push((v, crate::math::mean(&vals)));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{FamilySpec, Normal};
    use crate::trainer::{train_step1, ParamConfig, TrainConfig};
    use crate::tree::TreeParams;
    use crate::families::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn residual_reference_values() {
        let pred = PredictiveDistribution {
            family: FamilySpec::Normal,
            params: vec![vec![2.0, 3.0]; 2],
        };
        // y at the predicted median → 0; y at the 97.5% point → 1.959964
        let q975 = 2.0 + 3.0 * 1.959964;
        let rep = residuals_of(&pred, &[2.0, q975]).unwrap();
        assert!(rep.residuals[0].abs() < 1e-9);
        assert!((rep.residuals[1] - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn residuals_of_the_true_model_look_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 3000;
        let y = Normal.sample(&[1.0, 2.0], &mut rng, n).unwrap();
        let pred = PredictiveDistribution {
            family: FamilySpec::Normal,
            params: vec![vec![1.0, 2.0]; n],
        };
        let rep = residuals_of(&pred, &y).unwrap();
        let crit = 1.63 / (n as f64).sqrt();
        assert!(rep.ks_statistic < crit, "ks {} vs {crit}", rep.ks_statistic);
        assert!(rep.summary[2].abs() < 0.1);
        assert!((rep.summary[1] + 0.6745).abs() < 0.1);
        assert!((rep.summary[3] - 0.6745).abs() < 0.1);
    }

    #[test]
    fn misspecified_location_blows_the_ks_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 3000;
        let y = Normal.sample(&[1.0, 1.0], &mut rng, n).unwrap();
        let pred = PredictiveDistribution {
            family: FamilySpec::Normal,
            params: vec![vec![0.0, 1.0]; n],
        };
        let rep = residuals_of(&pred, &y).unwrap();
        assert!(rep.ks_statistic > 1.63 / (n as f64).sqrt());
    }

    #[test]
    fn extreme_observations_survive_the_clamp() {
        let pred = PredictiveDistribution {
            family: FamilySpec::Normal,
            params: vec![vec![0.0, 1.0]],
        };
        let rep = residuals_of(&pred, &[1e6]).unwrap();
        assert!(rep.residuals[0].is_finite());
        assert!(rep.residuals[0] > 6.0);
    }

    fn toy_model(n: usize, seed: u64, informative_col: usize, p: usize) -> (LssModel, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            y.push(3.0 * row[informative_col] + 0.5 * z);
            features.extend(row);
        }
        let names: Vec<String> = (0..p).map(|j| format!("f{j}")).collect();
        let data = Dataset::from_parts(names, features, "y".into(), y).unwrap();
        let cfg = TrainConfig::shared(ParamConfig {
            rounds: 40,
            eta: 0.1,
            tree: TreeParams { max_depth: 2, ..Default::default() },
        });
        let model = train_step1(&FamilySpec::Normal, &data, &cfg, &mut rng).unwrap();
        (model, data)
    }

    #[test]
    fn importance_finds_the_informative_feature_and_sums_to_one() {
        let (model, _) = toy_model(500, 3, 2, 5);
        let table = feature_importance(&model);
        let mu_entries = &table.per_param[0].1;
        assert_eq!(mu_entries[0].0, "f2");
        assert!(mu_entries[0].1 > 0.9);
        let total: f64 = mu_entries.iter().map(|(_, s)| s).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // entries are sorted descending
        for pair in mu_entries.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
    }

    #[test]
    fn untrained_ensembles_have_empty_importance() {
        let (mut model, _) = toy_model(100, 4, 0, 2);
        for e in &mut model.ensembles {
            e.trees.clear();
        }
        let table = feature_importance(&model);
        for (_, entries) in &table.per_param {
            assert!(entries.is_empty());
        }
    }

    #[test]
    fn duplicated_features_share_the_importance() {
        // two identical columns: per-tree tie-breaks always pick the first,
        // so its share must dominate
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 300;
        let mut features = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x: f64 = rng.random_range(0.0..1.0);
            features.extend_from_slice(&[x, x]);
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            y.push(2.0 * x + 0.3 * z);
        }
        let data = Dataset::from_parts(
            vec!["a".into(), "b".into()],
            features,
            "y".into(),
            y,
        )
        .unwrap();
        let cfg = TrainConfig::shared(ParamConfig {
            rounds: 20,
            eta: 0.1,
            tree: TreeParams { max_depth: 2, ..Default::default() },
        });
        let model = train_step1(&FamilySpec::Normal, &data, &cfg, &mut rng).unwrap();
        let table = feature_importance(&model);
        let mu = &table.per_param[0].1;
        assert_eq!(mu[0].0, "a");
        assert!(mu[0].1 > 0.99);
    }

    #[test]
    fn partial_dependence_is_flat_for_a_constant_model() {
        let (mut model, data) = toy_model(200, 6, 0, 2);
        for e in &mut model.ensembles {
            e.trees.clear();
        }
        let grid = [0.1, 0.5, 0.9];
        let curve = partial_dependence(&model, &data, "f0", &grid, 0, false).unwrap();
        assert_eq!(curve.len(), 3);
        for w in curve.windows(2) {
            assert_eq!(w[0].1, w[1].1);
        }
        assert_eq!(curve[0].1, model.offsets[0]);
    }

    #[test]
    fn partial_dependence_recovers_a_single_feature_effect() {
        let (model, data) = toy_model(600, 7, 0, 1);
        let grid = [0.2, 0.5, 0.8];
        let curve = partial_dependence(&model, &data, "f0", &grid, 0, false).unwrap();
        for &(v, avg) in &curve {
            assert!(
                (avg - 3.0 * v).abs() < 0.4,
                "pd({v}) = {avg}, want {}",
                3.0 * v
            );
        }
        // squared averaging squares the parameter
        let sq = partial_dependence(&model, &data, "f0", &grid, 1, true).unwrap();
        let plain = partial_dependence(&model, &data, "f0", &grid, 1, false).unwrap();
        for (s, p) in sq.iter().zip(&plain) {
            assert!(s.1 >= p.1 * p.1 - 1e-12);
        }
    }

    #[test]
    fn partial_dependence_rejects_unknown_features() {
        let (model, data) = toy_model(50, 8, 0, 2);
        assert!(partial_dependence(&model, &data, "nope", &[0.5], 0, false).is_err());
    }
}
