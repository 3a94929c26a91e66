//! Predictive distributions from a trained model and the scoring battery:
//! quantiles, interval coverage, CRPS, log score and point metrics.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::{Family, FamilySpec};
use crate::math::{mean, pairwise_sum};
use crate::trainer::LssModel;
use rand::RngCore;

/// Per-row natural-scale parameter vectors plus the family to interpret
/// them.
pub struct PredictiveDistribution {
    pub family: FamilySpec,
    /// One K-vector per row.
    pub params: Vec<Vec<f64>>,
}

impl PredictiveDistribution {
    pub fn n_rows(&self) -> usize {
        self.params.len()
    }

    /// Point forecast per row (the distribution mean).
    pub fn point_forecast(&self) -> Vec<f64> {
        let family = self.family.build();
        self.params.iter().map(|t| family.mean(t)).collect()
    }
}

/// θ̂_k(x) = link⁻¹(offset_k + η Σ trees) for every row.
pub fn predict_params(model: &LssModel, data: &Dataset) -> Result<PredictiveDistribution> {
    let family = model.build_family();
    let links = family.links();
    let link_preds = model.predict_link(data)?;
    let params = (0..data.n_rows())
        .map(|row| {
            links
                .iter()
                .enumerate()
                .map(|(j, link)| link.inverse(link_preds[j][row]))
                .collect()
        })
        .collect();
    Ok(PredictiveDistribution {
        family: model.family.clone(),
        params,
    })
}

/// Per-row family quantiles at the predicted parameters, columns in the
/// order `probs` was given.
pub fn predict_quantiles(
    model: &LssModel,
    data: &Dataset,
    probs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let pred = predict_params(model, data)?;
    quantiles_of(&pred, probs)
}

pub fn quantiles_of(pred: &PredictiveDistribution, probs: &[f64]) -> Result<Vec<Vec<f64>>> {
    let family = pred.family.build();
    if !family.has_distribution() {
        return Err(Error::NoPredictiveDistribution(family.name().to_string()));
    }
    pred.params
        .iter()
        .map(|theta| probs.iter().map(|&p| family.quantile(p, theta)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRow {
    /// Nominal bounds in percent, e.g. (5, 95).
    pub lo: f64,
    pub hi: f64,
    /// % of y inside [q_lo(x), q_hi(x)].
    pub total: f64,
    /// % of y ≤ q_hi(x).
    pub upper: f64,
    /// % of y ≤ q_lo(x).
    pub lower: f64,
}

/// Empirical coverage of predicted quantile intervals on a test set.
/// `pairs` are (lo, hi) probabilities in (0,1) with lo < hi allowed to be
/// equal for the degenerate zero-width interval.
pub fn empirical_coverage(
    model: &LssModel,
    data: &Dataset,
    pairs: &[(f64, f64)],
) -> Result<Vec<CoverageRow>> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let pred = predict_params(model, data)?;
    coverage_of(&pred, data.y(), pairs)
}

pub fn coverage_of(
    pred: &PredictiveDistribution,
    y: &[f64],
    pairs: &[(f64, f64)],
) -> Result<Vec<CoverageRow>> {
    let family = pred.family.build();
    let n = y.len() as f64;
    let mut rows = Vec::with_capacity(pairs.len());
    for &(lo, hi) in pairs {
        let mut inside = 0usize;
        let mut below_hi = 0usize;
        let mut below_lo = 0usize;
        for (theta, &yi) in pred.params.iter().zip(y) {
            let q_lo = family.quantile(lo, theta)?;
            let q_hi = family.quantile(hi, theta)?;
            if yi > q_lo && yi < q_hi {
                inside += 1;
            }
            if yi <= q_hi {
                below_hi += 1;
            }
            if yi <= q_lo {
                below_lo += 1;
            }
        }
        rows.push(CoverageRow {
            lo: lo * 100.0,
            hi: hi * 100.0,
            total: 100.0 * inside as f64 / n,
            upper: 100.0 * below_hi as f64 / n,
            lower: 100.0 * below_lo as f64 / n,
        });
    }
    Ok(rows)
}

const INV_SQRT_PI: f64 = 0.5641895835477563;
const INV_SQRT_2PI: f64 = 0.3989422804014327;

/// Closed-form CRPS of a Normal forecast:
/// σ[z(2Φ(z) − 1) + 2φ(z) − 1/√π], z = (y − μ)/σ.
pub fn crps_normal(y: f64, mu: f64, sigma: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    let std = statrs::distribution::Normal::standard();
    let z = (y - mu) / sigma;
    let phi = INV_SQRT_2PI * (-0.5 * z * z).exp();
    sigma * (z * (2.0 * std.cdf(z) - 1.0) + 2.0 * phi - INV_SQRT_PI)
}

/// CRPS by numeric integration of ∫ (F(t) − 1{t ≥ y})² dt; works for any
/// family exposing a cdf.
pub fn crps_numeric(family: &dyn Family, theta: &[f64], y: f64, tol: f64) -> Result<f64> {
    if !family.has_distribution() {
        return Err(Error::NoPredictiveDistribution(family.name().to_string()));
    }
    let q_lo = family.quantile(1e-9, theta)?;
    let q_hi = family.quantile(1.0 - 1e-9, theta)?;
    let lo = q_lo.min(y);
    let hi = q_hi.max(y);
    // Points below the support (cdf errors there) contribute F = 0.
    let cdf_at = |t: f64| -> f64 { family.cdf(t, theta).unwrap_or(0.0) };
    let below = |t: f64| -> Result<f64> {
        let f = cdf_at(t);
        Ok(f * f)
    };
    let above = |t: f64| -> Result<f64> {
        let f = cdf_at(t);
        Ok((f - 1.0) * (f - 1.0))
    };
    // Split at the observation: the integrand has a kink there.
    let left = adaptive_simpson(&below, lo, y, tol / 2.0, 24)?;
    let right = adaptive_simpson(&above, y, hi, tol / 2.0, 24)?;
    Ok(left + right)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> Result<f64>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            Ok(left + right + delta / 15.0)
        } else {
            Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
        }
    }
    let fa = f(a)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Sample-based CRPS (energy form): mean|X − y| − ½ mean|X − X'| over draws
/// from the forecast. The pairwise term uses the sorted-sample identity.
pub fn crps_sample(
    family: &dyn Family,
    theta: &[f64],
    y: f64,
    n_draws: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut draws = family.sample(theta, rng, n_draws)?;
    let abs_dev: Vec<f64> = draws.iter().map(|&x| (x - y).abs()).collect();
    let term1 = mean(&abs_dev);
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // (1/n²) Σ_{i<j} (x_(j) − x_(i)) = (1/n²) Σ_i (2i + 1 − n) x_(i)
    let n = draws.len() as f64;
    let mut acc = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        acc += (2.0 * i as f64 + 1.0 - n) * x;
    }
    Ok(term1 - acc / (n * n))
}

/// Average CRPS of a predictive distribution against observations. Normal
/// uses the closed form; other families integrate numerically to 1e-6.
pub fn crps(pred: &PredictiveDistribution, y: &[f64]) -> Result<f64> {
    let family = pred.family.build();
    if !family.has_distribution() {
        return Err(Error::NoPredictiveDistribution(family.name().to_string()));
    }
    let terms: Result<Vec<f64>> = pred
        .params
        .iter()
        .zip(y)
        .map(|(theta, &yi)| match pred.family {
            FamilySpec::Normal => Ok(crps_normal(yi, theta[0], theta[1])),
            _ => crps_numeric(family.as_ref(), theta, yi, 1e-6),
        })
        .collect();
    Ok(pairwise_sum(&terms?) / y.len() as f64)
}

/// Average negative log-likelihood; equals global deviance / (2n).
pub fn log_score(pred: &PredictiveDistribution, y: &[f64]) -> Result<f64> {
    let family = pred.family.build();
    let terms: Result<Vec<f64>> = pred
        .params
        .iter()
        .zip(y)
        .map(|(theta, &yi)| family.loglik(yi, theta).map(|l| -l))
        .collect();
    Ok(pairwise_sum(&terms?) / y.len() as f64)
}

/// One point metric: either a value or the reason its domain was violated.
pub type MetricOutcome = std::result::Result<f64, String>;

/// The point-forecast metric battery. Metrics with violated domains carry an
/// error message; the rest are still computed.
#[derive(Clone, Debug)]
pub struct PointMetrics {
    pub values: Vec<(&'static str, MetricOutcome)>,
}

impl PointMetrics {
    pub fn get(&self, name: &str) -> Option<&MetricOutcome> {
        self.values.iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Some(Ok(v)) => Some(*v),
            _ => None,
        }
    }
}

pub fn point_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<PointMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Invalid(format!(
            "length mismatch: {} observations vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = y_true.len() as f64;
    let err: Vec<f64> = y_true.iter().zip(y_pred).map(|(&t, &p)| p - t).collect();
    let abs_err: Vec<f64> = err.iter().map(|e| e.abs()).collect();
    let sq_err: Vec<f64> = err.iter().map(|e| e * e).collect();
    let y_bar = mean(y_true);
    let dev_sq: Vec<f64> = y_true.iter().map(|&t| (t - y_bar) * (t - y_bar)).collect();
    let dev_abs: Vec<f64> = y_true.iter().map(|&t| (t - y_bar).abs()).collect();

    let mse = pairwise_sum(&sq_err) / n;
    let mae = pairwise_sum(&abs_err) / n;
    let mut sorted_abs = abs_err.clone();
    sorted_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_ae = if sorted_abs.len() % 2 == 1 {
        sorted_abs[sorted_abs.len() / 2]
    } else {
        0.5 * (sorted_abs[sorted_abs.len() / 2 - 1] + sorted_abs[sorted_abs.len() / 2])
    };

    let mape: MetricOutcome = if y_true.iter().any(|&t| t == 0.0) {
        Err("MAPE undefined: y_true contains zeros".into())
    } else {
        let terms: Vec<f64> = y_true
            .iter()
            .zip(&err)
            .map(|(&t, &e)| (e / t).abs())
            .collect();
        Ok(pairwise_sum(&terms) / n)
    };
    let rmspe: MetricOutcome = if y_true.iter().any(|&t| t == 0.0) {
        Err("RMSPE undefined: y_true contains zeros".into())
    } else {
        let terms: Vec<f64> = y_true
            .iter()
            .zip(&err)
            .map(|(&t, &e)| (e / t) * (e / t))
            .collect();
        Ok((pairwise_sum(&terms) / n).sqrt())
    };
    let rmsle: MetricOutcome = if y_true.iter().chain(y_pred).any(|&v| v <= -1.0) {
        Err("RMSLE undefined: values ≤ −1 present".into())
    } else {
        let terms: Vec<f64> = y_true
            .iter()
            .zip(y_pred)
            .map(|(&t, &p)| {
                let d = (1.0 + p).ln() - (1.0 + t).ln();
                d * d
            })
            .collect();
        Ok((pairwise_sum(&terms) / n).sqrt())
    };

    let ss_tot = pairwise_sum(&dev_sq);
    let (rae, rrse, r_squared): (MetricOutcome, MetricOutcome, MetricOutcome) = if ss_tot <= 0.0 {
        let msg = "relative metrics undefined: y_true is constant".to_string();
        (Err(msg.clone()), Err(msg.clone()), Err(msg))
    } else {
        let rrse_v = (pairwise_sum(&sq_err) / ss_tot).sqrt();
        (
            Ok(pairwise_sum(&abs_err) / pairwise_sum(&dev_abs)),
            Ok(rrse_v),
            Ok(1.0 - rrse_v * rrse_v),
        )
    };

    Ok(PointMetrics {
        values: vec![
            ("mape", mape),
            ("mse", Ok(mse)),
            ("rmse", Ok(mse.sqrt())),
            ("mae", Ok(mae)),
            ("median_ae", Ok(median_ae)),
            ("rae", rae),
            ("rmspe", rmspe),
            ("rmsle", rmsle),
            ("rrse", rrse),
            ("r_squared", r_squared),
        ],
    })
}

/// Full score report: CRPS and log score when the family has a distribution,
/// plus the point-metric battery against the mean forecast.
pub struct ScoreReport {
    pub crps: Option<f64>,
    pub log_score: Option<f64>,
    pub point: PointMetrics,
}

pub fn score_report(model: &LssModel, data: &Dataset) -> Result<ScoreReport> {
    let pred = predict_params(model, data)?;
    let family = model.build_family();
    let (crps_v, log_v) = if family.has_distribution() {
        (
            Some(crps(&pred, data.y())?),
            Some(log_score(&pred, data.y())?),
        )
    } else {
        (None, None)
    };
    Ok(ScoreReport {
        crps: crps_v,
        log_score: log_v,
        point: point_metrics(data.y(), &pred.point_forecast())?,
    })
}
