//! Command-line front end: simulate, train, tune, predict and evaluate
//! distributional boosting models as reproducible batch runs.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error.

use clap::{Parser, Subcommand};
use distboost::data::format_cell;
use distboost::diagnostics::{feature_importance, partial_dependence, quantile_residuals};
use distboost::scoring::{empirical_coverage, predict_params, quantiles_of, score_report};
use distboost::trainer::TrainConfig;
use distboost::tune::SearchSpace;
use distboost::{
    gaic, global_deviance, load_model, random_search, save_model, simulate_hetero, train, Dataset,
    FamilySpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "distboost",
    about = "Distributional gradient boosting: tree ensembles for every distribution parameter",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a heteroskedastic benchmark dataset as CSV.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Read the generator's scale expression as a variance instead of a
        /// standard deviation.
        #[arg(long)]
        scale_is_variance: bool,
    },
    /// Fit a model and save it as JSON.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        #[arg(long)]
        family: String,
        /// Expectile level, only used with --family expectile.
        #[arg(long)]
        tau: Option<f64>,
        /// JSON training config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random-search hyperparameters by cross-validated deviance.
    Tune {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        folds: usize,
        /// Boosting rounds per parameter during CV.
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        /// Wall-clock budget in minutes; unlimited when omitted.
        #[arg(long)]
        budget_minutes: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the winning config as a training config JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trial log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Predict distribution parameters (and optional quantiles) per row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Response column to drop from the feature set, when present.
        #[arg(long)]
        response: Option<String>,
        /// Comma-separated probabilities, e.g. 0.05,0.95.
        #[arg(long, value_delimiter = ',')]
        quantiles: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model on labelled data: CRPS, log score, point metrics.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical interval coverage against nominal quantile pairs.
    Coverage {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        /// Pairs as lo:hi percentages, e.g. 5:95,10:90.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quantile residuals with a KS statistic against the standard Normal.
    Residuals {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalized split-gain importance per distribution parameter.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial dependence of one distribution parameter on one feature.
    Pd {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        #[arg(long)]
        feature: String,
        /// Parameter name, e.g. mu or sigma.
        #[arg(long)]
        param: String,
        /// Report the squared parameter (variance curve for sigma).
        #[arg(long)]
        variance: bool,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank candidate families on a response column by GAIC.
    Gaic {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        response: String,
        /// Comma-separated family names.
        #[arg(long, value_delimiter = ',')]
        families: Vec<String>,
        #[arg(long, default_value_t = 2.0)]
        penalty: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> distboost::Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(std::io::stdout().flush()?)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> distboost::Result<TrainConfig> {
    match path {
        None => Ok(TrainConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| distboost::Error::Invalid(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn parse_family(name: &str, tau: Option<f64>) -> distboost::Result<FamilySpec> {
    FamilySpec::parse(name, tau)
}

fn run(cli: Cli) -> distboost::Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            seed,
            out,
            scale_is_variance,
        } => {
            let data = simulate_hetero(n, seed, scale_is_variance)?;
            data.write_csv(&out)
        }
        Command::Train {
            data,
            response,
            family,
            tau,
            config,
            seed,
            out,
        } => {
            let spec = parse_family(&family, tau)?;
            let dataset = Dataset::read_csv(&data, &response)?;
            let cfg = load_config(&config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut model = train(&spec, &dataset, &cfg, &mut rng)?;
            model.seed = seed;
            save_model(&model, &out)?;
            let dev = global_deviance(&model, &dataset)?;
            eprintln!(
                "trained {} on {} rows: deviance {dev:.4}, step2 cycles {}",
                spec.label(),
                dataset.n_rows(),
                model.step2_rounds_used
            );
            Ok(())
        }
        Command::Tune {
            data,
            response,
            family,
            tau,
            trials,
            folds,
            rounds,
            budget_minutes,
            seed,
            out,
            log,
        } => {
            let spec = parse_family(&family, tau)?;
            let dataset = Dataset::read_csv(&data, &response)?;
            let budget = budget_minutes.map(|m| Duration::from_secs_f64(m * 60.0));
            let result = random_search(
                &spec,
                &dataset,
                &SearchSpace::default(),
                trials,
                folds,
                rounds,
                budget,
                seed,
            )?;
            if let Some(log_path) = &log {
                let mut text =
                    String::from("trial,cv_deviance,eta,gamma,max_depth,min_child_weight,subsample,colsample_bytree,error\n");
                for t in &result.trials {
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        t.index,
                        t.cv_deviance.map(format_cell).unwrap_or_default(),
                        format_cell(t.config.eta),
                        format_cell(t.config.tree.gamma),
                        t.config.tree.max_depth,
                        format_cell(t.config.tree.min_child_weight),
                        format_cell(t.config.tree.subsample),
                        format_cell(t.config.tree.colsample_bytree),
                        t.error.clone().unwrap_or_default()
                    ));
                }
                std::fs::write(log_path, text)?;
            }
            let best_cfg = TrainConfig::shared(result.best.clone());
            let json = serde_json::to_string_pretty(&best_cfg)
                .map_err(|e| distboost::Error::Invalid(e.to_string()))?;
            emit(&out, &format!("{json}\n"))?;
            eprintln!(
                "best trial {} of {} (budget exhausted: {})",
                result.best_index,
                result.trials.len(),
                result.budget_exhausted
            );
            Ok(())
        }
        Command::Predict {
            model,
            data,
            response,
            quantiles,
            out,
        } => {
            let model = load_model(&model)?;
            let dataset = match &response {
                Some(col) => Dataset::read_csv(&data, col)?,
                None => Dataset::read_features_csv(&data)?,
            };
            let pred = predict_params(&model, &dataset)?;
            let family = model.build_family();
            let q_matrix = if quantiles.is_empty() {
                None
            } else {
                Some(quantiles_of(&pred, &quantiles)?)
            };
            let mut header: Vec<String> =
                family.param_names().iter().map(|s| s.to_string()).collect();
            for q in &quantiles {
                header.push(format!("q{q}"));
            }
            let mut text = format!("{}\n", header.join(","));
            for row in 0..pred.n_rows() {
                let mut cells: Vec<String> =
                    pred.params[row].iter().map(|&v| format_cell(v)).collect();
                if let Some(qm) = &q_matrix {
                    cells.extend(qm[row].iter().map(|&v| format_cell(v)));
                }
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            std::fs::write(&out, text)?;
            Ok(())
        }
        Command::Score {
            model,
            data,
            response,
            out,
        } => {
            let model = load_model(&model)?;
            let dataset = Dataset::read_csv(&data, &response)?;
            let report = score_report(&model, &dataset)?;
            let mut text = String::from("metric,value,note\n");
            if let Some(v) = report.crps {
                text.push_str(&format!("crps,{},\n", format_cell(v)));
            }
            if let Some(v) = report.log_score {
                text.push_str(&format!("log_score,{},\n", format_cell(v)));
            }
            for (name, outcome) in &report.point.values {
                match outcome {
                    Ok(v) => text.push_str(&format!("{name},{},\n", format_cell(*v))),
                    Err(msg) => text.push_str(&format!("{name},,{msg}\n")),
                }
            }
            emit(&out, &text)
        }
        Command::Coverage {
            model,
            data,
            response,
            pairs,
            out,
        } => {
            let model = load_model(&model)?;
            let dataset = Dataset::read_csv(&data, &response)?;
            let parsed: distboost::Result<Vec<(f64, f64)>> = pairs
                .iter()
                .map(|p| {
                    let (lo, hi) = p.split_once(':').ok_or_else(|| {
                        distboost::Error::Invalid(format!("bad pair `{p}`, expected lo:hi"))
                    })?;
                    let lo: f64 = lo
                        .parse()
                        .map_err(|_| distboost::Error::Invalid(format!("bad pair `{p}`")))?;
                    let hi: f64 = hi
                        .parse()
                        .map_err(|_| distboost::Error::Invalid(format!("bad pair `{p}`")))?;
                    Ok((lo / 100.0, hi / 100.0))
                })
                .collect();
            let rows = empirical_coverage(&model, &dataset, &parsed?)?;
            let mut text = String::from("pair,total_coverage,upper_bound,lower_bound\n");
            for r in rows {
                text.push_str(&format!(
                    "({:.0};{:.0}),{:.4},{:.4},{:.4}\n",
                    r.lo, r.hi, r.total, r.upper, r.lower
                ));
            }
            emit(&out, &text)
        }
        Command::Residuals {
            model,
            data,
            response,
            out,
        } => {
            let model = load_model(&model)?;
            let dataset = Dataset::read_csv(&data, &response)?;
            let report = quantile_residuals(&model, &dataset)?;
            // QQ-ready: sorted residual vs standard-normal plotting position.
            let mut sorted = report.residuals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = sorted.len();
            let std_normal = statrs::distribution::Normal::standard();
            use statrs::distribution::ContinuousCDF;
            let mut text = format!(
                "# ks_statistic,{}\ntheoretical,observed\n",
                format_cell(report.ks_statistic)
            );
            for (i, &r) in sorted.iter().enumerate() {
                let p = (i as f64 + 0.5) / n as f64;
                text.push_str(&format!(
                    "{},{}\n",
                    format_cell(std_normal.inverse_cdf(p)),
                    format_cell(r)
                ));
            }
            std::fs::write(&out, text)?;
            Ok(())
        }
        Command::Importance { model, out } => {
            let model = load_model(&model)?;
            let table = feature_importance(&model);
            let mut text = String::from("parameter,feature,gain_share\n");
            for (param, entries) in &table.per_param {
                for (feature, share) in entries {
                    text.push_str(&format!("{param},{feature},{}\n", format_cell(*share)));
                }
            }
            emit(&out, &text)
        }
        Command::Pd {
            model,
            data,
            response,
            feature,
            param,
            variance,
            grid_points,
            out,
        } => {
            let model = load_model(&model)?;
            let dataset = Dataset::read_csv(&data, &response)?;
            let family = model.build_family();
            let param_k = family
                .param_names()
                .iter()
                .position(|&n| n == param)
                .ok_or_else(|| {
                    distboost::Error::Invalid(format!(
                        "family {} has no parameter `{param}`",
                        family.name()
                    ))
                })?;
            let col = dataset.feature_index(&feature)?;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in 0..dataset.n_rows() {
                let v = dataset.value(r, col);
                if v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let grid: Vec<f64> = (0..grid_points)
                .map(|i| lo + (hi - lo) * i as f64 / (grid_points.max(2) - 1) as f64)
                .collect();
            let curve = partial_dependence(&model, &dataset, &feature, &grid, param_k, variance)?;
            let label = if variance {
                format!("{param}_squared")
            } else {
                param.clone()
            };
            let mut text = format!("{feature},mean_{label}\n");
            for (v, m) in curve {
                text.push_str(&format!("{},{}\n", format_cell(v), format_cell(m)));
            }
            emit(&out, &text)
        }
        Command::Gaic {
            data,
            response,
            families,
            penalty,
            out,
        } => {
            let dataset = Dataset::read_csv(&data, &response)?;
            let mut rows: Vec<(String, f64)> = Vec::new();
            for name in &families {
                let spec = parse_family(name, None)?;
                let family = spec.build();
                let value = gaic(family.as_ref(), dataset.y(), penalty)?;
                rows.push((spec.label(), value));
            }
            rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let mut text = String::from("family,gaic\n");
            for (name, value) in rows {
                text.push_str(&format!("{name},{value:.4}\n"));
            }
            emit(&out, &text)
        }
    }
}
