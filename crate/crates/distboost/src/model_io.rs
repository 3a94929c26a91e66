//! Versioned JSON model files.
//!
//! Trees are stored by feature NAME, not index, so a saved model keeps
//! predicting correctly when prediction-time columns arrive reordered.

use crate::booster::Ensemble;
use crate::error::{Error, Result};
use crate::families::{FamilySpec, Link};
use crate::trainer::{LssModel, TrainConfig};
use crate::tree::TreeNode;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    family: FamilySpec,
    param_names: Vec<String>,
    links: Vec<Link>,
    feature_names: Vec<String>,
    offsets: Vec<f64>,
    ensembles: Vec<EnsembleFile>,
    metadata: Metadata,
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    eta: f64,
    base_offset: f64,
    trees: Vec<NodeFile>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    seed: u64,
    step2_rounds_used: usize,
    deviance_trace: Vec<f64>,
    config: TrainConfig,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum MissingDir {
    Left,
    Right,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeFile {
    Split {
        feature: String,
        threshold: f64,
        missing: MissingDir,
        gain: f64,
        left: Box<NodeFile>,
        right: Box<NodeFile>,
    },
    Leaf {
        leaf: f64,
    },
}

fn node_to_file(node: &TreeNode, names: &[String]) -> NodeFile {
    match node {
        TreeNode::Leaf { weight } => NodeFile::Leaf { leaf: *weight },
        TreeNode::Split {
            feature,
            threshold,
            missing_left,
            gain,
            left,
            right,
        } => NodeFile::Split {
            feature: names[*feature].clone(),
            threshold: *threshold,
            missing: if *missing_left {
                MissingDir::Left
            } else {
                MissingDir::Right
            },
            gain: *gain,
            left: Box::new(node_to_file(left, names)),
            right: Box::new(node_to_file(right, names)),
        },
    }
}

fn node_from_file(node: NodeFile, names: &[String], path: &str) -> Result<TreeNode> {
    match node {
        NodeFile::Leaf { leaf } => Ok(TreeNode::Leaf { weight: leaf }),
        NodeFile::Split {
            feature,
            threshold,
            missing,
            gain,
            left,
            right,
        } => {
            let idx = names.iter().position(|n| *n == feature).ok_or_else(|| {
                Error::ModelFile {
                    location: path.to_string(),
                    message: format!("split references unknown feature `{feature}`"),
                }
            })?;
            Ok(TreeNode::Split {
                feature: idx,
                threshold,
                missing_left: missing == MissingDir::Left,
                gain,
                left: Box::new(node_from_file(*left, names, path)?),
                right: Box::new(node_from_file(*right, names, path)?),
            })
        }
    }
}

pub fn save_model(model: &LssModel, path: &Path) -> Result<()> {
    let family = model.build_family();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        family: model.family.clone(),
        param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
        links: family.links().to_vec(),
        feature_names: model.feature_names.clone(),
        offsets: model.offsets.clone(),
        ensembles: model
            .ensembles
            .iter()
            .map(|e| EnsembleFile {
                eta: e.eta,
                base_offset: e.base_offset,
                trees: e
                    .trees
                    .iter()
                    .map(|t| node_to_file(t, &model.feature_names))
                    .collect(),
            })
            .collect(),
        metadata: Metadata {
            seed: model.seed,
            step2_rounds_used: model.step2_rounds_used,
            deviance_trace: model.deviance_trace.clone(),
            config: model.config.clone(),
        },
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFile {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LssModel> {
    let loc = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::ModelFile {
            location: format!("{loc}:{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })?;

    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::ModelFile {
            location: format!("{loc}#/format_version"),
            message: "missing format_version".into(),
        })? as u32;
    if found != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found,
            expected: FORMAT_VERSION,
        });
    }
    // Surface a bad family name as its own error before full schema
    // validation.
    if let Some(fam) = value.get("family") {
        if serde_json::from_value::<FamilySpec>(fam.clone()).is_err() {
            let name = fam
                .get("name")
                .and_then(|n| n.as_str())
                .unwrap_or("<missing>");
            return Err(Error::UnknownFamily(name.to_string()));
        }
    }

    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::ModelFile {
        location: format!("{loc}#{e}"),
        message: e.to_string(),
    })?;

    let mut ensembles = Vec::with_capacity(file.ensembles.len());
    for (k, ef) in file.ensembles.into_iter().enumerate() {
        let tree_path = format!("{loc}#/ensembles/{k}");
        let trees: Result<Vec<TreeNode>> = ef
            .trees
            .into_iter()
            .map(|t| node_from_file(t, &file.feature_names, &tree_path))
            .collect();
        ensembles.push(Ensemble {
            trees: trees?,
            eta: ef.eta,
            base_offset: ef.base_offset,
        });
    }

    let model = LssModel {
        family: file.family,
        feature_names: file.feature_names,
        ensembles,
        offsets: file.offsets,
        config: file.metadata.config,
        seed: file.metadata.seed,
        step2_rounds_used: file.metadata.step2_rounds_used,
        deviance_trace: file.metadata.deviance_trace,
    };
    if model.ensembles.len() != model.build_family().n_params() {
        return Err(Error::ModelFile {
            location: format!("{loc}#/ensembles"),
            message: format!(
                "{} ensembles but the family has {} parameters",
                model.ensembles.len(),
                model.build_family().n_params()
            ),
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::trainer::{train, ParamConfig};
    use crate::tree::TreeParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained_model() -> (LssModel, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 400;
        let mut features = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let a: f64 = rng.random_range(0.0..1.0);
            // sprinkle missing values into the second column
            let b: f64 = if i % 7 == 0 { f64::NAN } else { rng.random_range(-1.0..1.0) };
            features.extend_from_slice(&[a, b]);
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            y.push(1.0 + 2.0 * a + z * (0.5 + a));
        }
        let data = Dataset::from_parts(
            vec!["a".into(), "b".into()],
            features,
            "y".into(),
            y,
        )
        .unwrap();
        let mut cfg = crate::trainer::TrainConfig::shared(ParamConfig {
            rounds: 25,
            eta: 0.1,
            tree: TreeParams { max_depth: 3, ..Default::default() },
        });
        cfg.step2.max_iter = 5;
        let mut model = train(&FamilySpec::Normal, &data, &cfg, &mut rng).unwrap();
        model.seed = 21;
        (model, data)
    }

    #[test]
    fn save_load_round_trip_is_bitwise() {
        let (model, data) = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model, back);
        let p1 = model.predict_link(&data).unwrap();
        let p2 = back.predict_link(&data).unwrap();
        for (a, b) in p1.iter().flatten().zip(p2.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // saving the loaded model reproduces the file byte for byte
        let path2 = dir.path().join("model2.json");
        save_model(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn loaded_model_predicts_reordered_columns_correctly() {
        let (model, data) = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();

        let swapped_features: Vec<f64> = (0..data.n_rows())
            .flat_map(|r| [data.value(r, 1), data.value(r, 0)])
            .collect();
        let swapped = Dataset::from_parts(
            vec!["b".into(), "a".into()],
            swapped_features,
            "y".into(),
            data.y().to_vec(),
        )
        .unwrap();
        let p1 = model.predict_link(&data).unwrap();
        let p2 = back.predict_link(&swapped).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn truncated_file_is_a_model_file_error() {
        let (model, _) = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        match load_model(&path) {
            Err(Error::ModelFile { location, .. }) => {
                assert!(location.contains("model.json"), "location {location}");
            }
            other => panic!("expected ModelFile error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_format_version_is_rejected() {
        let (model, _) = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(&path, text).unwrap();
        match load_model(&path) {
            Err(Error::FormatVersion { found, expected }) => {
                assert_eq!(found, 99);
                assert_eq!(expected, FORMAT_VERSION);
            }
            other => panic!("expected FormatVersion error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_family_is_its_own_error() {
        let (model, _) = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"name\": \"normal\"", "\"name\": \"cauchy\"");
        std::fs::write(&path, text).unwrap();
        match load_model(&path) {
            Err(Error::UnknownFamily(name)) => assert_eq!(name, "cauchy"),
            other => panic!("expected UnknownFamily, got {other:?}"),
        }
    }

    #[test]
    fn split_on_an_unknown_feature_is_rejected_with_a_location() {
        let (model, _) = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"feature\": \"a\"", "\"feature\": \"ghost\"");
        std::fs::write(&path, text).unwrap();
        match load_model(&path) {
            Err(Error::ModelFile { location, message }) => {
                assert!(location.contains("#/ensembles/"), "location {location}");
                assert!(message.contains("ghost"));
            }
            other => panic!("expected ModelFile error, got {other:?}"),
        }
    }
}
