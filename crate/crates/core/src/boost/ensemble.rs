use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::loss::fill_gradients;
use super::sampling::{dart_drop_capped, goss_sample};
use super::tree::{Grower, Presorted};
use super::{sigmoid, BoostError, BoostingConfig, Loss, Mode, Result, TreeNode};
use crate::{seed, Matrix};

/// Version of the serialized ensemble document.
pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "mpap-ensemble";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    pub root: TreeNode,
    pub weight: f64,
}

/// Trained additive tree model: `base_score + Σ weight_i · tree_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub base_score: f64,
    pub trees: Vec<WeightedTree>,
    pub config: BoostingConfig,
    pub seed: u64,
    pub n_features: usize,
}

impl Ensemble {
    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn loss(&self) -> Loss {
        self.config.loss
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = Document {
            format: FORMAT_NAME.to_owned(),
            version: FORMAT_VERSION,
            mode: self.config.mode,
            loss: self.config.loss,
            config: self.config.clone(),
            seed: self.seed,
            base_score: self.base_score,
            n_features: self.n_features,
            trees: self
                .trees
                .iter()
                .map(|t| {
                    let mut nodes = Vec::new();
                    flatten(&t.root, &mut nodes);
                    SerializedTree {
                        weight: t.weight,
                        nodes,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| BoostError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| BoostError::Format(e.to_string()))?;
        if doc.format != FORMAT_NAME {
            return Err(BoostError::Format(format!(
                "unexpected format `{}`",
                doc.format
            )));
        }
        if doc.version != FORMAT_VERSION {
            return Err(BoostError::Format(format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                doc.version
            )));
        }
        if doc.mode != doc.config.mode || doc.loss != doc.config.loss {
            return Err(BoostError::Format("mode/loss disagree with config".into()));
        }
        let mut trees = Vec::with_capacity(doc.trees.len());
        for t in doc.trees {
            let mut it = t.nodes.into_iter();
            let root = unflatten(&mut it, doc.n_features)?;
            if it.next().is_some() {
                return Err(BoostError::Format("trailing nodes after tree".into()));
            }
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                return Err(BoostError::Format(format!(
                    "tree weight {} is not positive",
                    t.weight
                )));
            }
            trees.push(WeightedTree {
                root,
                weight: t.weight,
            });
        }
        Ok(Ensemble {
            base_score: doc.base_score,
            trees,
            config: doc.config,
            seed: doc.seed,
            n_features: doc.n_features,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    mode: Mode,
    loss: Loss,
    config: BoostingConfig,
    seed: u64,
    base_score: f64,
    n_features: usize,
    trees: Vec<SerializedTree>,
}

#[derive(Serialize, Deserialize)]
struct SerializedTree {
    weight: f64,
    /// Preorder: a split is followed by its left subtree, then its right.
    nodes: Vec<FlatNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FlatNode {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        default_left: bool,
    },
    Leaf {
        value: f64,
    },
}

fn flatten(node: &TreeNode, out: &mut Vec<FlatNode>) {
    match node {
        TreeNode::Leaf { value } => out.push(FlatNode::Leaf { value: *value }),
        TreeNode::Split {
            feature,
            threshold,
            gain,
            default_left,
            left,
            right,
        } => {
            out.push(FlatNode::Split {
                feature: *feature,
                threshold: *threshold,
                gain: *gain,
                default_left: *default_left,
            });
            flatten(left, out);
            flatten(right, out);
        }
    }
}

fn unflatten(it: &mut impl Iterator<Item = FlatNode>, n_features: usize) -> Result<TreeNode> {
    match it.next() {
        None => Err(BoostError::Format("truncated tree".into())),
        Some(FlatNode::Leaf { value }) => {
            if !value.is_finite() {
                return Err(BoostError::Format("non-finite leaf value".into()));
            }
            Ok(TreeNode::Leaf { value })
        }
        Some(FlatNode::Split {
            feature,
            threshold,
            gain,
            default_left,
        }) => {
            if feature >= n_features {
                return Err(BoostError::Format(format!(
                    "split on feature {feature} out of range"
                )));
            }
            let left = unflatten(it, n_features)?;
            let right = unflatten(it, n_features)?;
            Ok(TreeNode::Split {
                feature,
                threshold,
                gain,
                default_left,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
    }
}

fn validate_training_data(matrix: &Matrix, targets: &[f64], loss: Loss) -> Result<()> {
    let n = matrix.n_rows();
    if n == 0 || matrix.n_cols() == 0 {
        return Err(BoostError::Data("training matrix is empty".into()));
    }
    if targets.len() != n {
        return Err(BoostError::Data(format!(
            "{n} rows but {} targets",
            targets.len()
        )));
    }
    if matrix.as_slice().iter().any(|v| v.is_nan()) {
        return Err(BoostError::Data(
            "missing values must be imputed before training".into(),
        ));
    }
    if matrix.as_slice().iter().any(|v| v.is_infinite()) {
        return Err(BoostError::Data("features must be finite".into()));
    }
    if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
        return Err(BoostError::Data(format!("target {i} is not finite")));
    }
    if loss == Loss::Logistic {
        if let Some(i) = targets.iter().position(|&y| y != 0.0 && y != 1.0) {
            return Err(BoostError::Data(format!(
                "logistic targets must be 0 or 1, row {i} is {}",
                targets[i]
            )));
        }
    }
    Ok(())
}

fn base_score(loss: Loss, targets: &[f64]) -> Result<f64> {
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    match loss {
        Loss::SquaredError => Ok(mean),
        Loss::Logistic => {
            if mean <= 0.0 || mean >= 1.0 {
                return Err(BoostError::Data(
                    "logistic training needs both classes present".into(),
                ));
            }
            Ok((mean / (1.0 - mean)).ln())
        }
    }
}

/// Trains an ensemble. Identical `(matrix, targets, config, seed)` give a
/// bit-identical ensemble.
///
/// Feature subsampling, GOSS row sampling and DART dropout draw from
/// separate random streams, so a mode whose sampling degenerates (GOSS with
/// `a = 1`, DART with `drop_rate = 0`) reproduces GBDT exactly.
pub fn train(
    matrix: &Matrix,
    targets: &[f64],
    config: &BoostingConfig,
    seed: u64,
) -> Result<Ensemble> {
    config.validate()?;
    validate_training_data(matrix, targets, config.loss)?;
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    let base = base_score(config.loss, targets)?;

    let presorted = Presorted::new(matrix);
    let mut feature_rng = seed::rng(seed::derive(seed, "features"));
    let mut goss_rng = seed::rng(seed::derive(seed, "goss"));
    let mut dart_rng = seed::rng(seed::derive(seed, "dart"));
    let n_features = ((config.feature_fraction * d as f64 - 1e-9).ceil() as usize).clamp(1, d);

    let mut preds = vec![base; n];
    let mut trees: Vec<WeightedTree> = Vec::with_capacity(config.n_trees);
    // Per-tree outputs on the training rows, kept for DART rescaling.
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    let mut grad = Vec::with_capacity(n);
    let mut hess = Vec::with_capacity(n);
    let mut active = vec![true; n];

    for _ in 0..config.n_trees {
        let drop = if config.mode == Mode::Dart {
            Some(dart_drop_capped(
                trees.len(),
                config.drop_rate,
                config.max_dropped,
                &mut dart_rng,
            )?)
        } else {
            None
        };
        let dropped: &[usize] = drop.as_ref().map_or(&[], |d| &d.dropped);

        let mut base_preds = None;
        if !dropped.is_empty() {
            let mut p = preds.clone();
            for &j in dropped {
                let w = trees[j].weight;
                for (pi, oi) in p.iter_mut().zip(&outputs[j]) {
                    *pi -= w * oi;
                }
            }
            base_preds = Some(p);
        }
        fill_gradients(
            config.loss,
            targets,
            base_preds.as_deref().unwrap_or(&preds),
            &mut grad,
            &mut hess,
        );

        if config.mode == Mode::Goss {
            let (idx, w) = goss_sample(&grad, config.top_rate, config.other_rate, &mut goss_rng)?;
            active.iter_mut().for_each(|a| *a = false);
            let mut weight = vec![0.0; n];
            for (&i, &wi) in idx.iter().zip(&w) {
                active[i] = true;
                weight[i] = wi;
            }
            for i in 0..n {
                grad[i] *= weight[i];
                hess[i] *= weight[i];
            }
        }

        let features: Vec<usize> = if n_features < d {
            let mut f: Vec<usize> = index::sample(&mut feature_rng, d, n_features).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..d).collect()
        };

        let root = Grower::new(matrix, &grad, &hess, config).grow(&presorted, &active, &features);
        let out: Vec<f64> = (0..n).map(|i| root.predict(matrix.row(i))).collect();

        match (drop, base_preds) {
            (Some(drop), Some(mut p)) => {
                let weight = config.learning_rate * drop.new_tree_scale;
                for &j in &drop.dropped {
                    trees[j].weight *= drop.dropped_rescale;
                    let w = trees[j].weight;
                    for (pi, oi) in p.iter_mut().zip(&outputs[j]) {
                        *pi += w * oi;
                    }
                }
                for (pi, oi) in p.iter_mut().zip(&out) {
                    *pi += weight * oi;
                }
                preds = p;
                trees.push(WeightedTree { root, weight });
            }
            _ => {
                let weight = config.learning_rate;
                for (pi, oi) in preds.iter_mut().zip(&out) {
                    *pi += weight * oi;
                }
                trees.push(WeightedTree { root, weight });
            }
        }
        if config.mode == Mode::Dart {
            outputs.push(out);
        }
    }

    Ok(Ensemble {
        base_score: base,
        trees,
        config: config.clone(),
        seed,
        n_features: d,
    })
}

/// Raw additive score (logit for logistic loss).
pub fn predict_margin(ensemble: &Ensemble, rows: &Matrix) -> Result<Vec<f64>> {
    if rows.n_cols() != ensemble.n_features {
        return Err(BoostError::Data(format!(
            "model expects {} features, got {}",
            ensemble.n_features,
            rows.n_cols()
        )));
    }
    Ok((0..rows.n_rows())
        .map(|i| {
            let row = rows.row(i);
            ensemble.trees.iter().fold(ensemble.base_score, |acc, t| {
                acc + t.weight * t.root.predict(row)
            })
        })
        .collect())
}

/// Predicted mPAP (squared error) or PH probability (logistic).
pub fn predict(ensemble: &Ensemble, rows: &Matrix) -> Result<Vec<f64>> {
    let mut out = predict_margin(ensemble, rows)?;
    if ensemble.loss() == Loss::Logistic {
        out.iter_mut().for_each(|v| *v = sigmoid(*v));
    }
    Ok(out)
}
