//! Boosting loop.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::binning::BinnedMatrix;
use super::data::{Targets, TrainingSet};
use super::loss::{gradients, Gradients, loss_weighted_multiclass, loss_weighted_rmse};
use super::model::GbdtModel;
use super::params::{GbdtHyperparams, LossKind};
use super::quantize::QuantizationMap;
use super::split::{best_split_from_histograms, FeatureHistogram, SplitRules};
use super::tree::{ObliviousTree, Split};

/// A trained model with its per-iteration losses.
///
/// `train_loss[z]` and `valid_loss[z]` are measured after `z` trees, so index 0
/// is the `F0`-only model. Regression losses are weighted RMSE, classification
/// losses weighted cross-entropy. Validation losses use unit weights.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: GbdtModel,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    /// Number of trees kept.
    pub best_iteration: usize,
}

pub fn train(
    data: &TrainingSet,
    validation: Option<&TrainingSet>,
    hp: &GbdtHyperparams,
) -> Result<GbdtModel> {
    train_with_history(data, validation, hp).map(|o| o.model)
}

struct Objective {
    loss: LossKind,
    width: usize,
    targets: Vec<f64>,
    labels: Vec<usize>,
    weights: Vec<f64>,
}

impl Objective {
    fn new(set: &TrainingSet, loss: LossKind, quantization: Option<&QuantizationMap>, unit: bool) -> Result<Self> {
        let weights = if unit {
            vec![1.0; set.len()]
        } else {
            set.weights().to_vec()
        };
        match (loss, set.targets(), quantization) {
            (LossKind::WeightedRmse, Targets::Heights(h), _) => Ok(Objective {
                loss,
                width: 1,
                targets: h.clone(),
                labels: Vec::new(),
                weights,
            }),
            (LossKind::WeightedMultiClass, Targets::Classes { labels, quantization: q }, expected) => {
                if let Some(e) = expected.filter(|e| *e != q) {
                    return Err(Error::InvalidQuantization(format!(
                        "validation quantization {q:?} differs from training {e:?}"
                    )));
                }
                Ok(Objective {
                    loss,
                    width: q.num_classes,
                    targets: labels.iter().map(|&l| l as f64).collect(),
                    labels: labels.clone(),
                    weights,
                })
            }
            (LossKind::WeightedMultiClass, Targets::Heights(h), Some(q)) => {
                let labels: Vec<usize> = h.iter().map(|&v| q.class_of(v)).collect();
                Ok(Objective {
                    loss,
                    width: q.num_classes,
                    targets: labels.iter().map(|&l| l as f64).collect(),
                    labels,
                    weights,
                })
            }
            (LossKind::WeightedRmse, Targets::Classes { .. }, _) => Err(Error::InvalidHyperparams(
                "regression loss needs height targets".into(),
            )),
            (LossKind::WeightedMultiClass, Targets::Heights(_), None) => Err(Error::InvalidHyperparams(
                "classification loss needs class targets".into(),
            )),
        }
    }

    fn value(&self, raw: &[f64]) -> Result<f64> {
        match self.loss {
            LossKind::WeightedRmse => loss_weighted_rmse(raw, &self.targets, &self.weights),
            LossKind::WeightedMultiClass => loss_weighted_multiclass(raw, &self.labels, &self.weights),
        }
    }
}

/// Histograms of the level below `parents`, accumulating only the smaller
/// child of each parent and deriving its sibling by subtraction.
fn child_histograms(
    binned: &BinnedMatrix,
    candidates: &[usize],
    grads: &Gradients,
    node_of: &[u32],
    nodes: usize,
    parents: &[FeatureHistogram],
) -> Vec<FeatureHistogram> {
    let mut counts = vec![0usize; nodes];
    for &node in node_of {
        counts[node as usize] += 1;
    }
    let built_right: Vec<bool> = counts.chunks(2).map(|c| c[1] <= c[0]).collect();
    let rows: Vec<u32> = node_of
        .iter()
        .enumerate()
        .filter(|(_, &node)| (node & 1 == 1) == built_right[node as usize >> 1])
        .map(|(i, _)| i as u32)
        .collect();
    candidates
        .par_iter()
        .zip(parents.par_iter())
        .map(|(&f, parent)| {
            let mut h =
                FeatureHistogram::build_rows(binned.column(f), parent.bins, node_of, &rows, nodes, grads);
            h.fill_siblings(parent, &built_right);
            h
        })
        .collect()
}

/// Train and return the loss history.
///
/// With a validation set and `early_stopping_rounds = Some(k)`, boosting stops
/// once `k` consecutive trees fail to lower the validation loss and the model
/// is truncated to the best prefix. A tree may be shallower than `depth` when
/// a level has no split with positive gain; boosting ends when not even the
/// first level can be split.
pub fn train_with_history(
    data: &TrainingSet,
    validation: Option<&TrainingSet>,
    hp: &GbdtHyperparams,
) -> Result<TrainOutcome> {
    hp.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(Error::Empty(format!("training set needs at least 2 samples, got {n}")));
    }
    if !(data.total_weight() > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let dim = data.dim();
    let quantization = match data.targets() {
        Targets::Classes { quantization, .. } => Some(*quantization),
        Targets::Heights(_) => None,
    };
    let objective = Objective::new(data, hp.loss, None, false)?;
    let width = objective.width;
    let valid = match validation {
        Some(v) if !v.is_empty() => {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "validation has {} features, training {dim}",
                    v.dim()
                )));
            }
            Some((v, Objective::new(v, hp.loss, quantization.as_ref(), true)?))
        }
        _ => None,
    };

    let base_score = match hp.loss {
        LossKind::WeightedRmse => {
            let total = data.total_weight();
            let sum: f64 = objective
                .targets
                .iter()
                .zip(&objective.weights)
                .map(|(t, w)| t * w)
                .sum();
            vec![sum / total]
        }
        LossKind::WeightedMultiClass => vec![0.0; width],
    };

    let binned = BinnedMatrix::fit(data.features(), dim, hp.histogram_bins);
    let candidates: Vec<usize> = (0..dim).collect();
    let rules = SplitRules {
        lambda: hp.loss.l2_regularization(),
        min_samples_leaf: hp.min_samples_leaf,
    };
    let nu = hp.learning_rate;

    let mut raw: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut valid_raw: Vec<f64> = valid
        .as_ref()
        .map(|(v, _)| (0..v.len()).flat_map(|_| base_score.iter().copied()).collect())
        .unwrap_or_default();
    let mut train_loss = vec![objective.value(&raw)?];
    let mut valid_loss = Vec::new();
    if let Some((_, obj)) = &valid {
        valid_loss.push(obj.value(&valid_raw)?);
    }

    let mut trees: Vec<ObliviousTree> = Vec::with_capacity(hp.num_trees);
    let mut best = (0usize, valid_loss.first().copied().unwrap_or(f64::INFINITY));
    let mut node_of = vec![0u32; n];

    for _ in 0..hp.num_trees {
        let grads = gradients(hp.loss, &raw, &objective.targets, &objective.weights);
        node_of.iter_mut().for_each(|v| *v = 0);
        let mut splits = Vec::with_capacity(hp.depth);
        let mut hists: Vec<FeatureHistogram> = candidates
            .par_iter()
            .map(|&f| FeatureHistogram::build(binned.column(f), binned.cuts[f].num_bins(), &node_of, 1, &grads))
            .collect();
        for level in 0..hp.depth {
            let Some(c) = best_split_from_histograms(&binned, &hists, &candidates, rules) else {
                break;
            };
            let column = binned.column(c.feature);
            let cut = c.bin as u8;
            node_of
                .par_iter_mut()
                .zip(column.par_iter())
                .for_each(|(node, &b)| *node = (*node << 1) | u32::from(b > cut));
            splits.push(Split {
                feature: c.feature,
                threshold: c.threshold,
            });
            if level + 1 < hp.depth {
                hists = child_histograms(&binned, &candidates, &grads, &node_of, 2 << level, &hists);
            }
        }
        if splits.is_empty() {
            break;
        }

        let leaves = 1usize << splits.len();
        let mut sum_g = vec![0.0; leaves * width];
        let mut sum_h = vec![0.0; leaves * width];
        for (i, &leaf) in node_of.iter().enumerate() {
            let dst = leaf as usize * width;
            for c in 0..width {
                sum_g[dst + c] += grads.grad[i * width + c];
                sum_h[dst + c] += grads.hess[i * width + c];
            }
        }
        let lambda = rules.lambda;
        let leaf_values: Vec<f64> = sum_g
            .iter()
            .zip(&sum_h)
            .map(|(g, h)| if h + lambda > 0.0 { -g / (h + lambda) } else { 0.0 })
            .collect();

        raw.par_chunks_mut(width)
            .zip(node_of.par_iter())
            .for_each(|(r, &leaf)| {
                let v = &leaf_values[leaf as usize * width..(leaf as usize + 1) * width];
                for (a, b) in r.iter_mut().zip(v) {
                    *a += nu * b;
                }
            });
        let tree = ObliviousTree::new(splits, leaf_values, width).expect("leaf count matches depth");
        train_loss.push(objective.value(&raw)?);

        if let Some((vset, vobj)) = &valid {
            valid_raw
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, r)| {
                    for (a, b) in r.iter_mut().zip(tree.leaf(vset.row(i))) {
                        *a += nu * b;
                    }
                });
            let loss = vobj.value(&valid_raw)?;
            valid_loss.push(loss);
            trees.push(tree);
            if loss < best.1 {
                best = (trees.len(), loss);
            }
            if let Some(rounds) = hp.early_stopping_rounds {
                if trees.len() - best.0 >= rounds {
                    break;
                }
            }
        } else {
            trees.push(tree);
        }
    }

    let keep = if valid.is_some() && hp.early_stopping_rounds.is_some() {
        best.0
    } else {
        trees.len()
    };
    trees.truncate(keep);
    let model = GbdtModel::new(hp.loss, dim, nu, base_score, trees, quantization)?;
    Ok(TrainOutcome {
        model,
        train_loss,
        valid_loss,
        best_iteration: keep,
    })
}
