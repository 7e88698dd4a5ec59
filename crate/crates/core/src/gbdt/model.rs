//! Trained ensembles, prediction, and the model file.
//!
//! # Model file (format version 1)
//!
//! A JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "loss": "weighted_rmse" | "weighted_multiclass",
//!   "num_features": M,
//!   "learning_rate": nu,
//!   "base_score": [F0] | [0, ..., 0] (one per class),
//!   "quantization": null | {"origin": m, "bin_width": m, "num_classes": T},
//!   "target": null | "CHM" | "DTM",
//!   "trees": [{"splits": [[feature, threshold], ...], "leaves": [...]}, ...]
//! }
//! ```
//!
//! `leaves` is row-major `2^depth x width` where width is 1 for regression and
//! `T` for classification. Floats are written in shortest round-trip form so
//! a reloaded model predicts bit for bit like the original.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sardata::RasterKind;

use super::loss::softmax;
use super::params::LossKind;
use super::quantize::QuantizationMap;
use super::tree::{ObliviousTree, Split};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Class scores of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassProbabilities {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ClassProbabilities {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let probabilities = softmax(&logits);
        ClassProbabilities {
            logits,
            probabilities,
        }
    }

    /// Most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// `F(x) = F0 + nu * sum_z leaf_z(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GbdtModel {
    pub(crate) loss: LossKind,
    pub(crate) num_features: usize,
    pub(crate) learning_rate: f64,
    pub(crate) base_score: Vec<f64>,
    pub(crate) trees: Vec<ObliviousTree>,
    pub(crate) quantization: Option<QuantizationMap>,
    pub(crate) target: Option<RasterKind>,
}

impl GbdtModel {
    pub fn new(
        loss: LossKind,
        num_features: usize,
        learning_rate: f64,
        base_score: Vec<f64>,
        trees: Vec<ObliviousTree>,
        quantization: Option<QuantizationMap>,
    ) -> Result<Self> {
        let width = match (loss, &quantization) {
            (LossKind::WeightedRmse, None) => 1,
            (LossKind::WeightedMultiClass, Some(q)) => q.num_classes,
            _ => {
                return Err(Error::ModelFormat(
                    "classification models need a quantization map, regression models none".into(),
                ))
            }
        };
        if base_score.len() != width {
            return Err(Error::ModelFormat(format!(
                "base score has {} entries, expected {width}",
                base_score.len()
            )));
        }
        for (z, tree) in trees.iter().enumerate() {
            if tree.width() != width {
                return Err(Error::ModelFormat(format!("tree {z} has leaf width {}", tree.width())));
            }
            if let Some(f) = tree.max_feature().filter(|&f| f >= num_features) {
                return Err(Error::ModelFormat(format!(
                    "tree {z} splits on feature {f} of {num_features}"
                )));
            }
        }
        Ok(GbdtModel {
            loss,
            num_features,
            learning_rate,
            base_score,
            trees,
            quantization,
            target: None,
        })
    }

    pub fn with_target(mut self, target: RasterKind) -> Self {
        self.target = Some(target);
        self
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn base_score(&self) -> &[f64] {
        &self.base_score
    }

    pub fn trees(&self) -> &[ObliviousTree] {
        &self.trees
    }

    pub fn quantization(&self) -> Option<&QuantizationMap> {
        self.quantization.as_ref()
    }

    pub fn target(&self) -> Option<RasterKind> {
        self.target
    }

    /// Score width: 1 for regression, `T` for classification.
    pub fn width(&self) -> usize {
        self.base_score.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.trees.iter().map(|t| t.num_leaves()).sum()
    }

    /// Keep only the first `n` trees.
    pub fn truncate(&mut self, n: usize) {
        self.trees.truncate(n);
    }

    /// Rescale every leaf by `factor` and the learning rate by `1 / factor`.
    pub fn rescale_leaves(&mut self, factor: f64) {
        for t in &mut self.trees {
            t.scale_leaves(factor);
        }
        self.learning_rate /= factor;
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.num_features {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {len}",
                self.num_features
            )));
        }
        Ok(())
    }

    /// Raw scores (height or logits) of one sample.
    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.raw_unchecked(x))
    }

    fn raw_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let width = self.width();
        let mut sum = vec![0.0; width];
        for tree in &self.trees {
            for (s, v) in sum.iter_mut().zip(tree.leaf(x)) {
                *s += v;
            }
        }
        self.base_score
            .iter()
            .zip(sum)
            .map(|(b, s)| b + self.learning_rate * s)
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ClassProbabilities> {
        if self.loss != LossKind::WeightedMultiClass {
            return Err(Error::ModelFormat("class probabilities need a classifier".into()));
        }
        Ok(ClassProbabilities::from_logits(self.raw_scores(x)?))
    }

    fn height_unchecked(&self, x: &[f64]) -> f64 {
        let raw = self.raw_unchecked(x);
        match &self.quantization {
            None => raw[0],
            Some(q) => q.dequantize(ClassProbabilities::from_logits(raw).argmax()),
        }
    }

    /// Predicted height of one sample; classifiers return the center of the argmax class.
    pub fn predict_height(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.height_unchecked(x))
    }

    /// Heights for a row-major `N x M` matrix, evaluated in parallel over rows.
    pub fn predict_heights(&self, features: &[f64]) -> Result<Vec<f64>> {
        let m = self.num_features;
        if m == 0 || !features.len().is_multiple_of(m) {
            return Err(Error::DimensionMismatch(format!(
                "{} values is not a whole number of {m}-feature rows",
                features.len()
            )));
        }
        Ok(features
            .par_chunks(m)
            .map(|x| self.height_unchecked(x))
            .collect())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            loss: self.loss,
            num_features: self.num_features,
            learning_rate: self.learning_rate,
            base_score: self.base_score.clone(),
            quantization: self.quantization,
            target: self.target,
            trees: self
                .trees
                .iter()
                .map(|t| TreeRecord {
                    splits: t.splits().iter().map(|s| (s.feature, s.threshold)).collect(),
                    leaves: t.leaf_values().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {}",
                file.format_version
            )));
        }
        let width = file.base_score.len();
        let trees = file
            .trees
            .into_iter()
            .enumerate()
            .map(|(z, t)| {
                let splits = t
                    .splits
                    .into_iter()
                    .map(|(feature, threshold)| Split { feature, threshold })
                    .collect();
                ObliviousTree::new(splits, t.leaves, width)
                    .ok_or_else(|| Error::ModelFormat(format!("tree {z}: leaf count mismatch")))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = GbdtModel::new(
            file.loss,
            file.num_features,
            file.learning_rate,
            file.base_score,
            trees,
            file.quantization,
        )?;
        Ok(GbdtModel {
            target: file.target,
            ..model
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    loss: LossKind,
    num_features: usize,
    learning_rate: f64,
    base_score: Vec<f64>,
    quantization: Option<QuantizationMap>,
    #[serde(default)]
    target: Option<RasterKind>,
    trees: Vec<TreeRecord>,
}

#[derive(Serialize, Deserialize)]
struct TreeRecord {
    splits: Vec<(usize, f64)>,
    leaves: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> GbdtModel {
        let tree = ObliviousTree::new(
            vec![Split {
                feature: 0,
                threshold: 1.0,
            }],
            vec![-0.5, 0.5],
            1,
        )
        .unwrap();
        GbdtModel::new(LossKind::WeightedRmse, 1, 1.0, vec![0.5], vec![tree], None).unwrap()
    }

    #[test]
    fn hand_traced_stump() {
        let m = stump();
        let p = m.predict_heights(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_model_predicts_base() {
        let m = GbdtModel::new(LossKind::WeightedRmse, 3, 0.1, vec![7.25], vec![], None).unwrap();
        assert_eq!(m.predict_height(&[1.0, 2.0, 3.0]).unwrap(), 7.25);
        assert!(matches!(
            m.predict_height(&[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn classifier_returns_bin_centers() {
        let q = QuantizationMap::new(10.0, 2.0, 3).unwrap();
        let tree = ObliviousTree::new(
            vec![Split { feature: 0, threshold: 0.0 }],
            vec![5.0, 0.0, 0.0, 0.0, 0.0, 5.0],
            3,
        )
        .unwrap();
        let m = GbdtModel::new(LossKind::WeightedMultiClass, 1, 1.0, vec![0.0; 3], vec![tree], Some(q)).unwrap();
        assert_eq!(m.predict_height(&[-1.0]).unwrap(), 11.0);
        assert_eq!(m.predict_height(&[1.0]).unwrap(), 15.0);
        let p = m.predict_proba(&[1.0]).unwrap();
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.argmax(), 2);
    }

    #[test]
    fn rejects_inconsistent_models() {
        assert!(GbdtModel::new(LossKind::WeightedRmse, 1, 1.0, vec![0.0, 0.0], vec![], None).is_err());
        let tree = ObliviousTree::new(vec![Split { feature: 4, threshold: 0.0 }], vec![0.0, 0.0], 1).unwrap();
        assert!(GbdtModel::new(LossKind::WeightedRmse, 2, 1.0, vec![0.0], vec![tree], None).is_err());
        assert!(GbdtModel::new(LossKind::WeightedMultiClass, 1, 1.0, vec![0.0], vec![], None).is_err());
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let mut m = stump().with_target(RasterKind::Chm);
        m.trees[0].scale_leaves(1.0 / 3.0);
        let back = GbdtModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(GbdtModel::from_json("{}").is_err());
        let bumped = m.to_json().replace("\"format_version\":1", "\"format_version\":9");
        assert!(GbdtModel::from_json(&bumped).is_err());
    }

    #[test]
    fn rescaling_leaves_preserves_predictions() {
        let m = stump();
        let mut scaled = m.clone();
        scaled.rescale_leaves(4.0);
        for x in [0.0, 2.0] {
            let a = m.predict_height(&[x]).unwrap();
            let b = scaled.predict_height(&[x]).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
