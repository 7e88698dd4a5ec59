use crate::error::{Error, Result};

use super::quantize::{class_weights, quantize_labels, QuantizationMap};

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Heights(Vec<f64>),
    Classes {
        labels: Vec<usize>,
        quantization: QuantizationMap,
    },
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Heights(v) => v.len(),
            Targets::Classes { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row-major `N x M` features with one target and one weight per row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    features: Vec<f64>,
    dim: usize,
    targets: Targets,
    weights: Vec<f64>,
}

impl TrainingSet {
    pub fn new(features: Vec<f64>, dim: usize, targets: Targets, weights: Vec<f64>) -> Result<Self> {
        let n = targets.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch("feature dimension must be >= 1".into()));
        }
        if features.len() != n * dim {
            return Err(Error::DimensionMismatch(format!(
                "{n} samples of dimension {dim} need {} feature values, got {}",
                n * dim,
                features.len()
            )));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} samples but {} weights",
                weights.len()
            )));
        }
        if let Some(index) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "features".into(),
                index,
            });
        }
        if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::OutOfBounds(format!(
                "weight {} at index {index} must be finite and >= 0",
                weights[index]
            )));
        }
        match &targets {
            Targets::Heights(h) => {
                if let Some(index) = h.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "targets".into(),
                        index,
                    });
                }
            }
            Targets::Classes {
                labels,
                quantization,
            } => {
                if let Some(l) = labels.iter().find(|&&l| l >= quantization.num_classes) {
                    return Err(Error::OutOfBounds(format!(
                        "label {l} outside [0, {})",
                        quantization.num_classes
                    )));
                }
            }
        }
        Ok(TrainingSet {
            features,
            dim,
            targets,
            weights,
        })
    }

    /// Regression set with unit weights.
    pub fn regression(features: Vec<f64>, dim: usize, targets: Vec<f64>) -> Result<Self> {
        let n = targets.len();
        Self::new(features, dim, Targets::Heights(targets), vec![1.0; n])
    }

    /// Quantize height targets into classes of `bin_width` meters weighted by inverse class frequency.
    pub fn into_classification(self, bin_width: f64) -> Result<Self> {
        let Targets::Heights(heights) = &self.targets else {
            return Ok(self);
        };
        let (labels, quantization) = quantize_labels(heights, bin_width)?;
        let weights = class_weights(&labels, quantization.num_classes)?;
        Self::new(
            self.features,
            self.dim,
            Targets::Classes {
                labels,
                quantization,
            },
            weights,
        )
    }

    /// Re-express height targets as classes of an existing map, keeping weights.
    pub fn with_quantization(self, quantization: QuantizationMap) -> Result<Self> {
        let labels = match &self.targets {
            Targets::Heights(h) => h.iter().map(|&v| quantization.class_of(v)).collect(),
            Targets::Classes { .. } => return Ok(self),
        };
        Self::new(
            self.features,
            self.dim,
            Targets::Classes {
                labels,
                quantization,
            },
            self.weights,
        )
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    /// Height of every sample; class targets are reported as bin centers.
    pub fn heights(&self) -> Vec<f64> {
        match &self.targets {
            Targets::Heights(h) => h.clone(),
            Targets::Classes {
                labels,
                quantization,
            } => labels.iter().map(|&c| quantization.dequantize(c)).collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(TrainingSet::regression(vec![1.0, 2.0, 3.0], 2, vec![0.0, 1.0]).is_err());
        assert!(TrainingSet::regression(vec![1.0, f64::NAN], 1, vec![0.0, 1.0]).is_err());
        assert!(TrainingSet::new(vec![1.0], 1, Targets::Heights(vec![0.0]), vec![-1.0]).is_err());
        let ok = TrainingSet::regression(vec![1.0, 2.0, 3.0, 4.0], 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(ok.row(1), &[3.0, 4.0]);
        assert_eq!(ok.total_weight(), 2.0);
    }

    #[test]
    fn classification_conversion() {
        let set = TrainingSet::regression(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0.2, 0.7, 1.4, 3.9]).unwrap();
        let cls = set.into_classification(1.0).unwrap();
        match cls.targets() {
            Targets::Classes { labels, quantization } => {
                assert_eq!(labels, &vec![0, 0, 1, 3]);
                assert_eq!(quantization.num_classes, 4);
            }
            _ => panic!("expected classes"),
        }
        // classes 0,1,3 present: weights N/(T n_c)
        assert_eq!(cls.weights(), &[0.5, 0.5, 1.0, 1.0]);
        assert_eq!(cls.heights(), vec![0.5, 0.5, 1.5, 3.5]);
    }
}
