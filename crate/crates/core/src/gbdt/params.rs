use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Weighted squared error, reported as weighted RMSE.
    WeightedRmse,
    /// Weighted softmax cross-entropy over quantized heights.
    WeightedMultiClass,
}

impl LossKind {
    /// Ridge term in leaf values and split scores.
    ///
    /// Zero for squared error, where the Newton leaf is then exactly the
    /// weighted mean residual and split gain the weighted SSE reduction.
    pub fn l2_regularization(self) -> f64 {
        match self {
            LossKind::WeightedRmse => 0.0,
            LossKind::WeightedMultiClass => 1e-3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::WeightedRmse => "weighted_rmse",
            LossKind::WeightedMultiClass => "weighted_multiclass",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbdtHyperparams {
    pub num_trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub histogram_bins: usize,
    pub min_samples_leaf: usize,
    pub loss: LossKind,
    pub early_stopping_rounds: Option<usize>,
    pub seed: u64,
}

impl Default for GbdtHyperparams {
    fn default() -> Self {
        GbdtHyperparams {
            num_trees: 500,
            depth: 6,
            learning_rate: 0.1,
            histogram_bins: 255,
            min_samples_leaf: 20,
            loss: LossKind::WeightedRmse,
            early_stopping_rounds: Some(50),
            seed: 0,
        }
    }
}

/// Largest supported histogram, bins are stored as `u8`.
pub const MAX_BINS: usize = 256;
pub const MAX_DEPTH: usize = 16;

impl GbdtHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperparams(msg));
        if self.num_trees == 0 {
            return bad("num_trees must be >= 1".into());
        }
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return bad(format!("depth must be in 1..={MAX_DEPTH}, got {}", self.depth));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if !(2..=MAX_BINS).contains(&self.histogram_bins) {
            return bad(format!(
                "histogram_bins must be in 2..={MAX_BINS}, got {}",
                self.histogram_bins
            ));
        }
        if self.early_stopping_rounds == Some(0) {
            return bad("early_stopping_rounds must be >= 1 when set".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(GbdtHyperparams::default().validate().is_ok());
    }

    #[test]
    fn invariants_enforced() {
        let base = GbdtHyperparams::default();
        for hp in [
            GbdtHyperparams { num_trees: 0, ..base.clone() },
            GbdtHyperparams { depth: 0, ..base.clone() },
            GbdtHyperparams { depth: 17, ..base.clone() },
            GbdtHyperparams { learning_rate: 0.0, ..base.clone() },
            GbdtHyperparams { learning_rate: 1.5, ..base.clone() },
            GbdtHyperparams { histogram_bins: 1, ..base.clone() },
            GbdtHyperparams { histogram_bins: 257, ..base.clone() },
        ] {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
    }
}
