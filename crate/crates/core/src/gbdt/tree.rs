use serde::{Deserialize, Serialize};

/// One level test: go right when `x[feature] > threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
}

/// Symmetric tree: level `l` applies `splits[l]` to every node, so a sample's
/// leaf is the bit code of its `depth` comparisons, first level most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct ObliviousTree {
    splits: Vec<Split>,
    /// `2^depth` rows of `width` values.
    leaf_values: Vec<f64>,
    width: usize,
}

impl ObliviousTree {
    pub fn new(splits: Vec<Split>, leaf_values: Vec<f64>, width: usize) -> Option<Self> {
        if width == 0 || leaf_values.len() != (1usize << splits.len()) * width {
            return None;
        }
        Some(ObliviousTree {
            splits,
            leaf_values,
            width,
        })
    }

    pub fn depth(&self) -> usize {
        self.splits.len()
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.splits.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn leaf_values(&self) -> &[f64] {
        &self.leaf_values
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.splits.iter().map(|s| s.feature).max()
    }

    #[inline]
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        self.splits
            .iter()
            .fold(0usize, |code, s| (code << 1) | usize::from(x[s.feature] > s.threshold))
    }

    #[inline]
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let i = self.leaf_index(x);
        &self.leaf_values[i * self.width..(i + 1) * self.width]
    }

    /// Multiply every leaf value by `factor`.
    pub fn scale_leaves(&mut self, factor: f64) {
        self.leaf_values.iter_mut().for_each(|v| *v *= factor);
    }
}
