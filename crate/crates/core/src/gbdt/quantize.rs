//! Height quantization into classes and inverse-frequency class weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps heights onto `num_classes` bins of `bin_width` meters starting at `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationMap {
    pub origin: f64,
    pub bin_width: f64,
    pub num_classes: usize,
}

impl QuantizationMap {
    pub fn new(origin: f64, bin_width: f64, num_classes: usize) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::InvalidQuantization(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidQuantization(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidQuantization("non-finite origin".into()));
        }
        Ok(QuantizationMap {
            origin,
            bin_width,
            num_classes,
        })
    }

    /// Class of `height`, clamped to the valid range.
    pub fn class_of(&self, height: f64) -> usize {
        let raw = ((height - self.origin) / self.bin_width).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.num_classes - 1)
        }
    }

    /// Center of the bin of `class`.
    pub fn dequantize(&self, class: usize) -> f64 {
        self.origin + (class as f64 + 0.5) * self.bin_width
    }
}

/// Quantize heights with bins aligned to multiples of `bin_width`.
pub fn quantize_labels(heights: &[f64], bin_width: f64) -> Result<(Vec<usize>, QuantizationMap)> {
    if heights.is_empty() {
        return Err(Error::Empty("heights to quantize".into()));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidQuantization(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    if let Some(index) = heights.iter().position(|h| !h.is_finite()) {
        return Err(Error::NonFinite {
            what: "heights".into(),
            index,
        });
    }
    let min = heights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let origin = (min / bin_width).floor() * bin_width;
    let num_classes = ((max - origin) / bin_width).floor() as usize + 1;
    let map = QuantizationMap::new(origin, bin_width, num_classes)?;
    Ok((heights.iter().map(|&h| map.class_of(h)).collect(), map))
}

/// `w_i = N / (T n_{t_i})`, with `n_c` the number of samples of class `c`.
pub fn class_weights(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(Error::OutOfBounds(format!(
                "label {l} outside [0, {num_classes})"
            )));
        }
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    let t = num_classes as f64;
    Ok(labels.iter().map(|&l| n / (t * counts[l] as f64)).collect())
}
