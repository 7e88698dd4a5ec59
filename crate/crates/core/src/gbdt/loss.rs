//! Losses, softmax, and per-sample gradients.

use crate::error::{Error, Result};

use super::params::LossKind;

/// `sqrt(sum w (pred - t)^2 / sum w)`.
pub fn loss_weighted_rmse(pred: &[f64], targets: &[f64], weights: &[f64]) -> Result<f64> {
    if pred.len() != targets.len() || pred.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "pred {}, targets {}, weights {}",
            pred.len(),
            targets.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let sse: f64 = pred
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((p, t), w)| w * (p - t) * (p - t))
        .sum();
    Ok((sse / total).sqrt())
}

/// Numerically stable `log(sum exp(a))`.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logits.iter().map(|a| (a - max).exp()).sum::<f64>().ln()
}

/// In-place softmax over one row of logits.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, a) in out.iter_mut().zip(logits) {
        *o = (a - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

/// Weighted negative log-likelihood `-sum w log softmax(a)[t] / sum w`.
///
/// `logits` is row-major `N x T`.
pub fn loss_weighted_multiclass(logits: &[f64], labels: &[usize], weights: &[f64]) -> Result<f64> {
    let n = labels.len();
    if n == 0 || weights.len() != n || !logits.len().is_multiple_of(n) {
        return Err(Error::DimensionMismatch(format!(
            "logits {}, labels {n}, weights {}",
            logits.len(),
            weights.len()
        )));
    }
    let t = logits.len() / n;
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let mut acc = 0.0;
    for (i, (&label, &w)) in labels.iter().zip(weights).enumerate() {
        if label >= t {
            return Err(Error::OutOfBounds(format!("label {label} outside [0, {t})")));
        }
        if w == 0.0 {
            continue;
        }
        let row = &logits[i * t..(i + 1) * t];
        acc += w * (log_sum_exp(row) - row[label]);
    }
    Ok(acc / total)
}

/// Weighted first and second derivatives, row-major `N x width`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub width: usize,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Gradients {
    pub fn len(&self) -> usize {
        self.grad.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.grad.is_empty()
    }
}

/// Gradients of the loss at the current raw predictions.
///
/// Squared error gives `w (F - t)` with hessian `w`; multiclass gives
/// `w (softmax(a) - onehot(t))` with diagonal hessian `w p (1 - p)`.
/// `targets` holds heights for regression and class ids for classification.
pub fn gradients(loss: LossKind, raw: &[f64], targets: &[f64], weights: &[f64]) -> Gradients {
    let n = targets.len();
    match loss {
        LossKind::WeightedRmse => Gradients {
            width: 1,
            grad: raw
                .iter()
                .zip(targets)
                .zip(weights)
                .map(|((f, t), w)| w * (f - t))
                .collect(),
            hess: weights.to_vec(),
        },
        LossKind::WeightedMultiClass => {
            let width = raw.len() / n.max(1);
            let mut grad = vec![0.0; raw.len()];
            let mut hess = vec![0.0; raw.len()];
            for i in 0..n {
                let range = i * width..(i + 1) * width;
                let g = &mut grad[range.clone()];
                softmax_into(&raw[range.clone()], g);
                let h = &mut hess[range];
                let w = weights[i];
                for (hc, gc) in h.iter_mut().zip(g.iter()) {
                    *hc = w * gc * (1.0 - gc);
                }
                g[targets[i] as usize] -= 1.0;
                g.iter_mut().for_each(|gc| *gc *= w);
            }
            Gradients { width, grad, hess }
        }
    }
}
