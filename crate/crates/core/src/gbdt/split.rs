//! Histogram construction and the level-wise oblivious split search.
//!
//! At each level every current node receives the same `(feature, threshold)`
//! test. A candidate's gain is the sum over nodes of
//! `score(left) + score(right) - score(node)` with
//! `score(G, H) = sum_c G_c^2 / (H_c + lambda)`; for squared error with
//! `lambda = 0` this is the reduction of the weighted sum of squared residuals.

use rayon::prelude::*;

use super::binning::BinnedMatrix;
use super::loss::Gradients;

/// Sums of gradients, hessians and sample counts per `(node, bin)` for one feature.
#[derive(Clone, Debug)]
pub struct FeatureHistogram {
    pub nodes: usize,
    pub bins: usize,
    pub width: usize,
    /// `[(node * bins + bin) * width + class]`
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    /// `[node * bins + bin]`
    pub count: Vec<u32>,
}

impl FeatureHistogram {
    fn zeros(nodes: usize, bins: usize, width: usize) -> Self {
        let cells = nodes * bins;
        FeatureHistogram {
            nodes,
            bins,
            width,
            grad: vec![0.0; cells * width],
            hess: vec![0.0; cells * width],
            count: vec![0; cells],
        }
    }

    /// Accumulate one feature column in sample order.
    pub fn build(column: &[u8], bins: usize, node_of: &[u32], nodes: usize, g: &Gradients) -> Self {
        let mut h = Self::zeros(nodes, bins, g.width);
        h.accumulate(column, node_of, 0..column.len() as u32, g);
        h
    }

    /// Accumulate only the listed rows, in the given order.
    pub fn build_rows(
        column: &[u8],
        bins: usize,
        node_of: &[u32],
        rows: &[u32],
        nodes: usize,
        g: &Gradients,
    ) -> Self {
        let mut h = Self::zeros(nodes, bins, g.width);
        h.accumulate(column, node_of, rows.iter().copied(), g);
        h
    }

    fn accumulate(&mut self, column: &[u8], node_of: &[u32], rows: impl Iterator<Item = u32>, g: &Gradients) {
        let (bins, width) = (self.bins, self.width);
        let FeatureHistogram { grad, hess, count, .. } = self;
        if width == 1 {
            for i in rows {
                let i = i as usize;
                let k = node_of[i] as usize * bins + column[i] as usize;
                grad[k] += g.grad[i];
                hess[k] += g.hess[i];
                count[k] += 1;
            }
        } else {
            for i in rows {
                let i = i as usize;
                let k = node_of[i] as usize * bins + column[i] as usize;
                count[k] += 1;
                let src = i * width..(i + 1) * width;
                let dst = k * width..(k + 1) * width;
                for (d, s) in grad[dst.clone()].iter_mut().zip(&g.grad[src.clone()]) {
                    *d += s;
                }
                for (d, s) in hess[dst].iter_mut().zip(&g.hess[src]) {
                    *d += s;
                }
            }
        }
    }

    /// Complete a child-level histogram in which only one child of each parent
    /// was accumulated: the other child is the parent minus that child.
    /// `built_right[p]` tells which child of parent `p` (nodes `2p`, `2p + 1`) is present.
    pub fn fill_siblings(&mut self, parent: &FeatureHistogram, built_right: &[bool]) {
        let stride = self.bins * self.width;
        for (p, &right) in built_right.iter().enumerate() {
            let (have, missing) = if right { (2 * p + 1, 2 * p) } else { (2 * p, 2 * p + 1) };
            let src = p * stride..(p + 1) * stride;
            for j in 0..stride {
                self.grad[missing * stride + j] = parent.grad[src.start + j] - self.grad[have * stride + j];
                self.hess[missing * stride + j] = parent.hess[src.start + j] - self.hess[have * stride + j];
            }
            for b in 0..self.bins {
                self.count[missing * self.bins + b] =
                    parent.count[p * self.bins + b] - self.count[have * self.bins + b];
            }
        }
    }
}

#[inline]
fn score(grad: &[f64], hess: &[f64], lambda: f64) -> f64 {
    grad.iter()
        .zip(hess)
        .map(|(g, h)| {
            let denom = h + lambda;
            if denom > 0.0 {
                g * g / denom
            } else {
                0.0
            }
        })
        .sum()
}

/// Split constraints shared by every candidate.
#[derive(Clone, Copy, Debug)]
pub struct SplitRules {
    pub lambda: f64,
    /// Each child of a node must be empty or hold at least this many samples.
    pub min_samples_leaf: usize,
}

/// Best threshold bin of one feature: `(bin, gain)`, left side being bins `..=bin`.
pub fn best_bin(hist: &FeatureHistogram, rules: SplitRules) -> Option<(usize, f64)> {
    let FeatureHistogram { nodes, bins, width, .. } = *hist;
    if bins < 2 {
        return None;
    }
    let min_leaf = rules.min_samples_leaf as u32;
    // per-node running left sums and node totals
    let mut left_g = vec![0.0; nodes * width];
    let mut left_h = vec![0.0; nodes * width];
    let mut left_n = vec![0u32; nodes];
    let mut total_g = vec![0.0; nodes * width];
    let mut total_h = vec![0.0; nodes * width];
    let mut total_n = vec![0u32; nodes];
    for node in 0..nodes {
        for b in 0..bins {
            let k = node * bins + b;
            total_n[node] += hist.count[k];
            for c in 0..width {
                total_g[node * width + c] += hist.grad[k * width + c];
                total_h[node * width + c] += hist.hess[k * width + c];
            }
        }
    }
    let parent: Vec<f64> = (0..nodes)
        .map(|node| {
            let r = node * width..(node + 1) * width;
            score(&total_g[r.clone()], &total_h[r], rules.lambda)
        })
        .collect();
    let mut right_g = vec![0.0; width];
    let mut right_h = vec![0.0; width];
    let mut best: Option<(usize, f64)> = None;
    for b in 0..bins - 1 {
        let mut gain = 0.0;
        let mut admissible = true;
        let mut splits_something = false;
        for node in 0..nodes {
            let k = node * bins + b;
            left_n[node] += hist.count[k];
            let r = node * width..(node + 1) * width;
            for c in 0..width {
                left_g[node * width + c] += hist.grad[k * width + c];
                left_h[node * width + c] += hist.hess[k * width + c];
            }
            let nl = left_n[node];
            let nr = total_n[node] - nl;
            if (nl > 0 && nl < min_leaf) || (nr > 0 && nr < min_leaf) {
                admissible = false;
            }
            if nl == 0 || nr == 0 {
                continue;
            }
            splits_something = true;
            for c in 0..width {
                right_g[c] = total_g[node * width + c] - left_g[node * width + c];
                right_h[c] = total_h[node * width + c] - left_h[node * width + c];
            }
            gain += score(&left_g[r.clone()], &left_h[r], rules.lambda)
                + score(&right_g, &right_h, rules.lambda)
                - parent[node];
        }
        if !admissible || !splits_something || !(gain > 0.0) {
            continue;
        }
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((b, gain));
        }
    }
    best
}

/// Chosen split of one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub bin: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best `(feature, threshold)` applied to all `nodes` at once.
///
/// Features are scanned in parallel, each histogram accumulated in sample
/// order, and ties resolved by the lowest feature index then lowest
/// threshold, so the result does not depend on the thread count. Returns
/// `None` when no candidate has positive gain.
pub fn find_best_oblivious_split(
    binned: &BinnedMatrix,
    gradients: &Gradients,
    node_of: &[u32],
    nodes: usize,
    candidates: &[usize],
    rules: SplitRules,
) -> Option<SplitCandidate> {
    let hists: Vec<FeatureHistogram> = candidates
        .par_iter()
        .map(|&f| {
            FeatureHistogram::build(binned.column(f), binned.cuts[f].num_bins(), node_of, nodes, gradients)
        })
        .collect();
    best_split_from_histograms(binned, &hists, candidates, rules)
}

/// Best split given one prebuilt histogram per candidate feature.
pub fn best_split_from_histograms(
    binned: &BinnedMatrix,
    hists: &[FeatureHistogram],
    candidates: &[usize],
    rules: SplitRules,
) -> Option<SplitCandidate> {
    let per_feature: Vec<Option<(usize, f64)>> =
        hists.par_iter().map(|h| best_bin(h, rules)).collect();
    let mut best: Option<SplitCandidate> = None;
    for (&feature, found) in candidates.iter().zip(per_feature) {
        let Some((bin, gain)) = found else { continue };
        let better = match best {
            None => true,
            Some(b) => gain > b.gain || (gain == b.gain && feature < b.feature),
        };
        if better {
            best = Some(SplitCandidate {
                feature,
                bin,
                threshold: binned.cuts[feature].threshold(bin),
                gain,
            });
        }
    }
    best
}
