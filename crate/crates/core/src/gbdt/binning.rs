//! Equal-frequency feature binning, computed once before boosting.
//!
//! Cut points are actual data values and bins are assigned by rank, so any
//! strictly increasing transform of a column yields the same bin assignment.

use rayon::prelude::*;

/// Upper bin edges of one feature. A value `x` falls in the first bin `b`
/// with `x <= cuts[b]`, or in the last bin `cuts.len()` if it exceeds them all.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCuts(pub Vec<f64>);

impl FeatureCuts {
    pub fn num_bins(&self) -> usize {
        self.0.len() + 1
    }

    #[inline]
    pub fn bin_of(&self, x: f64) -> usize {
        self.0.partition_point(|&c| c < x)
    }

    /// Raw threshold separating bins `..=bin` from the rest.
    pub fn threshold(&self, bin: usize) -> f64 {
        self.0[bin]
    }

    /// Equal-frequency cuts of `values` into at most `max_bins` bins.
    pub fn fit(values: &[f64], max_bins: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut uniques: Vec<(f64, usize)> = Vec::new();
        for v in sorted {
            match uniques.last_mut() {
                Some((u, count)) if *u == v => *count += 1,
                _ => uniques.push((v, 1)),
            }
        }
        if uniques.len() <= max_bins {
            let cuts = uniques.iter().take(uniques.len().saturating_sub(1)).map(|u| u.0).collect();
            return FeatureCuts(cuts);
        }
        let n = values.len() as f64;
        let mut cuts = Vec::with_capacity(max_bins - 1);
        let mut seen = 0usize;
        for (i, &(v, count)) in uniques.iter().enumerate() {
            seen += count;
            if i + 1 == uniques.len() || cuts.len() + 1 == max_bins {
                break;
            }
            // close the bin once its share of the samples is reached
            let target = (cuts.len() + 1) as f64 * n / max_bins as f64;
            if seen as f64 >= target {
                cuts.push(v);
            }
        }
        FeatureCuts(cuts)
    }
}

/// Column-major bin indices of a feature matrix.
#[derive(Clone, Debug)]
pub struct BinnedMatrix {
    pub num_rows: usize,
    pub cuts: Vec<FeatureCuts>,
    /// `bins[feature * num_rows + row]`.
    pub bins: Vec<u8>,
}

impl BinnedMatrix {
    /// Fit cuts on the row-major `features` and bin every value.
    pub fn fit(features: &[f64], dim: usize, max_bins: usize) -> Self {
        assert!(max_bins <= 256, "bins are stored as u8");
        let num_rows = features.len().checked_div(dim).unwrap_or(0);
        let columns: Vec<(FeatureCuts, Vec<u8>)> = (0..dim)
            .into_par_iter()
            .map(|f| {
                let column: Vec<f64> = (0..num_rows).map(|r| features[r * dim + f]).collect();
                let cuts = FeatureCuts::fit(&column, max_bins);
                let bins = column.iter().map(|&x| cuts.bin_of(x) as u8).collect();
                (cuts, bins)
            })
            .collect();
        let mut cuts = Vec::with_capacity(dim);
        let mut bins = Vec::with_capacity(dim * num_rows);
        for (c, b) in columns {
            cuts.push(c);
            bins.extend(b);
        }
        BinnedMatrix { num_rows, cuts, bins }
    }

    pub fn num_features(&self) -> usize {
        self.cuts.len()
    }

    #[inline]
    pub fn column(&self, feature: usize) -> &[u8] {
        &self.bins[feature * self.num_rows..(feature + 1) * self.num_rows]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_uniques_get_own_bins() {
        let cuts = FeatureCuts::fit(&[3.0, 1.0, 2.0, 2.0, 1.0], 8);
        assert_eq!(cuts.0, vec![1.0, 2.0]);
        assert_eq!(cuts.bin_of(0.5), 0);
        assert_eq!(cuts.bin_of(1.0), 0);
        assert_eq!(cuts.bin_of(1.5), 1);
        assert_eq!(cuts.bin_of(3.0), 2);
        assert_eq!(cuts.bin_of(9.0), 2);
    }

    #[test]
    fn constant_column_has_one_bin() {
        let cuts = FeatureCuts::fit(&[4.0; 10], 16);
        assert_eq!(cuts.num_bins(), 1);
    }

    #[test]
    fn equal_frequency_bins_are_balanced() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let cuts = FeatureCuts::fit(&values, 10);
        assert_eq!(cuts.num_bins(), 10);
        let mut counts = vec![0; 10];
        for &v in &values {
            counts[cuts.bin_of(v)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 100), "{counts:?}");
    }

    #[test]
    fn binned_matrix_layout() {
        let features = vec![0.0, 10.0, 1.0, 10.0, 2.0, 11.0];
        let m = BinnedMatrix::fit(&features, 2, 256);
        assert_eq!(m.column(0), &[0, 1, 2]);
        assert_eq!(m.column(1), &[0, 0, 1]);
    }

    proptest::proptest! {
        #[test]
        fn monotone_transform_keeps_bins(
            values in proptest::collection::vec(-1e3f64..1e3, 1..400),
            bins in 2usize..64,
        ) {
            let transformed: Vec<f64> = values.iter().map(|v| (v / 100.0).exp() * 3.0 + 1.0).collect();
            // the transform must stay strictly increasing in floating point
            let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(transformed.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            proptest::prop_assume!(pairs.windows(2).all(|w| (w[0].0 < w[1].0) == (w[0].1 < w[1].1)));
            let a = FeatureCuts::fit(&values, bins);
            let b = FeatureCuts::fit(&transformed, bins);
            for (x, y) in values.iter().zip(&transformed) {
                proptest::prop_assert_eq!(a.bin_of(*x), b.bin_of(*y));
            }
        }
    }
}
