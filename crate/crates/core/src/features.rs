//! Boxcar covariance estimation and per-pixel feature extraction.
//!
//! A pixel's feature vector holds the `3Nb` real diagonal entries of its sample
//! covariance followed by the real and imaginary parts of the `3Nb - 1`
//! off-diagonal entries of the first row, `M = 3Nb + 2(3Nb - 1)` values in all
//! (52 for six acquisitions). Heights used as targets are box-averaged with the
//! same window so that feature grid and target raster line up pixel for pixel.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sardata::{
    read_f32_file, read_json, with_suffix, write_f32_file, write_json, HeightRaster, RasterKind,
    SlcStack, NUM_POLS,
};

/// Feature dimension for `num_baselines` acquisitions.
pub fn feature_dimension(num_baselines: usize) -> usize {
    let channels = NUM_POLS * num_baselines;
    channels + 2 * (channels - 1)
}

/// Relative tolerance on `|R - R^H|` used by validity checks.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on negative eigenvalues used by validity checks.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Hermitian `3Nb x 3Nb` covariance of the per-pixel channel vector.
///
/// Entry `(3m + p, 3n + q)` couples acquisition `m` in polarization `p` with
/// acquisition `n` in polarization `q`; the 3x3 diagonal blocks are the
/// polarimetric covariances of each track and the off-diagonal blocks their
/// cross-covariances.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<Complex64>,
    window: usize,
}

impl CovarianceMatrix {
    /// Wrap a matrix, checking it is square with an order that is a multiple of 3.
    pub fn new(matrix: DMatrix<Complex64>, window: usize) -> Result<Self> {
        let order = matrix.nrows();
        if matrix.ncols() != order || order == 0 || !order.is_multiple_of(NUM_POLS) {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square of order 3Nb, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(CovarianceMatrix { matrix, window })
    }

    pub fn identity(num_baselines: usize) -> Self {
        let order = NUM_POLS * num_baselines;
        CovarianceMatrix {
            matrix: DMatrix::identity(order, order),
            window: 1,
        }
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_baselines(&self) -> usize {
        self.order() / NUM_POLS
    }

    /// Boxcar window side used for estimation, 1 for model-derived matrices.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// The 3x3 block coupling acquisitions `i` and `k`.
    pub fn block(&self, i: usize, k: usize) -> DMatrix<Complex64> {
        self.matrix
            .view((NUM_POLS * i, NUM_POLS * k), (NUM_POLS, NUM_POLS))
            .into_owned()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|d| d.re).sum()
    }

    /// `max |R - R^H|` over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let hermitian = (&self.matrix + self.matrix.adjoint()).map(|z| z * 0.5);
        let mut values: Vec<f64> = hermitian.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Check the Hermitian and PSD invariants at the crate tolerances.
    pub fn validate(&self) -> Result<()> {
        let scale = self.trace().abs().max(f64::MIN_POSITIVE);
        let asymmetry = self.max_asymmetry();
        if asymmetry > HERMITIAN_TOLERANCE * scale {
            return Err(Error::NotHermitian { asymmetry });
        }
        if let Some(d) = self.matrix.diagonal().iter().find(|d| d.re < 0.0) {
            return Err(Error::OutOfBounds(format!("negative diagonal {}", d.re)));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOLERANCE * scale {
            return Err(Error::OutOfBounds(format!(
                "covariance not PSD: min eigenvalue {min:e}"
            )));
        }
        Ok(())
    }
}

/// Real feature vector of length [`feature_dimension`].
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Recover the diagonal and the first row of the covariance it was taken from.
    pub fn covariance_parts(&self) -> (Vec<f64>, Vec<Complex64>) {
        // M = 3C - 2 for C channels
        let channels = self.0.len().div_ceil(3);
        let diagonal = self.0[..channels].to_vec();
        let first_row = self.0[channels..]
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        (diagonal, first_row)
    }
}

fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidWindow {
            window,
            reason: "window must be odd and at least 1".into(),
        });
    }
    Ok(())
}

/// Sample covariance over the `window x window` box centered on `center`.
pub fn estimate_covariance(
    stack: &SlcStack,
    center: (usize, usize),
    window: usize,
) -> Result<CovarianceMatrix> {
    check_window(window)?;
    let half = window / 2;
    let (row, col) = center;
    if row < half || col < half || row + half >= stack.rows() || col + half >= stack.cols() {
        return Err(Error::InvalidWindow {
            window,
            reason: format!(
                "window centered at ({row}, {col}) leaves the {}x{} stack",
                stack.rows(),
                stack.cols()
            ),
        });
    }
    let order = stack.num_channels();
    let mut acc = DMatrix::<Complex64>::zeros(order, order);
    let mut u = vec![Complex64::new(0.0, 0.0); order];
    for r in row - half..=row + half {
        for c in col - half..=col + half {
            for (ch, slot) in u.iter_mut().enumerate() {
                *slot = stack.sample(ch, r, c);
            }
            for i in 0..order {
                for j in i..order {
                    acc[(i, j)] += u[i] * u[j].conj();
                }
            }
        }
    }
    let norm = 1.0 / (window * window) as f64;
    for i in 0..order {
        acc[(i, i)] = Complex64::new(acc[(i, i)].re * norm, 0.0);
        for j in i + 1..order {
            let v = acc[(i, j)] * norm;
            acc[(i, j)] = v;
            acc[(j, i)] = v.conj();
        }
    }
    CovarianceMatrix::new(acc, window)
}

/// Diagonal first, then `(Re, Im)` pairs of `R[0, k]` for `k = 1..3Nb`.
pub fn extract_features(cov: &CovarianceMatrix) -> FeatureVector {
    let order = cov.order();
    let mut values = Vec::with_capacity(feature_dimension(cov.num_baselines()));
    values.extend((0..order).map(|i| cov.get(i, i).re));
    for k in 1..order {
        let z = cov.get(0, k);
        values.push(z.re);
        values.push(z.im);
    }
    FeatureVector(values)
}

/// Feature vectors over the valid region of a windowed product.
///
/// Pixel `(r, c)` of the grid corresponds to scene pixel
/// `(r + valid_offset, c + valid_offset)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    window: usize,
    valid_offset: usize,
    /// Pixel-major, feature-minor.
    values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        dim: usize,
        window: usize,
        valid_offset: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != rows * cols * dim {
            return Err(Error::DimensionMismatch(format!(
                "feature grid {rows}x{cols}x{dim} needs {} values, got {}",
                rows * cols * dim,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "feature grid".into(),
                index,
            });
        }
        Ok(FeatureGrid {
            rows,
            cols,
            dim,
            window,
            valid_offset,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn valid_offset(&self) -> usize {
        self.valid_offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.cols + col) * self.dim;
        &self.values[start..start + self.dim]
    }

    /// Feature vector of the `index`-th pixel in row-major order.
    #[inline]
    pub fn sample(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }
}

/// Sliding `window`-wide box sums along rows then columns, cropping to the valid region.
fn box_sum(plane: &[f64], rows: usize, cols: usize, window: usize) -> Vec<f64> {
    let out_rows = rows + 1 - window;
    let out_cols = cols + 1 - window;
    let mut horizontal = vec![0.0; rows * out_cols];
    let mut prefix = vec![0.0; cols.max(rows) + 1];
    for r in 0..rows {
        let line = &plane[r * cols..(r + 1) * cols];
        for (c, v) in line.iter().enumerate() {
            prefix[c + 1] = prefix[c] + v;
        }
        for c in 0..out_cols {
            horizontal[r * out_cols + c] = prefix[c + window] - prefix[c];
        }
    }
    let mut out = vec![0.0; out_rows * out_cols];
    for c in 0..out_cols {
        for r in 0..rows {
            prefix[r + 1] = prefix[r] + horizontal[r * out_cols + c];
        }
        for r in 0..out_rows {
            out[r * out_cols + c] = prefix[r + window] - prefix[r];
        }
    }
    out
}

fn check_fits(rows: usize, cols: usize, window: usize) -> Result<()> {
    check_window(window)?;
    if rows < window || cols < window {
        return Err(Error::InvalidWindow {
            window,
            reason: format!("scene of {rows}x{cols} is smaller than the window"),
        });
    }
    Ok(())
}

/// Features of every pixel whose window fits inside the stack.
///
/// Only the diagonal and the first row of each covariance are needed, so each
/// of those entries is box-filtered as an image of per-pixel products instead
/// of forming full matrices.
pub fn build_feature_grid(stack: &SlcStack, window: usize) -> Result<FeatureGrid> {
    let (rows, cols) = (stack.rows(), stack.cols());
    check_fits(rows, cols, window)?;
    let channels = stack.num_channels();
    let dim = feature_dimension(stack.geometry().num_baselines());
    let norm = 1.0 / (window * window) as f64;
    let master = stack.channel(0);

    // (feature index, plane) for every product image
    let planes: Vec<Vec<(usize, Vec<f64>)>> = (0..channels)
        .into_par_iter()
        .map(|ch| {
            let data = stack.channel(ch);
            let power: Vec<f64> = data.iter().map(|z| z.norm_sqr()).collect();
            let mut out = vec![(ch, box_sum(&power, rows, cols, window))];
            if ch > 0 {
                let cross: Vec<Complex64> =
                    master.iter().zip(data).map(|(a, b)| a * b.conj()).collect();
                let re: Vec<f64> = cross.iter().map(|z| z.re).collect();
                let im: Vec<f64> = cross.iter().map(|z| z.im).collect();
                let base = channels + 2 * (ch - 1);
                out.push((base, box_sum(&re, rows, cols, window)));
                out.push((base + 1, box_sum(&im, rows, cols, window)));
            }
            out
        })
        .collect();

    let out_rows = rows + 1 - window;
    let out_cols = cols + 1 - window;
    let mut values = vec![0.0; out_rows * out_cols * dim];
    for (feature, plane) in planes.iter().flatten() {
        for (pixel, v) in plane.iter().enumerate() {
            values[pixel * dim + feature] = v * norm;
        }
    }
    FeatureGrid::new(out_rows, out_cols, dim, window, window / 2, values)
}

/// Boxcar mean of a height raster, cropped exactly like [`build_feature_grid`].
pub fn average_raster(raster: &HeightRaster, window: usize) -> Result<HeightRaster> {
    check_fits(raster.rows(), raster.cols(), window)?;
    let norm = 1.0 / (window * window) as f64;
    let floor = match raster.kind() {
        // prefix-sum differences of non-negative heights can dip below zero by rounding
        RasterKind::Chm => 0.0,
        RasterKind::Dtm => f64::NEG_INFINITY,
    };
    let sums = box_sum(raster.values(), raster.rows(), raster.cols(), window);
    HeightRaster::new(
        raster.rows() + 1 - window,
        raster.cols() + 1 - window,
        raster.kind(),
        raster.valid_offset() + window / 2,
        sums.into_iter().map(|s| (s * norm).max(floor)).collect(),
    )
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    rows: usize,
    cols: usize,
    #[serde(rename = "M")]
    dim: usize,
    valid_offset: usize,
    window: usize,
}

/// Write `{stem}.hdr.json` and `{stem}.f32`.
pub fn write_feature_grid(grid: &FeatureGrid, stem: &Path) -> Result<()> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let header = GridHeader {
        rows: grid.rows,
        cols: grid.cols,
        dim: grid.dim,
        valid_offset: grid.valid_offset,
        window: grid.window,
    };
    write_json(&with_suffix(stem, ".hdr.json"), &header)?;
    write_f32_file(&with_suffix(stem, ".f32"), grid.values.iter().copied())
}

pub fn read_feature_grid(stem: &Path) -> Result<FeatureGrid> {
    let h: GridHeader = read_json(&with_suffix(stem, ".hdr.json"))?;
    let values = read_f32_file(&with_suffix(stem, ".f32"), h.rows * h.cols * h.dim)?;
    FeatureGrid::new(h.rows, h.cols, h.dim, h.window, h.valid_offset, values)
}

/// CSV with header `f0..f{M-1}`, one pixel per line in row-major order.
pub fn export_feature_csv(grid: &FeatureGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..grid.dim).map(|i| format!("f{i}")))?;
    for pixel in 0..grid.len() {
        w.write_record(grid.sample(pixel).iter().map(|v| (*v as f32).to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
