//! Smooth Gaussian random fields and the synthetic terrain/canopy truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::sardata::{HeightRaster, RasterKind};

use super::SceneSpec;

/// RNG stream ids, one per independent field of a scene.
pub(crate) const STREAM_TERRAIN: u64 = 1;
pub(crate) const STREAM_CANOPY: u64 = 2;
pub(crate) const STREAM_PHASE_SCREEN: u64 = 16;

pub(crate) fn field_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian kernel normalized to unit energy, so filtered unit white noise keeps unit variance.
pub(crate) fn unit_energy_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let energy: f64 = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    k.iter_mut().for_each(|v| *v /= energy);
    k
}

/// Valid-mode separable convolution of a `rows x cols` plane.
pub(crate) fn convolve_separable(plane: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let len = kernel.len();
    let out_cols = cols + 1 - len;
    let out_rows = rows + 1 - len;
    let mut horizontal = vec![0.0; rows * out_cols];
    for r in 0..rows {
        let line = &plane[r * cols..(r + 1) * cols];
        for c in 0..out_cols {
            horizontal[r * out_cols + c] = line[c..c + len]
                .iter()
                .zip(kernel)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    let mut out = vec![0.0; out_rows * out_cols];
    for r in 0..out_rows {
        for (k, w) in kernel.iter().enumerate() {
            let src = &horizontal[(r + k) * out_cols..(r + k + 1) * out_cols];
            let dst = &mut out[r * out_cols..(r + 1) * out_cols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    (out, out_rows, out_cols)
}

/// Zero-mean stationary field with unit marginal variance and Gaussian
/// correlation of scale `correlation_length` pixels (0 gives white noise).
///
/// Long correlation lengths are synthesized on a decimated lattice and
/// bilinearly interpolated, keeping the cost independent of the length.
pub fn smooth_field(rows: usize, cols: usize, correlation_length: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if correlation_length <= 0.0 {
        return (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    }
    let step = (correlation_length / 4.0).floor().max(1.0) as usize;
    let sigma = correlation_length / step as f64;
    let kernel = unit_energy_kernel(sigma);
    let pad = kernel.len() - 1;
    let (coarse_rows, coarse_cols) = if step == 1 {
        (rows, cols)
    } else {
        ((rows - 1) / step + 2, (cols - 1) / step + 2)
    };
    let noise_rows = coarse_rows + pad;
    let noise_cols = coarse_cols + pad;
    let noise: Vec<f64> = (0..noise_rows * noise_cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let (coarse, _, _) = convolve_separable(&noise, noise_rows, noise_cols, &kernel);
    if step == 1 {
        return coarse;
    }
    let mut out = Vec::with_capacity(rows * cols);
    let inv = 1.0 / step as f64;
    for r in 0..rows {
        let fr = r as f64 * inv;
        let r0 = fr.floor() as usize;
        let tr = fr - r0 as f64;
        for c in 0..cols {
            let fc = c as f64 * inv;
            let c0 = fc.floor() as usize;
            let tc = fc - c0 as f64;
            let at = |i: usize, j: usize| coarse[i * coarse_cols + j];
            let top = at(r0, c0) * (1.0 - tc) + at(r0, c0 + 1) * tc;
            let bottom = at(r0 + 1, c0) * (1.0 - tc) + at(r0 + 1, c0 + 1) * tc;
            out.push(top * (1.0 - tr) + bottom * tr);
        }
    }
    out
}

/// Affine map of `values` onto `[lo, hi]` using their empirical extremes.
pub fn rescale_into(values: &mut [f64], (lo, hi): (f64, f64)) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) || lo == hi {
        values.iter_mut().for_each(|v| *v = if lo == hi { lo } else { 0.5 * (lo + hi) });
        return;
    }
    let scale = (hi - lo) / (max - min);
    for v in values.iter_mut() {
        *v = (lo + (*v - min) * scale).clamp(lo, hi);
    }
}

/// Ground elevation and canopy height (above ground) fields of a scene.
pub(crate) fn terrain_and_canopy(spec: &SceneSpec) -> (Vec<f64>, Vec<f64>) {
    let mut dtm = smooth_field(
        spec.rows,
        spec.cols,
        spec.terrain_correlation_length,
        &mut field_rng(spec.seed, STREAM_TERRAIN),
    );
    rescale_into(&mut dtm, spec.dtm_range);
    let mut canopy = smooth_field(
        spec.rows,
        spec.cols,
        spec.canopy_correlation_length,
        &mut field_rng(spec.seed, STREAM_CANOPY),
    );
    rescale_into(&mut canopy, spec.canopy_range);
    (dtm, canopy)
}

/// DTM and CHM rasters. The CHM holds top-of-canopy elevation, ground plus canopy height.
pub fn generate_ground_truth(spec: &SceneSpec) -> Result<(HeightRaster, HeightRaster)> {
    spec.validate()?;
    let (dtm, canopy) = terrain_and_canopy(spec);
    let chm: Vec<f64> = dtm.iter().zip(&canopy).map(|(g, h)| g + h).collect();
    Ok((
        HeightRaster::new(spec.rows, spec.cols, RasterKind::Dtm, 0, dtm)?,
        HeightRaster::new(spec.rows, spec.cols, RasterKind::Chm, 0, chm)?,
    ))
}
