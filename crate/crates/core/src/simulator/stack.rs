use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::Result;
use crate::sardata::{AcquisitionGeometry, HeightRaster, RasterKind, SlcStack, NUM_POLS};

use super::fields::{
    convolve_separable, field_rng, smooth_field, terrain_and_canopy, unit_energy_kernel, STREAM_PHASE_SCREEN,
};
use super::{SceneSpec, TwoLayerModel};

/// Key offset separating per-pixel speckle streams from the field streams.
const SPECKLE_KEY: u64 = 0x5eed_5eed_5eed_5eed;

/// Relative diagonal loading applied when the model covariance is singular.
pub const CHOLESKY_JITTER: f64 = 1e-9;

/// A simulated stack together with its ground truth.
#[derive(Clone, Debug)]
pub struct SimulatedScene {
    pub stack: SlcStack,
    pub dtm: HeightRaster,
    pub chm: HeightRaster,
}

/// Lower-triangular factor `L` with `L L^H = R`, loading the diagonal for
/// semidefinite inputs and falling back to an eigen square root.
pub fn covariance_factor(r: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let trace: f64 = r.diagonal().iter().map(|d| d.re).sum();
    if let Some(ch) = Cholesky::new(r.clone()) {
        return ch.l();
    }
    let n = r.nrows();
    let loaded = &r + DMatrix::<Complex64>::identity(n, n) * Complex64::new(CHOLESKY_JITTER * trace, 0.0);
    if let Some(ch) = Cholesky::new(loaded) {
        return ch.l();
    }
    let eig = r.symmetric_eigen();
    let mut u = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        u.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    u
}

fn circular_gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// Per-acquisition phase screens in radians, master screen identically zero.
pub fn phase_screens(spec: &SceneSpec, num_baselines: usize) -> Vec<Vec<f64>> {
    let pixels = spec.rows * spec.cols;
    (0..num_baselines)
        .map(|n| {
            if n == 0 || spec.phase_screen_sigma == 0.0 {
                return vec![0.0; pixels];
            }
            let mut rng = field_rng(spec.seed, STREAM_PHASE_SCREEN + n as u64);
            let mut f = smooth_field(spec.rows, spec.cols, spec.phase_screen_correlation_length, &mut rng);
            f.iter_mut().for_each(|v| *v *= spec.phase_screen_sigma);
            f
        })
        .collect()
}

/// Unit-variance, channel-white circular Gaussian vectors, pixel-major.
///
/// Each pixel (of a padded lattice when smoothing) draws from its own stream,
/// so the result is independent of the worker count. A positive
/// `speckle_correlation_length` smooths every channel plane with a
/// unit-energy Gaussian kernel, which keeps the marginal covariance at the
/// identity while correlating neighbouring pixels.
fn unit_speckle(spec: &SceneSpec, channels: usize) -> Vec<Complex64> {
    let base = ChaCha8Rng::seed_from_u64(spec.seed ^ SPECKLE_KEY);
    let draw = |rows: usize, cols: usize, stream_offset: u64| -> Vec<Complex64> {
        (0..rows)
            .into_par_iter()
            .flat_map_iter(|r| {
                let base = base.clone();
                (0..cols).flat_map(move |c| {
                    let mut rng = base.clone();
                    rng.set_stream(stream_offset + (r * cols + c) as u64);
                    circular_gaussian(&mut rng, channels)
                })
            })
            .collect()
    };
    let (rows, cols) = (spec.rows, spec.cols);
    if spec.speckle_correlation_length <= 0.0 {
        return draw(rows, cols, 0);
    }
    let kernel = unit_energy_kernel(spec.speckle_correlation_length);
    let pad = kernel.len() - 1;
    let (prows, pcols) = (rows + pad, cols + pad);
    let noise = draw(prows, pcols, 1 << 40);
    let planes: Vec<(Vec<f64>, Vec<f64>)> = (0..channels)
        .into_par_iter()
        .map(|ch| {
            let re: Vec<f64> = (0..prows * pcols).map(|i| noise[i * channels + ch].re).collect();
            let im: Vec<f64> = (0..prows * pcols).map(|i| noise[i * channels + ch].im).collect();
            (
                convolve_separable(&re, prows, pcols, &kernel).0,
                convolve_separable(&im, prows, pcols, &kernel).0,
            )
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols * channels];
    for (ch, (re, im)) in planes.iter().enumerate() {
        for i in 0..rows * cols {
            out[i * channels + ch] = Complex64::new(re[i], im[i]);
        }
    }
    out
}

/// Draw one single-look circular Gaussian channel vector per pixel from the
/// two-layer model covariance of that pixel, then rotate each acquisition by
/// its phase screen.
///
/// Every pixel has its own random stream keyed by `(seed, pixel index)`, so the
/// output does not depend on the number of worker threads, and the calibrated
/// and non-calibrated versions of a scene share the same speckle.
pub fn simulate_stack(spec: &SceneSpec, geometry: &AcquisitionGeometry) -> Result<SimulatedScene> {
    let model = TwoLayerModel::new(spec, geometry)?;
    let (dtm, canopy) = terrain_and_canopy(spec);
    let nb = geometry.num_baselines();
    let channels = NUM_POLS * nb;
    let screens = phase_screens(spec, nb);
    let (rows, cols) = (spec.rows, spec.cols);
    let white = unit_speckle(spec, channels);

    let pixel_vectors: Vec<Vec<Complex64>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut line = Vec::with_capacity(cols * channels);
            for c in 0..cols {
                let idx = r * cols + c;
                let factor = covariance_factor(model.covariance(dtm[idx], canopy[idx]));
                let w = nalgebra::DVector::from_column_slice(&white[idx * channels..(idx + 1) * channels]);
                let x = factor * w;
                for (ch, v) in x.iter().enumerate() {
                    let phi = screens[ch / NUM_POLS][idx];
                    line.push(if phi == 0.0 { *v } else { v * Complex64::from_polar(1.0, phi) });
                }
            }
            line
        })
        .collect();

    let pixels = rows * cols;
    let mut samples = vec![Complex64::new(0.0, 0.0); channels * pixels];
    for (r, line) in pixel_vectors.iter().enumerate() {
        for c in 0..cols {
            for ch in 0..channels {
                samples[ch * pixels + r * cols + c] = line[c * channels + ch];
            }
        }
    }
    let chm: Vec<f64> = dtm.iter().zip(&canopy).map(|(g, h)| g + h).collect();
    Ok(SimulatedScene {
        stack: SlcStack::new(geometry.clone(), rows, cols, samples)?,
        dtm: HeightRaster::new(rows, cols, RasterKind::Dtm, 0, dtm)?,
        chm: HeightRaster::new(rows, cols, RasterKind::Chm, 0, chm)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use crate::features::estimate_covariance;

    fn small(rows: usize, cols: usize) -> SceneSpec {
        SceneSpec {
            rows,
            cols,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn factor_reproduces_covariance() {
        let model = TwoLayerModel::new(&SceneSpec::default(), &AcquisitionGeometry::p_band_six_tracks()).unwrap();
        for (zg, h) in [(10.0, 25.0), (3.0, 0.0)] {
            let r = model.covariance(zg, h);
            let l = covariance_factor(r.clone());
            let err = (&l * l.adjoint() - &r).norm() / r.norm();
            assert!(err < 1e-7, "{err}");
        }
    }

    #[test]
    fn same_seed_same_stack() {
        let g = AcquisitionGeometry::p_band_six_tracks();
        let a = simulate_stack(&small(12, 9), &g).unwrap();
        let b = simulate_stack(&small(12, 9), &g).unwrap();
        assert_eq!(a.stack, b.stack);
        assert_eq!(a.chm, b.chm);
        let (dtm, chm) = super::super::generate_ground_truth(&small(12, 9)).unwrap();
        assert_eq!(a.dtm, dtm);
        assert_eq!(a.chm, chm);
    }

    #[test]
    fn phase_screens_leave_powers_untouched() {
        let g = AcquisitionGeometry::p_band_six_tracks();
        let nc = small(20, 20);
        let c = nc.calibrated();
        let a = simulate_stack(&c, &g).unwrap();
        let b = simulate_stack(&nc, &g).unwrap();
        assert_ne!(a.stack, b.stack);
        let fa = extract_features(&estimate_covariance(&a.stack, (10, 10), 7).unwrap());
        let fb = extract_features(&estimate_covariance(&b.stack, (10, 10), 7).unwrap());
        for k in 0..18 {
            assert!((fa.0[k] - fb.0[k]).abs() <= 1e-12 * fa.0[k].abs().max(1.0));
        }
        // master channels are never rotated
        assert_eq!(a.stack.channel(0), b.stack.channel(0));
    }

    #[test]
    fn correlated_speckle_keeps_unit_marginals() {
        let spec = SceneSpec {
            speckle_correlation_length: 1.5,
            ..small(120, 120)
        };
        let w = unit_speckle(&spec, 2);
        let n = 120 * 120;
        let power: f64 = (0..n).map(|i| w[2 * i].norm_sqr()).sum::<f64>() / n as f64;
        let cross: Complex64 = (0..n).map(|i| w[2 * i] * w[2 * i + 1].conj()).sum::<Complex64>() / n as f64;
        assert!((power - 1.0).abs() < 0.1, "{power}");
        assert!(cross.norm() < 0.1, "{cross}");
        // neighbours along a row share noise; the kernel predicts exp(-1/(4 s^2))
        let lag: Complex64 = (0..120)
            .flat_map(|r| (0..119).map(move |c| r * 120 + c))
            .map(|i| w[2 * i] * w[2 * (i + 1)].conj())
            .sum::<Complex64>()
            / (120.0 * 119.0);
        let expected = (-1.0f64 / (4.0 * 1.5 * 1.5)).exp();
        assert!((lag.re - expected).abs() < 0.1, "{lag} vs {expected}");

        let white = unit_speckle(&small(4, 4), 3);
        assert_eq!(white.len(), 48);
    }
}
