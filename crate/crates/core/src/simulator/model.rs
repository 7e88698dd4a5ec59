//! Two-layer (ground + random volume) covariance model and Fourier tomography probe.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::{CovarianceMatrix, HERMITIAN_TOLERANCE};
use crate::sardata::{channel_index, AcquisitionGeometry, Polarization, NUM_POLS};

use super::SceneSpec;

/// Vertical wavenumbers in rad/m, master first (always 0).
#[derive(Clone, Debug, PartialEq)]
pub struct VerticalWavenumbers(Vec<f64>);

impl VerticalWavenumbers {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `max kz - min kz`.
    pub fn span(&self) -> f64 {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Fourier (Rayleigh) vertical resolution `2 pi / span`.
    pub fn fourier_resolution(&self) -> f64 {
        2.0 * PI / self.span()
    }
}

/// `kz[n] = 4 pi b[n] / (lambda r sin theta)` with `r = H / cos theta`.
///
/// Baselines are taken as perpendicular baselines.
pub fn vertical_wavenumbers(geometry: &AcquisitionGeometry) -> Result<VerticalWavenumbers> {
    geometry.validate()?;
    let r = geometry.slant_range();
    let denom = geometry.wavelength * r * geometry.incidence_angle.sin();
    let master = geometry.baselines[0];
    Ok(VerticalWavenumbers(
        geometry
            .baselines
            .iter()
            .map(|b| 4.0 * PI * (b - master) / denom)
            .collect(),
    ))
}

/// `(e^x - 1) / x`, continuous at 0.
fn exprel(x: Complex64) -> Complex64 {
    if x.norm() < 1e-5 {
        Complex64::new(1.0, 0.0) + x * 0.5 + x * x / 6.0
    } else {
        (x.exp() - 1.0) / x
    }
}

/// Normalized volume integral between two acquisitions with wavenumber difference `dk`.
///
/// `int_0^h e^{pz} e^{i dk (z_g + z)} dz / int_0^h e^{pz} dz`, evaluated in the
/// reversed variable `h - z` so the exponentials never overflow.
pub fn volume_coherence(dk: f64, z_ground: f64, canopy_height: f64, attenuation: f64) -> Complex64 {
    let ground_phase = Complex64::from_polar(1.0, dk * z_ground);
    if canopy_height == 0.0 {
        return ground_phase;
    }
    let h = canopy_height;
    let s = Complex64::new(attenuation, dk);
    let num = Complex64::from_polar(1.0, dk * h) * exprel(-s * h);
    let den = exprel(Complex64::new(-attenuation * h, 0.0));
    ground_phase * num / den
}

/// Precomputed per-scene quantities of the two-layer model.
#[derive(Clone, Debug)]
pub struct TwoLayerModel {
    kz: VerticalWavenumbers,
    ground: [f64; 3],
    volume: [f64; 3],
    ground_to_volume: f64,
    /// Two-way attenuation rate along the vertical, nepers per meter.
    attenuation: f64,
}

impl TwoLayerModel {
    pub fn new(spec: &SceneSpec, geometry: &AcquisitionGeometry) -> Result<Self> {
        spec.validate()?;
        Ok(TwoLayerModel {
            kz: vertical_wavenumbers(geometry)?,
            ground: spec.ground_pol_powers,
            volume: spec.volume_pol_powers,
            ground_to_volume: spec.ground_to_volume_ratio,
            attenuation: 2.0 * spec.extinction / geometry.incidence_angle.cos(),
        })
    }

    pub fn wavenumbers(&self) -> &VerticalWavenumbers {
        &self.kz
    }

    /// `R[3m+p, 3n+q] = mu Cg[p,q] g_m g_n^* + Cv[p,q] V[m,n]`.
    pub fn covariance(&self, z_ground: f64, canopy_height: f64) -> DMatrix<Complex64> {
        let kz = self.kz.as_slice();
        let nb = kz.len();
        let order = NUM_POLS * nb;
        let mut r = DMatrix::<Complex64>::zeros(order, order);
        for m in 0..nb {
            for n in m..nb {
                let dk = kz[m] - kz[n];
                let ground = Complex64::from_polar(1.0, dk * z_ground);
                let vol = volume_coherence(dk, z_ground, canopy_height, self.attenuation);
                for p in 0..NUM_POLS {
                    let v = ground * (self.ground_to_volume * self.ground[p]) + vol * self.volume[p];
                    let (i, j) = (NUM_POLS * m + p, NUM_POLS * n + p);
                    if i == j {
                        r[(i, i)] = Complex64::new(v.re, 0.0);
                    } else {
                        r[(i, j)] = v;
                        r[(j, i)] = v.conj();
                    }
                }
            }
        }
        r
    }
}

/// Model covariance of one pixel with ground at `z_ground` and a canopy of `canopy_height` meters.
pub fn pixel_covariance_model(
    z_ground: f64,
    canopy_height: f64,
    spec: &SceneSpec,
    geometry: &AcquisitionGeometry,
) -> Result<CovarianceMatrix> {
    if !(canopy_height >= 0.0) {
        return Err(Error::OutOfBounds(format!(
            "canopy height must be >= 0, got {canopy_height}"
        )));
    }
    let model = TwoLayerModel::new(spec, geometry)?;
    CovarianceMatrix::new(model.covariance(z_ground, canopy_height), 1)
}

/// Fourier beamforming power of the HV sub-covariance over `z_grid`.
///
/// `P(z) = a(z)^H R_hv a(z)` with steering vector `a(z)[n] = e^{i kz[n] z} / sqrt(Nb)`.
pub fn fourier_profile(
    cov: &CovarianceMatrix,
    z_grid: &[f64],
    geometry: &AcquisitionGeometry,
) -> Result<Vec<f64>> {
    let kz = vertical_wavenumbers(geometry)?;
    let nb = kz.len();
    if cov.num_baselines() != nb {
        return Err(Error::DimensionMismatch(format!(
            "covariance covers {} acquisitions, geometry {nb}",
            cov.num_baselines()
        )));
    }
    if z_grid.is_empty() {
        return Err(Error::Empty("height grid".into()));
    }
    let asymmetry = cov.max_asymmetry();
    if asymmetry > HERMITIAN_TOLERANCE * cov.trace().abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry });
    }
    let hv: Vec<usize> = (0..nb).map(|n| channel_index(n, Polarization::HV)).collect();
    let norm = 1.0 / nb as f64;
    Ok(z_grid
        .iter()
        .map(|&z| {
            let a: Vec<Complex64> = kz
                .as_slice()
                .iter()
                .map(|k| Complex64::from_polar(1.0, k * z))
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..nb {
                for n in 0..nb {
                    acc += a[m].conj() * cov.get(hv[m], hv[n]) * a[n];
                }
            }
            acc.re * norm
        })
        .collect())
}
