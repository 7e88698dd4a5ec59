//! SAR stack, height raster and on-disk formats.
//!
//! Everything on disk is little-endian `f32`, row-major. A stack directory holds
//! `meta.json` and one `b{n}_p{HH|HV|VV}.cf32` file per acquisition and
//! polarization with interleaved `(re, im)` pairs. A raster is a pair of files
//! sharing a stem: `{stem}.hdr.json` and `{stem}.f32`.
//!
//! In memory all samples are `f64`; writing narrows to `f32`, so a stack or
//! raster read from disk survives a write/read cycle bit for bit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of polarimetric channels per acquisition.
pub const NUM_POLS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    HH,
    HV,
    VV,
}

impl Polarization {
    pub const ALL: [Polarization; 3] = [Polarization::HH, Polarization::HV, Polarization::VV];

    pub fn index(self) -> usize {
        match self {
            Polarization::HH => 0,
            Polarization::HV => 1,
            Polarization::VV => 2,
        }
    }

    pub fn from_index(p: usize) -> Option<Self> {
        Self::ALL.get(p).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarization::HH => "HH",
            Polarization::HV => "HV",
            Polarization::VV => "VV",
        }
    }
}

/// Channel index of acquisition `baseline` in polarization `pol`.
#[inline]
pub fn channel_index(baseline: usize, pol: Polarization) -> usize {
    NUM_POLS * baseline + pol.index()
}

/// Inverse of [`channel_index`].
#[inline]
pub fn channel_parts(channel: usize) -> (usize, Polarization) {
    (
        channel / NUM_POLS,
        Polarization::from_index(channel % NUM_POLS).expect("p < 3"),
    )
}

/// Acquisition geometry of a multi-baseline stack. Angles in radians, lengths in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionGeometry {
    pub wavelength: f64,
    pub flight_height: f64,
    pub incidence_angle: f64,
    /// One entry per acquisition, master first (0 m).
    pub baselines: Vec<f64>,
    pub range_resolution: f64,
    pub azimuth_resolution: f64,
}

impl AcquisitionGeometry {
    /// Airborne P-band geometry with six tracks, the default for simulated scenes.
    pub fn p_band_six_tracks() -> Self {
        AcquisitionGeometry {
            wavelength: 0.7542,
            flight_height: 3962.0,
            incidence_angle: 35.061_f64.to_radians(),
            baselines: vec![0.0, -14.0, -30.0, -44.0, -60.0, -75.0],
            range_resolution: 1.0,
            azimuth_resolution: 1.245,
        }
    }

    pub fn num_baselines(&self) -> usize {
        self.baselines.len()
    }

    pub fn num_channels(&self) -> usize {
        NUM_POLS * self.baselines.len()
    }

    /// Slant range to the scene center.
    pub fn slant_range(&self) -> f64 {
        self.flight_height / self.incidence_angle.cos()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if self.baselines.len() < 2 {
            return bad(format!("need at least 2 baselines, got {}", self.baselines.len()));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return bad(format!("wavelength must be positive, got {}", self.wavelength));
        }
        if !(self.flight_height > 0.0 && self.flight_height.is_finite()) {
            return bad(format!("flight height must be positive, got {}", self.flight_height));
        }
        if !(self.incidence_angle > 0.0 && self.incidence_angle < std::f64::consts::FRAC_PI_2) {
            return bad(format!(
                "incidence angle must lie in (0, pi/2), got {}",
                self.incidence_angle
            ));
        }
        if self.baselines.iter().any(|b| !b.is_finite()) {
            return bad("non-finite baseline".into());
        }
        for (i, a) in self.baselines.iter().enumerate() {
            for b in &self.baselines[i + 1..] {
                if a == b {
                    return bad(format!("duplicate baseline {a} m"));
                }
            }
        }
        Ok(())
    }
}

/// Single-look complex samples, channel-major: `samples[(channel * rows + row) * cols + col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlcStack {
    geometry: AcquisitionGeometry,
    rows: usize,
    cols: usize,
    samples: Vec<Complex64>,
}

impl SlcStack {
    pub fn new(
        geometry: AcquisitionGeometry,
        rows: usize,
        cols: usize,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        geometry.validate()?;
        let expected = geometry.num_channels() * rows * cols;
        if samples.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "stack of {} channels x {rows} x {cols} needs {expected} samples, got {}",
                geometry.num_channels(),
                samples.len()
            )));
        }
        if let Some(index) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite {
                what: "SLC stack".into(),
                index,
            });
        }
        Ok(SlcStack {
            geometry,
            rows,
            cols,
            samples,
        })
    }

    pub fn geometry(&self) -> &AcquisitionGeometry {
        &self.geometry
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_channels(&self) -> usize {
        self.geometry.num_channels()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Row-major image of one channel.
    pub fn channel(&self, channel: usize) -> &[Complex64] {
        let len = self.rows * self.cols;
        &self.samples[channel * len..(channel + 1) * len]
    }

    #[inline]
    pub fn sample(&self, channel: usize, row: usize, col: usize) -> Complex64 {
        self.samples[(channel * self.rows + row) * self.cols + col]
    }

    /// The `3 * Nb` channel vector observed at one pixel.
    pub fn pixel_vector(&self, row: usize, col: usize) -> Vec<Complex64> {
        (0..self.num_channels())
            .map(|c| self.sample(c, row, col))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RasterKind {
    #[serde(rename = "CHM")]
    Chm,
    #[serde(rename = "DTM")]
    Dtm,
}

impl RasterKind {
    pub fn name(self) -> &'static str {
        match self {
            RasterKind::Chm => "CHM",
            RasterKind::Dtm => "DTM",
        }
    }
}

/// Heights in meters on the pixel grid.
///
/// `valid_offset` is the margin removed by a windowed operation: pixel `(r, c)`
/// of this raster sits at `(r + valid_offset, c + valid_offset)` of the scene.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightRaster {
    rows: usize,
    cols: usize,
    kind: RasterKind,
    valid_offset: usize,
    values: Vec<f64>,
}

impl HeightRaster {
    pub fn new(
        rows: usize,
        cols: usize,
        kind: RasterKind,
        valid_offset: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "raster {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("{} raster", kind.name()),
                index,
            });
        }
        if kind == RasterKind::Chm {
            if let Some(index) = values.iter().position(|&v| v < 0.0) {
                return Err(Error::OutOfBounds(format!(
                    "CHM value {} at index {index} is negative",
                    values[index]
                )));
            }
        }
        Ok(HeightRaster {
            rows,
            cols,
            kind,
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

    pub fn kind(&self) -> RasterKind {
        self.kind
    }

    pub fn valid_offset(&self) -> usize {
        self.valid_offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

// ---------------------------------------------------------------------------
// Binary helpers
// ---------------------------------------------------------------------------

/// Append `suffix` to the file name of `stem` (`out/chm` + `.f32` -> `out/chm.f32`).
pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub(crate) fn write_f32_file(path: &Path, values: impl Iterator<Item = f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for v in values {
        out.write_all(&(v as f32).to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_f32_file(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = (expected_len * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: path.display().to_string(),
            index,
        });
    }
    Ok(values)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Descriptor {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Descriptor {
        path: path.to_path_buf(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
// Stack directory
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct StackMeta {
    wavelength_m: f64,
    flight_height_m: f64,
    incidence_rad: f64,
    baselines_m: Vec<f64>,
    rows: usize,
    cols: usize,
    #[serde(default = "default_range_resolution")]
    range_resolution_m: f64,
    #[serde(default = "default_azimuth_resolution")]
    azimuth_resolution_m: f64,
}

fn default_range_resolution() -> f64 {
    1.0
}

fn default_azimuth_resolution() -> f64 {
    1.245
}

pub const STACK_META_FILE: &str = "meta.json";

/// File name of one channel inside a stack directory.
pub fn channel_file_name(baseline: usize, pol: Polarization) -> String {
    format!("b{baseline}_p{}.cf32", pol.name())
}

pub fn write_stack(stack: &SlcStack, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = &stack.geometry;
    let meta = StackMeta {
        wavelength_m: g.wavelength,
        flight_height_m: g.flight_height,
        incidence_rad: g.incidence_angle,
        baselines_m: g.baselines.clone(),
        rows: stack.rows,
        cols: stack.cols,
        range_resolution_m: g.range_resolution,
        azimuth_resolution_m: g.azimuth_resolution,
    };
    write_json(&dir.join(STACK_META_FILE), &meta)?;
    for channel in 0..stack.num_channels() {
        let (n, p) = channel_parts(channel);
        let path = dir.join(channel_file_name(n, p));
        let values = stack.channel(channel).iter().flat_map(|s| [s.re, s.im]);
        write_f32_file(&path, values)?;
    }
    Ok(())
}

pub fn read_stack(dir: &Path) -> Result<SlcStack> {
    let meta: StackMeta = read_json(&dir.join(STACK_META_FILE))?;
    let geometry = AcquisitionGeometry {
        wavelength: meta.wavelength_m,
        flight_height: meta.flight_height_m,
        incidence_angle: meta.incidence_rad,
        baselines: meta.baselines_m,
        range_resolution: meta.range_resolution_m,
        azimuth_resolution: meta.azimuth_resolution_m,
    };
    geometry.validate()?;
    let paths: Vec<PathBuf> = (0..geometry.num_channels())
        .map(|c| {
            let (n, p) = channel_parts(c);
            dir.join(channel_file_name(n, p))
        })
        .collect();
    if let Some(missing) = paths.iter().find(|p| !p.is_file()) {
        return Err(Error::MissingChannel(missing.clone()));
    }
    let pixels = meta.rows * meta.cols;
    let mut samples = Vec::with_capacity(paths.len() * pixels);
    for path in &paths {
        let raw = read_f32_file(path, 2 * pixels)?;
        samples.extend(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])));
    }
    SlcStack::new(geometry, meta.rows, meta.cols, samples)
}

// ---------------------------------------------------------------------------
// Rasters
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RasterHeader {
    rows: usize,
    cols: usize,
    kind: RasterKind,
    valid_offset: usize,
}

pub fn write_raster(raster: &HeightRaster, stem: &Path) -> Result<()> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let header = RasterHeader {
        rows: raster.rows,
        cols: raster.cols,
        kind: raster.kind,
        valid_offset: raster.valid_offset,
    };
    write_json(&with_suffix(stem, ".hdr.json"), &header)?;
    write_f32_file(&with_suffix(stem, ".f32"), raster.values.iter().copied())
}

pub fn read_raster(stem: &Path) -> Result<HeightRaster> {
    let header: RasterHeader = read_json(&with_suffix(stem, ".hdr.json"))?;
    let values = read_f32_file(&with_suffix(stem, ".f32"), header.rows * header.cols)?;
    HeightRaster::new(
        header.rows,
        header.cols,
        header.kind,
        header.valid_offset,
        values,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_geometry(nb: usize) -> AcquisitionGeometry {
        AcquisitionGeometry {
            baselines: (0..nb).map(|n| -10.0 * n as f64).collect(),
            ..AcquisitionGeometry::p_band_six_tracks()
        }
    }

    fn ramp_stack(nb: usize, rows: usize, cols: usize) -> SlcStack {
        let g = small_geometry(nb);
        let n = g.num_channels() * rows * cols;
        let samples = (0..n)
            .map(|i| Complex64::new(i as f32 as f64 * 0.25, -(i as f64) * 0.5))
            .collect();
        SlcStack::new(g, rows, cols, samples).unwrap()
    }

    #[test]
    fn channel_index_is_bijective() {
        let nb = 6;
        let mut seen = vec![false; 3 * nb];
        for n in 0..nb {
            for p in Polarization::ALL {
                let c = channel_index(n, p);
                assert!(!seen[c]);
                seen[c] = true;
                assert_eq!(channel_parts(c), (n, p));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn geometry_rejects_duplicates_and_bad_angles() {
        let mut g = small_geometry(2);
        g.baselines = vec![0.0, 0.0];
        assert!(matches!(g.validate(), Err(Error::InvalidGeometry(_))));
        let mut g = small_geometry(2);
        g.incidence_angle = std::f64::consts::FRAC_PI_2;
        assert!(g.validate().is_err());
        let mut g = small_geometry(1);
        g.baselines = vec![0.0];
        assert!(g.validate().is_err());
        assert!(AcquisitionGeometry::p_band_six_tracks().validate().is_ok());
    }

    #[test]
    fn write_stack_file_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let stack = ramp_stack(2, 2, 2);
        write_stack(&stack, dir.path()).unwrap();
        let mut channel_files = 0;
        for n in 0..2 {
            for p in Polarization::ALL {
                let len = fs::metadata(dir.path().join(channel_file_name(n, p)))
                    .unwrap()
                    .len();
                assert_eq!(len, 2 * 2 * 2 * 4);
                channel_files += 1;
            }
        }
        assert_eq!(channel_files, 6);
        assert_eq!(read_stack(dir.path()).unwrap(), stack);
    }

    #[test]
    fn empty_stack_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let stack = ramp_stack(2, 0, 5);
        write_stack(&stack, dir.path()).unwrap();
        assert!(dir.path().join(STACK_META_FILE).is_file());
        let len = fs::metadata(dir.path().join("b1_pVV.cf32")).unwrap().len();
        assert_eq!(len, 0);
        assert_eq!(read_stack(dir.path()).unwrap(), stack);
    }

    #[test]
    fn missing_channel_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_stack(&ramp_stack(2, 3, 3), dir.path()).unwrap();
        fs::remove_file(dir.path().join("b1_pHV.cf32")).unwrap();
        match read_stack(dir.path()) {
            Err(Error::MissingChannel(p)) => assert!(p.ends_with("b1_pHV.cf32")),
            other => panic!("expected missing channel, got {other:?}"),
        }
    }

    #[test]
    fn truncated_channel_is_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_stack(&ramp_stack(2, 3, 3), dir.path()).unwrap();
        fs::write(dir.path().join("b0_pHH.cf32"), [0u8; 12]).unwrap();
        assert!(matches!(
            read_stack(dir.path()),
            Err(Error::SizeMismatch { expected: 72, found: 12, .. })
        ));
    }

    #[test]
    fn non_finite_sample_rejected_on_read() {
        let dir = tempfile::tempdir().unwrap();
        write_stack(&ramp_stack(2, 1, 1), dir.path()).unwrap();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        bytes.extend_from_slice(&0f32.to_le_bytes());
        fs::write(dir.path().join("b0_pVV.cf32"), bytes).unwrap();
        assert!(matches!(read_stack(dir.path()), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn single_pixel_raster_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("one");
        let r = HeightRaster::new(1, 1, RasterKind::Chm, 0, vec![12.5]).unwrap();
        write_raster(&r, &stem).unwrap();
        let back = read_raster(&stem).unwrap();
        assert_eq!(back.values(), &[12.5]);
        assert_eq!(back.kind(), RasterKind::Chm);
    }

    #[test]
    fn raster_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("r");
        let r = HeightRaster::new(2, 2, RasterKind::Dtm, 3, vec![1.0; 4]).unwrap();
        write_raster(&r, &stem).unwrap();
        fs::write(with_suffix(&stem, ".f32"), [0u8; 8]).unwrap();
        assert!(matches!(read_raster(&stem), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn raster_rejects_non_finite() {
        assert!(HeightRaster::new(1, 2, RasterKind::Dtm, 0, vec![1.0, f64::INFINITY]).is_err());
        assert!(HeightRaster::new(1, 1, RasterKind::Chm, 0, vec![-0.5]).is_err());
        assert!(HeightRaster::new(1, 1, RasterKind::Dtm, 0, vec![-0.5]).is_ok());
    }
}
