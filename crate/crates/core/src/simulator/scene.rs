use std::path::Path;

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// Parameters of a synthetic forest scene.
///
/// Correlation lengths are the standard deviation, in pixels, of the Gaussian
/// kernel that smooths white noise into each random field. Powers are linear.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    /// Terrain elevation range in meters.
    pub dtm_range: (f64, f64),
    /// Canopy height (above ground) range in meters.
    pub canopy_range: (f64, f64),
    pub terrain_correlation_length: f64,
    pub canopy_correlation_length: f64,
    /// Ground (HH, HV, VV) powers.
    pub ground_pol_powers: [f64; 3],
    /// Volume (HH, HV, VV) powers.
    pub volume_pol_powers: [f64; 3],
    pub ground_to_volume_ratio: f64,
    /// One-way extinction in nepers per meter.
    pub extinction: f64,
    /// Standard deviation of the per-acquisition phase screens, radians. Zero for calibrated data.
    pub phase_screen_sigma: f64,
    pub phase_screen_correlation_length: f64,
    /// Gaussian smoothing scale of the speckle, in pixels. Zero draws independent pixels.
    pub speckle_correlation_length: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            rows: 512,
            cols: 512,
            dtm_range: (0.0, 40.0),
            canopy_range: (0.0, 60.0),
            terrain_correlation_length: 96.0,
            canopy_correlation_length: 48.0,
            ground_pol_powers: [1.0, 0.05, 0.7],
            volume_pol_powers: [0.4, 1.0, 0.4],
            ground_to_volume_ratio: 1.0,
            extinction: 0.02,
            phase_screen_sigma: 1.0,
            phase_screen_correlation_length: 2000.0,
            speckle_correlation_length: 1.5,
            seed: 42,
        }
    }
}

impl SceneSpec {
    /// The same scene with phase screens switched off.
    pub fn calibrated(&self) -> Self {
        SceneSpec {
            phase_screen_sigma: 0.0,
            ..self.clone()
        }
    }

    pub fn is_calibrated(&self) -> bool {
        self.phase_screen_sigma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScene(msg));
        for (name, (lo, hi)) in [("dtm", self.dtm_range), ("canopy", self.canopy_range)] {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return bad(format!("{name} range ({lo}, {hi}) must satisfy min <= max"));
            }
        }
        if self.canopy_range.0 < 0.0 {
            return bad("canopy heights must be non-negative".into());
        }
        let non_negative = [
            ("terrain correlation length", self.terrain_correlation_length),
            ("canopy correlation length", self.canopy_correlation_length),
            ("ground-to-volume ratio", self.ground_to_volume_ratio),
            ("extinction", self.extinction),
            ("phase screen sigma", self.phase_screen_sigma),
            ("phase screen correlation length", self.phase_screen_correlation_length),
            ("speckle correlation length", self.speckle_correlation_length),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self
            .ground_pol_powers
            .iter()
            .chain(&self.volume_pol_powers)
            .any(|p| !(*p >= 0.0 && p.is_finite()))
        {
            return bad("polarimetric powers must be finite and >= 0".into());
        }
        Ok(())
    }

    /// Override fields from `key = value` pairs named after the struct fields.
    ///
    /// Ranges and power triples accept either a comma list (`dtm_range = 0,40`)
    /// or per-component keys (`dtm_min`, `dtm_max`, `ground_hv`, ...).
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        for (key, value) in kv.iter() {
            let key = key.replace('-', "_");
            match key.as_str() {
                "rows" => self.rows = kv.parse_value(&key, value)?,
                "cols" => self.cols = kv.parse_value(&key, value)?,
                "seed" => self.seed = kv.parse_value(&key, value)?,
                "dtm_range" => self.dtm_range = pair(kv.parse_list(&key, value)?, &key)?,
                "canopy_range" => self.canopy_range = pair(kv.parse_list(&key, value)?, &key)?,
                "dtm_min" => self.dtm_range.0 = kv.parse_value(&key, value)?,
                "dtm_max" => self.dtm_range.1 = kv.parse_value(&key, value)?,
                "canopy_min" => self.canopy_range.0 = kv.parse_value(&key, value)?,
                "canopy_max" => self.canopy_range.1 = kv.parse_value(&key, value)?,
                "terrain_correlation_length" => {
                    self.terrain_correlation_length = kv.parse_value(&key, value)?
                }
                "canopy_correlation_length" => {
                    self.canopy_correlation_length = kv.parse_value(&key, value)?
                }
                "ground_pol_powers" => {
                    self.ground_pol_powers = triple(kv.parse_list(&key, value)?, &key)?
                }
                "volume_pol_powers" => {
                    self.volume_pol_powers = triple(kv.parse_list(&key, value)?, &key)?
                }
                "ground_hh" => self.ground_pol_powers[0] = kv.parse_value(&key, value)?,
                "ground_hv" => self.ground_pol_powers[1] = kv.parse_value(&key, value)?,
                "ground_vv" => self.ground_pol_powers[2] = kv.parse_value(&key, value)?,
                "volume_hh" => self.volume_pol_powers[0] = kv.parse_value(&key, value)?,
                "volume_hv" => self.volume_pol_powers[1] = kv.parse_value(&key, value)?,
                "volume_vv" => self.volume_pol_powers[2] = kv.parse_value(&key, value)?,
                "ground_to_volume_ratio" => {
                    self.ground_to_volume_ratio = kv.parse_value(&key, value)?
                }
                "extinction" => self.extinction = kv.parse_value(&key, value)?,
                "phase_screen_sigma" => self.phase_screen_sigma = kv.parse_value(&key, value)?,
                "phase_screen_correlation_length" => {
                    self.phase_screen_correlation_length = kv.parse_value(&key, value)?
                }
                "speckle_correlation_length" => {
                    self.speckle_correlation_length = kv.parse_value(&key, value)?
                }
                other => return Err(Error::Config(format!("unknown scene key `{other}`"))),
            }
        }
        self.validate()
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let mut spec = SceneSpec::default();
        spec.apply(&KeyValues::from_file(path)?)?;
        Ok(spec)
    }
}

fn pair(values: Vec<f64>, key: &str) -> Result<(f64, f64)> {
    match values[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Config(format!("`{key}` expects 2 values"))),
    }
}

fn triple(values: Vec<f64>, key: &str) -> Result<[f64; 3]> {
    match values[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(Error::Config(format!("`{key}` expects 3 values"))),
    }
}
