use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sardata::HeightRaster;

/// Unweighted root mean squared difference.
pub fn rmse(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} references",
            pred.len(),
            reference.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("rmse input".into()));
    }
    let sse: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Number of distinct values, counting `0.0` and `-0.0` once.
pub fn distinct_value_count(pred: &[f64]) -> usize {
    pred.iter()
        .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
        .collect::<HashSet<_>>()
        .len()
}

/// One raster row in column order. Rows are 0-based.
pub fn traceline(raster: &HeightRaster, row: usize) -> Result<Vec<f64>> {
    if row >= raster.rows() {
        return Err(Error::OutOfBounds(format!(
            "row {row} outside a {}-row raster",
            raster.rows()
        )));
    }
    Ok(raster.row(row).to_vec())
}

/// Write `row,column,reference,<name>...` for each requested row.
pub fn write_tracelines(
    path: &Path,
    rows: &[usize],
    reference: &HeightRaster,
    predictions: &[(&str, &HeightRaster)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["row".to_string(), "column".into(), "reference".into()];
    header.extend(predictions.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header)?;
    for &row in rows {
        let reference_line = traceline(reference, row)?;
        let lines = predictions
            .iter()
            .map(|(_, p)| {
                let line = traceline(p, row)?;
                if line.len() != reference_line.len() {
                    return Err(Error::Misaligned("traceline lengths differ".into()));
                }
                Ok(line)
            })
            .collect::<Result<Vec<_>>>()?;
        for (c, r) in reference_line.iter().enumerate() {
            let mut record = vec![row.to_string(), c.to_string(), r.to_string()];
            record.extend(lines.iter().map(|l| l[c].to_string()));
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// 2-D counts of (reference, prediction) pairs over a square range.
#[derive(Clone, Debug, PartialEq)]
pub struct JointHistogram {
    pub bins: usize,
    pub range: (f64, f64),
    /// `counts[reference_bin * bins + prediction_bin]`.
    pub counts: Vec<u64>,
}

impl JointHistogram {
    fn bin_of(&self, v: f64) -> usize {
        let (lo, hi) = self.range;
        let t = ((v - lo) / (hi - lo) * self.bins as f64).floor();
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.bins - 1)
        }
    }

    pub fn get(&self, reference_bin: usize, prediction_bin: usize) -> u64 {
        self.counts[reference_bin * self.bins + prediction_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Share of the mass within `band` bins of the diagonal.
    pub fn diagonal_fraction(&self, band: usize) -> f64 {
        let mut near = 0;
        for r in 0..self.bins {
            for p in r.saturating_sub(band)..=(r + band).min(self.bins - 1) {
                near += self.get(r, p);
            }
        }
        near as f64 / self.total().max(1) as f64
    }

    /// `reference_bin_center,prediction_bin_center,count` for non-empty cells.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["reference", "prediction", "count"])?;
        let width = (self.range.1 - self.range.0) / self.bins as f64;
        for r in 0..self.bins {
            for p in 0..self.bins {
                let c = self.get(r, p);
                if c > 0 {
                    let center = |b: usize| self.range.0 + (b as f64 + 0.5) * width;
                    w.write_record([center(r).to_string(), center(p).to_string(), c.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Log-scaled heatmap with the bisector, reference on x and prediction on y.
    pub fn to_svg(&self, title: &str) -> String {
        let cell = (400 / self.bins).max(1);
        let side = cell * self.bins;
        let (m, top) = (50, 30);
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
            side + m + 20,
            side + top + m
        );
        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, m + side / 2, escape(title));
        let _ = writeln!(s, r#"<rect x="{m}" y="{top}" width="{side}" height="{side}" fill="white" stroke="black"/>"#);
        for r in 0..self.bins {
            for p in 0..self.bins {
                let c = self.get(r, p);
                if c == 0 {
                    continue;
                }
                let level = (1.0 + c as f64).ln() / (1.0 + max).ln();
                let shade = (255.0 * (1.0 - level)).round() as u8;
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)"/>"#,
                    m + r * cell,
                    top + side - (p + 1) * cell
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<line x1="{m}" y1="{}" x2="{}" y2="{top}" stroke="red" stroke-dasharray="4 3"/>"#,
            top + side,
            m + side
        );
        let (lo, hi) = self.range;
        let _ = writeln!(s, r#"<text x="{m}" y="{}">{lo:.1}</text>"#, top + side + 15);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{hi:.1}</text>"#, m + side, top + side + 15);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">reference [m]</text>"#, m + side / 2, top + side + 35);
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">prediction [m]</text>"#,
            top + side / 2,
            top + side / 2
        );
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg(&self, path: &Path, title: &str) -> Result<()> {
        fs::write(path, self.to_svg(title)).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Joint histogram with values outside `range` clamped to the edge bins.
pub fn joint_histogram(pred: &[f64], reference: &[f64], bins: usize, range: (f64, f64)) -> Result<JointHistogram> {
    if pred.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} references",
            pred.len(),
            reference.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("joint histogram input".into()));
    }
    if bins == 0 || !(range.1 > range.0) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(Error::Config(format!("bad histogram geometry: {bins} bins over {range:?}")));
    }
    let mut h = JointHistogram {
        bins,
        range,
        counts: vec![0; bins * bins],
    };
    for (p, r) in pred.iter().zip(reference) {
        let k = h.bin_of(*r) * bins + h.bin_of(*p);
        h.counts[k] += 1;
    }
    Ok(h)
}

/// Range covering both inputs, widened when they are constant.
pub fn value_range(a: &[f64], b: &[f64]) -> (f64, f64) {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}
