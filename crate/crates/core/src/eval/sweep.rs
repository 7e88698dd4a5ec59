use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{average_raster, build_feature_grid};
use crate::gbdt::GbdtHyperparams;
use crate::sardata::{HeightRaster, RasterKind, SlcStack};

use super::metrics::escape;
use super::pipeline::{run_pipeline, Paradigm};
use super::split::{Patch, SplitMode, SplitSpec};
use super::timing::TimingReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Calibration {
    Calibrated,
    NonCalibrated,
}

impl Calibration {
    pub fn name(self) -> &'static str {
        match self {
            Calibration::Calibrated => "C",
            Calibration::NonCalibrated => "NC",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub windows: Vec<usize>,
    pub paradigms: Vec<Paradigm>,
    pub targets: Vec<RasterKind>,
    /// Test patch in scene coordinates, kept fixed across windows.
    pub test_patch: Patch,
    pub validation_fraction: f64,
    pub seed: u64,
    pub hp: GbdtHyperparams,
}

/// Stacks of one scene and its full-resolution references.
#[derive(Clone, Copy, Debug)]
pub struct SweepInputs<'a> {
    pub stacks: &'a [(Calibration, &'a SlcStack)],
    pub dtm: &'a HeightRaster,
    pub chm: &'a HeightRaster,
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub target: RasterKind,
    pub paradigm: Paradigm,
    pub calibration: Calibration,
    pub window: usize,
    pub rmse: f64,
    pub timing: TimingReport,
}

impl SweepCell {
    pub fn row_label(&self) -> String {
        format!("{}-{}", self.paradigm.name(), self.calibration.name())
    }
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub windows: Vec<usize>,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn rmse(&self, target: RasterKind, row_label: &str, window: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.window == window && c.row_label() == row_label)
            .map(|c| c.rmse)
    }

    /// Row labels of `target` in first-seen order.
    pub fn row_labels(&self, target: RasterKind) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for c in self.cells.iter().filter(|c| c.target == target) {
            let l = c.row_label();
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        labels
    }

    /// Rows are paradigm/calibration pairs, columns window sizes.
    pub fn write_csv(&self, path: &Path, target: RasterKind) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["method".to_string()];
        header.extend(self.windows.iter().map(|w| format!("{w}x{w}")));
        w.write_record(&header)?;
        for label in self.row_labels(target) {
            let mut record = vec![label.clone()];
            for &win in &self.windows {
                record.push(
                    self.rmse(target, &label, win)
                        .map(|v| format!("{v:.3}"))
                        .unwrap_or_default(),
                );
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// RMSE against window size, one polyline per row.
    pub fn to_svg(&self, target: RasterKind) -> String {
        const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];
        let (w, h, m) = (480.0, 320.0, 50.0);
        let values: Vec<f64> = self.cells.iter().filter(|c| c.target == target).map(|c| c.rmse).collect();
        let vmax = values.iter().copied().fold(0.0, f64::max).max(1e-9) * 1.1;
        let (wmin, wmax) = (
            *self.windows.iter().min().unwrap_or(&0) as f64,
            *self.windows.iter().max().unwrap_or(&1) as f64,
        );
        let x = |win: usize| m + (win as f64 - wmin) / (wmax - wmin).max(1.0) * (w - 2.0 * m);
        let y = |v: f64| h - m - v / vmax * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{} RMSE [m]</text>"#, w / 2.0, target.name());
        let _ = writeln!(
            s,
            r#"<polyline points="{m},{m} {m},{} {},{}" fill="none" stroke="black"/>"#,
            h - m,
            w - m,
            h - m
        );
        for &win in &self.windows {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{win}x{win}</text>"#, x(win), h - m + 16.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{vmax:.2}</text>"#, m - 4.0, m + 4.0);
        for (i, label) in self.row_labels(target).iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let points: Vec<String> = self
                .windows
                .iter()
                .filter_map(|&win| self.rmse(target, label, win).map(|v| format!("{:.1},{:.1}", x(win), y(v))))
                .collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, points.join(" "));
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                w - m - 110.0,
                m + 14.0 * i as f64,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg(&self, path: &Path, target: RasterKind) -> Result<()> {
        fs::write(path, self.to_svg(target)).map_err(|e| Error::io(path, e))
    }
}

/// Train and test every (window, calibration, target, paradigm) combination.
pub fn window_sweep(inputs: SweepInputs<'_>, config: &SweepConfig) -> Result<SweepTable> {
    if let Some(&w) = config.windows.iter().find(|w| *w % 2 == 0) {
        return Err(Error::InvalidWindow {
            window: w,
            reason: "window sizes must be odd".into(),
        });
    }
    let mut cells = Vec::new();
    for &window in &config.windows {
        let offset = window / 2;
        let split = SplitSpec {
            test_patch: config.test_patch.scene_to_grid(offset)?,
            validation_fraction: config.validation_fraction,
            seed: config.seed,
            mode: SplitMode::Random,
        };
        let references: Vec<(RasterKind, HeightRaster)> = config
            .targets
            .iter()
            .map(|&kind| {
                let full = match kind {
                    RasterKind::Dtm => inputs.dtm,
                    RasterKind::Chm => inputs.chm,
                };
                Ok((kind, average_raster(full, window)?))
            })
            .collect::<Result<_>>()?;
        for &(calibration, stack) in inputs.stacks {
            let grid = build_feature_grid(stack, window)?;
            for (kind, reference) in &references {
                for &paradigm in &config.paradigms {
                    let run = run_pipeline(&grid, reference, &split, paradigm, &config.hp)?;
                    cells.push(SweepCell {
                        target: *kind,
                        paradigm,
                        calibration,
                        window,
                        rmse: run.rmse,
                        timing: run.timing,
                    });
                }
            }
        }
    }
    Ok(SweepTable {
        windows: config.windows.clone(),
        cells,
    })
}
