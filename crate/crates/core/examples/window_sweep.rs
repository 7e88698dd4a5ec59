//! RMSE table over window sizes for calibrated and non-calibrated inputs.

use tomoboost::eval::{window_sweep, Calibration, Paradigm, Patch, SweepConfig, SweepInputs};
use tomoboost::gbdt::GbdtHyperparams;
use tomoboost::sardata::{AcquisitionGeometry, RasterKind};
use tomoboost::simulator::{simulate_stack, SceneSpec};

fn main() -> tomoboost::Result<()> {
    let geometry = AcquisitionGeometry::p_band_six_tracks();
    let spec = SceneSpec {
        rows: 160,
        cols: 160,
        terrain_correlation_length: 24.0,
        canopy_correlation_length: 12.0,
        ..SceneSpec::default()
    };
    let nc = simulate_stack(&spec, &geometry)?;
    let c = simulate_stack(&spec.calibrated(), &geometry)?;
    let stacks = [(Calibration::NonCalibrated, &nc.stack), (Calibration::Calibrated, &c.stack)];
    let config = SweepConfig {
        windows: vec![9, 15, 21],
        paradigms: vec![Paradigm::Regression],
        targets: vec![RasterKind::Dtm, RasterKind::Chm],
        test_patch: Patch::centered(160, 160, 40),
        validation_fraction: 0.2,
        seed: 1,
        hp: GbdtHyperparams {
            num_trees: 60,
            depth: 5,
            learning_rate: 0.2,
            early_stopping_rounds: Some(10),
            ..GbdtHyperparams::default()
        },
    };
    let table = window_sweep(
        SweepInputs {
            stacks: &stacks,
            dtm: &nc.dtm,
            chm: &nc.chm,
        },
        &config,
    )?;
    let dir = std::env::temp_dir().join("tomoboost_sweep");
    std::fs::create_dir_all(&dir).map_err(|e| tomoboost::Error::Io { path: dir.clone(), source: e })?;
    for kind in [RasterKind::Dtm, RasterKind::Chm] {
        let path = dir.join(format!("rmse_{}.csv", kind.name().to_lowercase()));
        table.write_csv(&path, kind)?;
        table.write_svg(&path.with_extension("svg"), kind)?;
        println!("{}:\n{}", kind.name(), std::fs::read_to_string(&path).unwrap_or_default());
    }
    Ok(())
}
