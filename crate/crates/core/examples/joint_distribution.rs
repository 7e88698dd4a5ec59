//! Joint histogram, tracelines, and distinct-value count of a prediction.

use tomoboost::eval::{
    distinct_value_count, joint_histogram, predict_grid, run_pipeline, write_tracelines, Paradigm, Patch, SplitSpec,
};
use tomoboost::features::{average_raster, build_feature_grid};
use tomoboost::gbdt::GbdtHyperparams;
use tomoboost::sardata::{AcquisitionGeometry, HeightRaster};
use tomoboost::simulator::{simulate_stack, SceneSpec};

fn main() -> tomoboost::Result<()> {
    let spec = SceneSpec {
        rows: 160,
        cols: 160,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &AcquisitionGeometry::p_band_six_tracks())?;
    let window = 15;
    let grid = build_feature_grid(&scene.stack, window)?;
    let dtm = average_raster(&scene.dtm, window)?;
    let patch = Patch::centered(grid.rows(), grid.cols(), 50);
    let split = SplitSpec {
        test_patch: patch,
        ..SplitSpec::centered(grid.rows(), grid.cols(), 5)
    };
    let hp = GbdtHyperparams {
        num_trees: 100,
        early_stopping_rounds: Some(10),
        ..GbdtHyperparams::default()
    };
    let run = run_pipeline(&grid, &dtm, &split, Paradigm::Regression, &hp)?;

    let hist = joint_histogram(&run.test_prediction, &run.test_reference, 40, (0.0, 40.0))?;
    println!(
        "{} pixels, {:.1}% within one bin of the bisector",
        hist.total(),
        100.0 * hist.diagonal_fraction(1)
    );
    println!("distinct predicted values: {}", distinct_value_count(&run.test_prediction));

    let full = predict_grid(&run.model, &grid, dtm.kind())?;
    let crop = |r: &HeightRaster| HeightRaster::new(patch.rows, patch.cols, r.kind(), 0, patch.crop(r)?);
    let (pred, reference) = (crop(&full)?, crop(&dtm)?);
    let dir = std::env::temp_dir();
    hist.write_svg(&dir.join("tomoboost_joint.svg"), "DTM")?;
    write_tracelines(&dir.join("tomoboost_tracelines.csv"), &[0, 25, 49], &reference, &[("regression", &pred)])?;
    println!("wrote {}", dir.join("tomoboost_joint.svg").display());
    Ok(())
}
