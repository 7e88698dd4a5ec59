//! Train a CHM regressor on a simulated scene and score it on a held-out patch.

use tomoboost::eval::{predict_grid, run_pipeline, std_dev, Paradigm, Patch, SplitSpec};
use tomoboost::features::{average_raster, build_feature_grid};
use tomoboost::gbdt::{GbdtHyperparams, GbdtModel};
use tomoboost::sardata::AcquisitionGeometry;
use tomoboost::simulator::{simulate_stack, SceneSpec};

fn main() -> tomoboost::Result<()> {
    // correlation lengths shrunk with the scene so the test patch resembles the training area
    let spec = SceneSpec {
        rows: 224,
        cols: 224,
        terrain_correlation_length: 24.0,
        canopy_correlation_length: 12.0,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &AcquisitionGeometry::p_band_six_tracks())?;
    let window = 15;
    let grid = build_feature_grid(&scene.stack, window)?;
    let chm = average_raster(&scene.chm, window)?;

    let split = SplitSpec {
        test_patch: Patch::centered(grid.rows(), grid.cols(), 60),
        ..SplitSpec::centered(grid.rows(), grid.cols(), 7)
    };
    let hp = GbdtHyperparams {
        num_trees: 200,
        early_stopping_rounds: Some(20),
        ..GbdtHyperparams::default()
    };
    let run = run_pipeline(&grid, &chm, &split, Paradigm::Regression, &hp)?;
    println!(
        "train {} / validation {} / test {} pixels",
        run.split.train.len(),
        run.split.validation.len(),
        run.split.test.len()
    );
    println!(
        "{} trees kept, validation RMSE {:.3} -> {:.3} m",
        run.model.trees().len(),
        run.valid_loss[0],
        run.valid_loss[run.model.trees().len()]
    );
    println!("test RMSE {:.3} m, reference std {:.3} m", run.rmse, std_dev(&run.test_reference));

    let path = std::env::temp_dir().join("tomoboost_chm_model.json");
    run.model.save(&path)?;
    let reloaded = GbdtModel::load(&path)?;
    let a = predict_grid(&run.model, &grid, chm.kind())?;
    let b = predict_grid(&reloaded, &grid, chm.kind())?;
    println!("reloaded model reproduces the prediction raster: {}", a == b);
    Ok(())
}
