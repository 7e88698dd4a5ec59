//! Quantized-height classification against regression on the same split.

use tomoboost::eval::{distinct_value_count, run_pipeline, Paradigm, Patch, SplitSpec};
use tomoboost::features::{average_raster, build_feature_grid};
use tomoboost::gbdt::{class_weights, quantize_labels, GbdtHyperparams};
use tomoboost::sardata::AcquisitionGeometry;
use tomoboost::simulator::{simulate_stack, SceneSpec};

fn main() -> tomoboost::Result<()> {
    let (labels, map) = quantize_labels(&[0.0, 12.7, 60.0], 1.0)?;
    println!("heights [0, 12.7, 60] -> classes {labels:?} of {}, 12.7 m dequantizes to {}", map.num_classes, map.dequantize(12));
    println!("inverse-frequency weights of [0,0,0,1]: {:?}", class_weights(&[0, 0, 0, 1], 2)?);

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
        ..SplitSpec::centered(grid.rows(), grid.cols(), 3)
    };
    let hp = GbdtHyperparams {
        num_trees: 40,
        depth: 4,
        learning_rate: 0.3,
        early_stopping_rounds: None,
        ..GbdtHyperparams::default()
    };
    for paradigm in [Paradigm::Regression, Paradigm::Classification { bin_width: 1.0 }] {
        let run = run_pipeline(&grid, &chm, &split, paradigm, &hp)?;
        let classes = run.model.quantization().map(|q| q.num_classes.to_string()).unwrap_or("-".into());
        println!(
            "{:<14} classes {classes:>3}  RMSE {:.3} m  distinct predictions {}",
            paradigm.name(),
            run.rmse,
            distinct_value_count(&run.test_prediction)
        );
    }
    Ok(())
}
