//! Estimate a windowed covariance, check it, and turn it into features.

use tomoboost::features::{build_feature_grid, estimate_covariance, extract_features, feature_dimension};
use tomoboost::sardata::AcquisitionGeometry;
use tomoboost::simulator::{simulate_stack, SceneSpec};

fn main() -> tomoboost::Result<()> {
    let spec = SceneSpec {
        rows: 96,
        cols: 96,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &AcquisitionGeometry::p_band_six_tracks())?;
    let window = 27;

    let cov = estimate_covariance(&scene.stack, (48, 48), window)?;
    cov.validate()?;
    println!(
        "R is {0}x{0}, trace {1:.3}, asymmetry {2:.1e}, min eigenvalue {3:.3e}",
        cov.order(),
        cov.trace(),
        cov.max_asymmetry(),
        cov.min_eigenvalue()
    );

    let x = extract_features(&cov);
    println!("feature vector length {} (expected {})", x.len(), feature_dimension(6));
    println!("diagonal powers: {:.3?}", &x.as_slice()[..18]);

    let grid = build_feature_grid(&scene.stack, window)?;
    println!(
        "grid {}x{}x{}, pixel (0,0) sits at scene ({o},{o})",
        grid.rows(),
        grid.cols(),
        grid.dim(),
        o = grid.valid_offset()
    );
    let same = grid.pixel(48 - grid.valid_offset(), 48 - grid.valid_offset());
    let diff = same.iter().zip(x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("grid vs direct estimate: max difference {diff:.1e}");
    Ok(())
}
