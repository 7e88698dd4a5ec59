//! Acceptance suite: one numbered check per criterion, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed. Pass
//! criterion numbers to run a subset: `cargo test --test acceptance -- 3 4`.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tomoboost::eval::{
    distinct_value_count, predict_grid, run_pipeline, std_dev, Paradigm, Patch, PipelineRun, SplitSpec,
    DEFAULT_TEST_PATCH,
};
use tomoboost::features::{
    average_raster, build_feature_grid, estimate_covariance, extract_features, feature_dimension, CovarianceMatrix,
    FeatureGrid,
};
use tomoboost::gbdt::{
    gradients, loss_weighted_multiclass, train, train_with_history, GbdtHyperparams, LossKind, TrainingSet,
};
use tomoboost::sardata::{AcquisitionGeometry, HeightRaster, RasterKind};
use tomoboost::simulator::{fourier_profile, simulate_stack, vertical_wavenumbers, SceneSpec, SimulatedScene};

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget_seconds: f64,
    run: fn(&mut Shared) -> Check,
}

/// Scenes and runs reused by several criteria.
#[derive(Default)]
struct Shared {
    nc: Option<SimulatedScene>,
    w49_nc: Option<[PipelineRun; 2]>,
    w49_grid: Option<FeatureGrid>,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "feature dimensionality", budget_seconds: 1.0, run: feature_dimensionality },
    Criterion { id: 2, name: "covariance validity", budget_seconds: 30.0, run: covariance_validity },
    Criterion { id: 3, name: "depth-1 split oracle", budget_seconds: 30.0, run: split_oracle },
    Criterion { id: 4, name: "multiclass gradients", budget_seconds: 5.0, run: gradient_check },
    Criterion { id: 5, name: "training loss monotone", budget_seconds: 60.0, run: loss_monotone },
    Criterion { id: 6, name: "end-to-end accuracy", budget_seconds: 600.0, run: end_to_end },
    Criterion { id: 7, name: "window-size trend", budget_seconds: 1200.0, run: window_trend },
    Criterion { id: 8, name: "calibration robustness", budget_seconds: 1200.0, run: calibration_robustness },
    Criterion { id: 9, name: "regression continuity", budget_seconds: 300.0, run: continuity },
    Criterion { id: 10, name: "thread-count determinism", budget_seconds: 1200.0, run: determinism },
    Criterion { id: 11, name: "fourier resolution", budget_seconds: 5.0, run: fourier_resolution },
    Criterion { id: 12, name: "efficiency envelope", budget_seconds: 120.0, run: efficiency },
];

fn main() -> ExitCode {
    let positional: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<u32> = positional.iter().filter_map(|a| a.parse().ok()).collect();
    if !positional.is_empty() && selected.is_empty() {
        // a name filter meant for another test target
        return ExitCode::SUCCESS;
    }
    let mut shared = Shared::default();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)(&mut shared);
        let seconds = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) if seconds <= c.budget_seconds => (true, d),
            Ok(d) => (false, format!("{d}; over the {}s budget", c.budget_seconds)),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {:<26} {}  ({seconds:.1}s) {detail}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: tomoboost::Error) -> String {
    e.to_string()
}

fn geometry() -> AcquisitionGeometry {
    AcquisitionGeometry::p_band_six_tracks()
}

fn scene_hp() -> GbdtHyperparams {
    GbdtHyperparams::default()
}

fn default_nc(shared: &mut Shared) -> Result<&SimulatedScene, String> {
    if shared.nc.is_none() {
        shared.nc = Some(simulate_stack(&SceneSpec::default(), &geometry()).map_err(err)?);
    }
    Ok(shared.nc.as_ref().expect("just set"))
}

/// Regression on the default scene at `window` for CHM then DTM, patch fixed in scene coordinates.
fn scene_runs(scene: &SimulatedScene, window: usize) -> Result<(FeatureGrid, [PipelineRun; 2]), String> {
    let grid = build_feature_grid(&scene.stack, window).map_err(err)?;
    let patch = Patch::centered(scene.stack.rows(), scene.stack.cols(), DEFAULT_TEST_PATCH)
        .scene_to_grid(window / 2)
        .map_err(err)?;
    let split = SplitSpec {
        test_patch: patch,
        ..SplitSpec::centered(grid.rows(), grid.cols(), 42)
    };
    let run = |full: &HeightRaster| -> Result<PipelineRun, String> {
        let reference = average_raster(full, window).map_err(err)?;
        run_pipeline(&grid, &reference, &split, Paradigm::Regression, &scene_hp()).map_err(err)
    };
    let chm = run(&scene.chm)?;
    let dtm = run(&scene.dtm)?;
    Ok((grid, [chm, dtm]))
}

fn w49_nc(shared: &mut Shared) -> Result<&[PipelineRun; 2], String> {
    if shared.w49_nc.is_none() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
        let (grid, runs) = pool.install(|| -> Result<_, String> {
            let scene = default_nc(shared)?;
            scene_runs(scene, 49)
        })?;
        shared.w49_grid = Some(grid);
        shared.w49_nc = Some(runs);
    }
    Ok(shared.w49_nc.as_ref().expect("just set"))
}

fn feature_dimensionality(_: &mut Shared) -> Check {
    let spec = SceneSpec {
        rows: 9,
        cols: 9,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &geometry()).map_err(err)?;
    let cov = estimate_covariance(&scene.stack, (4, 4), 9).map_err(err)?;
    let features = extract_features(&cov);
    let grid = build_feature_grid(&scene.stack, 9).map_err(err)?;
    ensure(cov.order() == 18, || format!("covariance order {}", cov.order()))?;
    ensure(features.len() == 52, || format!("feature length {}", features.len()))?;
    ensure(feature_dimension(6) == 52 && grid.dim() == 52, || format!("grid dim {}", grid.dim()))?;
    Ok("18x18 covariance, 52 features".into())
}

fn covariance_validity(_: &mut Shared) -> Check {
    let spec = SceneSpec {
        rows: 128,
        cols: 128,
        seed: 2,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &geometry()).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_asym, mut worst_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..1000 {
        let center = (rng.random_range(24..104), rng.random_range(24..104));
        for window in [27, 49] {
            let cov = estimate_covariance(&scene.stack, center, window).map_err(err)?;
            let trace = cov.trace();
            worst_asym = worst_asym.max(cov.max_asymmetry() / trace);
            worst_eig = worst_eig.min(cov.min_eigenvalue() / trace);
        }
    }
    ensure(worst_asym < 1e-12, || format!("asymmetry {worst_asym:e} x trace"))?;
    ensure(worst_eig >= -1e-9, || format!("min eigenvalue {worst_eig:e} x trace"))?;
    Ok(format!("max asymmetry {worst_asym:.1e}, min eigenvalue {worst_eig:.1e} (x trace)"))
}

/// Exhaustive best depth-1 split as the partition it induces.
fn brute_force_partition(x: &[f64], dim: usize, y: &[f64]) -> Vec<(f64, Vec<bool>)> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let g: Vec<f64> = y.iter().map(|t| mean - t).collect();
    let total: f64 = g.iter().sum();
    let parent = total * total / n as f64;
    let mut out = Vec::new();
    for f in 0..dim {
        let mut values: Vec<f64> = (0..n).map(|i| x[i * dim + f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for &thr in &values[..values.len().saturating_sub(1)] {
            let right: Vec<bool> = (0..n).map(|i| x[i * dim + f] > thr).collect();
            let (mut gl, mut nl) = (0.0, 0.0);
            for i in (0..n).filter(|&i| !right[i]) {
                gl += g[i];
                nl += 1.0;
            }
            let (gr, nr) = (total - gl, n as f64 - nl);
            out.push((gl * gl / nl + gr * gr / nr - parent, right));
        }
    }
    out
}

fn split_oracle(_: &mut Shared) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let hp = GbdtHyperparams {
        num_trees: 1,
        depth: 1,
        learning_rate: 1.0,
        histogram_bins: 256,
        min_samples_leaf: 1,
        early_stopping_rounds: None,
        ..GbdtHyperparams::default()
    };
    for case in 0..100 {
        let n = rng.random_range(2..=256);
        let dim = rng.random_range(1..=4);
        // coarse grids create ties and repeated values
        let levels = rng.random_range(2..40) as f64;
        let x: Vec<f64> = (0..n * dim).map(|_| (rng.random::<f64>() * levels).floor()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let set = TrainingSet::regression(x.clone(), dim, y.clone()).map_err(err)?;
        let model = train(&set, None, &hp).map_err(err)?;
        let candidates = brute_force_partition(&x, dim, &y);
        let best = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * best.abs().max(1e-12);
        match model.trees().first() {
            None => ensure(best <= tol, || format!("case {case}: no split but brute force gains {best}"))?,
            Some(tree) => {
                let s = tree.splits()[0];
                let chosen: Vec<bool> = (0..n).map(|i| x[i * dim + s.feature] > s.threshold).collect();
                let gain = candidates
                    .iter()
                    .find(|c| c.1 == chosen)
                    .map(|c| c.0)
                    .ok_or_else(|| format!("case {case}: split is not a candidate partition"))?;
                ensure(best - gain <= tol, || format!("case {case}: gain {gain} below optimum {best}"))?;
                // among exact optima the trainer must take the first in (feature, threshold) order
                let first = candidates.iter().find(|c| best - c.0 <= tol).expect("optimum exists");
                ensure(first.1 == chosen, || format!("case {case}: tie broken differently"))?;
            }
        }
    }
    Ok("100 random datasets match exhaustive search".into())
}

fn gradient_check(_: &mut Shared) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(2..12);
        let logits: Vec<f64> = (0..k).map(|_| rng.random_range(-4.0..4.0)).collect();
        let label = rng.random_range(0..k);
        let weight = rng.random_range(0.1..3.0);
        let g = gradients(LossKind::WeightedMultiClass, &logits, &[label as f64], &[weight]);
        // loss is normalized by the total weight, the gradient is per sample
        let loss = |a: &[f64]| weight * loss_weighted_multiclass(a, &[label], &[weight]).expect("valid");
        let h = 1e-5;
        for c in 0..k {
            let mut up = logits.clone();
            let mut down = logits.clone();
            up[c] += h;
            down[c] -= h;
            let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
            worst = worst.max((numeric - g.grad[c]).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn loss_monotone(_: &mut Shared) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, dim) = (10_000, 8);
    let x: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x
        .chunks(dim)
        .map(|r| 10.0 * r[0] + 5.0 * (7.0 * r[1]).sin() + 3.0 * r[2] * r[3] + rng.random_range(-1.0..1.0))
        .collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let set = TrainingSet::new(x, dim, tomoboost::gbdt::Targets::Heights(y), w).map_err(err)?;
    let hp = GbdtHyperparams {
        num_trees: 200,
        early_stopping_rounds: None,
        ..GbdtHyperparams::default()
    };
    let outcome = train_with_history(&set, None, &hp).map_err(err)?;
    let mse: Vec<f64> = outcome.train_loss.iter().map(|r| r * r).collect();
    ensure(mse.len() == 201, || format!("{} iterations recorded", mse.len() - 1))?;
    let worst = mse.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-9, || format!("loss rose by {worst:e}"))?;
    Ok(format!("weighted MSE {:.3} -> {:.3}", mse[0], mse[200]))
}

fn end_to_end(shared: &mut Shared) -> Check {
    let runs = w49_nc(shared)?;
    let mut parts = Vec::new();
    for (run, name) in runs.iter().zip(["CHM", "DTM"]) {
        let sd = std_dev(&run.test_reference);
        ensure(run.rmse <= 0.5 * sd, || format!("{name} RMSE {:.3} > 0.5 x std {sd:.3}", run.rmse))?;
        parts.push(format!("{name} RMSE {:.3} m / std {sd:.3} m", run.rmse));
    }
    Ok(parts.join(", "))
}

fn window_trend(shared: &mut Shared) -> Check {
    let w49: Vec<f64> = w49_nc(shared)?.iter().map(|r| r.rmse).collect();
    let scene = default_nc(shared)?;
    let (_, w27) = scene_runs(scene, 27)?;
    let mut parts = Vec::new();
    for (i, name) in ["CHM", "DTM"].iter().enumerate() {
        parts.push(format!("{name} W49 {:.3} / W27 {:.3}", w49[i], w27[i].rmse));
    }
    let detail = parts.join(", ");
    ensure(w49[0] <= w27[0].rmse && w49[1] <= w27[1].rmse, || detail.clone())?;
    Ok(detail)
}

fn calibration_robustness(shared: &mut Shared) -> Check {
    let nc: Vec<f64> = w49_nc(shared)?.iter().map(|r| r.rmse).collect();
    let spec = SceneSpec::default();
    ensure(spec.phase_screen_sigma == 1.0, || "default scene is not 1 rad non-calibrated".into())?;
    let c_scene = simulate_stack(&spec.calibrated(), &geometry()).map_err(err)?;
    let (_, c) = scene_runs(&c_scene, 49)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, name) in ["CHM", "DTM"].iter().enumerate() {
        // relative to either run, so the check holds whichever is taken as reference
        let diff = (nc[i] - c[i].rmse).abs();
        let rel = diff / c[i].rmse.min(nc[i]);
        ok &= rel <= 0.15;
        parts.push(format!("{name} NC {:.3} / C {:.3} ({:.1}%)", nc[i], c[i].rmse, 100.0 * rel));
    }
    let detail = parts.join(", ");
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn continuity(_: &mut Shared) -> Check {
    // flat terrain keeps top-of-canopy heights in 0..60 m, 61 classes at 1 m
    let spec = SceneSpec {
        rows: 224,
        cols: 224,
        dtm_range: (0.0, 0.0),
        seed: 9,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &geometry()).map_err(err)?;
    let window = 9;
    let grid = build_feature_grid(&scene.stack, window).map_err(err)?;
    let chm = average_raster(&scene.chm, window).map_err(err)?;
    let split = SplitSpec {
        test_patch: Patch::centered(grid.rows(), grid.cols(), 100),
        ..SplitSpec::centered(grid.rows(), grid.cols(), 9)
    };
    let hp = GbdtHyperparams {
        num_trees: 30,
        depth: 5,
        learning_rate: 0.3,
        early_stopping_rounds: None,
        ..GbdtHyperparams::default()
    };
    let t = 61;
    let class = run_pipeline(&grid, &chm, &split, Paradigm::Classification { bin_width: 1.0 }, &hp).map_err(err)?;
    let reg = run_pipeline(&grid, &chm, &split, Paradigm::Regression, &hp).map_err(err)?;
    let (dc, dr) = (distinct_value_count(&class.test_prediction), distinct_value_count(&reg.test_prediction));
    let detail = format!(
        "{} test pixels: classifier {dc} distinct values, regression {dr} (T = {t})",
        class.test_prediction.len()
    );
    ensure(class.test_prediction.len() == 10_000 && dc <= t && dr > t, || detail.clone())?;
    Ok(detail)
}

fn determinism(shared: &mut Shared) -> Check {
    w49_nc(shared)?;
    let reference = shared.w49_nc.as_ref().expect("computed");
    let reference_grid = shared.w49_grid.as_ref().expect("computed");
    let threads = 4;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    let (grid, again) = pool.install(|| -> Result<_, String> {
        let scene = simulate_stack(&SceneSpec::default(), &geometry()).map_err(err)?;
        scene_runs(&scene, 49)
    })?;
    for ((a, b), kind) in reference.iter().zip(&again).zip([RasterKind::Chm, RasterKind::Dtm]) {
        ensure(a.model.to_json() == b.model.to_json(), || format!("{} model files differ", kind.name()))?;
        let ra = predict_grid(&a.model, reference_grid, kind).map_err(err)?;
        let rb = pool.install(|| predict_grid(&b.model, &grid, kind)).map_err(err)?;
        let same = ra.values().iter().zip(rb.values()).all(|(x, y)| x.to_bits() == y.to_bits());
        ensure(same, || format!("{} prediction rasters differ", kind.name()))?;
    }
    Ok(format!("1 vs {threads} threads: identical models and rasters"))
}

/// Covariance of two unit point scatterers at `z1` and `z2`, identical in every polarization.
fn two_scatterers(kz: &[f64], z1: f64, z2: f64) -> CovarianceMatrix {
    let nb = kz.len();
    let n = 3 * nb;
    let r = DMatrix::from_fn(n, n, |i, j| {
        if i % 3 != j % 3 {
            return Complex64::new(0.0, 0.0);
        }
        let (m, k) = (i / 3, j / 3);
        [z1, z2]
            .iter()
            .map(|z| Complex64::from_polar(1.0, (kz[m] - kz[k]) * z))
            .sum()
    });
    CovarianceMatrix::new(r, 1).expect("hermitian by construction")
}

/// Local maxima of `p` on `z`, strictly inside the grid.
fn peaks(z: &[f64], p: &[f64]) -> Vec<(f64, f64)> {
    (1..p.len() - 1)
        .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1])
        .map(|i| (z[i], p[i]))
        .collect()
}

/// Rayleigh criterion: a pair counts as resolved when the profile between
/// them dips below `8 / pi^2` of the peak, the dip of two sinc^2 beams one
/// resolution cell apart.
const RAYLEIGH_DIP: f64 = 8.0 / (std::f64::consts::PI * std::f64::consts::PI);

fn fourier_resolution(_: &mut Shared) -> Check {
    let g = geometry();
    let kz = vertical_wavenumbers(&g).map_err(err)?;
    let resolution = kz.fourier_resolution();
    let z: Vec<f64> = (0..=1200).map(|i| -20.0 + 0.1 * i as f64).collect();
    let mid = z.iter().position(|v| (v - 40.0).abs() < 1e-9).expect("40 m on the grid");
    // (main peaks, midpoint / peak) for a pair centered at 40 m
    let profile = |sep: f64| -> Result<(Vec<(f64, f64)>, f64), String> {
        let (z1, z2) = (40.0 - sep / 2.0, 40.0 + sep / 2.0);
        let p = fourier_profile(&two_scatterers(kz.as_slice(), z1, z2), &z, &g).map_err(err)?;
        let top = p.iter().copied().fold(0.0, f64::max);
        // sidelobes of the sparse array are ignored below half the main peak
        let main = peaks(&z, &p)
            .into_iter()
            .filter(|&(zp, v)| v >= 0.5 * top && (z1 - 10.0..=z2 + 10.0).contains(&zp))
            .collect();
        Ok((main, p[mid] / top))
    };
    let (far, far_dip) = profile(25.0)?;
    let (near, near_dip) = profile(10.0)?;
    // the two separations must bracket the Rayleigh resolution
    ensure(10.0 < resolution && resolution < 25.0, || format!("resolution {resolution:.2} m"))?;
    let resolved = far.len() == 2
        && (far[0].0 - 27.5).abs() <= 2.5
        && (far[1].0 - 52.5).abs() <= 2.5
        && far_dip < RAYLEIGH_DIP;
    ensure(resolved, || format!("25 m pair peaks {far:?}, dip {far_dip:.3}"))?;
    ensure(near_dip >= RAYLEIGH_DIP, || format!("10 m pair dips to {near_dip:.3} of the peak"))?;
    Ok(format!(
        "2pi/span = {resolution:.2} m; 25 m pair peaks at {:.1} and {:.1} m (dip {far_dip:.3}), \
         10 m pair merged (dip {near_dip:.3}, {} local maxima)",
        far[0].0,
        far[1].0,
        near.len()
    ))
}

fn efficiency(_: &mut Shared) -> Check {
    let (n, m, n_test) = (250_000, 52, 78_000);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x: Vec<f64> = (0..(n + n_test) * m).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x[..n * m]
        .chunks(m)
        .map(|r| 30.0 * r[0] + 10.0 * (6.0 * r[1]).sin() + 5.0 * r[2] * r[3] + r[4])
        .collect();
    let set = TrainingSet::regression(x[..n * m].to_vec(), m, y).map_err(err)?;
    let hp = GbdtHyperparams {
        num_trees: 200,
        depth: 6,
        early_stopping_rounds: None,
        ..GbdtHyperparams::default()
    };
    let start = Instant::now();
    let model = train(&set, None, &hp).map_err(err)?;
    let train_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let pred = model.predict_heights(&x[n * m..]).map_err(err)?;
    let test_s = start.elapsed().as_secs_f64();
    let detail = format!(
        "train {train_s:.1}s ({} trees), predict {:.3}s for {} samples on {} threads",
        model.trees().len(),
        test_s,
        pred.len(),
        rayon::current_num_threads()
    );
    ensure(train_s < 120.0 && test_s < 2.0, || detail.clone())?;
    Ok(detail)
}
