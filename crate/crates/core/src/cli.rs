//! Command-line front end: one subcommand per pipeline stage, handing off
//! through files under `--out`.
//!
//! Default file layout inside the output directory:
//!
//! ```text
//! stack_nc/, stack_c/        simulate: non-calibrated and calibrated stacks
//! dtm.*, chm.*               simulate: full-resolution references
//! features_{input}.*         features: feature grid per input (nc or c)
//! dtm_avg.*, chm_avg.*       features: window-averaged references
//! model_{tag}.json           train, tag = {target}_{paradigm}_{input}
//! train_{tag}.json           train: losses, split sizes, timing
//! pred_{tag}.*               predict: height raster over the grid
//! eval_{tag}/                evaluate: metrics, joint histogram, tracelines, timing
//! report/                    report: window sweep tables and figures
//! ```
//!
//! A `--config` file of `key = value` lines is appended to the command line,
//! so its entries override flags given explicitly.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::eval::{
    distinct_value_count, joint_histogram, predict_grid, run_pipeline, std_dev, time_run, value_range,
    window_sweep, write_tracelines, Calibration, Paradigm, Patch, SplitMode, SplitSpec, SweepConfig,
    SweepInputs, TimingReport, DEFAULT_TEST_PATCH,
};
use crate::features::{average_raster, build_feature_grid, read_feature_grid, write_feature_grid};
use crate::gbdt::{GbdtHyperparams, GbdtModel};
use crate::sardata::{
    read_raster, read_stack, with_suffix, write_raster, write_stack, AcquisitionGeometry, HeightRaster, RasterKind,
};
use crate::simulator::{simulate_stack, SceneSpec};

#[derive(Parser, Debug)]
#[command(name = "tomoboost", version, about = "Forest height estimation from multi-baseline PolSAR covariances")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for the scene, the data split, and training.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// `key = value` file whose entries override flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a stack with DTM and CHM references.
    Simulate(SimulateArgs),
    /// Build the feature grid and window-averaged references.
    Features(FeaturesArgs),
    /// Train a model on the grid outside the test patch.
    Train(TrainArgs),
    /// Predict heights for every grid pixel.
    Predict(PredictArgs),
    /// Score a prediction on the test patch.
    Evaluate(EvaluateArgs),
    /// Sweep window sizes, paradigms and calibration into result tables.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// `min,max` terrain elevation in meters.
    #[arg(long)]
    pub dtm_range: Option<String>,
    /// `min,max` canopy height above ground in meters.
    #[arg(long)]
    pub canopy_range: Option<String>,
    #[arg(long)]
    pub terrain_correlation_length: Option<f64>,
    #[arg(long)]
    pub canopy_correlation_length: Option<f64>,
    /// `HH,HV,VV` ground powers.
    #[arg(long)]
    pub ground_pol_powers: Option<String>,
    /// `HH,HV,VV` volume powers.
    #[arg(long)]
    pub volume_pol_powers: Option<String>,
    #[arg(long)]
    pub ground_to_volume_ratio: Option<f64>,
    #[arg(long)]
    pub extinction: Option<f64>,
    #[arg(long)]
    pub phase_screen_sigma: Option<f64>,
    #[arg(long)]
    pub phase_screen_correlation_length: Option<f64>,
    /// Speckle smoothing scale in pixels, 0 for independent pixels.
    #[arg(long)]
    pub speckle_correlation_length: Option<f64>,
    /// Comma-separated baselines in meters, master first.
    #[arg(long)]
    pub baselines: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Input {
    Nc,
    C,
}

impl Input {
    fn name(self) -> &'static str {
        match self {
            Input::Nc => "nc",
            Input::C => "c",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Chm,
    Dtm,
}

impl Target {
    fn kind(self) -> RasterKind {
        match self {
            Target::Chm => RasterKind::Chm,
            Target::Dtm => RasterKind::Dtm,
        }
    }
}

fn target_name(kind: RasterKind) -> &'static str {
    match kind {
        RasterKind::Chm => "chm",
        RasterKind::Dtm => "dtm",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParadigmArg {
    Regression,
    Classification,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Odd covariance window size.
    #[arg(long, default_value_t = 49)]
    pub window: usize,
    /// Which simulated stack to use when `--stack` is not given.
    #[arg(long, value_enum, default_value = "nc")]
    pub input: Input,
    /// Stack directory (default `{out}/stack_{input}`).
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// DTM raster stem (default `{out}/dtm`).
    #[arg(long)]
    pub dtm: Option<PathBuf>,
    /// CHM raster stem (default `{out}/chm`).
    #[arg(long)]
    pub chm: Option<PathBuf>,
    /// Also write the grid as CSV.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug, Clone)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 500)]
    pub trees: usize,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 255)]
    pub bins: usize,
    #[arg(long, default_value_t = 20)]
    pub min_samples_leaf: usize,
    /// Rounds without validation improvement before stopping; 0 disables.
    #[arg(long, default_value_t = 50)]
    pub early_stopping: usize,
}

impl HyperArgs {
    fn hyperparams(&self, seed: u64) -> Result<GbdtHyperparams> {
        let hp = GbdtHyperparams {
            num_trees: self.trees,
            depth: self.depth,
            learning_rate: self.learning_rate,
            histogram_bins: self.bins,
            min_samples_leaf: self.min_samples_leaf,
            early_stopping_rounds: (self.early_stopping > 0).then_some(self.early_stopping),
            seed,
            ..GbdtHyperparams::default()
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Args, Debug, Clone)]
pub struct PatchArgs {
    /// Test patch `row0,col0,rows,cols` in grid pixels (default: centered square).
    #[arg(long)]
    pub patch: Option<String>,
    /// Side of the default centered test patch.
    #[arg(long, default_value_t = DEFAULT_TEST_PATCH)]
    pub patch_size: usize,
}

impl PatchArgs {
    fn resolve(&self, rows: usize, cols: usize) -> Result<Patch> {
        match &self.patch {
            None => Ok(Patch::centered(rows, cols, self.patch_size)),
            Some(text) => {
                let v: Vec<usize> = KeyValues::default().parse_list("patch", text)?;
                match v[..] {
                    [r, c, h, w] => Ok(Patch::new(r, c, h, w)),
                    _ => Err(Error::Config("`patch` expects row0,col0,rows,cols".into())),
                }
            }
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "chm")]
    pub target: Target,
    #[arg(long, value_enum, default_value = "regression")]
    pub paradigm: ParadigmArg,
    /// Class width in meters for classification.
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
    #[arg(long, value_enum, default_value = "nc")]
    pub input: Input,
    /// Feature grid stem (default `{out}/features_{input}`).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Averaged reference stem (default `{out}/{target}_avg`).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Model path (default `{out}/model_{tag}.json`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub patch: PatchArgs,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    /// Assign whole tiles of this size to validation instead of single pixels.
    #[arg(long)]
    pub block_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature grid stem (default `{out}/features_{input}`).
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "nc")]
    pub input: Input,
    /// Output raster stem (default `{out}/pred_{tag}` from the model name).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Predicted raster stem.
    #[arg(long)]
    pub prediction: PathBuf,
    /// Averaged reference stem (default `{out}/{target}_avg`).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub patch: PatchArgs,
    #[arg(long, default_value_t = 100)]
    pub hist_bins: usize,
    /// Joint histogram range `lo,hi` in meters (default 0,80 for CHM, the data range for DTM).
    #[arg(long)]
    pub hist_range: Option<String>,
    /// 0-based patch rows for tracelines (default first, middle, last).
    #[arg(long)]
    pub trace_rows: Option<String>,
    /// Output directory (default `{out}/eval_{tag}`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long, default_value = "27,31,37,41,45,49")]
    pub windows: String,
    #[arg(long, default_value = "regression,classification")]
    pub paradigms: String,
    #[arg(long, default_value = "nc,c")]
    pub inputs: String,
    #[arg(long, default_value = "dtm,chm")]
    pub targets: String,
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Test patch `row0,col0,rows,cols` in scene pixels (default: centered square).
    #[arg(long)]
    pub patch: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TEST_PATCH)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
}

/// Parse `argv` with config-file entries appended after the explicit arguments.
pub fn parse_args(argv: &[String]) -> std::result::Result<Cli, CliError> {
    let mut args = argv.to_vec();
    if let Some(path) = config_path(argv) {
        let kv = KeyValues::from_file(&path)?;
        args.extend(kv.to_args());
    }
    Cli::try_parse_from(args).map_err(CliError::Usage)
}

fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    let mut found = None;
    while let Some(a) = it.next() {
        if a == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(clap::Error),
    #[error(transparent)]
    Run(#[from] Error),
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let ctx = Context {
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, &a),
        Command::Features(a) => cmd_features(&ctx, &a),
        Command::Train(a) => cmd_train(&ctx, &a),
        Command::Predict(a) => cmd_predict(&ctx, &a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, &a),
        Command::Report(a) => cmd_report(&ctx, &a),
    }
}

struct Context {
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Descriptor {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_simulate(ctx: &Context, a: &SimulateArgs) -> Result<()> {
    let mut kv = KeyValues::default();
    kv.insert("seed", ctx.seed.to_string());
    let numbers = [
        ("rows", a.rows.map(|v| v.to_string())),
        ("cols", a.cols.map(|v| v.to_string())),
        ("dtm_range", a.dtm_range.clone()),
        ("canopy_range", a.canopy_range.clone()),
        ("terrain_correlation_length", a.terrain_correlation_length.map(|v| v.to_string())),
        ("canopy_correlation_length", a.canopy_correlation_length.map(|v| v.to_string())),
        ("ground_pol_powers", a.ground_pol_powers.clone()),
        ("volume_pol_powers", a.volume_pol_powers.clone()),
        ("ground_to_volume_ratio", a.ground_to_volume_ratio.map(|v| v.to_string())),
        ("extinction", a.extinction.map(|v| v.to_string())),
        ("phase_screen_sigma", a.phase_screen_sigma.map(|v| v.to_string())),
        ("phase_screen_correlation_length", a.phase_screen_correlation_length.map(|v| v.to_string())),
        ("speckle_correlation_length", a.speckle_correlation_length.map(|v| v.to_string())),
    ];
    for (k, v) in numbers {
        if let Some(v) = v {
            kv.insert(k, v);
        }
    }
    let mut spec = SceneSpec::default();
    spec.apply(&kv)?;
    let mut geometry = AcquisitionGeometry::p_band_six_tracks();
    if let Some(b) = &a.baselines {
        geometry.baselines = kv.parse_list("baselines", b)?;
    }
    geometry.validate()?;

    let mut written = Vec::new();
    if !spec.is_calibrated() {
        let scene = simulate_stack(&spec, &geometry)?;
        write_stack(&scene.stack, &ctx.path("stack_nc"))?;
        written.push("stack_nc");
    }
    let scene = simulate_stack(&spec.calibrated(), &geometry)?;
    write_stack(&scene.stack, &ctx.path("stack_c"))?;
    written.push("stack_c");
    write_raster(&scene.dtm, &ctx.path("dtm"))?;
    write_raster(&scene.chm, &ctx.path("chm"))?;
    println!(
        "seed {} rows {} cols {} baselines {} stacks {}",
        spec.seed,
        spec.rows,
        spec.cols,
        geometry.num_baselines(),
        written.join(",")
    );
    Ok(())
}

fn cmd_features(ctx: &Context, a: &FeaturesArgs) -> Result<()> {
    let stack_dir = a.stack.clone().unwrap_or_else(|| ctx.path(&format!("stack_{}", a.input.name())));
    let stack = read_stack(&stack_dir)?;
    let grid = build_feature_grid(&stack, a.window)?;
    let stem = ctx.path(&format!("features_{}", a.input.name()));
    write_feature_grid(&grid, &stem)?;
    if a.csv {
        crate::features::export_feature_csv(&grid, &with_suffix(&stem, ".csv"))?;
    }
    for (kind, given) in [(RasterKind::Dtm, &a.dtm), (RasterKind::Chm, &a.chm)] {
        let name = target_name(kind);
        let src = given.clone().unwrap_or_else(|| ctx.path(name));
        let full = read_raster(&src)?;
        if full.rows() != stack.rows() || full.cols() != stack.cols() {
            return Err(Error::Misaligned(format!(
                "{} raster {}x{} vs stack {}x{}",
                kind.name(),
                full.rows(),
                full.cols(),
                stack.rows(),
                stack.cols()
            )));
        }
        write_raster(&average_raster(&full, a.window)?, &ctx.path(&format!("{name}_avg")))?;
    }
    println!(
        "window {} grid {}x{} features {} offset {}",
        grid.window(),
        grid.rows(),
        grid.cols(),
        grid.dim(),
        grid.valid_offset()
    );
    Ok(())
}

/// Training sidecar written next to the model.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub target: String,
    pub paradigm: String,
    pub input: String,
    pub window: usize,
    pub test_patch: [usize; 4],
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub trees: usize,
    pub num_classes: Option<usize>,
    pub test_rmse: f64,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    pub timing: TimingReport,
}

fn cmd_train(ctx: &Context, a: &TrainArgs) -> Result<()> {
    let kind = a.target.kind();
    let paradigm = match a.paradigm {
        ParadigmArg::Regression => Paradigm::Regression,
        ParadigmArg::Classification => Paradigm::Classification { bin_width: a.bin_width },
    };
    let tag = format!("{}_{}_{}", target_name(kind), paradigm.name().to_lowercase(), a.input.name());
    let grid = read_feature_grid(
        &a.features.clone().unwrap_or_else(|| ctx.path(&format!("features_{}", a.input.name()))),
    )?;
    let reference = read_raster(
        &a.reference.clone().unwrap_or_else(|| ctx.path(&format!("{}_avg", target_name(kind)))),
    )?;
    if reference.kind() != kind {
        return Err(Error::Misaligned(format!(
            "reference raster holds {}, expected {}",
            reference.kind().name(),
            kind.name()
        )));
    }
    let patch = a.patch.resolve(grid.rows(), grid.cols())?;
    let split = SplitSpec {
        test_patch: patch,
        validation_fraction: a.validation_fraction,
        seed: ctx.seed,
        mode: match a.block_size {
            Some(block) => SplitMode::Blocked { block },
            None => SplitMode::Random,
        },
    };
    let hp = a.hyper.hyperparams(ctx.seed)?;
    let run = run_pipeline(&grid, &reference, &split, paradigm, &hp)?;
    let model_path = a.model.clone().unwrap_or_else(|| ctx.path(&format!("model_{tag}.json")));
    run.model.save(&model_path)?;
    let summary = TrainSummary {
        target: target_name(kind).into(),
        paradigm: paradigm.name().to_lowercase(),
        input: a.input.name().into(),
        window: grid.window(),
        test_patch: [patch.row0, patch.col0, patch.rows, patch.cols],
        n_train: run.split.train.len(),
        n_validation: run.split.validation.len(),
        n_test: run.split.test.len(),
        trees: run.model.trees().len(),
        num_classes: run.model.quantization().map(|q| q.num_classes),
        test_rmse: run.rmse,
        train_loss: run.train_loss,
        valid_loss: run.valid_loss,
        timing: run.timing,
    };
    write_json_file(&ctx.path(&format!("train_{tag}.json")), &summary)?;
    println!(
        "model {} trees {} test rmse {:.4} m train {:.2} s",
        model_path.display(),
        summary.trees,
        summary.test_rmse,
        summary.timing.train_seconds
    );
    Ok(())
}

fn model_tag(model: &Path) -> String {
    let stem = model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    stem.strip_prefix("model_").unwrap_or(stem).to_string()
}

/// Prediction sidecar `{stem}.timing.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PredictTiming {
    pub test_seconds: f64,
    pub n_test: usize,
    pub threads: usize,
}

fn cmd_predict(ctx: &Context, a: &PredictArgs) -> Result<()> {
    let model = GbdtModel::load(&a.model)?;
    let kind = model
        .target()
        .ok_or_else(|| Error::ModelFormat("model does not record its target raster".into()))?;
    let grid = read_feature_grid(
        &a.features.clone().unwrap_or_else(|| ctx.path(&format!("features_{}", a.input.name()))),
    )?;
    let timed = time_run(|| predict_grid(&model, &grid, kind));
    let raster = timed.value?;
    let stem = a.output.clone().unwrap_or_else(|| ctx.path(&format!("pred_{}", model_tag(&a.model))));
    write_raster(&raster, &stem)?;
    write_json_file(
        &with_suffix(&stem, ".timing.json"),
        &PredictTiming {
            test_seconds: timed.seconds,
            n_test: raster.values().len(),
            threads: rayon::current_num_threads(),
        },
    )?;
    println!("prediction {} {}x{}", stem.display(), raster.rows(), raster.cols());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub target: String,
    pub test_patch: [usize; 4],
    pub n: usize,
    pub rmse: f64,
    pub reference_std: f64,
    pub distinct_values: usize,
    pub trace_rows: Vec<usize>,
}

/// Evaluation timing: training sidecar figures when available plus prediction time.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct EvaluationTiming {
    pub train: Option<TimingReport>,
    pub predict_seconds: Option<f64>,
    pub predict_pixels: Option<usize>,
}

fn cmd_evaluate(ctx: &Context, a: &EvaluateArgs) -> Result<()> {
    let prediction = read_raster(&a.prediction)?;
    let kind = prediction.kind();
    let reference = read_raster(
        &a.reference.clone().unwrap_or_else(|| ctx.path(&format!("{}_avg", target_name(kind)))),
    )?;
    if reference.kind() != kind
        || reference.rows() != prediction.rows()
        || reference.cols() != prediction.cols()
        || reference.valid_offset() != prediction.valid_offset()
    {
        return Err(Error::Misaligned("prediction and reference rasters differ in kind or geometry".into()));
    }
    let patch = a.patch.resolve(prediction.rows(), prediction.cols())?;
    let pred = patch.crop(&prediction)?;
    let refs = patch.crop(&reference)?;
    let rmse = crate::eval::rmse(&pred, &refs)?;
    let range = match &a.hist_range {
        Some(text) => match KeyValues::default().parse_list::<f64>("hist_range", text)?[..] {
            [lo, hi] => (lo, hi),
            _ => return Err(Error::Config("`hist_range` expects lo,hi".into())),
        },
        None if kind == RasterKind::Chm => (0.0, 80.0),
        None => value_range(&pred, &refs),
    };
    let hist = joint_histogram(&pred, &refs, a.hist_bins, range)?;

    let tag = a
        .prediction
        .file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.strip_prefix("pred_").unwrap_or(s).to_string())
        .unwrap_or_else(|| target_name(kind).to_string());
    let dir = a.output.clone().unwrap_or_else(|| ctx.path(&format!("eval_{tag}")));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    hist.write_csv(&dir.join("joint_histogram.csv"))?;
    hist.write_svg(&dir.join("joint_histogram.svg"), &format!("{} joint distribution", kind.name()))?;

    let cropped = |values: Vec<f64>| HeightRaster::new(patch.rows, patch.cols, kind, 0, values);
    let (pred_patch, ref_patch) = (cropped(pred.clone())?, cropped(refs.clone())?);
    let trace_rows = match &a.trace_rows {
        Some(text) => KeyValues::default().parse_list("trace_rows", text)?,
        None => {
            let mut rows = vec![0, patch.rows / 2, patch.rows - 1];
            rows.dedup();
            rows
        }
    };
    write_tracelines(&dir.join("tracelines.csv"), &trace_rows, &ref_patch, &[("prediction", &pred_patch)])?;

    let summary = EvaluationSummary {
        target: target_name(kind).into(),
        test_patch: [patch.row0, patch.col0, patch.rows, patch.cols],
        n: pred.len(),
        rmse,
        reference_std: std_dev(&refs),
        distinct_values: distinct_value_count(&pred),
        trace_rows,
    };
    write_json_file(&dir.join("metrics.json"), &summary)?;

    let mut timing = EvaluationTiming::default();
    let train_sidecar = ctx.path(&format!("train_{tag}.json"));
    if train_sidecar.exists() {
        timing.train = Some(read_json_file::<TrainSummary>(&train_sidecar)?.timing);
    }
    let predict_sidecar = with_suffix(&a.prediction, ".timing.json");
    if predict_sidecar.exists() {
        let p: PredictTiming = read_json_file(&predict_sidecar)?;
        timing.predict_seconds = Some(p.test_seconds);
        timing.predict_pixels = Some(p.n_test);
    }
    write_json_file(&dir.join("timing.json"), &timing)?;
    println!(
        "rmse {:.4} m std {:.4} m distinct {} n {} -> {}",
        summary.rmse,
        summary.reference_std,
        summary.distinct_values,
        summary.n,
        dir.display()
    );
    Ok(())
}

fn cmd_report(ctx: &Context, a: &ReportArgs) -> Result<()> {
    let kv = KeyValues::default();
    let windows: Vec<usize> = kv.parse_list("windows", &a.windows)?;
    let paradigms = a
        .paradigms
        .split(',')
        .map(|p| match p.trim() {
            "regression" => Ok(Paradigm::Regression),
            "classification" => Ok(Paradigm::Classification { bin_width: a.bin_width }),
            other => Err(Error::Config(format!("unknown paradigm `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let targets = a
        .targets
        .split(',')
        .map(|t| match t.trim() {
            "dtm" => Ok(RasterKind::Dtm),
            "chm" => Ok(RasterKind::Chm),
            other => Err(Error::Config(format!("unknown target `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut stacks = Vec::new();
    for input in a.inputs.split(',') {
        let (calibration, dir) = match input.trim() {
            "nc" => (Calibration::NonCalibrated, "stack_nc"),
            "c" => (Calibration::Calibrated, "stack_c"),
            other => return Err(Error::Config(format!("unknown input `{other}`"))),
        };
        stacks.push((calibration, read_stack(&ctx.path(dir))?));
    }
    let dtm = read_raster(&ctx.path("dtm"))?;
    let chm = read_raster(&ctx.path("chm"))?;
    let test_patch = match &a.patch {
        None => Patch::centered(dtm.rows(), dtm.cols(), a.patch_size),
        Some(text) => match kv.parse_list::<usize>("patch", text)?[..] {
            [r, c, h, w] => Patch::new(r, c, h, w),
            _ => return Err(Error::Config("`patch` expects row0,col0,rows,cols".into())),
        },
    };
    let config = SweepConfig {
        windows,
        paradigms,
        targets: targets.clone(),
        test_patch,
        validation_fraction: a.validation_fraction,
        seed: ctx.seed,
        hp: a.hyper.hyperparams(ctx.seed)?,
    };
    let stack_refs: Vec<(Calibration, &crate::sardata::SlcStack)> = stacks.iter().map(|(c, s)| (*c, s)).collect();
    let table = window_sweep(
        SweepInputs {
            stacks: &stack_refs,
            dtm: &dtm,
            chm: &chm,
        },
        &config,
    )?;
    let dir = ctx.path("report");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for kind in targets {
        let name = target_name(kind);
        table.write_csv(&dir.join(format!("rmse_{name}.csv")), kind)?;
        table.write_svg(&dir.join(format!("rmse_{name}.svg")), kind)?;
    }
    let timings: Vec<serde_json::Value> = table
        .cells
        .iter()
        .map(|c| {
            serde_json::json!({
                "target": target_name(c.target),
                "method": c.row_label(),
                "window": c.window,
                "rmse": c.rmse,
                "timing": c.timing,
            })
        })
        .collect();
    write_json_file(&dir.join("cells.json"), &timings)?;
    println!("report {} configurations -> {}", table.cells.len(), dir.display());
    Ok(())
}
