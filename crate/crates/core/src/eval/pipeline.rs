use crate::error::{Error, Result};
use crate::features::FeatureGrid;
use crate::gbdt::{train_with_history, GbdtHyperparams, GbdtModel, LossKind};
use crate::sardata::{HeightRaster, RasterKind};

use super::metrics::rmse;
use super::split::{split_dataset, SplitIndices, SplitSpec};
use super::timing::{time_run, TimingReport};

/// Learning formulation for height retrieval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Paradigm {
    Regression,
    /// Heights quantized into classes of `bin_width` meters.
    Classification { bin_width: f64 },
}

impl Paradigm {
    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Regression => "Regression",
            Paradigm::Classification { .. } => "Classification",
        }
    }

    pub fn loss(self) -> LossKind {
        match self {
            Paradigm::Regression => LossKind::WeightedRmse,
            Paradigm::Classification { .. } => LossKind::WeightedMultiClass,
        }
    }
}

/// Outcome of split, train, and test-patch prediction.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub model: GbdtModel,
    pub split: SplitIndices,
    pub test_reference: Vec<f64>,
    pub test_prediction: Vec<f64>,
    pub rmse: f64,
    pub timing: TimingReport,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

/// CHM predictions are clamped at zero since the reference cannot be negative.
pub fn clamp_heights(kind: RasterKind, values: &mut [f64]) {
    if kind == RasterKind::Chm {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
    }
}

pub fn run_pipeline(
    grid: &FeatureGrid,
    target: &HeightRaster,
    split: &SplitSpec,
    paradigm: Paradigm,
    hp: &GbdtHyperparams,
) -> Result<PipelineRun> {
    let data = split_dataset(grid, target, split)?;
    let hp = GbdtHyperparams {
        loss: paradigm.loss(),
        ..hp.clone()
    };
    let train = match paradigm {
        Paradigm::Regression => data.train,
        Paradigm::Classification { bin_width } => data.train.into_classification(bin_width)?,
    };
    let trained = time_run(|| train_with_history(&train, Some(&data.validation), &hp));
    let outcome = trained.value?;
    let model = outcome.model.with_target(target.kind());
    let predicted = time_run(|| model.predict_heights(data.test.features()));
    let mut test_prediction = predicted.value?;
    clamp_heights(target.kind(), &mut test_prediction);
    let test_reference = data.test.heights();
    let timing = TimingReport {
        train_seconds: trained.seconds,
        test_seconds: predicted.seconds,
        n_train: train.len(),
        n_test: test_reference.len(),
        model_leaf_count: model.num_leaves(),
        threads: rayon::current_num_threads(),
    };
    Ok(PipelineRun {
        rmse: rmse(&test_prediction, &test_reference)?,
        model,
        split: data.indices,
        test_reference,
        test_prediction,
        timing,
        train_loss: outcome.train_loss,
        valid_loss: outcome.valid_loss,
    })
}

/// Height raster predicted for every grid pixel, aligned with the grid.
pub fn predict_grid(model: &GbdtModel, grid: &FeatureGrid, kind: RasterKind) -> Result<HeightRaster> {
    if model.num_features() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, grid has {}",
            model.num_features(),
            grid.dim()
        )));
    }
    let mut values = model.predict_heights(grid.values())?;
    clamp_heights(kind, &mut values);
    HeightRaster::new(grid.rows(), grid.cols(), kind, grid.valid_offset(), values)
}
