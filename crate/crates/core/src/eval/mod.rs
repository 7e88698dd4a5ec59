//! Dataset splitting, metrics, plots, timing, and window sweeps.

pub mod metrics;
pub mod pipeline;
pub mod split;
pub mod sweep;
pub mod timing;

pub use metrics::{
    distinct_value_count, joint_histogram, rmse, std_dev, traceline, value_range, write_tracelines,
    JointHistogram,
};
pub use pipeline::{clamp_heights, predict_grid, run_pipeline, Paradigm, PipelineRun};
pub use split::{
    check_alignment, split_dataset, split_indices, validation_count, DatasetSplit, Patch, SplitIndices,
    SplitMode, SplitSpec, DEFAULT_TEST_PATCH,
};
pub use sweep::{window_sweep, Calibration, SweepCell, SweepConfig, SweepInputs, SweepTable};
pub use timing::{time_run, Timed, TimingReport};
