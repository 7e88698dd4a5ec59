use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Wall-clock cost of a train/test run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub train_seconds: f64,
    pub test_seconds: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub model_leaf_count: usize,
    pub threads: usize,
}

/// Value of a stage and the seconds it took on the monotonic clock.
#[derive(Clone, Debug)]
pub struct Timed<T> {
    pub value: T,
    pub seconds: f64,
}

pub fn time_run<T>(stage: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = stage();
    Timed {
        value,
        seconds: start.elapsed().as_secs_f64(),
    }
}
