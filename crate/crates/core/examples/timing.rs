//! Training and prediction wall-clock time on a synthetic 52-feature problem.
//!
//! cargo run --release --example timing -- [train_samples] [trees]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tomoboost::eval::{time_run, TimingReport};
use tomoboost::gbdt::{train, GbdtHyperparams, TrainingSet};

fn main() -> tomoboost::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let trees: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);
    let (m, n_test) = (52, 78_000);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x: Vec<f64> = (0..(n + n_test) * m).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x
        .chunks(m)
        .map(|r| 20.0 * r[0] + 10.0 * (6.0 * r[1]).sin() + 5.0 * r[2] * r[3])
        .collect();
    let set = TrainingSet::regression(x[..n * m].to_vec(), m, y[..n].to_vec())?;
    let hp = GbdtHyperparams {
        num_trees: trees,
        early_stopping_rounds: None,
        ..GbdtHyperparams::default()
    };
    let trained = time_run(|| train(&set, None, &hp));
    let model = trained.value?;
    let predicted = time_run(|| model.predict_heights(&x[n * m..]));
    predicted.value?;
    let report = TimingReport {
        train_seconds: trained.seconds,
        test_seconds: predicted.seconds,
        n_train: n,
        n_test,
        model_leaf_count: model.num_leaves(),
        threads: rayon::current_num_threads(),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(())
}
