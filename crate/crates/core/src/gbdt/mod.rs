//! Gradient-boosted oblivious decision trees.

pub mod binning;
pub mod data;
pub mod loss;
pub mod model;
pub mod params;
pub mod quantize;
pub mod split;
pub mod train;
pub mod tree;

pub use binning::{BinnedMatrix, FeatureCuts};
pub use data::{Targets, TrainingSet};
pub use loss::{gradients, loss_weighted_multiclass, loss_weighted_rmse, softmax, Gradients};
pub use model::{ClassProbabilities, GbdtModel, MODEL_FORMAT_VERSION};
pub use params::{GbdtHyperparams, LossKind, MAX_BINS, MAX_DEPTH};
pub use quantize::{class_weights, quantize_labels, QuantizationMap};
pub use split::{find_best_oblivious_split, FeatureHistogram, SplitCandidate, SplitRules};
pub use train::{train, train_with_history, TrainOutcome};
pub use tree::{ObliviousTree, Split};
