//! Model families and their objectives.

pub mod cluster;
pub mod drift;
pub mod logistic;
pub mod skipgram;

pub use cluster::{
    dec_loss, dec_samples, dec_soft_assign, dec_target, nll_loss, ClusterModel, DecObjective, DecSample,
    LabeledPoint, NllObjective, CENTROIDS,
};
pub use drift::{mse_drift_loss, MseDriftObjective};
pub use logistic::LogisticObjective;
pub use skipgram::{
    skipgram_batch_loss, skipgram_grad, skipgram_loss, SkipGramModel, SkipGramObjective, SkipGramSample,
    INPUT_TABLE, OUTPUT_TABLE,
};
