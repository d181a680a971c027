//! Trainers: skip-gram SGD, DEC with target re-estimation, k-means with
//! silhouette selection, and influence-guided fine-tuning.

mod dec;
mod finetune;
mod kmeans;
mod skipgram;

pub use dec::{descend, dec_refine, hard_assign, train_dec, train_nll, DecConfig, DecRun, DescentConfig};
pub use finetune::{finetune, mitigate, FinetuneMode, MitigationConfig, MitigationMode, MitigationOutcome};
pub use kmeans::{kmeans, optimal_bijection, select_clusters, silhouette, ClusterSelection, KMeans};
pub use skipgram::{train_skipgram, SkipGramRun, TrainConfig};
