//! Cross-loss influence functions.
//!
//! Estimates how upweighting a single training sample changes an arbitrary
//! differentiable test objective, where the model was trained with a
//! different (often unsupervised) objective. Ships the two model families it
//! was built around, skip-gram embeddings and deep embedded clustering,
//! together with leave-one-out validation and WEAT-driven fine-tuning.
//!
//! The numeric core is generic over [`Scalar`] (`f32`/`f64`); the `*F64`
//! aliases below are what the pipelines use.

pub mod diffmath;
pub mod data;
pub mod error;
pub mod influence;
pub mod io;
pub mod models;
pub mod oracle;
pub mod pipelines;
pub mod scalar;
pub mod training;
pub mod vocab;
pub mod weat;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use vocab::Vocab;

pub type ParamVectorF64 = diffmath::ParamVector<f64>;
pub type ParamVectorF32 = diffmath::ParamVector<f32>;
pub type SkipGramModelF64 = models::SkipGramModel<f64>;
pub type SkipGramModelF32 = models::SkipGramModel<f32>;
pub type ClusterModelF64 = models::ClusterModel<f64>;
pub type ClusterModelF32 = models::ClusterModel<f32>;
pub type LabeledPointF64 = models::LabeledPoint<f64>;
pub type LabeledPointF32 = models::LabeledPoint<f32>;
pub type WeatResultF64 = weat::WeatResult<f64>;
