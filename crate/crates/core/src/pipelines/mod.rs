//! End-to-end compositions of the modules, shared by the command line and
//! the acceptance suite.

mod mog;
mod text;

pub use mog::{
    influence_matrix, mog_loo_audit, DecLooTrainer, MogAudit, MogAuditConfig, NllLooTrainer, PipelineAudit,
};
pub use text::{influence_records, weat_influence, weat_mitigation, TextInfluence};
