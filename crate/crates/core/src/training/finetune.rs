use log::info;
use serde::{Deserialize, Serialize};

use crate::diffmath::{Grouped, Objective};
use crate::error::{Error, Result};
use crate::influence::InfluenceSets;
use crate::models::{SkipGramModel, SkipGramSample};
use crate::scalar::Scalar;
use crate::weat::{weat_effect, WeatResult, WeatSpec, WordTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinetuneMode {
    /// Gradient descent on the skip-gram loss.
    Reinforce,
    /// Gradient ascent.
    Reverse,
}

/// `steps` updates, one document of `set` each, cycling through `set` in
/// order. Each update follows the gradient of the document's mean tuple loss.
pub fn finetune<T: Scalar>(
    model: &mut SkipGramModel<T>,
    dataset: &[Vec<SkipGramSample>],
    set: &[usize],
    mode: FinetuneMode,
    steps: usize,
    lr: T,
) -> Result<()> {
    if let Some(&bad) = set.iter().find(|&&i| i >= dataset.len()) {
        return Err(Error::OutOfRange { what: "sample", id: bad, len: dataset.len() });
    }
    if set.is_empty() || steps == 0 {
        return Ok(());
    }
    let obj = Grouped(model.objective());
    let signed = match mode {
        FinetuneMode::Reinforce => -lr,
        FinetuneMode::Reverse => lr,
    };
    let mut g = vec![T::zero(); model.params().len()];
    for step in 0..steps {
        let doc = &dataset[set[step % set.len()]];
        g.iter_mut().for_each(|x| *x = T::zero());
        obj.add_sample_grad(model.params(), doc, T::one(), &mut g)?;
        crate::diffmath::axpy(signed, &g, model.params_mut().values_mut());
    }
    if !model.params().is_finite() {
        return Err(Error::TrainingDiverged("fine-tuning produced non-finite parameters".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationMode {
    /// Reverse the amplifying set, reinforce the mitigating set.
    Mitigate,
    /// The same with the sets swapped.
    Overbias,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationConfig {
    pub k_amplify: usize,
    pub k_mitigate: usize,
    pub iterations: usize,
    pub lr: f64,
    pub mode: MitigationMode,
    /// Stop at the first iteration that does not move |effect| in the
    /// intended direction, and return the best state seen.
    pub early_stop: bool,
    /// Recompute the influence sets on the current model before every
    /// iteration instead of once up front.
    pub refresh_sets: bool,
}

impl MitigationConfig {
    pub fn new(mode: MitigationMode) -> Self {
        Self { k_amplify: 50, k_mitigate: 50, iterations: 10, lr: 0.01, mode, early_stop: true, refresh_sets: true }
    }
}

#[derive(Clone, Debug)]
pub struct MitigationOutcome<T> {
    pub model: SkipGramModel<T>,
    pub before: WeatResult<T>,
    pub after: WeatResult<T>,
    /// `|effect|` before fine-tuning and after every iteration run.
    pub trajectory: Vec<T>,
    /// Iteration whose state was returned (0 = untouched).
    pub best_iteration: usize,
}

/// Fine-tunes on influence sets to shrink (or, in over-bias mode, grow)
/// `|effect|`. `influence` maps a model to its amplifying/mitigating sets.
/// One iteration reverses one set and reinforces the other, one update per
/// document; sets are truncated to the configured sizes.
pub fn mitigate<T, F>(
    model: &SkipGramModel<T>,
    spec: &WeatSpec,
    dataset: &[Vec<SkipGramSample>],
    cfg: &MitigationConfig,
    mut influence: F,
) -> Result<MitigationOutcome<T>>
where
    T: Scalar,
    F: FnMut(&SkipGramModel<T>) -> Result<InfluenceSets>,
{
    let improves = |new: T, best: T| match cfg.mode {
        MitigationMode::Mitigate => new < best,
        MitigationMode::Overbias => new > best,
    };
    let lr = T::of(cfg.lr);
    let before = weat_effect(spec, &WordTable::input_of(model))?;
    let mut trajectory = vec![before.effect.abs()];
    let mut current = model.clone();
    let mut best = (model.clone(), before.effect.abs(), 0usize);
    let mut sets: Option<InfluenceSets> = None;
    for it in 1..=cfg.iterations {
        if cfg.refresh_sets || sets.is_none() {
            sets = Some(influence(&current)?);
        }
        let s = sets.as_ref().expect("computed above");
        let amplify = &s.amplifying[..cfg.k_amplify.min(s.amplifying.len())];
        let mitig = &s.mitigating[..cfg.k_mitigate.min(s.mitigating.len())];
        let (reverse_set, reinforce_set) = match cfg.mode {
            MitigationMode::Mitigate => (amplify, mitig),
            MitigationMode::Overbias => (mitig, amplify),
        };
        finetune(&mut current, dataset, reverse_set, FinetuneMode::Reverse, reverse_set.len(), lr)?;
        finetune(&mut current, dataset, reinforce_set, FinetuneMode::Reinforce, reinforce_set.len(), lr)?;
        let e = weat_effect(spec, &WordTable::input_of(&current))?.effect.abs();
        trajectory.push(e);
        info!("iteration {it}: |effect| {:.6}", e.to_f64_lossy());
        if improves(e, best.1) {
            best = (current.clone(), e, it);
        } else if cfg.early_stop {
            break;
        }
    }
    let (model, best_iteration) = if cfg.early_stop {
        (best.0, best.2)
    } else {
        let last = trajectory.len() - 1;
        (current, last)
    };
    let after = weat_effect(spec, &WordTable::input_of(&model))?;
    Ok(MitigationOutcome { model, before, after, trajectory, best_iteration })
}
