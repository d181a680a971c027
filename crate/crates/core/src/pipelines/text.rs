use crate::diffmath::{Grouped, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::influence::{rank_and_split, score_all, stest, IhvpSolver, InfluenceRecord};
use crate::models::{SkipGramModel, SkipGramSample};
use crate::scalar::Scalar;
use crate::training::{mitigate, MitigationConfig, MitigationOutcome};
use crate::weat::{AbsWeatObjective, WeatSpec};

/// Influence scores for a subset of documents.
#[derive(Clone, Debug)]
pub struct TextInfluence<T> {
    pub stest: ParamVector<T>,
    /// Keyed by the original document id, in `train_docs` order.
    pub records: Vec<InfluenceRecord<T>>,
}

/// Scores every document in `train_docs` against a test objective, with the
/// Hessian taken over the same documents (one document = one sample whose
/// tuple gradients are averaged). Wrap both objectives in
/// [`crate::diffmath::Masked`] to restrict the parameters.
pub fn influence_records<T, Te, Tr>(
    train_obj: &Tr,
    params: &ParamVector<T>,
    dataset: &[Vec<SkipGramSample>],
    train_docs: &[usize],
    test_obj: &Te,
    test_batch: &[Te::Sample],
    solver: &IhvpSolver,
) -> Result<TextInfluence<T>>
where
    T: Scalar,
    Tr: Objective<T, Sample = SkipGramSample>,
    Te: Objective<T>,
{
    if let Some(&bad) = train_docs.iter().find(|&&d| d >= dataset.len()) {
        return Err(Error::OutOfRange { what: "document", id: bad, len: dataset.len() });
    }
    let docs: Vec<Vec<SkipGramSample>> = train_docs.iter().map(|&d| dataset[d].clone()).collect();
    let grouped = Grouped(train_obj);
    let s = stest(test_obj, test_batch, &grouped, params, &docs, solver)?;
    let mut records = score_all(&s, &grouped, params, &docs)?;
    for r in &mut records {
        r.sample_id = train_docs[r.sample_id];
    }
    Ok(TextInfluence { stest: s, records })
}

/// Influence of each training document on `|effect|` of a WEAT, over the
/// full parameter vector.
pub fn weat_influence<T: Scalar>(
    model: &SkipGramModel<T>,
    spec: &WeatSpec,
    dataset: &[Vec<SkipGramSample>],
    train_docs: &[usize],
    solver: &IhvpSolver,
) -> Result<TextInfluence<T>> {
    let ids = spec.resolve(model.vocab())?;
    let test = AbsWeatObjective::for_model(model);
    influence_records(&model.objective(), model.params(), dataset, train_docs, &test, &[ids], solver)
}

/// [`mitigate`] with sets recomputed by [`weat_influence`] at every refresh.
pub fn weat_mitigation<T: Scalar>(
    model: &SkipGramModel<T>,
    spec: &WeatSpec,
    dataset: &[Vec<SkipGramSample>],
    train_docs: &[usize],
    solver: &IhvpSolver,
    cfg: &MitigationConfig,
) -> Result<MitigationOutcome<T>> {
    mitigate(model, spec, dataset, cfg, |m| {
        let inf = weat_influence(m, spec, dataset, train_docs, solver)?;
        Ok(rank_and_split(&inf.records, cfg.k_amplify, cfg.k_mitigate))
    })
}
