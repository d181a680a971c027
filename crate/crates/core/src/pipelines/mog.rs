use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffmath::{Objective, ParamVector};
use crate::error::Result;
use crate::influence::{score_sample, DirectSolver};
use crate::models::{ClusterModel, LabeledPoint, NllObjective};
use crate::oracle::{correlation_report, empirical_influence, loo_all, CorrelationReport, Trainer, REPORT_THRESHOLDS};
use crate::scalar::Scalar;
use crate::training::{dec_refine, hard_assign, optimal_bijection, train_dec, train_nll, DecConfig, DecRun, DescentConfig};

/// Scores `[t][z]`: influence of upweighting training sample `z` on the
/// test loss of test sample `t`, via the exact damped solve.
pub fn influence_matrix<T, Tr, Te>(
    train_obj: &Tr,
    params: &ParamVector<T>,
    dataset: &[Tr::Sample],
    test_obj: &Te,
    test_samples: &[Te::Sample],
    damping: T,
) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    Tr: Objective<T>,
    Te: Objective<T>,
{
    let solver = DirectSolver::new(train_obj, params, dataset, damping)?;
    test_samples
        .par_iter()
        .map(|t| {
            let g = crate::diffmath::loss_grad(test_obj, params, std::slice::from_ref(t))?;
            let s = solver.solve(&g)?;
            dataset.iter().map(|z| score_sample(&s, train_obj, params, z)).collect()
        })
        .collect()
}

/// Retrains DEC from a fixed initialisation.
pub struct DecLooTrainer<'a, T> {
    pub points: &'a [LabeledPoint<T>],
    pub init: &'a ClusterModel<T>,
    pub cfg: &'a DecConfig,
}

impl<T: Scalar> Trainer<T> for DecLooTrainer<'_, T> {
    fn dataset_len(&self) -> usize {
        self.points.len()
    }

    fn train(&self, exclude: Option<usize>) -> Result<ParamVector<T>> {
        Ok(dec_refine(self.points, self.init, self.cfg, exclude)?.params().clone())
    }
}

/// Retrains the supervised NLL model from a fixed initialisation.
pub struct NllLooTrainer<'a, T> {
    pub points: &'a [LabeledPoint<T>],
    pub init: &'a ClusterModel<T>,
    pub class_of_cluster: &'a [usize],
    pub descent: &'a DescentConfig,
}

impl<T: Scalar> Trainer<T> for NllLooTrainer<'_, T> {
    fn dataset_len(&self) -> usize {
        self.points.len()
    }

    fn train(&self, exclude: Option<usize>) -> Result<ParamVector<T>> {
        Ok(train_nll(self.points, self.init, self.class_of_cluster, self.descent, exclude)?.params().clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MogAuditConfig {
    pub dec: DecConfig,
    /// Descent used by the supervised baseline.
    pub nll: DescentConfig,
    pub damping: f64,
}

impl MogAuditConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { dec: DecConfig::new(k, seed), nll: DescentConfig::default(), damping: 0.01 }
    }
}

/// Predicted and leave-one-out influence for one pipeline.
#[derive(Clone, Debug)]
pub struct PipelineAudit<T> {
    pub predicted: Vec<Vec<T>>,
    pub empirical: Vec<Vec<T>>,
    pub report: CorrelationReport,
}

#[derive(Clone, Debug)]
pub struct MogAudit<T> {
    pub dec: DecRun<T>,
    /// Trained with DEC, tested with NLL.
    pub cross_loss: PipelineAudit<T>,
    /// Trained and tested with NLL.
    pub matched: PipelineAudit<T>,
}

fn audit<T, Tr, Te, R>(
    name: &str,
    points: &[LabeledPoint<T>],
    train_obj: &Tr,
    train_set: &[Tr::Sample],
    test_obj: &Te,
    trainer: &R,
    damping: T,
) -> Result<PipelineAudit<T>>
where
    T: Scalar,
    Tr: Objective<T>,
    Te: Objective<T, Sample = LabeledPoint<T>>,
    R: Trainer<T>,
{
    let full = trainer.train(None)?;
    let predicted = influence_matrix(train_obj, &full, train_set, test_obj, points, damping)?;
    info!("{name}: retraining {} leave-one-out models", points.len());
    let loos = loo_all(trainer)?;
    let n = points.len();
    let empirical: Vec<Vec<T>> = points
        .par_iter()
        .map(|t| {
            let batch = std::slice::from_ref(t);
            loos.iter().map(|loo| empirical_influence(test_obj, batch, &full, loo, n)).collect()
        })
        .collect::<Result<_>>()?;
    let ids: Vec<usize> = (0..n).collect();
    let classes: Vec<usize> = points.iter().map(|p| p.label).collect();
    let report = correlation_report(name, &ids, &classes, &predicted, &empirical, &REPORT_THRESHOLDS)?;
    Ok(PipelineAudit { predicted, empirical, report })
}

/// Trains DEC, then validates cross-loss influence (train DEC, test NLL)
/// and the matched baseline (train and test NLL) against leave-one-out
/// retraining. Every point serves as a test point.
pub fn mog_loo_audit<T: Scalar>(points: &[LabeledPoint<T>], cfg: &MogAuditConfig) -> Result<MogAudit<T>> {
    let damping = T::of(cfg.damping);
    let dec = train_dec(points, &cfg.dec)?;
    let nll_test = NllObjective::new(dec.model.k(), dec.model.dim(), &dec.class_of_cluster)?;
    let dec_trainer = DecLooTrainer { points, init: &dec.init, cfg: &cfg.dec };
    let cross_loss = audit(
        "cross_loss",
        points,
        &dec.model.dec_objective(),
        &dec.samples(points),
        &nll_test,
        &dec_trainer,
        damping,
    )?;

    let labels: Vec<usize> = points.iter().map(|p| p.label).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1).max(dec.init.k());
    let (map, _) = optimal_bijection(&hard_assign(&dec.init, points), &labels, classes)?;
    let map = &map[..dec.init.k()];
    let nll = NllObjective::new(dec.init.k(), dec.init.dim(), map)?;
    let nll_trainer = NllLooTrainer { points, init: &dec.init, class_of_cluster: map, descent: &cfg.nll };
    let matched = audit("matched", points, &nll, points, &nll, &nll_trainer, damping)?;
    Ok(MogAudit { dec, cross_loss, matched })
}
