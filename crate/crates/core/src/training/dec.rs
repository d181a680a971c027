use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::diffmath::{loss_grad, loss_value, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::models::{dec_samples, dec_soft_assign, dec_target, ClusterModel, DecSample, LabeledPoint, NllObjective};
use crate::scalar::Scalar;
use crate::training::kmeans::{kmeans, optimal_bijection};

/// Full-batch gradient descent settings shared by the centroid trainers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub lr: f64,
    pub max_steps: usize,
    /// Stop once the gradient norm falls below this.
    pub grad_tol: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self { lr: 0.01, max_steps: 20_000, grad_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecConfig {
    pub k: usize,
    /// Number of target re-estimations.
    pub target_updates: usize,
    pub descent: DescentConfig,
    pub seed: u64,
}

impl DecConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, target_updates: 20, descent: DescentConfig::default(), seed }
    }
}

/// Runs descent on `obj` over `batch` from `params`. Returns the number of
/// steps taken.
pub fn descend<T: Scalar, O: Objective<T>>(
    obj: &O,
    params: &mut ParamVector<T>,
    batch: &[O::Sample],
    cfg: &DescentConfig,
) -> Result<usize> {
    let lr = T::of(cfg.lr);
    let tol = T::of(cfg.grad_tol);
    for step in 0..cfg.max_steps {
        let g = loss_grad(obj, params, batch)
            .map_err(|e| Error::TrainingDiverged(format!("{} step {step}: {e}", obj.name())))?;
        if g.norm() < tol {
            return Ok(step);
        }
        params.axpy(-lr, &g)?;
    }
    Ok(cfg.max_steps)
}

fn without<T: Clone>(items: &[T], exclude: Option<usize>) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(_, x)| x.clone())
        .collect()
}

/// A trained clustering model and how it was obtained.
#[derive(Clone, Debug)]
pub struct DecRun<T> {
    pub model: ClusterModel<T>,
    /// The k-means centroids training started from.
    pub init: ClusterModel<T>,
    pub kmeans_accuracy: f64,
    /// Cluster → class map under the final hard assignment.
    pub class_of_cluster: Vec<usize>,
    pub accuracy: f64,
}

impl<T: Scalar> DecRun<T> {
    /// Training samples with targets taken from the final model, i.e. the
    /// objective whose stationary point the model is.
    pub fn samples(&self, points: &[LabeledPoint<T>]) -> Vec<DecSample<T>> {
        dec_samples(points, &dec_target(&dec_soft_assign(&self.model, points)))
    }
}

/// Hard assignment by largest soft assignment.
pub fn hard_assign<T: Scalar>(model: &ClusterModel<T>, points: &[LabeledPoint<T>]) -> Vec<usize> {
    dec_soft_assign(model, points)
        .iter()
        .map(|q| {
            q.iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |b, (j, &v)| if v > b.1 { (j, v) } else { b })
                .0
        })
        .collect()
}

/// Alternates target re-estimation with descent on the mean KL, starting
/// from `init`. `exclude` drops one point; every other setting is shared.
pub fn dec_refine<T: Scalar>(
    points: &[LabeledPoint<T>],
    init: &ClusterModel<T>,
    cfg: &DecConfig,
    exclude: Option<usize>,
) -> Result<ClusterModel<T>> {
    let pts = without(points, exclude);
    let obj = init.dec_objective();
    let mut params = init.params().clone();
    for round in 0..cfg.target_updates {
        let model = ClusterModel::from_params(init.k(), init.dim(), params.clone())?;
        let batch = dec_samples(&pts, &dec_target(&dec_soft_assign(&model, &pts)));
        let steps = descend(&obj, &mut params, &batch, &cfg.descent)?;
        debug!(
            "target update {}: {steps} steps, KL {:.3e}",
            round + 1,
            loss_value(&obj, &params, &batch)?.to_f64_lossy()
        );
    }
    ClusterModel::from_params(init.k(), init.dim(), params)
}

/// k-means initialisation, then [`dec_refine`].
pub fn train_dec<T: Scalar>(points: &[LabeledPoint<T>], cfg: &DecConfig) -> Result<DecRun<T>> {
    if points.len() < cfg.k {
        return Err(Error::InvalidConfig(format!("{} points for {} clusters", points.len(), cfg.k)));
    }
    let vectors: Vec<Vec<T>> = points.iter().map(|p| p.x.clone()).collect();
    let labels: Vec<usize> = points.iter().map(|p| p.label).collect();
    let km = kmeans(&vectors, cfg.k, cfg.seed)?;
    let classes = labels.iter().max().map_or(0, |m| m + 1).max(cfg.k);
    let (_, kmeans_accuracy) = optimal_bijection(&km.assignments, &labels, classes)?;
    let init = ClusterModel::new(km.centroids)?;
    let model = dec_refine(points, &init, cfg, None)?;
    let (class_of_cluster, accuracy) = optimal_bijection(&hard_assign(&model, points), &labels, classes)?;
    info!("DEC: k-means accuracy {kmeans_accuracy:.3}, DEC accuracy {accuracy:.3}");
    Ok(DecRun { model, init, kmeans_accuracy, class_of_cluster: class_of_cluster[..cfg.k].to_vec(), accuracy })
}

/// Supervised descent on the mean NLL from `init`, skipping `exclude`.
pub fn train_nll<T: Scalar>(
    points: &[LabeledPoint<T>],
    init: &ClusterModel<T>,
    class_of_cluster: &[usize],
    cfg: &DescentConfig,
    exclude: Option<usize>,
) -> Result<ClusterModel<T>> {
    let pts = without(points, exclude);
    let obj = NllObjective::new(init.k(), init.dim(), class_of_cluster)?;
    let mut params = init.params().clone();
    descend(&obj, &mut params, &pts, cfg)?;
    ClusterModel::from_params(init.k(), init.dim(), params)
}
