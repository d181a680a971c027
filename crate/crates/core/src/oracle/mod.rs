//! Ground truth for influence estimates: leave-one-out retraining,
//! empirical influence and correlation reporting.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffmath::{loss_value, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that can be retrained with one training sample left out.
///
/// `train(None)` must reproduce the full run bit-exactly, and every
/// `train(Some(i))` must start from the same initialisation with the same
/// budget.
pub trait Trainer<T: Scalar>: Sync {
    fn dataset_len(&self) -> usize;
    fn train(&self, exclude: Option<usize>) -> Result<ParamVector<T>>;
}

pub fn loo_retrain<T: Scalar, Tr: Trainer<T>>(trainer: &Tr, excluded_id: usize) -> Result<ParamVector<T>> {
    let n = trainer.dataset_len();
    if excluded_id >= n {
        return Err(Error::OutOfRange { what: "excluded sample", id: excluded_id, len: n });
    }
    trainer.train(Some(excluded_id))
}

/// Every leave-one-out model, indexed by the excluded sample.
pub fn loo_all<T: Scalar, Tr: Trainer<T>>(trainer: &Tr) -> Result<Vec<ParamVector<T>>> {
    (0..trainer.dataset_len()).into_par_iter().map(|i| loo_retrain(trainer, i)).collect()
}

/// `−N · (L′(θ_loo) − L′(θ_full))`, on the scale of the upweighting
/// derivative.
pub fn empirical_influence<T: Scalar, O: Objective<T>>(
    test_obj: &O,
    test_batch: &[O::Sample],
    full: &ParamVector<T>,
    loo: &ParamVector<T>,
    n: usize,
) -> Result<T> {
    let delta = loss_value(test_obj, loo, test_batch)? - loss_value(test_obj, full, test_batch)?;
    Ok(-T::of_usize(n) * delta)
}

fn check_pair<T: Scalar>(xs: &[T], ys: &[T]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { context: "correlation", expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("correlation needs at least 3 pairs, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    Ok(())
}

/// Pearson's correlation coefficient.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let xs: Vec<f64> = xs.iter().map(|v| v.to_f64_lossy()).collect();
    let ys: Vec<f64> = ys.iter().map(|v| v.to_f64_lossy()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation with a zero-variance argument".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing their average rank.
pub fn average_ranks<T: Scalar>(xs: &[T]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation (Pearson on average ranks).
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

pub const REPORT_THRESHOLDS: [f64; 2] = [0.6, 0.8];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub class: usize,
    pub count: usize,
    /// `(threshold, fraction of this class's test points with r > threshold)`.
    pub fraction_above: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pipeline: String,
    /// `(test point id, class, r)`.
    pub per_test_point: Vec<(usize, usize, f64)>,
    pub fraction_above: Vec<(f64, f64)>,
    pub class_breakdown: Vec<ClassBreakdown>,
}

impl CorrelationReport {
    pub fn fraction_above(&self, threshold: f64) -> Option<f64> {
        self.fraction_above.iter().find(|(t, _)| *t == threshold).map(|&(_, f)| f)
    }
}

fn fractions(rs: &[f64], thresholds: &[f64]) -> Vec<(f64, f64)> {
    thresholds
        .iter()
        .map(|&t| (t, rs.iter().filter(|&&r| r > t).count() as f64 / rs.len().max(1) as f64))
        .collect()
}

/// Per test point, Pearson r between predicted and empirical influence over
/// all training samples; then the fraction of test points above each
/// threshold, overall and per class. `predicted[t][z]` and
/// `empirical[t][z]` are indexed by test point, then training sample.
pub fn correlation_report<T: Scalar>(
    pipeline: &str,
    test_ids: &[usize],
    classes: &[usize],
    predicted: &[Vec<T>],
    empirical: &[Vec<T>],
    thresholds: &[f64],
) -> Result<CorrelationReport> {
    let m = test_ids.len();
    for (what, len) in [("classes", classes.len()), ("predicted", predicted.len()), ("empirical", empirical.len())] {
        if len != m {
            return Err(Error::LengthMismatch { context: what, expected: m, actual: len });
        }
    }
    let rs: Vec<f64> = predicted
        .par_iter()
        .zip(empirical)
        .map(|(p, e)| pearson(p, e))
        .collect::<Result<_>>()?;
    let per_test_point: Vec<(usize, usize, f64)> =
        test_ids.iter().zip(classes).zip(&rs).map(|((&id, &c), &r)| (id, c, r)).collect();
    let mut by_class: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(_, c, r) in &per_test_point {
        by_class.entry(c).or_default().push(r);
    }
    let class_breakdown = by_class
        .into_iter()
        .map(|(class, rs)| ClassBreakdown { class, count: rs.len(), fraction_above: fractions(&rs, thresholds) })
        .collect();
    Ok(CorrelationReport {
        pipeline: pipeline.to_string(),
        fraction_above: fractions(&rs, thresholds),
        per_test_point,
        class_breakdown,
    })
}
