use serde::{Deserialize, Serialize};

use crate::diffmath::{loss_value, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CENTROIDS: &str = "centroids";

/// A point with its ground-truth class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint<T> {
    pub x: Vec<T>,
    pub label: usize,
}

impl<T> LabeledPoint<T> {
    pub fn new(x: Vec<T>, label: usize) -> Self {
        Self { x, label }
    }
}

/// `k` centroids living directly in the data space.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel<T> {
    k: usize,
    dim: usize,
    params: ParamVector<T>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn new(centroids: Vec<Vec<T>>) -> Result<Self> {
        let k = centroids.len();
        if k < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 centroids, got {k}")));
        }
        let dim = centroids[0].len();
        if centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidConfig("centroids of unequal dimension".into()));
        }
        let flat = centroids.into_iter().flatten().collect();
        Ok(Self { k, dim, params: ParamVector::single(CENTROIDS, flat) })
    }

    pub fn from_params(k: usize, dim: usize, params: ParamVector<T>) -> Result<Self> {
        if params.len() != k * dim {
            return Err(Error::LengthMismatch { context: "centroids", expected: k * dim, actual: params.len() });
        }
        Ok(Self { k, dim, params })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ParamVector<T> {
        &self.params
    }

    pub fn centroid(&self, j: usize) -> &[T] {
        &self.params.values()[j * self.dim..(j + 1) * self.dim]
    }

    pub fn centroids(&self) -> Vec<Vec<T>> {
        self.params.values().chunks(self.dim).map(<[T]>::to_vec).collect()
    }

    pub fn dec_objective(&self) -> DecObjective {
        DecObjective { k: self.k, dim: self.dim }
    }
}

/// Student-t kernels `(1 + ||x − μ_j||²)⁻¹` and their normalised shares.
fn kernels<T: Scalar>(x: &[T], centroids: &[T], dim: usize) -> (Vec<T>, Vec<T>) {
    let k: Vec<T> = centroids
        .chunks(dim)
        .map(|mu| T::one() / (T::one() + crate::diffmath::sq_dist(x, mu)))
        .collect();
    let z: T = k.iter().copied().sum();
    let q = k.iter().map(|&kj| kj / z).collect();
    (k, q)
}

// The DEC and NLL losses for one point are both of the form
//   F(μ) = −Σ_j w_j log k_j + W log Σ_j k_j,   W = Σ_j w_j,
// with w the target row (DEC) or a one-hot class indicator (NLL).

fn weighted_loss<T: Scalar>(x: &[T], centroids: &[T], dim: usize, w: &[T]) -> T {
    let (k, _) = kernels(x, centroids, dim);
    let big_w: T = w.iter().copied().sum();
    let z: T = k.iter().copied().sum();
    let mut f = big_w * z.ln();
    for (&wj, &kj) in w.iter().zip(&k) {
        if wj != T::zero() {
            f -= wj * kj.ln();
        }
    }
    f
}

fn add_weighted_grad<T: Scalar>(x: &[T], centroids: &[T], dim: usize, w: &[T], weight: T, out: &mut [T]) {
    let (k, q) = kernels(x, centroids, dim);
    let big_w: T = w.iter().copied().sum();
    for j in 0..k.len() {
        let a = big_w * q[j] - w[j];
        let c = weight * T::two() * k[j] * a;
        let mu = &centroids[j * dim..(j + 1) * dim];
        for m in 0..dim {
            out[j * dim + m] += c * (x[m] - mu[m]);
        }
    }
}

fn add_weighted_hvp<T: Scalar>(
    x: &[T],
    centroids: &[T],
    dim: usize,
    w: &[T],
    v: &[T],
    weight: T,
    out: &mut [T],
) {
    let (k, q) = kernels(x, centroids, dim);
    let big_w: T = w.iter().copied().sum();
    let n = k.len();
    let diff = |j: usize, m: usize| x[m] - centroids[j * dim + m];
    let t: Vec<T> = (0..n)
        .map(|j| k[j] * (0..dim).fold(T::zero(), |acc, m| acc + diff(j, m) * v[j * dim + m]))
        .collect();
    let qt: T = (0..n).fold(T::zero(), |acc, l| acc + q[l] * t[l]);
    let four = T::of(4.0);
    for j in 0..n {
        let a = big_w * q[j] - w[j];
        let along_d = four * a * k[j] * t[j] + four * big_w * k[j] * q[j] * (t[j] - qt);
        let along_v = -T::two() * k[j] * a;
        for m in 0..dim {
            out[j * dim + m] += weight * (along_d * diff(j, m) + along_v * v[j * dim + m]);
        }
    }
}

/// Soft assignments `q_ij ∝ (1 + ||x_i − μ_j||²)⁻¹`, one row per point.
pub fn dec_soft_assign<T: Scalar>(model: &ClusterModel<T>, points: &[LabeledPoint<T>]) -> Vec<Vec<T>> {
    points.iter().map(|p| kernels(&p.x, model.params.values(), model.dim).1).collect()
}

/// Sharpened targets `p_ij ∝ q_ij² / f_j` with `f_j = Σ_i q_ij`.
pub fn dec_target<T: Scalar>(q: &[Vec<T>]) -> Vec<Vec<T>> {
    let Some(first) = q.first() else {
        return Vec::new();
    };
    let k = first.len();
    let f: Vec<T> = (0..k).map(|j| q.iter().map(|row| row[j]).sum()).collect();
    q.iter()
        .map(|row| {
            let raw: Vec<T> = row.iter().zip(&f).map(|(&qij, &fj)| qij * qij / fj).collect();
            let z: T = raw.iter().copied().sum();
            raw.into_iter().map(|r| r / z).collect()
        })
        .collect()
}

/// A point paired with its (fixed) target distribution row.
#[derive(Clone, Debug, PartialEq)]
pub struct DecSample<T> {
    pub x: Vec<T>,
    pub target: Vec<T>,
}

pub fn dec_samples<T: Scalar>(points: &[LabeledPoint<T>], targets: &[Vec<T>]) -> Vec<DecSample<T>> {
    points
        .iter()
        .zip(targets)
        .map(|(p, t)| DecSample { x: p.x.clone(), target: t.clone() })
        .collect()
}

/// Per-point `KL(p_i ‖ q_i)` with the target held constant.
#[derive(Clone, Copy, Debug)]
pub struct DecObjective {
    pub k: usize,
    pub dim: usize,
}

impl DecObjective {
    fn check<T: Scalar>(&self, s: &DecSample<T>) -> Result<()> {
        if s.x.len() != self.dim || s.target.len() != self.k {
            return Err(Error::LengthMismatch { context: "DEC sample", expected: self.dim, actual: s.x.len() });
        }
        Ok(())
    }
}

impl<T: Scalar> Objective<T> for DecObjective {
    type Sample = DecSample<T>;

    fn name(&self) -> &str {
        "dec"
    }

    fn param_len(&self) -> usize {
        self.k * self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, s: &DecSample<T>) -> Result<T> {
        self.check(s)?;
        let entropy_term: T = s
            .target
            .iter()
            .filter(|&&p| p > T::zero())
            .map(|&p| p * p.ln())
            .sum();
        Ok(entropy_term + weighted_loss(&s.x, params.values(), self.dim, &s.target))
    }

    fn add_sample_grad(&self, params: &ParamVector<T>, s: &DecSample<T>, weight: T, out: &mut [T]) -> Result<()> {
        self.check(s)?;
        add_weighted_grad(&s.x, params.values(), self.dim, &s.target, weight, out);
        Ok(())
    }

    fn has_analytic_hvp(&self) -> bool {
        true
    }

    fn add_sample_hvp(
        &self,
        params: &ParamVector<T>,
        s: &DecSample<T>,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.check(s)?;
        add_weighted_hvp(&s.x, params.values(), self.dim, &s.target, v, weight, out);
        Ok(())
    }
}

/// Mean `KL(P ‖ Q)` over the points, `Q` recomputed from the model.
pub fn dec_loss<T: Scalar>(model: &ClusterModel<T>, points: &[LabeledPoint<T>], targets: &[Vec<T>]) -> Result<T> {
    loss_value(&model.dec_objective(), model.params(), &dec_samples(points, targets))
}

/// `−log q_{i, c}` where `c` is the cluster mapped to the point's label.
#[derive(Clone, Debug)]
pub struct NllObjective {
    k: usize,
    dim: usize,
    cluster_of_class: Vec<Option<usize>>,
}

impl NllObjective {
    /// `class_of_cluster[j]` is the class assigned to cluster `j`; must be
    /// injective.
    pub fn new(k: usize, dim: usize, class_of_cluster: &[usize]) -> Result<Self> {
        if class_of_cluster.len() != k {
            return Err(Error::LengthMismatch { context: "class map", expected: k, actual: class_of_cluster.len() });
        }
        let n_classes = class_of_cluster.iter().max().map_or(0, |m| m + 1);
        let mut cluster_of_class = vec![None; n_classes];
        for (j, &c) in class_of_cluster.iter().enumerate() {
            if cluster_of_class[c].replace(j).is_some() {
                return Err(Error::InvalidConfig(format!("class {c} mapped to two clusters")));
            }
        }
        Ok(Self { k, dim, cluster_of_class })
    }

    fn one_hot<T: Scalar>(&self, p: &LabeledPoint<T>) -> Result<Vec<T>> {
        if p.x.len() != self.dim {
            return Err(Error::LengthMismatch { context: "NLL point", expected: self.dim, actual: p.x.len() });
        }
        let j = self
            .cluster_of_class
            .get(p.label)
            .copied()
            .flatten()
            .ok_or(Error::UnmappedLabel(p.label))?;
        let mut w = vec![T::zero(); self.k];
        w[j] = T::one();
        Ok(w)
    }
}

impl<T: Scalar> Objective<T> for NllObjective {
    type Sample = LabeledPoint<T>;

    fn name(&self) -> &str {
        "nll"
    }

    fn param_len(&self) -> usize {
        self.k * self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, p: &LabeledPoint<T>) -> Result<T> {
        let w = self.one_hot(p)?;
        Ok(weighted_loss(&p.x, params.values(), self.dim, &w))
    }

    fn add_sample_grad(&self, params: &ParamVector<T>, p: &LabeledPoint<T>, weight: T, out: &mut [T]) -> Result<()> {
        let w = self.one_hot(p)?;
        add_weighted_grad(&p.x, params.values(), self.dim, &w, weight, out);
        Ok(())
    }

    fn has_analytic_hvp(&self) -> bool {
        true
    }

    fn add_sample_hvp(
        &self,
        params: &ParamVector<T>,
        p: &LabeledPoint<T>,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        let w = self.one_hot(p)?;
        add_weighted_hvp(&p.x, params.values(), self.dim, &w, v, weight, out);
        Ok(())
    }
}

pub fn nll_loss<T: Scalar>(model: &ClusterModel<T>, p: &LabeledPoint<T>, class_of_cluster: &[usize]) -> Result<T> {
    NllObjective::new(model.k, model.dim, class_of_cluster)?.sample_loss(model.params(), p)
}
