//! Cross-loss influence engine.
//!
//! The influence of upweighting a training sample `z` on a test objective
//! `L′` is `dL′/dε = −∇L′(θ̂)ᵀ (H + λI)⁻¹ ∇L(z, θ̂)`, where `H` and `∇L` come
//! from the *training* objective. Nothing requires `L′` to be the training
//! loss: the test side only contributes a gradient.
//!
//! Sign convention: a positive score means upweighting `z` increases the test
//! loss (amplifying); a negative score means it decreases it (mitigating).

mod linalg;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffmath::{loss_grad, project, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use linalg::Cholesky;

/// Largest parameter count the explicit-Hessian solver accepts.
pub const DIRECT_SOLVE_MAX_PARAMS: usize = 2_000;

/// Stochastic inverse-HVP settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LissaConfig {
    /// Recursion depth `T`.
    pub depth: usize,
    pub damping: f64,
    /// Scale `c`; must dominate the largest eigenvalue of `H + λI`.
    pub scale: f64,
    pub repeats: usize,
    /// Samples per Hessian estimate; at or above the dataset size the full
    /// dataset is used every step.
    pub batch_size: usize,
    pub seed: u64,
}

impl LissaConfig {
    pub fn new(seed: u64) -> Self {
        Self { depth: 5_000, damping: 0.01, scale: 10.0, repeats: 4, batch_size: 8, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.repeats == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("LiSSA depth, repeats and batch size must be >= 1".into()));
        }
        if !(self.scale > 0.0) || !(self.damping >= 0.0) {
            return Err(Error::InvalidConfig("LiSSA needs scale > 0 and damping >= 0".into()));
        }
        Ok(())
    }
}

/// How `(H + λI)⁻¹ v` is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IhvpSolver {
    Direct { damping: f64 },
    Lissa(LissaConfig),
}

/// Mean Hessian-vector product over `dataset[indices]` (or the whole dataset).
fn subset_hvp<T: Scalar, O: Objective<T>>(
    obj: &O,
    params: &ParamVector<T>,
    dataset: &[O::Sample],
    indices: Option<&[usize]>,
    v: &ParamVector<T>,
) -> Result<ParamVector<T>> {
    let count = indices.map_or(dataset.len(), <[usize]>::len);
    let mut out = params.zeros_like();
    if count == 0 {
        return Ok(out);
    }
    let mask = obj.param_mask();
    let mut projected;
    let v = if mask.is_some() {
        projected = v.clone();
        project(mask, projected.values_mut());
        &projected
    } else {
        v
    };
    let w = T::one() / T::of_usize(count);
    let each = |f: &mut dyn FnMut(&O::Sample) -> Result<()>| -> Result<()> {
        match indices {
            Some(idx) => idx.iter().try_for_each(|&i| f(&dataset[i])),
            None => dataset.iter().try_for_each(|s| f(s)),
        }
    };
    if obj.has_analytic_hvp() {
        let buf = out.values_mut();
        each(&mut |s| obj.add_sample_hvp(params, s, v.values(), w, buf))?;
    } else {
        let vn = v.norm();
        if vn == T::zero() {
            return Ok(out);
        }
        let eps = T::of(1e-4) / vn;
        let mut plus = params.clone();
        plus.axpy(eps, v)?;
        let mut minus = params.clone();
        minus.axpy(-eps, v)?;
        let scale = w / (T::two() * eps);
        let buf = out.values_mut();
        each(&mut |s| {
            obj.add_sample_grad(&plus, s, scale, buf)?;
            obj.add_sample_grad(&minus, s, -scale, buf)
        })?;
    }
    project(mask, out.values_mut());
    out.finite_or(&format!("{} hvp", obj.name()))
}

/// Explicit batch-mean Hessian, assembled column by column from HVPs and
/// symmetrised. Row-major `n × n`.
pub fn hessian_matrix<T: Scalar, O: Objective<T>>(
    obj: &O,
    params: &ParamVector<T>,
    dataset: &[O::Sample],
) -> Result<Vec<T>> {
    let n = params.len();
    if n > DIRECT_SOLVE_MAX_PARAMS {
        return Err(Error::InvalidConfig(format!(
            "direct solve limited to {DIRECT_SOLVE_MAX_PARAMS} parameters, model has {n}"
        )));
    }
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| subset_hvp(obj, params, dataset, None, &params.basis(i)).map(ParamVector::into_values))
        .collect::<Result<_>>()?;
    let mut h = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = T::half() * (columns[j][i] + columns[i][j]);
        }
    }
    Ok(h)
}

/// Factored `H + λI` for repeated exact solves. For a masked objective only
/// the sub-block on the active coordinates is assembled, and solutions are
/// zero elsewhere.
#[derive(Clone, Debug)]
pub struct DirectSolver<T> {
    template: ParamVector<T>,
    active: Vec<usize>,
    factor: Cholesky<T>,
}

impl<T: Scalar> DirectSolver<T> {
    pub fn new<O: Objective<T>>(obj: &O, params: &ParamVector<T>, dataset: &[O::Sample], damping: T) -> Result<Self> {
        let active: Vec<usize> = match obj.param_mask() {
            Some(mask) => mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect(),
            None => (0..params.len()).collect(),
        };
        let m = active.len();
        if m > DIRECT_SOLVE_MAX_PARAMS {
            return Err(Error::InvalidConfig(format!(
                "direct solve limited to {DIRECT_SOLVE_MAX_PARAMS} parameters, model has {m}"
            )));
        }
        let columns: Vec<Vec<T>> = active
            .par_iter()
            .map(|&i| {
                let col = subset_hvp(obj, params, dataset, None, &params.basis(i))?;
                Ok(active.iter().map(|&r| col.values()[r]).collect())
            })
            .collect::<Result<_>>()?;
        let mut h = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                h[i * m + j] = T::half() * (columns[j][i] + columns[i][j]);
            }
            h[i * m + i] += damping;
        }
        let factor = Cholesky::factor(&h, m)?;
        Ok(Self { template: params.zeros_like(), active, factor })
    }

    pub fn solve(&self, v: &ParamVector<T>) -> Result<ParamVector<T>> {
        if v.len() != self.template.len() {
            return Err(Error::LengthMismatch { context: "direct solve", expected: self.template.len(), actual: v.len() });
        }
        let rhs: Vec<T> = self.active.iter().map(|&i| v.values()[i]).collect();
        let mut out = self.template.clone();
        for (&i, x) in self.active.iter().zip(self.factor.solve(&rhs)) {
            out.values_mut()[i] = x;
        }
        out.finite_or("direct solve")
    }
}

pub fn ihvp_direct<T: Scalar, O: Objective<T>>(
    obj: &O,
    params: &ParamVector<T>,
    dataset: &[O::Sample],
    v: &ParamVector<T>,
    damping: T,
) -> Result<ParamVector<T>> {
    DirectSolver::new(obj, params, dataset, damping)?.solve(v)
}

/// Stochastic estimate of `(H + λI)⁻¹ v`.
///
/// Each repeat runs `h₀ = v`, `h_t = v + h_{t−1} − (H_b + λI) h_{t−1} / c`
/// with `H_b` the HVP on a uniformly drawn batch, and contributes `h_T / c`;
/// the estimate is the mean over repeats. Repeat `r` draws from its own
/// ChaCha stream of the configured seed.
pub fn ihvp_lissa<T: Scalar, O: Objective<T>>(
    obj: &O,
    params: &ParamVector<T>,
    dataset: &[O::Sample],
    v: &ParamVector<T>,
    cfg: &LissaConfig,
) -> Result<ParamVector<T>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("LiSSA needs a non-empty dataset".into()));
    }
    let v_norm = v.norm();
    if v_norm == T::zero() {
        return Ok(v.zeros_like());
    }
    let damping = T::of(cfg.damping);
    let inv_scale = T::one() / T::of(cfg.scale);
    let limit = T::of(1e6) * v_norm;
    let full_batch = cfg.batch_size >= dataset.len();

    let run = |repeat: usize| -> Result<ParamVector<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(repeat as u64);
        let mut idx = vec![0usize; cfg.batch_size];
        let mut h = v.clone();
        for step in 1..=cfg.depth {
            let hv = if full_batch {
                subset_hvp(obj, params, dataset, None, &h)?
            } else {
                idx.iter_mut().for_each(|i| *i = rng.random_range(0..dataset.len()));
                subset_hvp(obj, params, dataset, Some(&idx), &h)?
            };
            let mut next = v.clone();
            for ((n, &hi), &hvi) in next.values_mut().iter_mut().zip(h.values()).zip(hv.values()) {
                *n += hi - (hvi + damping * hi) * inv_scale;
            }
            h = next;
            let norm = h.norm();
            if !(norm <= limit) {
                return Err(Error::Divergence { step, norm: norm.to_f64_lossy() });
            }
        }
        Ok(h.scaled(inv_scale))
    };

    let runs: Vec<ParamVector<T>> = (0..cfg.repeats).into_par_iter().map(run).collect::<Result<_>>()?;
    let mut total = v.zeros_like();
    for r in &runs {
        total.axpy(T::one(), r)?;
    }
    total.scaled(T::one() / T::of_usize(cfg.repeats)).finite_or("lissa")
}

/// Solves with whichever solver is configured.
pub fn ihvp<T: Scalar, O: Objective<T>>(
    obj: &O,
    params: &ParamVector<T>,
    dataset: &[O::Sample],
    v: &ParamVector<T>,
    solver: &IhvpSolver,
) -> Result<ParamVector<T>> {
    match solver {
        IhvpSolver::Direct { damping } => {
            if v.norm() == T::zero() {
                return Ok(v.zeros_like());
            }
            ihvp_direct(obj, params, dataset, v, T::of(*damping))
        }
        IhvpSolver::Lissa(cfg) => ihvp_lissa(obj, params, dataset, v, cfg),
    }
}

/// `s = (H_train + λI)⁻¹ ∇L′(test_batch)`, computed once and reused for
/// every training sample.
pub fn stest<T, Te, Tr>(
    test_obj: &Te,
    test_batch: &[Te::Sample],
    train_obj: &Tr,
    params: &ParamVector<T>,
    dataset: &[Tr::Sample],
    solver: &IhvpSolver,
) -> Result<ParamVector<T>>
where
    T: Scalar,
    Te: Objective<T>,
    Tr: Objective<T>,
{
    let g = loss_grad(test_obj, params, test_batch)?;
    ihvp(train_obj, params, dataset, &g, solver)
}

/// `dL′/dε` for upweighting `z`: `−⟨s, ∇L_train(z)⟩`.
pub fn score_sample<T: Scalar, O: Objective<T>>(
    s: &ParamVector<T>,
    train_obj: &O,
    params: &ParamVector<T>,
    z: &O::Sample,
) -> Result<T> {
    let mut g = vec![T::zero(); params.len()];
    train_obj.add_sample_grad(params, z, T::one(), &mut g)?;
    project(train_obj.param_mask(), &mut g);
    let score = -crate::diffmath::dot(s.values(), &g);
    if !score.is_finite() {
        return Err(Error::NonFinite("influence score".into()));
    }
    Ok(score)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRecord<T> {
    pub sample_id: usize,
    pub score: T,
}

/// Scores every training sample against one `s`. Runs in parallel; the
/// output is ordered by sample id.
pub fn score_all<T: Scalar, O: Objective<T>>(
    s: &ParamVector<T>,
    train_obj: &O,
    params: &ParamVector<T>,
    dataset: &[O::Sample],
) -> Result<Vec<InfluenceRecord<T>>> {
    dataset
        .par_iter()
        .enumerate()
        .map(|(sample_id, z)| Ok(InfluenceRecord { sample_id, score: score_sample(s, train_obj, params, z)? }))
        .collect()
}

/// Amplifying and mitigating sample ids, most extreme first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfluenceSets {
    pub amplifying: Vec<usize>,
    pub mitigating: Vec<usize>,
}

/// Sorts records by descending score, ties by ascending id.
pub fn rank<T: Scalar>(records: &[InfluenceRecord<T>]) -> Vec<InfluenceRecord<T>> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.sample_id.cmp(&b.sample_id))
    });
    sorted
}

/// Top `k_amplify` strictly positive scores (descending) and top `k_mitigate`
/// strictly negative scores (ascending). Ties go to the lower sample id.
pub fn rank_and_split<T: Scalar>(records: &[InfluenceRecord<T>], k_amplify: usize, k_mitigate: usize) -> InfluenceSets {
    let sorted = rank(records);
    let amplifying: Vec<usize> = sorted
        .iter()
        .filter(|r| r.score > T::zero())
        .take(k_amplify)
        .map(|r| r.sample_id)
        .collect();
    let mut negatives: Vec<&InfluenceRecord<T>> = sorted.iter().filter(|r| r.score < T::zero()).collect();
    negatives.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.sample_id.cmp(&b.sample_id))
    });
    let mitigating: Vec<usize> = negatives.iter().take(k_mitigate).map(|r| r.sample_id).collect();
    if amplifying.len() < k_amplify {
        warn!("only {} amplifying samples (requested {k_amplify})", amplifying.len());
    }
    if mitigating.len() < k_mitigate {
        warn!("only {} mitigating samples (requested {k_mitigate})", mitigating.len());
    }
    InfluenceSets { amplifying, mitigating }
}

/// Predicted change in the test loss if the sample were removed
/// (`ε = −1/N`): `−score / N`.
pub fn predict_removal_delta<T: Scalar>(score: T, n: usize) -> T {
    -score / T::of_usize(n)
}

/// Mask selecting both table rows of the given words in a skip-gram
/// parameter vector (`input_table` then `output_table`), for restricting
/// the Hessian to a vocabulary subset.
pub fn word_row_mask(vocab_size: usize, dim: usize, words: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; 2 * vocab_size * dim];
    for &w in words {
        for table in 0..2 {
            let off = (table * vocab_size + w) * dim;
            mask[off..off + dim].iter_mut().for_each(|m| *m = true);
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::{hvp, QuadraticObjective, QuadraticTerm};

    fn quad() -> (QuadraticObjective, ParamVector<f64>, Vec<QuadraticTerm<f64>>) {
        (
            QuadraticObjective::new(2),
            ParamVector::single("theta", vec![0.0, 0.0]),
            vec![QuadraticTerm::diagonal(&[2.0, 4.0])],
        )
    }

    #[test]
    fn masked_direct_solve_uses_the_sub_block() {
        let obj = QuadraticObjective::new(2);
        let theta = ParamVector::single("theta", vec![0.0, 0.0]);
        let mut term = QuadraticTerm::<f64>::diagonal(&[2.0, 4.0]);
        term.matrix[1] = 1.0;
        term.matrix[2] = 1.0;
        let masked = crate::diffmath::Masked::new::<f64>(obj, vec![true, false]).unwrap();
        let v = ParamVector::single("theta", vec![1.0, 0.0]);
        let x = ihvp_direct(&masked, &theta, &[term], &v, 0.5).unwrap();
        assert!((x.values()[0] - 1.0_f64 / 2.5).abs() < 1e-15);
        assert_eq!(x.values()[1], 0.0);
    }

    #[test]
    fn direct_solve_of_diagonal_system() {
        let (obj, theta, data) = quad();
        let v = ParamVector::single("theta", vec![1.0, 1.0]);
        let x = ihvp_direct(&obj, &theta, &data, &v, 0.0).unwrap();
        assert!((x.values()[0] - 0.5).abs() < 1e-15 && (x.values()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn heavy_damping_approaches_scaled_identity() {
        let (obj, theta, data) = quad();
        let v = ParamVector::single("theta", vec![1.0, -2.0]);
        let lambda = 1e8;
        let x = ihvp_direct(&obj, &theta, &data, &v, lambda).unwrap();
        for (xi, vi) in x.values().iter().zip(v.values()) {
            assert!((xi * lambda - vi).abs() < 1e-6);
        }
    }

    #[test]
    fn indefinite_hessian_fails_to_factor() {
        let obj = QuadraticObjective::new(2);
        let theta = ParamVector::single("theta", vec![0.0, 0.0]);
        let data = vec![QuadraticTerm::diagonal(&[1.0, -1.0])];
        let v = ParamVector::single("theta", vec![1.0, 1.0]);
        assert!(matches!(ihvp_direct(&obj, &theta, &data, &v, 0.5), Err(Error::Factorization { .. })));
        assert!(ihvp_direct(&obj, &theta, &data, &v, 2.0).is_ok());
    }

    #[test]
    fn lissa_full_batch_converges_on_quadratic() {
        let (obj, theta, data) = quad();
        let v = ParamVector::single("theta", vec![1.0, 1.0]);
        let cfg = LissaConfig { depth: 500, damping: 0.0, scale: 8.0, repeats: 1, batch_size: 8, seed: 1 };
        let x = ihvp_lissa(&obj, &theta, &data, &v, &cfg).unwrap();
        assert!((x.values()[0] - 0.5).abs() < 1e-3 && (x.values()[1] - 0.25).abs() < 1e-3);
    }

    #[test]
    fn lissa_zero_vector_is_exact_zero() {
        let (obj, theta, data) = quad();
        let v = theta.zeros_like();
        let x = ihvp_lissa(&obj, &theta, &data, &v, &LissaConfig::new(3)).unwrap();
        assert!(x.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lissa_divergence_is_reported() {
        let (obj, theta, data) = quad();
        let v = ParamVector::single("theta", vec![1.0, 1.0]);
        let cfg = LissaConfig { depth: 500, damping: 0.0, scale: 1.0, repeats: 1, batch_size: 1, seed: 1 };
        assert!(matches!(ihvp_lissa(&obj, &theta, &data, &v, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn lissa_is_deterministic_per_seed() {
        let obj = QuadraticObjective::new(2);
        let theta = ParamVector::single("theta", vec![0.0, 0.0]);
        let data: Vec<_> = (1..6).map(|i| QuadraticTerm::diagonal(&[i as f64, 6.0 - i as f64])).collect();
        let v = ParamVector::single("theta", vec![1.0, 1.0]);
        let cfg = LissaConfig { depth: 200, damping: 0.01, scale: 10.0, repeats: 3, batch_size: 2, seed: 9 };
        let a = ihvp_lissa(&obj, &theta, &data, &v, &cfg).unwrap();
        let b = ihvp_lissa(&obj, &theta, &data, &v, &cfg).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn score_of_explicit_quadratic_example() {
        // H = diag(2,4), test gradient (1,1), training gradient (1,0).
        let (obj, _, data) = quad();
        let theta = ParamVector::single("theta", vec![0.0, 0.0]);
        let g_test = ParamVector::single("theta", vec![1.0, 1.0]);
        let s = ihvp_direct(&obj, &theta, &data, &g_test, 0.0).unwrap();
        // a term whose gradient at θ = 0 is (1, 0): linear part b = (−1, 0)
        let z = QuadraticTerm::diagonal(&[0.0, 0.0]).with_linear(vec![-1.0, 0.0]);
        let score = score_sample(&s, &obj, &theta, &z).unwrap();
        assert!((score + 0.5).abs() < 1e-15, "{score}");
        let flat = QuadraticTerm::diagonal(&[0.0, 0.0]);
        assert_eq!(score_sample(&s, &obj, &theta, &flat).unwrap(), 0.0);
    }

    #[test]
    fn identity_hessian_reduces_to_gradient_dot_product() {
        let obj = QuadraticObjective::new(3);
        let theta = ParamVector::single("theta", vec![0.2f64, -0.1, 0.4]);
        let data = vec![QuadraticTerm::diagonal(&[1.0, 1.0, 1.0])];
        let g_test = ParamVector::single("theta", vec![0.3, 1.0, -2.0]);
        let s = ihvp_direct(&obj, &theta, &data, &g_test, 0.0).unwrap();
        let z = QuadraticTerm::diagonal(&[0.5, 0.0, 2.0]).with_linear(vec![1.0, 0.0, -1.0]);
        let g_train = loss_grad(&obj, &theta, std::slice::from_ref(&z)).unwrap();
        let expect = -g_test.dot(&g_train).unwrap();
        assert!((score_sample(&s, &obj, &theta, &z).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn zero_test_gradient_gives_zero_stest() {
        let (obj, theta, data) = quad();
        let flat = QuadraticObjective::new(2);
        let test = vec![QuadraticTerm::diagonal(&[0.0, 0.0])];
        for solver in [IhvpSolver::Direct { damping: 0.0 }, IhvpSolver::Lissa(LissaConfig::new(1))] {
            let s = stest(&flat, &test, &obj, &theta, &data, &solver).unwrap();
            assert!(s.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn rank_and_split_examples() {
        let recs: Vec<InfluenceRecord<f64>> = [3.0, -1.0, 2.0, -5.0]
            .iter()
            .enumerate()
            .map(|(i, &score)| InfluenceRecord { sample_id: i, score })
            .collect();
        let sets = rank_and_split(&recs, 1, 1);
        assert_eq!(sets.amplifying, vec![0]);
        assert_eq!(sets.mitigating, vec![3]);
        let sets = rank_and_split(&recs, 5, 5);
        assert_eq!(sets.amplifying, vec![0, 2]);
        assert_eq!(sets.mitigating, vec![3, 1]);

        let zeros: Vec<_> = (0..4).map(|i| InfluenceRecord { sample_id: i, score: 0.0 }).collect();
        assert_eq!(rank_and_split(&zeros, 2, 2), InfluenceSets::default());

        let ties: Vec<_> = [1.0, 1.0, -1.0, -1.0]
            .iter()
            .enumerate()
            .map(|(i, &score)| InfluenceRecord { sample_id: i, score })
            .collect();
        let sets = rank_and_split(&ties, 1, 1);
        assert_eq!((sets.amplifying[0], sets.mitigating[0]), (0, 2));
    }

    #[test]
    fn removal_prediction() {
        assert_eq!(predict_removal_delta(0.0, 10), 0.0);
        assert!((predict_removal_delta(2.0f64, 100) + 0.02).abs() < 1e-15);
    }

    #[test]
    fn direct_hessian_matches_hvp() {
        let (obj, theta, data) = quad();
        let h = hessian_matrix(&obj, &theta, &data).unwrap();
        assert_eq!(h, vec![2.0, 0.0, 0.0, 4.0]);
        let v = ParamVector::single("theta", vec![0.3, 0.7]);
        let hv = hvp(&obj, &theta, &data, &v).unwrap();
        assert!((hv.values()[1] - 2.8).abs() < 1e-15);
    }
}
