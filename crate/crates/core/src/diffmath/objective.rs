use crate::diffmath::params::{norm, ParamVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A differentiable per-sample objective over a flat parameter vector.
///
/// Batch quantities are always the *mean* over the batch; an empty batch has
/// loss 0 and a zero gradient. Implementors only provide per-sample
/// contributions, accumulated into a dense output buffer with a weight so
/// that sparse objectives (skip-gram) touch only the rows they use.
pub trait Objective<T: Scalar>: Sync {
    type Sample: Sync;

    fn name(&self) -> &str;

    /// Number of parameters this objective expects.
    fn param_len(&self) -> usize;

    fn sample_loss(&self, params: &ParamVector<T>, sample: &Self::Sample) -> Result<T>;

    /// `out += weight * ∇ loss(sample)`
    fn add_sample_grad(
        &self,
        params: &ParamVector<T>,
        sample: &Self::Sample,
        weight: T,
        out: &mut [T],
    ) -> Result<()>;

    /// Coordinates the objective depends on, when it is restricted to a
    /// subset; `None` means all of them.
    fn param_mask(&self) -> Option<&[bool]> {
        None
    }

    /// Whether [`Objective::add_sample_hvp`] is implemented analytically.
    /// When false, [`hvp`] falls back to central differences of the gradient.
    fn has_analytic_hvp(&self) -> bool {
        false
    }

    /// `out += weight * H(sample) v`
    fn add_sample_hvp(
        &self,
        _params: &ParamVector<T>,
        _sample: &Self::Sample,
        _v: &[T],
        _weight: T,
        _out: &mut [T],
    ) -> Result<()> {
        Err(Error::Unsupported("analytic Hessian-vector product"))
    }
}

impl<T: Scalar, O: Objective<T>> Objective<T> for &O {
    type Sample = O::Sample;

    fn name(&self) -> &str {
        (**self).name()
    }

    fn param_len(&self) -> usize {
        (**self).param_len()
    }

    fn sample_loss(&self, params: &ParamVector<T>, sample: &Self::Sample) -> Result<T> {
        (**self).sample_loss(params, sample)
    }

    fn add_sample_grad(
        &self,
        params: &ParamVector<T>,
        sample: &Self::Sample,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        (**self).add_sample_grad(params, sample, weight, out)
    }

    fn param_mask(&self) -> Option<&[bool]> {
        (**self).param_mask()
    }

    fn has_analytic_hvp(&self) -> bool {
        (**self).has_analytic_hvp()
    }

    fn add_sample_hvp(
        &self,
        params: &ParamVector<T>,
        sample: &Self::Sample,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        (**self).add_sample_hvp(params, sample, v, weight, out)
    }
}

/// Zeroes the coordinates outside `mask`; a no-op for `None`.
pub fn project<T: Scalar>(mask: Option<&[bool]>, buf: &mut [T]) {
    if let Some(mask) = mask {
        for (x, &keep) in buf.iter_mut().zip(mask) {
            if !keep {
                *x = T::zero();
            }
        }
    }
}

fn check_params<T: Scalar, O: Objective<T> + ?Sized>(obj: &O, params: &ParamVector<T>) -> Result<()> {
    if params.len() != obj.param_len() {
        return Err(Error::LengthMismatch {
            context: "objective parameters",
            expected: obj.param_len(),
            actual: params.len(),
        });
    }
    Ok(())
}

/// Mean loss over `batch`; 0 for an empty batch.
pub fn loss_value<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
) -> Result<T> {
    check_params(obj, params)?;
    if batch.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for s in batch {
        total += obj.sample_loss(params, s)?;
    }
    let mean = total / T::of_usize(batch.len());
    if !mean.is_finite() {
        return Err(Error::NonFinite(format!("{} loss", obj.name())));
    }
    Ok(mean)
}

/// Mean gradient over `batch`, laid out like `params`.
pub fn loss_grad<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
) -> Result<ParamVector<T>> {
    check_params(obj, params)?;
    let mut g = params.zeros_like();
    if batch.is_empty() {
        return Ok(g);
    }
    let w = T::one() / T::of_usize(batch.len());
    for s in batch {
        obj.add_sample_grad(params, s, w, g.values_mut())?;
    }
    project(obj.param_mask(), g.values_mut());
    g.finite_or(&format!("{} gradient", obj.name()))
}

/// Mean Hessian-vector product over `batch`.
///
/// Uses the objective's analytic product when it has one, otherwise
/// [`fd_hvp`].
pub fn hvp<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
    v: &ParamVector<T>,
) -> Result<ParamVector<T>> {
    check_params(obj, params)?;
    if v.len() != params.len() {
        return Err(Error::LengthMismatch { context: "hvp direction", expected: params.len(), actual: v.len() });
    }
    if v.norm() == T::zero() {
        return Err(Error::ZeroVector);
    }
    let mut v = v.clone();
    project(obj.param_mask(), v.values_mut());
    if v.norm() == T::zero() {
        return Ok(params.zeros_like());
    }
    if !obj.has_analytic_hvp() {
        return fd_hvp(obj, params, batch, &v);
    }
    let mut out = params.zeros_like();
    if batch.is_empty() {
        return Ok(out);
    }
    let w = T::one() / T::of_usize(batch.len());
    for s in batch {
        obj.add_sample_hvp(params, s, v.values(), w, out.values_mut())?;
    }
    project(obj.param_mask(), out.values_mut());
    out.finite_or(&format!("{} hvp", obj.name()))
}

/// `(g(θ+εv) − g(θ−εv)) / 2ε` with `ε = 1e-4 / ||v||`.
pub fn fd_hvp<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
    v: &ParamVector<T>,
) -> Result<ParamVector<T>> {
    let vn = v.norm();
    if vn == T::zero() {
        return Err(Error::ZeroVector);
    }
    let eps = T::of(1e-4) / vn;
    let mut plus = params.clone();
    plus.axpy(eps, v)?;
    let mut minus = params.clone();
    minus.axpy(-eps, v)?;
    let gp = loss_grad(obj, &plus, batch)?;
    let gm = loss_grad(obj, &minus, batch)?;
    let mut out = gp.sub(&gm)?;
    let inv = T::one() / (T::two() * eps);
    out.values_mut().iter_mut().for_each(|x| *x *= inv);
    out.finite_or(&format!("{} fd hvp", obj.name()))
}

/// Central finite-difference gradient with coordinate step `h`.
pub fn fd_grad<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
    h: T,
) -> Result<ParamVector<T>> {
    let mut out = params.zeros_like();
    let mut probe = params.clone();
    for i in 0..params.len() {
        let orig = probe.values()[i];
        probe.values_mut()[i] = orig + h;
        let fp = loss_value(obj, &probe, batch)?;
        probe.values_mut()[i] = orig - h;
        let fm = loss_value(obj, &probe, batch)?;
        probe.values_mut()[i] = orig;
        out.values_mut()[i] = (fp - fm) / (T::two() * h);
    }
    Ok(out)
}

/// Coordinate-wise relative error between two gradients.
///
/// Each coordinate is compared relative to the larger of its two magnitudes,
/// floored at `1e-3 * max|a|` so that coordinates which are zero up to
/// round-off do not dominate.
pub fn max_relative_error<T: Scalar>(analytic: &[T], numeric: &[T]) -> T {
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = (T::of(1e-3) * scale).max(T::min_positive_value());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(T::zero(), T::max)
}

/// L2 relative error `||a − b|| / max(||a||, ||b||)`; 0 when both vanish.
pub fn relative_l2_error<T: Scalar>(a: &[T], b: &[T]) -> T {
    let diff: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let denom = norm(a).max(norm(b));
    if denom == T::zero() {
        T::zero()
    } else {
        norm(&diff) / denom
    }
}

/// Maximum relative error between the analytic gradient and central
/// differences at step `1e-5`.
pub fn grad_check<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
) -> Result<T> {
    grad_check_with_step(obj, params, batch, T::of(1e-5))
}

pub fn grad_check_with_step<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
    h: T,
) -> Result<T> {
    let a = loss_grad(obj, params, batch)?;
    let n = fd_grad(obj, params, batch, h)?;
    Ok(max_relative_error(a.values(), n.values()))
}

/// Relative L2 error between [`hvp`] and [`fd_hvp`] along `v`.
pub fn hvp_check<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    params: &ParamVector<T>,
    batch: &[O::Sample],
    v: &ParamVector<T>,
) -> Result<T> {
    let a = hvp(obj, params, batch, v)?;
    let n = fd_hvp(obj, params, batch, v)?;
    Ok(relative_l2_error(a.values(), n.values()))
}

/// Treats a list of samples as one sample whose loss is the mean of the
/// members' losses. An empty group contributes zero.
#[derive(Clone, Debug)]
pub struct Grouped<O>(pub O);

impl<T: Scalar, O: Objective<T>> Objective<T> for Grouped<O> {
    type Sample = Vec<O::Sample>;

    fn name(&self) -> &str {
        self.0.name()
    }

    fn param_len(&self) -> usize {
        self.0.param_len()
    }

    fn sample_loss(&self, params: &ParamVector<T>, group: &Self::Sample) -> Result<T> {
        if group.is_empty() {
            return Ok(T::zero());
        }
        let mut total = T::zero();
        for s in group {
            total += self.0.sample_loss(params, s)?;
        }
        Ok(total / T::of_usize(group.len()))
    }

    fn add_sample_grad(
        &self,
        params: &ParamVector<T>,
        group: &Self::Sample,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        if group.is_empty() {
            return Ok(());
        }
        let w = weight / T::of_usize(group.len());
        for s in group {
            self.0.add_sample_grad(params, s, w, out)?;
        }
        Ok(())
    }

    fn param_mask(&self) -> Option<&[bool]> {
        self.0.param_mask()
    }

    fn has_analytic_hvp(&self) -> bool {
        self.0.has_analytic_hvp()
    }

    fn add_sample_hvp(
        &self,
        params: &ParamVector<T>,
        group: &Self::Sample,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        if group.is_empty() {
            return Ok(());
        }
        let w = weight / T::of_usize(group.len());
        for s in group {
            self.0.add_sample_hvp(params, s, v, w, out)?;
        }
        Ok(())
    }
}

/// Restricts an objective to a subset of coordinates: gradients and
/// Hessian-vector products are zero outside the mask, and directions are
/// projected onto it first. The Hessian seen through this adapter is the
/// principal sub-block on the masked coordinates.
///
/// The projection happens once per batch in [`loss_grad`], [`hvp`] and the
/// influence routines (see [`project`]); per-sample contributions pass
/// through unmasked so that sparse objectives stay sparse.
#[derive(Clone, Debug)]
pub struct Masked<O> {
    inner: O,
    mask: Vec<bool>,
}

impl<O> Masked<O> {
    pub fn new<T: Scalar>(inner: O, mask: Vec<bool>) -> Result<Self>
    where
        O: Objective<T>,
    {
        if mask.len() != inner.param_len() {
            return Err(Error::LengthMismatch {
                context: "parameter mask",
                expected: inner.param_len(),
                actual: mask.len(),
            });
        }
        Ok(Self { inner, mask })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

}

impl<T: Scalar, O: Objective<T>> Objective<T> for Masked<O> {
    type Sample = O::Sample;

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn param_len(&self) -> usize {
        self.inner.param_len()
    }

    fn sample_loss(&self, params: &ParamVector<T>, sample: &Self::Sample) -> Result<T> {
        self.inner.sample_loss(params, sample)
    }

    fn add_sample_grad(
        &self,
        params: &ParamVector<T>,
        sample: &Self::Sample,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.inner.add_sample_grad(params, sample, weight, out)
    }

    fn param_mask(&self) -> Option<&[bool]> {
        Some(&self.mask)
    }

    fn has_analytic_hvp(&self) -> bool {
        self.inner.has_analytic_hvp()
    }

    fn add_sample_hvp(
        &self,
        params: &ParamVector<T>,
        sample: &Self::Sample,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.inner.add_sample_hvp(params, sample, v, weight, out)
    }
}
