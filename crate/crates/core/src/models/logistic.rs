use crate::diffmath::{dot, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::models::cluster::LabeledPoint;
use crate::scalar::{sigmoid, Scalar};

/// L2-regularised logistic regression on points labelled 0/1. Strictly
/// convex, which makes it the reference model for removal checks.
#[derive(Clone, Copy, Debug)]
pub struct LogisticObjective<T> {
    pub dim: usize,
    pub l2: T,
}

impl<T: Scalar> LogisticObjective<T> {
    fn margin(&self, params: &ParamVector<T>, p: &LabeledPoint<T>) -> Result<(T, T)> {
        if p.x.len() != self.dim {
            return Err(Error::LengthMismatch { context: "logistic point", expected: self.dim, actual: p.x.len() });
        }
        let y = match p.label {
            0 => -T::one(),
            1 => T::one(),
            l => return Err(Error::UnmappedLabel(l)),
        };
        Ok((y, y * dot(params.values(), &p.x)))
    }
}

impl<T: Scalar> Objective<T> for LogisticObjective<T> {
    type Sample = LabeledPoint<T>;

    fn name(&self) -> &str {
        "logistic"
    }

    fn param_len(&self) -> usize {
        self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, p: &LabeledPoint<T>) -> Result<T> {
        let (_, m) = self.margin(params, p)?;
        // log(1 + e^{-m}) without overflow
        let nll = if m > T::zero() { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
        Ok(nll + T::half() * self.l2 * dot(params.values(), params.values()))
    }

    fn add_sample_grad(&self, params: &ParamVector<T>, p: &LabeledPoint<T>, weight: T, out: &mut [T]) -> Result<()> {
        let (y, m) = self.margin(params, p)?;
        let c = -y * sigmoid(-m);
        for ((o, &xi), &ti) in out.iter_mut().zip(&p.x).zip(params.values()) {
            *o += weight * (c * xi + self.l2 * ti);
        }
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
        let (_, m) = self.margin(params, p)?;
        let s = sigmoid(m);
        let c = s * (T::one() - s) * dot(&p.x, v);
        for ((o, &xi), &vi) in out.iter_mut().zip(&p.x).zip(v) {
            *o += weight * (c * xi + self.l2 * vi);
        }
        Ok(())
    }
}
