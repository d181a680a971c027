use crate::diffmath::objective::Objective;
use crate::diffmath::params::{dot, ParamVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One term `½ θᵀAθ − bᵀθ` with a dense symmetric `A` (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticTerm<T> {
    pub matrix: Vec<T>,
    pub linear: Vec<T>,
}

impl<T: Scalar> QuadraticTerm<T> {
    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut matrix = vec![T::zero(); n * n];
        for (i, &d) in diag.iter().enumerate() {
            matrix[i * n + i] = d;
        }
        Self { matrix, linear: vec![T::zero(); n] }
    }

    pub fn with_linear(mut self, linear: Vec<T>) -> Self {
        self.linear = linear;
        self
    }
}

/// Quadratic objective: the sample type is a [`QuadraticTerm`], so the batch
/// Hessian is the mean of the terms' matrices and is constant in θ.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    dim: usize,
}

impl QuadraticObjective {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    fn check<T: Scalar>(&self, term: &QuadraticTerm<T>) -> Result<()> {
        if term.matrix.len() != self.dim * self.dim || term.linear.len() != self.dim {
            return Err(Error::LengthMismatch {
                context: "quadratic term",
                expected: self.dim * self.dim,
                actual: term.matrix.len(),
            });
        }
        Ok(())
    }

    fn mat_vec<T: Scalar>(&self, m: &[T], x: &[T]) -> Vec<T> {
        m.chunks(self.dim).map(|row| dot(row, x)).collect()
    }
}

impl<T: Scalar> Objective<T> for QuadraticObjective {
    type Sample = QuadraticTerm<T>;

    fn name(&self) -> &str {
        "quadratic"
    }

    fn param_len(&self) -> usize {
        self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, term: &QuadraticTerm<T>) -> Result<T> {
        self.check(term)?;
        let theta = params.values();
        let ax = self.mat_vec(&term.matrix, theta);
        Ok(T::half() * dot(theta, &ax) - dot(&term.linear, theta))
    }

    fn add_sample_grad(
        &self,
        params: &ParamVector<T>,
        term: &QuadraticTerm<T>,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.check(term)?;
        let ax = self.mat_vec(&term.matrix, params.values());
        for ((o, a), b) in out.iter_mut().zip(ax).zip(&term.linear) {
            *o += weight * (a - *b);
        }
        Ok(())
    }

    fn has_analytic_hvp(&self) -> bool {
        true
    }

    fn add_sample_hvp(
        &self,
        _params: &ParamVector<T>,
        term: &QuadraticTerm<T>,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.check(term)?;
        for (o, hv) in out.iter_mut().zip(self.mat_vec(&term.matrix, v)) {
            *o += weight * hv;
        }
        Ok(())
    }
}
