use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffmath::{dot, loss_grad, loss_value, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};
use crate::vocab::Vocab;

pub const INPUT_TABLE: &str = "input_table";
pub const OUTPUT_TABLE: &str = "output_table";

/// One (center, context, negatives) training tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipGramSample {
    pub center: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

/// Skip-gram embeddings: an input table (the word vectors) and an output
/// table (context vectors), both `|V| × dim`, stored row-major in one
/// [`ParamVector`] with segments `input_table` then `output_table`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkipGramModel<T> {
    vocab: Vocab,
    dim: usize,
    params: ParamVector<T>,
}

impl<T: Scalar> SkipGramModel<T> {
    pub fn zeros(vocab: Vocab, dim: usize) -> Self {
        let n = vocab.len() * dim;
        let params = ParamVector::zeros(&[(INPUT_TABLE, n), (OUTPUT_TABLE, n)]);
        Self { vocab, dim, params }
    }

    pub fn from_tables(vocab: Vocab, dim: usize, input: Vec<T>, output: Vec<T>) -> Result<Self> {
        let n = vocab.len() * dim;
        if input.len() != n || output.len() != n {
            return Err(Error::LengthMismatch {
                context: "embedding tables",
                expected: n,
                actual: input.len().max(output.len()),
            });
        }
        let mut values = input;
        values.extend(output);
        let params = ParamVector::new(values, &[(INPUT_TABLE, n), (OUTPUT_TABLE, n)])?;
        Ok(Self { vocab, dim, params })
    }

    /// Input rows uniform in `[-0.5/dim, 0.5/dim]`, output rows zero.
    pub fn random_init<R: Rng>(vocab: Vocab, dim: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(vocab, dim);
        let bound = 0.5 / dim as f64;
        for x in model.params.segment_mut(INPUT_TABLE).expect("input segment") {
            *x = T::of(rng.random_range(-bound..bound));
        }
        model
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ParamVector<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector<T> {
        &mut self.params
    }

    pub fn set_params(&mut self, params: ParamVector<T>) -> Result<()> {
        if !params.same_layout(&self.params) {
            return Err(Error::LengthMismatch {
                context: "skip-gram parameters",
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }

    pub fn input_table(&self) -> &[T] {
        self.params.segment(INPUT_TABLE).expect("input segment")
    }

    pub fn output_table(&self) -> &[T] {
        self.params.segment(OUTPUT_TABLE).expect("output segment")
    }

    pub fn input_row(&self, id: usize) -> &[T] {
        &self.input_table()[id * self.dim..(id + 1) * self.dim]
    }

    pub fn output_row(&self, id: usize) -> &[T] {
        &self.output_table()[id * self.dim..(id + 1) * self.dim]
    }

    pub fn objective(&self) -> SkipGramObjective {
        SkipGramObjective::new(self.vocab.len(), self.dim)
    }
}

/// Per-tuple skip-gram loss
/// `(mean_{n ∈ negatives} σ(w·n) − σ(w·c)) / 2`
/// with `w` an input row and `c`, `n` output rows.
#[derive(Clone, Copy, Debug)]
pub struct SkipGramObjective {
    vocab_size: usize,
    dim: usize,
}

impl SkipGramObjective {
    pub fn new(vocab_size: usize, dim: usize) -> Self {
        Self { vocab_size, dim }
    }

    fn input_offset(&self, id: usize) -> usize {
        id * self.dim
    }

    fn output_offset(&self, id: usize) -> usize {
        (self.vocab_size + id) * self.dim
    }

    fn validate(&self, s: &SkipGramSample) -> Result<()> {
        if s.negatives.is_empty() {
            return Err(Error::InvalidConfig("skip-gram sample without negatives".into()));
        }
        for &id in std::iter::once(&s.center).chain(std::iter::once(&s.context)).chain(&s.negatives) {
            if id >= self.vocab_size {
                return Err(Error::OutOfRange { what: "word", id, len: self.vocab_size });
            }
        }
        Ok(())
    }

    /// One in-place gradient step `θ ← θ − lr·∇L(s)`, touching only the rows
    /// `s` uses. Returns the loss before the step.
    pub fn sgd_step<T: Scalar>(&self, values: &mut [T], s: &SkipGramSample, lr: T) -> Result<T> {
        self.validate(s)?;
        let d = self.dim;
        let wi = self.input_offset(s.center);
        let mut gw = vec![T::zero(); d];
        let mut scaled: Vec<(usize, T)> = Vec::with_capacity(1 + s.negatives.len());
        let mut loss = T::zero();
        for (u, coef) in Self::terms::<T>(s) {
            let ui = self.output_offset(u);
            let sig = sigmoid(dot(&values[wi..wi + d], &values[ui..ui + d]));
            loss += coef * sig;
            let g = coef * sig * (T::one() - sig);
            for k in 0..d {
                gw[k] += g * values[ui + k];
            }
            scaled.push((ui, g));
        }
        for (ui, g) in scaled {
            for k in 0..d {
                let w = values[wi + k];
                values[ui + k] -= lr * g * w;
            }
        }
        for k in 0..d {
            values[wi + k] -= lr * gw[k];
        }
        Ok(loss)
    }

    /// Output rows paired with the center, with their loss coefficients.
    fn terms<T: Scalar>(s: &SkipGramSample) -> impl Iterator<Item = (usize, T)> + '_ {
        let neg_w = T::half() / T::of_usize(s.negatives.len());
        std::iter::once((s.context, -T::half())).chain(s.negatives.iter().map(move |&n| (n, neg_w)))
    }
}

impl<T: Scalar> Objective<T> for SkipGramObjective {
    type Sample = SkipGramSample;

    fn name(&self) -> &str {
        "skipgram"
    }

    fn param_len(&self) -> usize {
        2 * self.vocab_size * self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, s: &SkipGramSample) -> Result<T> {
        self.validate(s)?;
        let p = params.values();
        let d = self.dim;
        let w = &p[self.input_offset(s.center)..][..d];
        let mut loss = T::zero();
        for (u, coef) in Self::terms::<T>(s) {
            let row = &p[self.output_offset(u)..][..d];
            loss += coef * sigmoid(dot(w, row));
        }
        Ok(loss)
    }

    fn add_sample_grad(
        &self,
        params: &ParamVector<T>,
        s: &SkipGramSample,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.validate(s)?;
        let p = params.values();
        let d = self.dim;
        let wi = self.input_offset(s.center);
        for (u, coef) in Self::terms::<T>(s) {
            let ui = self.output_offset(u);
            let sig = sigmoid(dot(&p[wi..wi + d], &p[ui..ui + d]));
            let g = weight * coef * sig * (T::one() - sig);
            for k in 0..d {
                out[wi + k] += g * p[ui + k];
                out[ui + k] += g * p[wi + k];
            }
        }
        Ok(())
    }

    fn has_analytic_hvp(&self) -> bool {
        true
    }

    fn add_sample_hvp(
        &self,
        params: &ParamVector<T>,
        s: &SkipGramSample,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.validate(s)?;
        let p = params.values();
        let d = self.dim;
        let wi = self.input_offset(s.center);
        for (u, coef) in Self::terms::<T>(s) {
            let ui = self.output_offset(u);
            let sig = sigmoid(dot(&p[wi..wi + d], &p[ui..ui + d]));
            let d1 = sig * (T::one() - sig);
            let d2 = d1 * (T::one() - T::two() * sig);
            let t = dot(&v[wi..wi + d], &p[ui..ui + d]) + dot(&p[wi..wi + d], &v[ui..ui + d]);
            let a = weight * coef;
            for k in 0..d {
                out[wi + k] += a * (d2 * t * p[ui + k] + d1 * v[ui + k]);
                out[ui + k] += a * (d2 * t * p[wi + k] + d1 * v[wi + k]);
            }
        }
        Ok(())
    }
}

pub fn skipgram_loss<T: Scalar>(model: &SkipGramModel<T>, s: &SkipGramSample) -> Result<T> {
    model.objective().sample_loss(model.params(), s)
}

pub fn skipgram_grad<T: Scalar>(model: &SkipGramModel<T>, s: &SkipGramSample) -> Result<ParamVector<T>> {
    loss_grad(&model.objective(), model.params(), std::slice::from_ref(s))
}

/// Mean skip-gram loss over a list of tuples.
pub fn skipgram_batch_loss<T: Scalar>(model: &SkipGramModel<T>, batch: &[SkipGramSample]) -> Result<T> {
    loss_value(&model.objective(), model.params(), batch)
}
