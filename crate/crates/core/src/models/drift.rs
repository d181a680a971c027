use crate::diffmath::{Objective, ParamVector};
use crate::error::{Error, Result};
use crate::models::skipgram::SkipGramModel;
use crate::scalar::Scalar;

/// Mean squared distance between a word's current input row and where it
/// started training. Sample = word id. The gradient lives only on that
/// word's input row.
#[derive(Clone, Debug)]
pub struct MseDriftObjective<T> {
    vocab_size: usize,
    dim: usize,
    initial: Vec<T>,
}

impl<T: Scalar> MseDriftObjective<T> {
    /// `initial` is the input table snapshot taken right after initialisation.
    pub fn new(vocab_size: usize, dim: usize, initial: Vec<T>) -> Result<Self> {
        if initial.len() != vocab_size * dim {
            return Err(Error::LengthMismatch {
                context: "initial table",
                expected: vocab_size * dim,
                actual: initial.len(),
            });
        }
        Ok(Self { vocab_size, dim, initial })
    }

    fn row(&self, word: usize) -> Result<usize> {
        if word >= self.vocab_size {
            return Err(Error::OutOfRange { what: "word", id: word, len: self.vocab_size });
        }
        Ok(word * self.dim)
    }
}

impl<T: Scalar> Objective<T> for MseDriftObjective<T> {
    type Sample = usize;

    fn name(&self) -> &str {
        "mse"
    }

    fn param_len(&self) -> usize {
        2 * self.vocab_size * self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, &word: &usize) -> Result<T> {
        let off = self.row(word)?;
        let cur = &params.values()[off..off + self.dim];
        let init = &self.initial[off..off + self.dim];
        Ok(crate::diffmath::sq_dist(cur, init) / T::of_usize(self.dim))
    }

    fn add_sample_grad(&self, params: &ParamVector<T>, &word: &usize, weight: T, out: &mut [T]) -> Result<()> {
        let off = self.row(word)?;
        let c = weight * T::two() / T::of_usize(self.dim);
        for m in off..off + self.dim {
            out[m] += c * (params.values()[m] - self.initial[m]);
        }
        Ok(())
    }

    fn has_analytic_hvp(&self) -> bool {
        true
    }

    fn add_sample_hvp(&self, _: &ParamVector<T>, &word: &usize, v: &[T], weight: T, out: &mut [T]) -> Result<()> {
        let off = self.row(word)?;
        let c = weight * T::two() / T::of_usize(self.dim);
        for m in off..off + self.dim {
            out[m] += c * v[m];
        }
        Ok(())
    }
}

pub fn mse_drift_loss<T: Scalar>(initial_table: &[T], model: &SkipGramModel<T>, word: &str) -> Result<T> {
    let id = model.vocab().id(word).ok_or_else(|| Error::UnknownWords(vec![word.to_string()]))?;
    let obj = MseDriftObjective::new(model.vocab().len(), model.dim(), initial_table.to_vec())?;
    obj.sample_loss(model.params(), &id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::loss_grad;
    use crate::vocab::Vocab;

    fn model(current: Vec<f64>) -> SkipGramModel<f64> {
        let vocab = Vocab::from_words(["a", "b"]).unwrap();
        SkipGramModel::from_tables(vocab, 4, current, vec![0.0; 8]).unwrap()
    }

    #[test]
    fn untrained_model_has_zero_drift() {
        let init: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
        assert_eq!(mse_drift_loss(&init, &model(init.clone()), "b").unwrap(), 0.0);
    }

    #[test]
    fn unit_drift_on_every_coordinate() {
        let mut cur = vec![0.0; 8];
        cur[4..8].copy_from_slice(&[1.0; 4]);
        let m = model(cur);
        assert_eq!(mse_drift_loss(&[0.0; 8], &m, "b").unwrap(), 1.0);
        assert!(matches!(mse_drift_loss(&[0.0; 8], &m, "zz"), Err(Error::UnknownWords(_))));
    }

    #[test]
    fn gradient_is_scaled_difference_on_one_row() {
        let cur: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let init = vec![0.5; 8];
        let m = model(cur.clone());
        let obj = MseDriftObjective::new(2, 4, init.clone()).unwrap();
        let g = loss_grad(&obj, m.params(), &[1]).unwrap();
        for i in 0..16 {
            let expect = if (4..8).contains(&i) { 0.5 * (cur[i] - init[i]) } else { 0.0 };
            assert_eq!(g.values()[i], expect);
        }
    }
}
