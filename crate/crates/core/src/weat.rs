//! Word Embedding Association Test: per-word association, effect size, the
//! absolute-effect test objective and the one-sided variant.
//!
//! All computations read the *input* table of a skip-gram model; gradients
//! on the output table are zero.

use std::collections::HashSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::diffmath::{dot, norm, Objective, ParamVector};
use crate::error::{Error, Result};
use crate::models::SkipGramModel;
use crate::scalar::Scalar;
use crate::vocab::Vocab;

/// Two target sets and two attribute sets, as words.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatSpec {
    pub name: String,
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "Y")]
    pub y: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
}

impl WeatSpec {
    /// Lowercases every list, warns about duplicates and checks the set
    /// invariants (non-empty lists, disjoint targets, disjoint attributes).
    pub fn new(name: &str, x: &[&str], y: &[&str], a: &[&str], b: &[&str]) -> Result<Self> {
        let own = |l: &[&str]| l.iter().map(|s| s.to_string()).collect();
        Self { name: name.to_string(), x: own(x), y: own(y), a: own(a), b: own(b) }.normalized()
    }

    pub fn normalized(mut self) -> Result<Self> {
        for (label, list) in [("X", &mut self.x), ("Y", &mut self.y), ("A", &mut self.a), ("B", &mut self.b)] {
            if list.is_empty() {
                return Err(Error::InvalidConfig(format!("WEAT '{}': list {label} is empty", self.name)));
            }
            list.iter_mut().for_each(|w| *w = w.to_lowercase());
            let mut seen = HashSet::new();
            for w in list.iter() {
                if !seen.insert(w.as_str()) {
                    warn!("WEAT '{}': duplicate word '{w}' in {label}; kept", self.name);
                }
            }
        }
        let disjoint = |p: &[String], q: &[String]| !p.iter().any(|w| q.contains(w));
        if !disjoint(&self.x, &self.y) {
            return Err(Error::InvalidConfig(format!("WEAT '{}': X and Y overlap", self.name)));
        }
        if !disjoint(&self.a, &self.b) {
            return Err(Error::InvalidConfig(format!("WEAT '{}': A and B overlap", self.name)));
        }
        Ok(self)
    }

    /// Resolves every word to its id; unknown words are an error listing all
    /// of them.
    pub fn resolve(&self, vocab: &Vocab) -> Result<WeatIds> {
        let mut missing = Vec::new();
        let mut look = |list: &[String]| match vocab.ids_of(list) {
            Ok(ids) => ids,
            Err(Error::UnknownWords(w)) => {
                missing.extend(w);
                Vec::new()
            }
            Err(_) => unreachable!("ids_of only reports unknown words"),
        };
        let ids = WeatIds { x: look(&self.x), y: look(&self.y), a: look(&self.a), b: look(&self.b) };
        if missing.is_empty() {
            Ok(ids)
        } else {
            Err(Error::UnknownWords(missing))
        }
    }

    /// Drops out-of-vocabulary words with a warning; fails only if a list
    /// ends up empty.
    pub fn resolve_skipping_oov(&self, vocab: &Vocab) -> Result<WeatIds> {
        let keep = |label: &str, list: &[String]| -> Result<Vec<usize>> {
            let ids: Vec<usize> = list
                .iter()
                .filter_map(|w| {
                    let id = vocab.id(w);
                    if id.is_none() {
                        warn!("WEAT '{}': dropping out-of-vocabulary word '{w}' from {label}", self.name);
                    }
                    id
                })
                .collect();
            if ids.is_empty() {
                return Err(Error::InvalidConfig(format!("WEAT '{}': no {label} word in vocabulary", self.name)));
            }
            Ok(ids)
        };
        Ok(WeatIds { x: keep("X", &self.x)?, y: keep("Y", &self.y)?, a: keep("A", &self.a)?, b: keep("B", &self.b)? })
    }
}

/// A [`WeatSpec`] resolved to vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeatIds {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeatResult<T> {
    pub effect: T,
    /// `s(w, A, B)` for every target word, X first then Y.
    pub associations: Vec<(String, T)>,
    pub mean_x: T,
    pub mean_y: T,
    pub pooled_std: T,
    /// Set when the pooled standard deviation is zero and the effect was
    /// defined as 0.
    pub degenerate: bool,
}

/// Read-only view of an embedding table (`len × dim`, row-major).
#[derive(Clone, Copy, Debug)]
pub struct WordTable<'a, T> {
    pub vocab: &'a Vocab,
    pub dim: usize,
    pub rows: &'a [T],
}

impl<'a, T: Scalar> WordTable<'a, T> {
    pub fn input_of(model: &'a SkipGramModel<T>) -> Self {
        Self { vocab: model.vocab(), dim: model.dim(), rows: model.input_table() }
    }

    fn row(&self, id: usize) -> &'a [T] {
        &self.rows[id * self.dim..(id + 1) * self.dim]
    }

    fn checked_norm(&self, id: usize) -> Result<T> {
        let n = norm(self.row(id));
        if n == T::zero() {
            return Err(Error::ZeroNorm(self.vocab.word(id).unwrap_or("?").to_string()));
        }
        Ok(n)
    }

    fn cos(&self, u: usize, v: usize) -> Result<T> {
        Ok(dot(self.row(u), self.row(v)) / (self.checked_norm(u)? * self.checked_norm(v)?))
    }

    fn mean_cos(&self, w: usize, set: &[usize]) -> Result<T> {
        let mut total = T::zero();
        for &a in set {
            total += self.cos(w, a)?;
        }
        Ok(total / T::of_usize(set.len()))
    }

    fn assoc(&self, w: usize, a: &[usize], b: &[usize]) -> Result<T> {
        Ok(self.mean_cos(w, a)? - self.mean_cos(w, b)?)
    }
}

fn words_to_ids<T: Scalar>(table: &WordTable<'_, T>, words: &[String]) -> Result<Vec<usize>> {
    table.vocab.ids_of(words)
}

/// `s(w, A, B) = mean_a cos(w, a) − mean_b cos(w, b)`.
pub fn association<T: Scalar>(word: &str, a: &[String], b: &[String], table: &WordTable<'_, T>) -> Result<T> {
    let w = words_to_ids(table, &[word.to_string()])?[0];
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig("empty attribute set".into()));
    }
    table.assoc(w, &words_to_ids(table, a)?, &words_to_ids(table, b)?)
}

/// Standardised difference of mean scores between two target groups.
/// Returns `(effect, mean_x, mean_y, std, degenerate)`.
fn standardized<T: Scalar>(sx: &[T], sy: &[T]) -> (T, T, T, T, bool) {
    // X and Y are summed separately so that swapping them negates the
    // effect bit for bit.
    let sum = |v: &[T]| v.iter().copied().sum::<T>();
    let n = T::of_usize(sx.len() + sy.len());
    let mx = sum(sx) / T::of_usize(sx.len());
    let my = sum(sy) / T::of_usize(sy.len());
    let m = (sum(sx) + sum(sy)) / n;
    let sq = |v: &[T]| v.iter().map(|&s| (s - m) * (s - m)).sum::<T>();
    let std = ((sq(sx) + sq(sy)) / n).sqrt();
    if std == T::zero() {
        (T::zero(), mx, my, std, true)
    } else {
        ((mx - my) / std, mx, my, std, false)
    }
}

fn effect_of_ids<T: Scalar>(ids: &WeatIds, table: &WordTable<'_, T>) -> Result<(Vec<T>, Vec<T>, (T, T, T, T, bool))> {
    let sx = ids.x.iter().map(|&w| table.assoc(w, &ids.a, &ids.b)).collect::<Result<Vec<_>>>()?;
    let sy = ids.y.iter().map(|&w| table.assoc(w, &ids.a, &ids.b)).collect::<Result<Vec<_>>>()?;
    let stats = standardized(&sx, &sy);
    Ok((sx, sy, stats))
}

fn build_result<T: Scalar>(ids_x: &[usize], ids_y: &[usize], table: &WordTable<'_, T>, sx: Vec<T>, sy: Vec<T>, stats: (T, T, T, T, bool)) -> WeatResult<T> {
    let (effect, mean_x, mean_y, pooled_std, degenerate) = stats;
    let associations = ids_x
        .iter()
        .chain(ids_y)
        .zip(sx.into_iter().chain(sy))
        .map(|(&id, s)| (table.vocab.word(id).unwrap_or("?").to_string(), s))
        .collect();
    WeatResult { effect, associations, mean_x, mean_y, pooled_std, degenerate }
}

/// Effect size over the standard WEAT definition; the denominator is the
/// population standard deviation of `s` over `X ∪ Y`.
pub fn weat_effect<T: Scalar>(spec: &WeatSpec, table: &WordTable<'_, T>) -> Result<WeatResult<T>> {
    let ids = spec.resolve(table.vocab)?;
    weat_effect_ids(&ids, table)
}

pub fn weat_effect_ids<T: Scalar>(ids: &WeatIds, table: &WordTable<'_, T>) -> Result<WeatResult<T>> {
    let (sx, sy, stats) = effect_of_ids(ids, table)?;
    Ok(build_result(&ids.x, &ids.y, table, sx, sy, stats))
}

/// One-sided test: `s′(w) = mean_a cos(w, a)` standardised the same way.
pub fn one_sided_weat<T: Scalar>(x: &[String], y: &[String], a: &[String], table: &WordTable<'_, T>) -> Result<WeatResult<T>> {
    if x.is_empty() || y.is_empty() || a.is_empty() {
        return Err(Error::InvalidConfig("one-sided WEAT needs non-empty X, Y and A".into()));
    }
    let (xi, yi, ai) = (words_to_ids(table, x)?, words_to_ids(table, y)?, words_to_ids(table, a)?);
    let sx = xi.iter().map(|&w| table.mean_cos(w, &ai)).collect::<Result<Vec<_>>>()?;
    let sy = yi.iter().map(|&w| table.mean_cos(w, &ai)).collect::<Result<Vec<_>>>()?;
    let stats = standardized(&sx, &sy);
    Ok(build_result(&xi, &yi, table, sx, sy, stats))
}

/// `|effect|` as a test objective. Sample = a resolved WEAT; the gradient is
/// `sign(effect) · ∇effect` on the input table, and zero when the effect is
/// exactly zero or degenerate.
#[derive(Clone, Copy, Debug)]
pub struct AbsWeatObjective {
    vocab_size: usize,
    dim: usize,
}

impl AbsWeatObjective {
    pub fn new(vocab_size: usize, dim: usize) -> Self {
        Self { vocab_size, dim }
    }

    pub fn for_model<T: Scalar>(model: &SkipGramModel<T>) -> Self {
        Self::new(model.vocab().len(), model.dim())
    }

    fn table<'a, T: Scalar>(&self, vocab: &'a Vocab, params: &'a ParamVector<T>) -> WordTable<'a, T> {
        WordTable { vocab, dim: self.dim, rows: &params.values()[..self.vocab_size * self.dim] }
    }

    fn check(&self, ids: &WeatIds) -> Result<()> {
        for &id in ids.x.iter().chain(&ids.y).chain(&ids.a).chain(&ids.b) {
            if id >= self.vocab_size {
                return Err(Error::OutOfRange { what: "word", id, len: self.vocab_size });
            }
        }
        if ids.x.is_empty() || ids.y.is_empty() || ids.a.is_empty() || ids.b.is_empty() {
            return Err(Error::InvalidConfig("WEAT with an empty set".into()));
        }
        Ok(())
    }
}

// The objective only needs rows by id, so it runs over an anonymous vocab.
fn anonymous_vocab() -> &'static Vocab {
    static EMPTY: std::sync::OnceLock<Vocab> = std::sync::OnceLock::new();
    EMPTY.get_or_init(Vocab::default)
}

impl<T: Scalar> Objective<T> for AbsWeatObjective {
    type Sample = WeatIds;

    fn name(&self) -> &str {
        "weat"
    }

    fn param_len(&self) -> usize {
        2 * self.vocab_size * self.dim
    }

    fn sample_loss(&self, params: &ParamVector<T>, ids: &WeatIds) -> Result<T> {
        self.check(ids)?;
        let table = self.table(anonymous_vocab(), params);
        let (_, _, (effect, ..)) = effect_of_ids(ids, &table)?;
        Ok(effect.abs())
    }

    fn add_sample_grad(&self, params: &ParamVector<T>, ids: &WeatIds, weight: T, out: &mut [T]) -> Result<()> {
        self.check(ids)?;
        let table = self.table(anonymous_vocab(), params);
        let (sx, sy, (effect, _, _, std, degenerate)) = effect_of_ids(ids, &table)?;
        if degenerate || effect == T::zero() {
            return Ok(());
        }
        let sign = effect.signum();
        let n = T::of_usize(sx.len() + sy.len());
        let mean = (sx.iter().chain(&sy).copied().sum::<T>()) / n;
        let numerator = effect * std;
        let d = self.dim;

        let targets = ids
            .x
            .iter()
            .zip(&sx)
            .map(|(&w, &s)| (w, s, T::one() / T::of_usize(ids.x.len())))
            .chain(ids.y.iter().zip(&sy).map(|(&w, &s)| (w, s, -T::one() / T::of_usize(ids.y.len()))));

        for (w, s, c) in targets {
            // d effect / d s_w
            let de = c / std - numerator * (s - mean) / (n * std * std * std);
            let attrs = ids
                .a
                .iter()
                .map(|&a| (a, T::one() / T::of_usize(ids.a.len())))
                .chain(ids.b.iter().map(|&b| (b, -T::one() / T::of_usize(ids.b.len()))));
            for (a, ca) in attrs {
                let gamma = weight * sign * de * ca;
                let (u, v) = (table.row(w), table.row(a));
                let (nu, nv) = (table.checked_norm(w)?, table.checked_norm(a)?);
                let cos = dot(u, v) / (nu * nv);
                for m in 0..d {
                    out[w * d + m] += gamma * (v[m] / (nu * nv) - cos * u[m] / (nu * nu));
                    out[a * d + m] += gamma * (u[m] / (nu * nv) - cos * v[m] / (nv * nv));
                }
            }
        }
        Ok(())
    }
}

/// `|effect|` and its gradient over the whole parameter vector.
pub fn abs_weat_loss<T: Scalar>(spec: &WeatSpec, model: &SkipGramModel<T>) -> Result<(T, ParamVector<T>)> {
    let ids = spec.resolve(model.vocab())?;
    let obj = AbsWeatObjective::for_model(model);
    let batch = [ids];
    let loss = crate::diffmath::loss_value(&obj, model.params(), &batch)?;
    let grad = crate::diffmath::loss_grad(&obj, model.params(), &batch)?;
    Ok((loss, grad))
}
