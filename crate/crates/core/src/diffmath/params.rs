use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Named contiguous slice of a [`ParamVector`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Flat vector of every trainable parameter, with a segment map naming the
/// blocks it is made of (for example `input_table` / `output_table`).
///
/// Segments are disjoint and cover `values` exactly; the map is shared
/// between clones so gradients and directions carry the layout for free.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector<T> {
    values: Vec<T>,
    segments: Arc<[Segment]>,
}

impl<T: Scalar> ParamVector<T> {
    /// Builds a vector from its values and `(name, len)` blocks in order.
    pub fn new(values: Vec<T>, blocks: &[(&str, usize)]) -> Result<Self> {
        let mut offset = 0;
        let mut segments = Vec::with_capacity(blocks.len());
        for (name, len) in blocks {
            if segments.iter().any(|s: &Segment| s.name == *name) {
                return Err(Error::InvalidConfig(format!("duplicate segment '{name}'")));
            }
            segments.push(Segment { name: (*name).to_string(), offset, len: *len });
            offset += len;
        }
        if offset != values.len() {
            return Err(Error::LengthMismatch {
                context: "segment map",
                expected: offset,
                actual: values.len(),
            });
        }
        Ok(Self { values, segments: segments.into() })
    }

    /// One segment called `name` spanning every value.
    pub fn single(name: &str, values: Vec<T>) -> Self {
        let len = values.len();
        Self {
            values,
            segments: vec![Segment { name: name.to_string(), offset: 0, len }].into(),
        }
    }

    pub fn zeros(blocks: &[(&str, usize)]) -> Self {
        let n = blocks.iter().map(|(_, l)| l).sum();
        Self::new(vec![T::zero(); n], blocks).expect("blocks cover zeros")
    }

    pub fn zeros_like(&self) -> Self {
        Self { values: vec![T::zero(); self.values.len()], segments: self.segments.clone() }
    }

    /// Same layout as `self`, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                context: "with_values",
                expected: self.values.len(),
                actual: values.len(),
            });
        }
        Ok(Self { values, segments: self.segments.clone() })
    }

    /// Unit vector along coordinate `i`.
    pub fn basis(&self, i: usize) -> Self {
        let mut e = self.zeros_like();
        e.values[i] = T::one();
        e
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_info(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn segment(&self, name: &str) -> Option<&[T]> {
        self.segment_info(name).map(|s| &self.values[s.range()])
    }

    pub fn segment_mut(&mut self, name: &str) -> Option<&mut [T]> {
        let range = self.segment_info(name)?.range();
        Some(&mut self.values[range])
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.segments, &other.segments) || self.segments == other.segments
    }

    fn check_len(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { context, expected: self.len(), actual: other.len() });
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        self.check_len(other, "dot")?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> T {
        norm(&self.values)
    }

    pub fn norm_inf(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.check_len(other, "axpy")?;
        axpy(alpha, &other.values, &mut self.values);
        Ok(())
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * alpha).collect(),
            segments: self.segments.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(T::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-T::one(), other)?;
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Returns `self` unchanged, or a numeric error naming `context`.
    pub fn finite_or(self, context: &str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    pub fn cast<U: Scalar>(&self) -> ParamVector<U> {
        ParamVector {
            values: self.values.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
            segments: self.segments.clone(),
        }
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}
