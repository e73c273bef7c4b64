use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::IndexSet;

/// Ground-truth signal `x` given by its support `T` and the nonzero values on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    len: usize,
    support: IndexSet,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(len: usize, support: IndexSet, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Dimension {
                context: "signal values",
                expected: support.len(),
                found: values.len(),
            });
        }
        if support.max().is_some_and(|j| j >= len) {
            return Err(Error::InvalidArgument(format!(
                "support index out of range for length {len}"
            )));
        }
        if let Some(v) = values.iter().find(|v| **v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "signal values on the support must be finite and nonzero, found {v}"
            )));
        }
        Ok(Self {
            len,
            support,
            values,
        })
    }

    /// Support is the set of nonzero entries of `x`.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        let values = support.iter().map(|&j| x[j]).collect();
        Self::new(x.len(), IndexSet::from_sorted_unchecked(support), values)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `||x||_0`
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &IndexSet {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, j: usize) -> f64 {
        self.support.position(j).map_or(0.0, |p| self.values[p])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }

    /// Dense copy of `x` restricted to `set` (zero elsewhere).
    pub fn restricted_to(&self, set: &IndexSet) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        for &j in set {
            x[j] = self.value_at(j);
        }
        x
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}
