//! Restricted isometry constants.
//!
//! `delta_K` is the smallest `delta` with
//! `(1 - delta)||x||^2 <= ||Phi x||^2 <= (1 + delta)||x||^2` for every
//! `K`-sparse `x`, i.e. the largest deviation from 1 of any eigenvalue of a
//! `K x K` Gram submatrix `Phi_A' Phi_A`. No column normalization is applied.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{IndexSet, Matrix};

/// Largest number of `K`-subsets `ric_exact` will enumerate.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicKind {
    /// Maximum over every `K`-subset.
    Exact,
    /// Maximum over sampled subsets; never above the exact value.
    MonteCarloLower,
    /// Exact constant of a larger order; an upper bound by monotonicity.
    MonotoneUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicEstimate {
    pub order: usize,
    pub kind: RicKind,
    pub delta: f64,
    /// Subset attaining `delta`.
    pub witness: IndexSet,
}

impl RicEstimate {
    /// `false` when `delta >= 1`, i.e. some `K` columns are (nearly) dependent.
    pub fn below_one(&self) -> bool {
        self.delta < 1.0
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Full Gram matrix `Phi' Phi`, row-major `n x n`.
pub(crate) struct Gram {
    n: usize,
    g: Vec<f64>,
}

impl Gram {
    pub(crate) fn new(phi: &Matrix) -> Self {
        let n = phi.cols();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = crate::linalg::dot(phi.column(i), phi.column(j));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Self { n, g }
    }

    /// `max(lambda_max - 1, 1 - lambda_min)` of the Gram submatrix on `subset`.
    pub(crate) fn deviation(&self, subset: &[usize]) -> f64 {
        let k = subset.len();
        match k {
            0 => 0.0,
            1 => (self.g[subset[0] * self.n + subset[0]] - 1.0).abs(),
            _ => {
                let sub = DMatrix::from_fn(k, k, |a, b| self.g[subset[a] * self.n + subset[b]]);
                let ev = sub.symmetric_eigenvalues();
                let (lo, hi) = ev
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
                (hi - 1.0).max(1.0 - lo)
            }
        }
    }
}

fn check_order(phi: &Matrix, k: usize) -> Result<()> {
    if k == 0 || k > phi.cols() {
        return Err(Error::InvalidArgument(format!(
            "RIC order must lie in 1..={}, got {k}",
            phi.cols()
        )));
    }
    Ok(())
}

fn check_budget(n: usize, k: usize) -> Result<()> {
    let required = binomial(n, k);
    if required > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            n,
            k,
            required,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

fn enumerate_max(gram: &Gram, n: usize, k: usize) -> (f64, Vec<usize>) {
    let mut subset: Vec<usize> = (0..k).collect();
    let mut best = (f64::NEG_INFINITY, subset.clone());
    loop {
        let d = gram.deviation(&subset);
        if d > best.0 {
            best = (d, subset.clone());
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < n - k + i {
                break;
            }
            if i == 0 {
                return best;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Exact `delta_K` by enumerating all `C(n, K)` column subsets.
pub fn ric_exact(phi: &Matrix, k: usize) -> Result<RicEstimate> {
    check_order(phi, k)?;
    check_budget(phi.cols(), k)?;
    let gram = Gram::new(phi);
    let (delta, witness) = enumerate_max(&gram, phi.cols(), k);
    Ok(RicEstimate {
        order: k,
        kind: RicKind::Exact,
        delta,
        witness: IndexSet::from_sorted_unchecked(witness),
    })
}

/// Lower estimate of `delta_K` from `trials` uniformly sampled `K`-subsets.
pub fn ric_monte_carlo(phi: &Matrix, k: usize, trials: usize, seed: u64) -> Result<RicEstimate> {
    check_order(phi, k)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("Monte-Carlo RIC needs at least one trial".into()));
    }
    let gram = Gram::new(phi);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for _ in 0..trials {
        let mut subset = rand::seq::index::sample(&mut rng, phi.cols(), k).into_vec();
        subset.sort_unstable();
        let d = gram.deviation(&subset);
        if d > best.0 {
            best = (d, subset);
        }
    }
    Ok(RicEstimate {
        order: k,
        kind: RicKind::MonteCarloLower,
        delta: best.0,
        witness: IndexSet::from_sorted_unchecked(best.1),
    })
}

/// Sound upper bound on `delta_K`.
///
/// Exact when `C(n, K)` fits the enumeration budget; otherwise the exact
/// constant of order `n` (a single Gram matrix), which dominates every lower
/// order. Orders above `n` are treated as order `n`.
pub fn ric_upper_bound(phi: &Matrix, k: usize) -> Result<RicEstimate> {
    let k = k.min(phi.cols());
    match ric_exact(phi, k) {
        Ok(est) => Ok(est),
        Err(Error::BudgetExceeded { .. }) => {
            let full = ric_exact(phi, phi.cols())?;
            Ok(RicEstimate {
                order: k,
                kind: RicKind::MonotoneUpper,
                ..full
            })
        }
        Err(e) => Err(e),
    }
}

/// Lazily computed exact RICs of one matrix, keyed by order.
pub struct RicTable {
    gram: Gram,
    n: usize,
    cache: BTreeMap<usize, f64>,
}

impl RicTable {
    pub fn new(phi: &Matrix) -> Self {
        Self {
            gram: Gram::new(phi),
            n: phi.cols(),
            cache: BTreeMap::new(),
        }
    }

    /// Exact `delta_order`; refuses orders whose enumeration exceeds the budget.
    pub fn delta(&mut self, order: usize) -> Result<f64> {
        if order == 0 {
            return Ok(0.0);
        }
        if order > self.n {
            return Err(Error::InvalidArgument(format!(
                "RIC order {order} exceeds {} columns",
                self.n
            )));
        }
        if let Some(&d) = self.cache.get(&order) {
            return Ok(d);
        }
        check_budget(self.n, order)?;
        let (d, _) = enumerate_max(&self.gram, self.n, order);
        self.cache.insert(order, d);
        Ok(d)
    }
}
