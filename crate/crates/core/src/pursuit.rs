//! Generalized orthogonal matching pursuit (gOMP) and OMP as its `S = 1` case.
//!
//! Each iteration picks the `S` columns most correlated with the residual,
//! adds them to the estimated support, re-solves least squares on that support
//! and updates the residual. After the loop the estimate is pruned to its `K`
//! largest entries and refit on that support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_len, correlations, least_squares, norm2, IndexSet, Matrix, QrFactorization};

/// Relative residual threshold used when none is configured.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StoppingMode {
    /// Stop once `||r^k||_2 <= epsilon` or the iteration cap is reached.
    #[default]
    Threshold,
    /// Run exactly the iteration cap.
    FixedIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitConfig {
    /// Sparsity level `K` of the output.
    pub sparsity: usize,
    /// Indices chosen per iteration, `S`.
    pub selection_size: usize,
    /// Residual threshold; `None` means `1e-6 * ||y||_2`.
    #[serde(default)]
    pub residual_threshold: Option<f64>,
    /// Iteration cap; `None` means `max{K, floor(8K/S)}` clamped to `floor(m/S)`.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub stopping_mode: StoppingMode,
}

impl PursuitConfig {
    pub fn gomp(sparsity: usize, selection_size: usize) -> Self {
        Self {
            sparsity,
            selection_size,
            residual_threshold: None,
            max_iterations: None,
            stopping_mode: StoppingMode::Threshold,
        }
    }

    pub fn omp(sparsity: usize) -> Self {
        Self::gomp(sparsity, 1)
    }

    pub fn fixed_iterations(mut self) -> Self {
        self.stopping_mode = StoppingMode::FixedIterations;
        self
    }

    pub fn with_max_iterations(mut self, k: usize) -> Self {
        self.max_iterations = Some(k);
        self
    }

    pub fn with_threshold(mut self, eps: f64) -> Self {
        self.residual_threshold = Some(eps);
        self
    }

    /// Checks the configuration against an `m x n` problem and resolves the
    /// iteration cap.
    pub fn resolve(&self, m: usize, n: usize) -> Result<IterationLimit> {
        let (k, s) = (self.sparsity, self.selection_size);
        if s < 1 || s > k {
            return Err(Error::InvalidConfig(format!(
                "selection size must satisfy 1 <= S <= K (got S = {s}, K = {k})"
            )));
        }
        if k > m || k > n {
            return Err(Error::InvalidConfig(format!(
                "sparsity K = {k} must not exceed m = {m} or n = {n}"
            )));
        }
        if let Some(eps) = self.residual_threshold {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "residual threshold must be a finite nonnegative number, got {eps}"
                )));
            }
        }
        let guard = m.min(n) / s;
        match self.max_iterations {
            Some(cap) => {
                if cap * s > m {
                    return Err(Error::InvalidConfig(format!(
                        "max_iterations * S must not exceed m (got {cap} * {s} > {m})"
                    )));
                }
                if cap * s > n {
                    return Err(Error::InvalidConfig(format!(
                        "max_iterations * S must not exceed n (got {cap} * {s} > {n})"
                    )));
                }
                Ok(IterationLimit {
                    iterations: cap,
                    clamped: false,
                })
            }
            None => {
                let wanted = theorem_iterations(k, s);
                Ok(IterationLimit {
                    iterations: wanted.min(guard),
                    clamped: wanted > guard,
                })
            }
        }
    }
}

/// Resolved iteration cap; `clamped` records that the default count was cut
/// to `floor(m/S)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationLimit {
    pub iterations: usize,
    pub clamped: bool,
}

/// `max{K, floor(8K/S)}`, the iteration count of the noisy recovery guarantee.
pub fn theorem_iterations(sparsity: usize, selection_size: usize) -> usize {
    sparsity.max(8 * sparsity / selection_size)
}

/// `max{2K, floor(16K/S)}`, the count used for compressible signals.
pub fn compressible_iterations(sparsity: usize, selection_size: usize) -> usize {
    (2 * sparsity).max(16 * sparsity / selection_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Iteration number `k >= 1`.
    pub iteration: usize,
    /// `Lambda^k`, the `S` indices chosen in this iteration.
    pub selected: IndexSet,
    /// `T^k`, all indices chosen so far.
    pub support: IndexSet,
    /// `x^k`, dense, supported on `T^k`.
    pub estimate: Vec<f64>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitTrace {
    pub selection_size: usize,
    /// `||r^0||_2 = ||y||_2`.
    pub initial_residual_norm: f64,
    pub iterations: Vec<IterationRecord>,
}

impl PursuitTrace {
    /// `||r^k||_2` for `k = 0..=len`.
    pub fn residual_norm(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(self.initial_residual_norm)
        } else {
            self.iterations.get(k - 1).map(|r| r.residual_norm)
        }
    }

    /// `T^k`; `T^0` is empty.
    pub fn support(&self, k: usize) -> Option<IndexSet> {
        if k == 0 {
            Some(IndexSet::empty())
        } else {
            self.iterations.get(k - 1).map(|r| r.support.clone())
        }
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        std::iter::once(self.initial_residual_norm)
            .chain(self.iterations.iter().map(|r| r.residual_norm))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitResult {
    /// Pruned support of size `K`.
    pub support: IndexSet,
    /// Dense estimate, refit on `support` and zero elsewhere.
    pub estimate: Vec<f64>,
    pub residual_norm: f64,
    pub trace: PursuitTrace,
    pub iterations_used: usize,
    pub limit: IterationLimit,
}

impl PursuitResult {
    /// `x^k` from the last iteration (all zeros when no iteration ran).
    pub fn last_iterate(&self) -> Vec<f64> {
        self.trace
            .iterations
            .last()
            .map(|r| r.estimate.clone())
            .unwrap_or_else(|| vec![0.0; self.estimate.len()])
    }
}

/// The `S` indices outside `exclude` with the largest `|c_j|`; ties go to the
/// smaller index.
pub fn identify_top_s(c: &[f64], s: usize, exclude: &IndexSet) -> Result<IndexSet> {
    let mut candidates: Vec<usize> = (0..c.len()).filter(|&j| !exclude.contains(j)).collect();
    if s > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {s} indices from {} available",
            candidates.len()
        )));
    }
    if s == 0 {
        return Ok(IndexSet::empty());
    }
    let by_magnitude = |a: &usize, b: &usize| c[*b].abs().total_cmp(&c[*a].abs()).then(a.cmp(b));
    if s < candidates.len() {
        candidates.select_nth_unstable_by(s - 1, by_magnitude);
        candidates.truncate(s);
    }
    candidates.sort_unstable();
    Ok(IndexSet::from_sorted_unchecked(candidates))
}

/// Indices of the `K` largest-magnitude entries (ties to the smaller index).
pub fn prune_to_k(x: &[f64], k: usize) -> Result<IndexSet> {
    identify_top_s(x, k, &IndexSet::empty())
}

/// Runs gOMP on `y = Phi x + v`.
pub fn gomp_solve(phi: &Matrix, y: &[f64], config: &PursuitConfig) -> Result<PursuitResult> {
    let (m, n) = (phi.rows(), phi.cols());
    check_len("measurements", m, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurements"));
    }
    let limit = config.resolve(m, n)?;
    let s = config.selection_size;
    let y_norm = norm2(y);
    let epsilon = config
        .residual_threshold
        .unwrap_or(DEFAULT_RELATIVE_EPSILON * y_norm);

    let mut factor = QrFactorization::new(m);
    let mut residual = y.to_vec();
    let mut residual_norm = y_norm;
    let mut trace = PursuitTrace {
        selection_size: s,
        initial_residual_norm: y_norm,
        iterations: Vec::with_capacity(limit.iterations),
    };

    for k in 1..=limit.iterations {
        if config.stopping_mode == StoppingMode::Threshold && residual_norm <= epsilon {
            break;
        }
        let c = correlations(phi, &residual)?;
        let selected = identify_top_s(&c, s, factor.support())?;
        factor
            .append_columns(phi, &selected)
            .map_err(|e| e.at_iteration(k))?;
        let fit = factor.solve(y)?;
        residual_norm = fit.residual_norm;
        trace.iterations.push(IterationRecord {
            iteration: k,
            selected,
            support: fit.support.clone(),
            estimate: fit.to_dense(n),
            residual_norm,
        });
        residual = fit.residual;
    }

    let iterations_used = trace.len();
    let last = trace
        .iterations
        .last()
        .map(|r| r.estimate.clone())
        .unwrap_or_else(|| vec![0.0; n]);
    let support = prune_to_k(&last, config.sparsity)?;
    let refit = least_squares(phi, &support, y).map_err(|e| e.at_iteration(iterations_used))?;
    Ok(PursuitResult {
        estimate: refit.to_dense(n),
        residual_norm: refit.residual_norm,
        support,
        trace,
        iterations_used,
        limit,
    })
}

/// OMP: gOMP with one index per iteration.
pub fn omp_solve(phi: &Matrix, y: &[f64], config: &PursuitConfig) -> Result<PursuitResult> {
    let config = PursuitConfig {
        selection_size: 1,
        ..config.clone()
    };
    gomp_solve(phi, y, &config)
}
