//! Random problem instances.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{IndexSet, Matrix};
use crate::signal::SparseSignal;

/// SNR values above this are treated as this (noise of order `1e-15`).
pub const MAX_SNR_DB: f64 = 300.0;

/// Draws beyond this many rejected signals are treated as a configuration error.
const MAX_RESAMPLES: usize = 10_000;

/// Independent generator for `(seed, stream)`; streams never overlap.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `m x n` matrix with i.i.d. `N(0, 1/m)` entries.
pub fn gen_matrix_with<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Matrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("matrix must be at least 1x1, got {m}x{n}")));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let data = (0..m * n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::from_column_major(m, n, data)
}

pub fn gen_matrix(m: usize, n: usize, seed: u64) -> Result<Matrix> {
    gen_matrix_with(m, n, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// `m x n` matrix with orthonormal columns (`n <= m`), from the QR factor of a
/// Gaussian matrix.
pub fn gen_orthonormal<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Matrix> {
    if n > m {
        return Err(Error::InvalidArgument(format!(
            "orthonormal columns need n <= m, got {m}x{n}"
        )));
    }
    let g = gen_matrix_with(m, n, rng)?;
    let q = DMatrix::from_column_slice(m, n, g.as_column_major()).qr().q();
    Matrix::from_column_major(m, n, q.as_slice().to_vec())
}

/// `Q + eps E` with `Q` orthonormal and `E` i.i.d. `N(0, 1/m)`.
pub fn gen_perturbed_orthonormal<R: Rng + ?Sized>(m: usize, n: usize, eps: f64, rng: &mut R) -> Result<Matrix> {
    let q = gen_orthonormal(m, n, rng)?;
    let e = gen_matrix_with(m, n, rng)?;
    let data = q
        .as_column_major()
        .iter()
        .zip(e.as_column_major())
        .map(|(a, b)| a + eps * b)
        .collect();
    Matrix::from_column_major(m, n, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SignalModel {
    /// Bernoulli support, `N(0, 1)` values.
    GaussianBernoulli,
    /// Bernoulli support, `+-1` values.
    RademacherBernoulli,
    /// Every entry nonzero; sorted magnitudes `i^{-exponent}`, random order
    /// and signs.
    Compressible { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sparsity {
    /// Each entry is nonzero with probability `p`.
    Rate(f64),
    /// Exactly `K` nonzeros on a uniformly random support.
    Fixed(usize),
}

impl Sparsity {
    /// `E ||x||_0` (for compressible signals, the solver's `K`).
    pub fn expected(self, n: usize) -> f64 {
        match self {
            Sparsity::Rate(p) => p * n as f64,
            Sparsity::Fixed(k) => k as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub m: usize,
    pub n: usize,
    pub sparsity: Sparsity,
    pub selection_size: usize,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub signal_model: SignalModel,
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidConfig("m and n must be positive".into()));
        }
        if self.selection_size == 0 {
            return Err(Error::InvalidConfig("selection size S must be at least 1".into()));
        }
        match self.sparsity {
            Sparsity::Rate(p) => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidConfig(format!("sparsity rate must lie in (0, 1], got {p}")));
                }
                if p * (self.n as f64) < 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "p * n must be at least 1, got {}",
                        p * self.n as f64
                    )));
                }
                if matches!(self.signal_model, SignalModel::Compressible { .. }) {
                    return Err(Error::InvalidConfig(
                        "compressible signals need a fixed sparsity K".into(),
                    ));
                }
            }
            Sparsity::Fixed(k) => {
                if k == 0 || k > self.n || k > self.m {
                    return Err(Error::InvalidConfig(format!(
                        "fixed sparsity K = {k} must lie in 1..=min(m, n)"
                    )));
                }
                if self.selection_size > k {
                    return Err(Error::InvalidConfig(format!(
                        "selection size must satisfy 1 <= S <= K (got S = {}, K = {k})",
                        self.selection_size
                    )));
                }
            }
        }
        if let SignalModel::Compressible { exponent } = self.signal_model {
            if !(exponent > 0.0 && exponent.is_finite()) {
                return Err(Error::InvalidConfig(format!("power-law exponent must be positive, got {exponent}")));
            }
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::InvalidConfig("snr_db is NaN".into()));
            }
        }
        Ok(())
    }

    /// `E ||x||^2` under the signal model.
    pub fn expected_energy(&self) -> f64 {
        match self.signal_model {
            SignalModel::Compressible { exponent } => {
                (1..=self.n).map(|i| (i as f64).powf(-2.0 * exponent)).sum()
            }
            _ => self.sparsity.expected(self.n),
        }
    }

    /// Per-entry prior variance `E x_j^2`, used by the linear MMSE baseline.
    pub fn prior_variance(&self) -> f64 {
        self.expected_energy() / self.n as f64
    }

    /// Per-entry noise variance `(E||x||^2 / m) 10^{-snr/10}`; zero when noiseless.
    pub fn noise_variance(&self) -> f64 {
        match self.snr_db {
            None => 0.0,
            Some(snr) => {
                let snr = snr.min(MAX_SNR_DB);
                self.expected_energy() / self.m as f64 * 10f64.powf(-snr / 10.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSignal {
    pub signal: SparseSignal,
    /// Draws rejected for having fewer than the required nonzeros.
    pub resamples: usize,
}

fn draw_value<R: Rng + ?Sized>(model: SignalModel, rng: &mut R) -> f64 {
    match model {
        SignalModel::RademacherBernoulli => {
            if rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        }
        _ => loop {
            let v: f64 = rng.sample(StandardNormal);
            if v != 0.0 {
                break v;
            }
        },
    }
}

/// Draws `x` according to `spec`. Rate-based draws with fewer than
/// `min_nonzeros` (at least 1) nonzeros are rejected and redrawn.
pub fn gen_signal<R: Rng + ?Sized>(spec: &TrialSpec, min_nonzeros: usize, rng: &mut R) -> Result<GeneratedSignal> {
    let n = spec.n;
    if let SignalModel::Compressible { exponent } = spec.signal_model {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut x = vec![0.0; n];
        for (rank, &j) in order.iter().enumerate() {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x[j] = sign * ((rank + 1) as f64).powf(-exponent);
        }
        return Ok(GeneratedSignal {
            signal: SparseSignal::from_dense(&x)?,
            resamples: 0,
        });
    }
    let min_nonzeros = min_nonzeros.max(1);
    let mut resamples = 0;
    loop {
        let support: Vec<usize> = match spec.sparsity {
            Sparsity::Rate(p) => (0..n).filter(|_| rng.random_bool(p)).collect(),
            Sparsity::Fixed(k) => {
                let mut s = rand::seq::index::sample(rng, n, k).into_vec();
                s.sort_unstable();
                s
            }
        };
        if support.len() >= min_nonzeros {
            let values = support.iter().map(|_| draw_value(spec.signal_model, rng)).collect();
            let signal = SparseSignal::new(n, IndexSet::from_sorted_unchecked(support), values)?;
            return Ok(GeneratedSignal { signal, resamples });
        }
        resamples += 1;
        if resamples > MAX_RESAMPLES {
            return Err(Error::InvalidConfig(format!(
                "could not draw a signal with at least {min_nonzeros} nonzeros"
            )));
        }
    }
}

/// `m` i.i.d. `N(0, variance)` entries.
pub fn gen_noise<R: Rng + ?Sized>(variance: f64, m: usize, rng: &mut R) -> Vec<f64> {
    let sd = variance.max(0.0).sqrt();
    (0..m).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}
