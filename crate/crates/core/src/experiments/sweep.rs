//! Monte-Carlo sweeps: MSE against SNR, running time against sparsity rate,
//! and the compressible-signal error ratio.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{linear_mmse, oracle_ls};
use super::generate::{gen_matrix_with, gen_noise, gen_signal, trial_rng, SignalModel, Sparsity, TrialSpec};
use super::stats::{mean, median, quantile, std_err};
use crate::error::{Error, Result};
use crate::linalg::{add, norm2, norm2_sq, sub, Matrix};
use crate::pursuit::{compressible_iterations, gomp_solve, theorem_iterations, PursuitConfig};
use crate::signal::SparseSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Omp,
    Gomp,
    OracleLs,
    LinearMmse,
}

impl Algorithm {
    pub fn label(self, s: usize) -> String {
        match self {
            Algorithm::Omp => "omp".into(),
            Algorithm::Gomp => format!("gomp_s{s}"),
            Algorithm::OracleLs => "oracle_ls".into(),
            Algorithm::LinearMmse => "linear_mmse".into(),
        }
    }

    fn selection_size(self, s: usize) -> Option<usize> {
        match self {
            Algorithm::Omp => Some(1),
            Algorithm::Gomp => Some(s),
            _ => None,
        }
    }
}

/// Which `K` the pursuit solvers are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverSparsity {
    /// The realized `||x||_0` of each trial.
    #[default]
    Realized,
    /// `ceil(p n)`.
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    /// New `Phi` for every trial.
    #[default]
    Fresh,
    /// One `Phi` per sparsity rate, shared by all trials.
    Fixed,
}

fn default_m() -> usize {
    100
}
fn default_n() -> usize {
    200
}
fn default_rates() -> Vec<f64> {
    vec![0.05, 0.1]
}
fn default_snrs() -> Vec<f64> {
    (0..=8).map(|i| 5.0 * i as f64).collect()
}
fn default_s() -> usize {
    3
}
fn default_trials() -> usize {
    2000
}
fn default_model() -> SignalModel {
    SignalModel::GaussianBernoulli
}
fn all_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Omp, Algorithm::Gomp, Algorithm::OracleLs, Algorithm::LinearMmse]
}
fn pursuit_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Omp, Algorithm::Gomp]
}
fn default_timing_rates() -> Vec<f64> {
    vec![0.02, 0.04, 0.06, 0.08, 0.1]
}
fn default_timing_trials() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MseSweepConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_snrs")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_s")]
    pub selection_size: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_model")]
    pub signal_model: SignalModel,
    #[serde(default)]
    pub solver_sparsity: SolverSparsity,
    #[serde(default)]
    pub matrix_mode: MatrixMode,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<Algorithm>,
}

impl Default for MseSweepConfig {
    fn default() -> Self {
        Self {
            m: default_m(),
            n: default_n(),
            rates: default_rates(),
            snr_db: default_snrs(),
            selection_size: default_s(),
            trials: default_trials(),
            seed: 0,
            signal_model: default_model(),
            solver_sparsity: SolverSparsity::Realized,
            matrix_mode: MatrixMode::Fresh,
            algorithms: all_algorithms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSweepConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_timing_rates")]
    pub rates: Vec<f64>,
    /// `None` runs noiseless with the residual-threshold stopping rule.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_s")]
    pub selection_size: usize,
    #[serde(default = "default_timing_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_model")]
    pub signal_model: SignalModel,
    #[serde(default)]
    pub solver_sparsity: SolverSparsity,
    #[serde(default = "pursuit_algorithms")]
    pub algorithms: Vec<Algorithm>,
}

impl Default for TimingSweepConfig {
    fn default() -> Self {
        Self {
            m: default_m(),
            n: default_n(),
            rates: default_timing_rates(),
            snr_db: None,
            selection_size: default_s(),
            trials: default_timing_trials(),
            seed: 0,
            signal_model: default_model(),
            solver_sparsity: SolverSparsity::Realized,
            algorithms: pursuit_algorithms(),
        }
    }
}

/// Outcome of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoOutcome {
    pub mse: f64,
    pub l2: f64,
    pub support_recovered: bool,
    pub time_ms: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub p: f64,
    pub snr_db: Option<f64>,
    pub realized_k: usize,
    pub solver_k: usize,
    pub resamples: usize,
    pub noise_norm: f64,
    /// `10 log10(||Phi x||^2 / ||v||^2)`; `None` when noiseless.
    pub measured_snr_db: Option<f64>,
    /// Aligned with the configured algorithm list; `Err` holds the message.
    pub outcomes: Vec<std::result::Result<AlgoOutcome, String>>,
}

/// One CSV row: a grid cell and an algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub snr_db: Option<f64>,
    pub algorithm: String,
    pub mean_mse: f64,
    pub stderr_mse: f64,
    pub mean_l2: f64,
    pub median_time_ms: f64,
    pub mean_iterations: f64,
    pub support_rate: f64,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub records: Vec<TrialRecord>,
    pub clamped_iterations: bool,
}

impl SweepOutput {
    pub fn row(&self, p: f64, snr_db: Option<f64>, algorithm: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.p == p && r.snr_db == snr_db && r.algorithm == algorithm)
    }

    pub fn total_failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidConfig("thread count must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn check_grid(m: usize, n: usize, rates: &[f64], s: usize, trials: usize, algos: &[Algorithm]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidConfig("sparsity-rate grid is empty".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if algos.is_empty() {
        return Err(Error::InvalidConfig("no algorithms selected".into()));
    }
    if rates.len() > u32::MAX as usize || trials > u32::MAX as usize {
        return Err(Error::InvalidConfig("grid too large".into()));
    }
    for &p in rates {
        TrialSpec {
            m,
            n,
            sparsity: Sparsity::Rate(p),
            selection_size: s,
            snr_db: None,
            seed: 0,
            signal_model: SignalModel::GaussianBernoulli,
        }
        .validate()?;
    }
    if s > m.min(n) {
        return Err(Error::InvalidConfig(format!("selection size S = {s} exceeds min(m, n)")));
    }
    Ok(())
}

fn stream(rate_index: usize, trial: usize) -> u64 {
    ((rate_index as u64) << 32) | trial as u64
}

/// Stream reserved for the shared matrix of a rate in fixed-matrix mode.
fn fixed_stream(rate_index: usize) -> u64 {
    u64::MAX - rate_index as u64
}

fn solver_k(mode: SolverSparsity, realized: usize, p: f64, n: usize) -> usize {
    match mode {
        SolverSparsity::Realized => realized,
        SolverSparsity::Expected => (p * n as f64).ceil() as usize,
    }
}

/// Pursuit configuration used by the sweeps: the theorem's iteration count in
/// fixed mode when noisy, residual threshold with the default cap otherwise.
fn sweep_config(k: usize, s: usize, m: usize, n: usize, noisy: bool) -> (PursuitConfig, bool) {
    let cfg = PursuitConfig::gomp(k, s);
    if noisy {
        let wanted = theorem_iterations(k, s);
        let cap = m.min(n) / s;
        (cfg.fixed_iterations().with_max_iterations(wanted.min(cap)), wanted > cap)
    } else {
        let clamped = cfg.resolve(m, n).map(|l| l.clamped).unwrap_or(false);
        (cfg, clamped)
    }
}

struct Problem<'a> {
    phi: &'a Matrix,
    x: &'a SparseSignal,
    y: &'a [f64],
    solver_k: usize,
    prior_var: f64,
    noise_var: f64,
}

fn run_algorithm(alg: Algorithm, s: usize, pb: &Problem) -> (std::result::Result<AlgoOutcome, String>, bool) {
    let (m, n) = (pb.phi.rows(), pb.phi.cols());
    let truth = pb.x.to_dense();
    let start = Instant::now();
    let mut clamped = false;
    let solved: Result<(Vec<f64>, usize, bool)> = match alg {
        Algorithm::Omp | Algorithm::Gomp => {
            let sel = alg.selection_size(s).unwrap();
            let (cfg, c) = sweep_config(pb.solver_k, sel, m, n, pb.noise_var > 0.0);
            clamped = c;
            gomp_solve(pb.phi, pb.y, &cfg).map(|r| {
                let hit = r.support == *pb.x.support();
                (r.estimate, r.iterations_used, hit)
            })
        }
        Algorithm::OracleLs => oracle_ls(pb.phi, pb.y, pb.x.support()).map(|e| (e, 0, true)),
        Algorithm::LinearMmse => linear_mmse(pb.phi, pb.y, pb.prior_var, pb.noise_var).map(|e| (e, 0, false)),
    };
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    let out = solved
        .map(|(est, iterations, support_recovered)| {
            let err = norm2_sq(&sub(&est, &truth));
            AlgoOutcome {
                mse: err / n as f64,
                l2: err.sqrt(),
                support_recovered,
                time_ms,
                iterations,
            }
        })
        .map_err(|e| e.to_string());
    (out, clamped)
}

fn measured_snr(signal_energy: f64, noise: &[f64]) -> Option<f64> {
    let e = norm2_sq(noise);
    (e > 0.0).then(|| 10.0 * (signal_energy / e).log10())
}

fn aggregate(
    p: f64,
    snr_db: Option<f64>,
    labels: &[String],
    records: &[&TrialRecord],
) -> Vec<SweepRow> {
    labels
        .iter()
        .enumerate()
        .map(|(a, label)| {
            let ok: Vec<&AlgoOutcome> = records.iter().filter_map(|r| r.outcomes[a].as_ref().ok()).collect();
            let mses: Vec<f64> = ok.iter().map(|o| o.mse).collect();
            let l2s: Vec<f64> = ok.iter().map(|o| o.l2).collect();
            let times: Vec<f64> = ok.iter().map(|o| o.time_ms).collect();
            let iters: Vec<f64> = ok.iter().map(|o| o.iterations as f64).collect();
            let hits = ok.iter().filter(|o| o.support_recovered).count();
            SweepRow {
                p,
                snr_db,
                algorithm: label.clone(),
                mean_mse: mean(&mses),
                stderr_mse: std_err(&mses),
                mean_l2: mean(&l2s),
                median_time_ms: median(&times),
                mean_iterations: mean(&iters),
                support_rate: if ok.is_empty() { f64::NAN } else { hits as f64 / ok.len() as f64 },
                trials: ok.len(),
                failures: records.len() - ok.len(),
            }
        })
        .collect()
}

fn min_nonzeros(algos: &[Algorithm], s: usize) -> usize {
    algos.iter().filter_map(|a| a.selection_size(s)).max().unwrap_or(1)
}

/// MSE against SNR. Every trial draws `Phi`, `x` and a unit noise shape once
/// and reuses them at every SNR, scaled to the target noise variance.
pub fn run_mse_sweep(cfg: &MseSweepConfig) -> Result<SweepOutput> {
    check_grid(cfg.m, cfg.n, &cfg.rates, cfg.selection_size, cfg.trials, &cfg.algorithms)?;
    if cfg.snr_db.is_empty() {
        return Err(Error::InvalidConfig("SNR grid is empty".into()));
    }
    if let Some(bad) = cfg.snr_db.iter().find(|v| v.is_nan()) {
        return Err(Error::InvalidConfig(format!("invalid SNR {bad}")));
    }
    let (m, n, s) = (cfg.m, cfg.n, cfg.selection_size);
    let labels: Vec<String> = cfg.algorithms.iter().map(|a| a.label(s)).collect();
    let need = min_nonzeros(&cfg.algorithms, s);
    let mut rows = Vec::new();
    let mut all_records = Vec::new();
    let mut clamped_any = false;

    for (ri, &p) in cfg.rates.iter().enumerate() {
        let spec = TrialSpec {
            m,
            n,
            sparsity: Sparsity::Rate(p),
            selection_size: s,
            snr_db: None,
            seed: cfg.seed,
            signal_model: cfg.signal_model,
        };
        let shared = match cfg.matrix_mode {
            MatrixMode::Fixed => Some(gen_matrix_with(m, n, &mut trial_rng(cfg.seed, fixed_stream(ri)))?),
            MatrixMode::Fresh => None,
        };
        let per_trial: Vec<Result<(Vec<TrialRecord>, bool)>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, stream(ri, t));
                let fresh;
                let phi = match &shared {
                    Some(phi) => phi,
                    None => {
                        fresh = gen_matrix_with(m, n, &mut rng)?;
                        &fresh
                    }
                };
                let g = gen_signal(&spec, need, &mut rng)?;
                let x = g.signal;
                let shape = gen_noise(1.0, m, &mut rng);
                let clean = phi.mul_support(x.support(), x.values())?;
                let signal_energy = norm2_sq(&clean);
                let k = solver_k(cfg.solver_sparsity, x.sparsity(), p, n);
                let mut clamped = false;
                let records = cfg
                    .snr_db
                    .iter()
                    .map(|&snr| {
                        let noise_var = TrialSpec { snr_db: Some(snr), ..spec }.noise_variance();
                        let v: Vec<f64> = shape.iter().map(|z| z * noise_var.sqrt()).collect();
                        let y = add(&clean, &v);
                        let pb = Problem {
                            phi,
                            x: &x,
                            y: &y,
                            solver_k: k,
                            prior_var: spec.prior_variance(),
                            noise_var,
                        };
                        let outcomes = cfg
                            .algorithms
                            .iter()
                            .map(|&a| {
                                let (o, c) = run_algorithm(a, s, &pb);
                                clamped |= c;
                                o
                            })
                            .collect();
                        TrialRecord {
                            trial: t,
                            p,
                            snr_db: Some(snr),
                            realized_k: x.sparsity(),
                            solver_k: k,
                            resamples: g.resamples,
                            noise_norm: norm2(&v),
                            measured_snr_db: measured_snr(signal_energy, &v),
                            outcomes,
                        }
                    })
                    .collect();
                Ok((records, clamped))
            })
            .collect();
        let mut by_trial = Vec::with_capacity(cfg.trials);
        for r in per_trial {
            let (recs, c) = r?;
            clamped_any |= c;
            by_trial.push(recs);
        }
        for (si, &snr) in cfg.snr_db.iter().enumerate() {
            let cell: Vec<&TrialRecord> = by_trial.iter().map(|recs| &recs[si]).collect();
            rows.extend(aggregate(p, Some(snr), &labels, &cell));
        }
        all_records.extend(by_trial.into_iter().flatten());
    }
    Ok(SweepOutput {
        rows,
        records: all_records,
        clamped_iterations: clamped_any,
    })
}

/// Median running time against sparsity rate. Trials run sequentially so that
/// timings are not disturbed by sibling work; all algorithms see the same
/// instance.
pub fn run_timing_sweep(cfg: &TimingSweepConfig) -> Result<SweepOutput> {
    check_grid(cfg.m, cfg.n, &cfg.rates, cfg.selection_size, cfg.trials, &cfg.algorithms)?;
    if let Some(snr) = cfg.snr_db {
        if snr.is_nan() {
            return Err(Error::InvalidConfig("snr_db is NaN".into()));
        }
    }
    if cfg.snr_db.is_none() && cfg.algorithms.contains(&Algorithm::LinearMmse) {
        return Err(Error::InvalidConfig("linear MMSE needs noise; set snr_db".into()));
    }
    let (m, n, s) = (cfg.m, cfg.n, cfg.selection_size);
    let labels: Vec<String> = cfg.algorithms.iter().map(|a| a.label(s)).collect();
    let need = min_nonzeros(&cfg.algorithms, s);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut clamped_any = false;
    for (ri, &p) in cfg.rates.iter().enumerate() {
        let spec = TrialSpec {
            m,
            n,
            sparsity: Sparsity::Rate(p),
            selection_size: s,
            snr_db: cfg.snr_db,
            seed: cfg.seed,
            signal_model: cfg.signal_model,
        };
        let noise_var = spec.noise_variance();
        let mut cell = Vec::with_capacity(cfg.trials);
        for t in 0..cfg.trials {
            let mut rng = trial_rng(cfg.seed, stream(ri, t));
            let phi = gen_matrix_with(m, n, &mut rng)?;
            let g = gen_signal(&spec, need, &mut rng)?;
            let x = g.signal;
            let v = gen_noise(noise_var, m, &mut rng);
            let clean = phi.mul_support(x.support(), x.values())?;
            let y = add(&clean, &v);
            let k = solver_k(cfg.solver_sparsity, x.sparsity(), p, n);
            let pb = Problem {
                phi: &phi,
                x: &x,
                y: &y,
                solver_k: k,
                prior_var: spec.prior_variance(),
                noise_var,
            };
            let outcomes = cfg
                .algorithms
                .iter()
                .map(|&a| {
                    let (o, c) = run_algorithm(a, s, &pb);
                    clamped_any |= c;
                    o
                })
                .collect();
            cell.push(TrialRecord {
                trial: t,
                p,
                snr_db: cfg.snr_db,
                realized_k: x.sparsity(),
                solver_k: k,
                resamples: g.resamples,
                noise_norm: norm2(&v),
                measured_snr_db: measured_snr(norm2_sq(&clean), &v),
                outcomes,
            });
        }
        let refs: Vec<&TrialRecord> = cell.iter().collect();
        rows.extend(aggregate(p, cfg.snr_db, &labels, &refs));
        records.extend(cell);
    }
    Ok(SweepOutput {
        rows,
        records,
        clamped_iterations: clamped_any,
    })
}

fn default_compressible_k() -> usize {
    10
}
fn default_compressible_model() -> SignalModel {
    SignalModel::Compressible { exponent: 2.0 }
}
fn default_compressible_snr() -> Option<f64> {
    Some(20.0)
}
fn default_compressible_trials() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressibleConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    /// `K` of the best `K`-term approximation and of the solver.
    #[serde(default = "default_compressible_k")]
    pub sparsity: usize,
    #[serde(default = "default_s")]
    pub selection_size: usize,
    /// A Bernoulli model here gives exactly `K`-sparse signals.
    #[serde(default = "default_compressible_model")]
    pub signal_model: SignalModel,
    #[serde(default = "default_compressible_snr")]
    pub snr_db: Option<f64>,
    #[serde(default = "default_compressible_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CompressibleConfig {
    fn default() -> Self {
        Self {
            m: default_m(),
            n: default_n(),
            sparsity: default_compressible_k(),
            selection_size: default_s(),
            signal_model: default_compressible_model(),
            snr_db: default_compressible_snr(),
            trials: default_compressible_trials(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibleRecord {
    pub trial: usize,
    /// `||x_hat - x||`.
    pub error: f64,
    /// `||x - x_K||_1 / sqrt(K)`.
    pub tail_term: f64,
    pub noise_norm: f64,
    /// `error / (tail_term + noise_norm)`; `0` for an exact estimate with a
    /// zero denominator.
    pub ratio: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibleReport {
    pub iterations: usize,
    pub clamped_iterations: bool,
    pub trials: usize,
    pub failures: usize,
    pub summary: RatioSummary,
    pub records: Vec<CompressibleRecord>,
}

/// `||x - x_K||_1` for the best `K`-term approximation `x_K`.
pub fn tail_l1(x: &[f64], k: usize) -> f64 {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.iter().skip(k).sum()
}

/// Empirical ratio `||x_hat - x|| / (||x - x_K||_1 / sqrt(K) + ||v||)` after
/// `max{2K, floor(16K/S)}` iterations (clamped to `floor(min(m, n)/S)`).
pub fn run_compressible(cfg: &CompressibleConfig) -> Result<CompressibleReport> {
    let spec = TrialSpec {
        m: cfg.m,
        n: cfg.n,
        sparsity: Sparsity::Fixed(cfg.sparsity),
        selection_size: cfg.selection_size,
        snr_db: cfg.snr_db,
        seed: cfg.seed,
        signal_model: cfg.signal_model,
    };
    spec.validate()?;
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let (k, s) = (cfg.sparsity, cfg.selection_size);
    let wanted = compressible_iterations(k, s);
    let cap = cfg.m.min(cfg.n) / s;
    let iterations = wanted.min(cap);
    let pursuit = PursuitConfig::gomp(k, s)
        .fixed_iterations()
        .with_max_iterations(iterations);
    pursuit.resolve(cfg.m, cfg.n)?;
    let noise_var = spec.noise_variance();

    let per_trial: Vec<Result<std::result::Result<CompressibleRecord, String>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, stream(0, t));
            let phi = gen_matrix_with(cfg.m, cfg.n, &mut rng)?;
            let x = gen_signal(&spec, 1, &mut rng)?.signal.to_dense();
            let v = gen_noise(noise_var, cfg.m, &mut rng);
            let y = add(&phi.mul_vec(&x)?, &v);
            Ok(gomp_solve(&phi, &y, &pursuit)
                .map(|res| {
                    let error = norm2(&sub(&res.estimate, &x));
                    let tail_term = tail_l1(&x, k) / (k as f64).sqrt();
                    let noise_norm = norm2(&v);
                    let denom = tail_term + noise_norm;
                    let ratio = if denom > 0.0 {
                        error / denom
                    } else if error <= 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    CompressibleRecord {
                        trial: t,
                        error,
                        tail_term,
                        noise_norm,
                        ratio,
                        iterations: res.iterations_used,
                    }
                })
                .map_err(|e| e.to_string()))
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = 0;
    for r in per_trial {
        match r? {
            Ok(rec) => records.push(rec),
            Err(_) => failures += 1,
        }
    }
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    Ok(CompressibleReport {
        iterations,
        clamped_iterations: wanted > cap,
        trials: records.len(),
        failures,
        summary: RatioSummary {
            mean: mean(&ratios),
            median: median(&ratios),
            p90: quantile(&ratios, 0.9),
            p99: quantile(&ratios, 0.99),
            max: ratios.iter().copied().fold(f64::NAN, f64::max),
        },
        records,
    })
}

/// Writes sweep rows as CSV with a header line.
pub fn write_rows_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_compressible_csv<W: Write>(records: &[CompressibleRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Provenance written next to every output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Per-trial generators are `ChaCha20(seed)` on stream `(rate_index << 32) | trial`.
    pub seeding: String,
    pub config: serde_json::Value,
    pub rows: usize,
    pub failures: usize,
    pub clamped_iterations: bool,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C, rows: usize, failures: usize, clamped: bool) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            seeding: "chacha20, stream = (rate_index << 32) | trial".into(),
            config: serde_json::to_value(config).map_err(|e| Error::Parse(e.to_string()))?,
            rows,
            failures,
            clamped_iterations: clamped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_mse() -> MseSweepConfig {
        MseSweepConfig {
            m: 30,
            n: 60,
            rates: vec![0.05],
            snr_db: vec![0.0, 20.0, 40.0],
            selection_size: 2,
            trials: 40,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn mse_sweep_shape_and_identity() {
        let out = run_mse_sweep(&small_mse()).unwrap();
        assert_eq!(out.rows.len(), 3 * 4);
        assert_eq!(out.records.len(), 3 * 40);
        for r in &out.records {
            for o in r.outcomes.iter().flatten() {
                assert!((o.mse * 60.0 - o.l2 * o.l2).abs() <= 1e-12 * o.mse.max(1e-300) * 60.0);
            }
        }
        let omp: Vec<f64> = [0.0, 20.0, 40.0]
            .iter()
            .map(|&s| out.row(0.05, Some(s), "omp").unwrap().mean_mse)
            .collect();
        assert!(omp[0] > omp[1] && omp[1] > omp[2], "{omp:?}");
    }

    #[test]
    fn mse_sweep_is_deterministic_and_thread_independent() {
        let cfg = small_mse();
        let a = with_threads(Some(1), || run_mse_sweep(&cfg)).unwrap().unwrap();
        let b = with_threads(Some(2), || run_mse_sweep(&cfg)).unwrap().unwrap();
        let strip = |o: &SweepOutput| -> Vec<(f64, f64, usize)> {
            o.rows.iter().map(|r| (r.mean_mse, r.mean_l2, r.trials)).collect()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn fixed_matrix_and_expected_k_modes() {
        let cfg = MseSweepConfig {
            matrix_mode: MatrixMode::Fixed,
            solver_sparsity: SolverSparsity::Expected,
            trials: 10,
            ..small_mse()
        };
        let out = run_mse_sweep(&cfg).unwrap();
        assert!(out.records.iter().all(|r| r.solver_k == 3));
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = MseSweepConfig { snr_db: vec![], ..small_mse() };
        assert!(matches!(run_mse_sweep(&cfg), Err(Error::InvalidConfig(_))));
        let cfg = MseSweepConfig { rates: vec![], ..small_mse() };
        assert!(run_mse_sweep(&cfg).is_err());
    }

    #[test]
    fn timing_sweep_noiseless_recovers() {
        let cfg = TimingSweepConfig {
            m: 40,
            n: 80,
            rates: vec![0.05],
            trials: 20,
            selection_size: 2,
            ..Default::default()
        };
        let out = run_timing_sweep(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2);
        for r in &out.rows {
            assert!(r.support_rate >= 0.9, "{r:?}");
        }
    }

    #[test]
    fn exactly_sparse_noiseless_ratio_is_zero() {
        let cfg = CompressibleConfig {
            m: 40,
            n: 80,
            sparsity: 4,
            selection_size: 2,
            signal_model: SignalModel::GaussianBernoulli,
            snr_db: None,
            trials: 10,
            seed: 1,
        };
        let rep = run_compressible(&cfg).unwrap();
        assert_eq!(rep.iterations, 20);
        assert!(rep.records.iter().all(|r| r.tail_term == 0.0 && r.noise_norm == 0.0));
        assert!(rep.records.iter().filter(|r| r.ratio == 0.0).count() >= 9);
    }

    #[test]
    fn tail_norm() {
        assert_eq!(tail_l1(&[3.0, -1.0, 0.5, -2.0], 2), 1.5);
    }

    #[test]
    fn csv_header() {
        let out = run_mse_sweep(&MseSweepConfig { trials: 3, ..small_mse() }).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "p,snr_db,algorithm,mean_mse,stderr_mse,mean_l2,median_time_ms,mean_iterations,support_rate,trials,failures\n"
        ));
        assert_eq!(text.lines().count(), 1 + 12);
    }
}
