//! Randomized corpora for the inequality checkers.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::checks::{
    check_lemma1, check_prop1, check_prop2, check_theorem_error, check_theorem_residual, level_count, Instance,
};
use super::ric::RicTable;
use crate::error::{Error, Result};
use crate::experiments::{gen_matrix_with, gen_noise, gen_perturbed_orthonormal, trial_rng};
use crate::linalg::{add, IndexSet, Matrix};
use crate::pursuit::{gomp_solve, PursuitConfig};
use crate::signal::SparseSignal;

/// Stream offsets keeping the three corpora independent.
const LEMMA_STREAM: u64 = 1 << 40;
const PROP_STREAM: u64 = 2 << 40;
const THEOREM_STREAM: u64 = 3 << 40;

/// Largest extra iterations `l - k` and `dl` examined per instance.
const MAX_STEP: usize = 2;

fn d_lemma() -> usize {
    10_000
}
fn d_prop() -> usize {
    500
}
fn d_theorem() -> usize {
    100
}
fn d_theorem_m() -> usize {
    32
}
fn d_theorem_k() -> usize {
    2
}
fn d_theorem_s() -> usize {
    1
}
fn d_eps() -> f64 {
    0.02
}
fn d_noise() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_lemma")]
    pub lemma_pairs: usize,
    #[serde(default = "d_prop")]
    pub prop_instances: usize,
    #[serde(default = "d_theorem")]
    pub theorem_instances: usize,
    /// Theorem instances are `m x m` perturbed orthonormal matrices.
    #[serde(default = "d_theorem_m")]
    pub theorem_m: usize,
    #[serde(default = "d_theorem_k")]
    pub theorem_sparsity: usize,
    #[serde(default = "d_theorem_s")]
    pub theorem_selection: usize,
    /// Perturbation size `eps` in `Q + eps E`.
    #[serde(default = "d_eps")]
    pub perturbation: f64,
    /// Noise standard deviation relative to `1/sqrt(m)`.
    #[serde(default = "d_noise")]
    pub noise_level: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            lemma_pairs: d_lemma(),
            prop_instances: d_prop(),
            theorem_instances: d_theorem(),
            theorem_m: d_theorem_m(),
            theorem_sparsity: d_theorem_k(),
            theorem_selection: d_theorem_s(),
            perturbation: d_eps(),
            noise_level: d_noise(),
        }
    }
}

/// Violation count and worst slack of one inequality over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: usize,
    /// Checks skipped because a needed RIC was at least 1.
    pub vacuous: usize,
    pub violations: usize,
    /// Smallest `rhs - lhs` seen (negative means violated).
    pub worst_slack: f64,
}

impl Default for Tally {
    fn default() -> Self {
        Self {
            checked: 0,
            vacuous: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
        }
    }
}

impl Tally {
    fn record(&mut self, holds: bool, slack: f64, vacuous: bool) {
        if vacuous {
            self.vacuous += 1;
            return;
        }
        self.checked += 1;
        if !holds {
            self.violations += 1;
        }
        self.worst_slack = self.worst_slack.min(slack);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub instances: usize,
    pub residual_bound: Tally,
    pub residual_decrease: Tally,
    pub contraction: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub instances: usize,
    /// Draws rejected because `delta <= 1/8` could not be certified.
    pub uncertified: usize,
    pub max_delta: f64,
    pub residual: Tally,
    pub iterate_error: Tally,
    pub error: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub config: CorpusConfig,
    pub lemma1: Tally,
    pub propositions: PropositionReport,
    pub theorems: TheoremReport,
}

impl CorpusReport {
    pub fn total_violations(&self) -> usize {
        self.lemma1.violations
            + self.propositions.residual_bound.violations
            + self.propositions.residual_decrease.violations
            + self.propositions.contraction.violations
            + self.theorems.residual.violations
            + self.theorems.iterate_error.violations
            + self.theorems.error.violations
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn random_sparse<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(density) { normal(rng) } else { 0.0 })
        .collect()
}

/// Lemma pairs mix independent sparse vectors with nearly aligned ones, where
/// the bound is tight.
pub fn run_lemma_suite(pairs: usize, seed: u64) -> Result<Tally> {
    let mut tally = Tally::default();
    for i in 0..pairs {
        let mut rng = trial_rng(seed, LEMMA_STREAM + i as u64);
        let n = rng.random_range(1..=30);
        let s = rng.random_range(1..=3usize).min(n);
        let density = rng.random_range(0.2..0.9);
        let u = random_sparse(n, density, &mut rng);
        let z: Vec<f64> = if i % 2 == 0 {
            random_sparse(n, density, &mut rng)
        } else {
            let noise = rng.random_range(0.0..0.1);
            u.iter()
                .map(|&a| if a == 0.0 { 0.0 } else { a + noise * normal(&mut rng) })
                .collect()
        };
        let c = check_lemma1(&u, &z, s)?;
        tally.record(c.holds, c.rhs - c.lhs, false);
    }
    Ok(tally)
}

/// Tiny instances (`m <= 16`, `n <= 16`, `K <= 3`, `S <= 2`) with exact RICs;
/// every admissible `(k, l, dl, tau)` with `l - k, dl <= 2` is checked.
pub fn run_proposition_suite(instances: usize, seed: u64) -> Result<PropositionReport> {
    let mut rep = PropositionReport {
        instances,
        residual_bound: Tally::default(),
        residual_decrease: Tally::default(),
        contraction: Tally::default(),
    };
    for i in 0..instances {
        let mut rng = trial_rng(seed, PROP_STREAM + i as u64);
        let m = rng.random_range(10..=16);
        // alternate well-conditioned square matrices with wide Gaussian ones
        let phi = if i % 2 == 0 {
            let eps = rng.random_range(0.0..0.1);
            gen_perturbed_orthonormal(m, m, eps, &mut rng)?
        } else {
            let n = rng.random_range(m..=16);
            gen_matrix_with(m, n, &mut rng)?
        };
        let n = phi.cols();
        let k = rng.random_range(1..=3);
        let s = rng.random_range(1..=k.min(2));
        let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        let values = (0..k).map(|_| normal(&mut rng)).collect();
        let x = SparseSignal::new(n, IndexSet::new(support)?, values)?;
        let sd = [0.0, 0.01, 0.1][i % 3] / (m as f64).sqrt();
        let v = gen_noise(sd * sd, m, &mut rng);
        let y = add(&phi.mul_support(x.support(), x.values())?, &v);

        let iterations = 2 * MAX_STEP + 1;
        let cfg = PursuitConfig::gomp(k, s)
            .fixed_iterations()
            .with_max_iterations(iterations);
        let res = gomp_solve(&phi, &y, &cfg)?;
        let inst = Instance {
            phi: &phi,
            x: &x,
            v: &v,
            trace: &res.trace,
        };
        let mut rics = RicTable::new(&phi);
        for kk in 0..=MAX_STEP {
            let levels = level_count(&x, &res.trace, kk)?;
            for l in kk..=kk + MAX_STEP {
                for tau in 1..=levels {
                    let c = check_prop1(&inst, kk, l, tau, &mut rics)?;
                    if tau == 1 {
                        rep.residual_bound.record(c.holds_24, c.slack_24, false);
                    }
                    rep.residual_decrease.record(c.holds_25, c.slack_25, c.vacuous_25);
                    for dl in 1..=MAX_STEP.min(iterations - l) {
                        let c = check_prop2(&inst, kk, l, dl, tau, &mut rics)?;
                        rep.contraction.record(c.holds, c.slack, c.vacuous);
                    }
                }
                if levels == 0 && l == kk {
                    let gamma_empty_bound = check_prop1_bound_only(&inst, kk)?;
                    rep.residual_bound.record(gamma_empty_bound.0, gamma_empty_bound.1, false);
                }
            }
        }
    }
    Ok(rep)
}

/// `||r^k||^2 <= ||v||^2` once the support is covered.
fn check_prop1_bound_only(inst: &Instance, k: usize) -> Result<(bool, f64)> {
    let r = inst.trace.residual_norm(k).unwrap_or(0.0).powi(2);
    let rhs = crate::linalg::norm2_sq(inst.v);
    let slack = rhs - r;
    let tol = super::checks::CHECK_RTOL * (inst.trace.initial_residual_norm.powi(2) + rhs);
    Ok((slack >= -tol, slack))
}

/// Perturbed orthonormal `m x m` matrix, `K`-sparse Gaussian signal and white noise.
fn theorem_instance<R: Rng + ?Sized>(cfg: &CorpusConfig, rng: &mut R) -> Result<(Matrix, SparseSignal, Vec<f64>)> {
    let m = cfg.theorem_m;
    let phi = gen_perturbed_orthonormal(m, m, cfg.perturbation, rng)?;
    let k = cfg.theorem_sparsity;
    let mut support = rand::seq::index::sample(rng, m, k).into_vec();
    support.sort_unstable();
    let values = (0..k).map(|_| normal(rng)).collect();
    let x = SparseSignal::new(m, IndexSet::new(support)?, values)?;
    let sd = cfg.noise_level / (m as f64).sqrt();
    let v = gen_noise(sd * sd, m, rng);
    Ok((phi, x, v))
}

/// Residual and error bounds on certified instances. Draws whose RIC bound
/// exceeds `1/8` are redrawn and counted.
pub fn run_theorem_suite(cfg: &CorpusConfig) -> Result<TheoremReport> {
    let mut rep = TheoremReport {
        instances: 0,
        uncertified: 0,
        max_delta: 0.0,
        residual: Tally::default(),
        iterate_error: Tally::default(),
        error: Tally::default(),
    };
    let mut draw = 0u64;
    while rep.instances < cfg.theorem_instances {
        if rep.uncertified > 10 * cfg.theorem_instances.max(10) {
            return Err(Error::InvalidConfig(format!(
                "perturbation {} rarely certifies delta <= 1/8",
                cfg.perturbation
            )));
        }
        let mut rng = trial_rng(cfg.seed, THEOREM_STREAM + draw);
        draw += 1;
        let (phi, x, v) = theorem_instance(cfg, &mut rng)?;
        let s = cfg.theorem_selection;
        let (res, err) = match (check_theorem_residual(&phi, &x, &v, s), check_theorem_error(&phi, &x, &v, s)) {
            (Err(Error::NotCertified { .. }), _) | (_, Err(Error::NotCertified { .. })) => {
                rep.uncertified += 1;
                continue;
            }
            (a, b) => (a?, b?),
        };
        rep.instances += 1;
        rep.max_delta = rep.max_delta.max(err.delta);
        rep.residual.record(res.holds, res.bound - res.lhs, false);
        rep.iterate_error.record(err.holds_mu, err.mu_bound - err.iterate_error, false);
        rep.error.record(err.holds_c, err.c_bound - err.error, false);
    }
    Ok(rep)
}

pub fn run_corpus(cfg: &CorpusConfig) -> Result<CorpusReport> {
    Ok(CorpusReport {
        config: cfg.clone(),
        lemma1: run_lemma_suite(cfg.lemma_pairs, cfg.seed)?,
        propositions: run_proposition_suite(cfg.prop_instances, cfg.seed)?,
        theorems: run_theorem_suite(cfg)?,
    })
}
