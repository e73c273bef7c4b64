//! Acceptance suite. Each test prints one `ACCEPTANCE <id> PASS|FAIL` line
//! straight to stderr so the summary survives output capture.

use std::io::Write;
use std::time::{Duration, Instant};

use gomp::experiments::{
    gen_matrix_with, gen_noise, gen_orthonormal, gen_signal, run_mse_sweep, run_timing_sweep, stats, trial_rng,
    write_rows_csv, Algorithm, MseSweepConfig, SignalModel, Sparsity, TimingSweepConfig, TrialSpec,
};
use gomp::linalg::norm2;
use gomp::theory::corpus::{run_lemma_suite, run_proposition_suite, run_theorem_suite, CorpusConfig};
use gomp::theory::{bound_constants, partition, ric_exact, ric_monte_carlo};
use gomp::{gomp_solve, IndexSet, Matrix, PursuitConfig, SparseSignal};
use rand::Rng;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "ACCEPTANCE {id:>2} {verdict} {name} ({:.2} s) {detail}",
        elapsed.as_secs_f64()
    );
}

#[test]
fn a01_bound_constants() {
    let start = Instant::now();
    let b = bound_constants(0.05).unwrap();
    let elapsed = start.elapsed();
    let pass = b.mu_k > 48.0
        && b.mu_k <= 49.0
        && b.mu > 51.0
        && b.mu <= 52.0
        && b.c > 109.0
        && b.c <= 110.0
        && elapsed < Duration::from_millis(1);
    let detail = format!("mu_k={:.4} mu={:.4} C={:.4}", b.mu_k, b.mu, b.c);
    report(1, "bound constants at delta=0.05", pass, elapsed, &detail);
    assert!(pass, "{detail} in {elapsed:?}");
}

#[test]
fn a02_noise_calibration() {
    let start = Instant::now();
    let spec = TrialSpec {
        m: 100,
        n: 200,
        sparsity: Sparsity::Rate(0.05),
        selection_size: 3,
        snr_db: Some(10.0),
        seed: 2,
        signal_model: SignalModel::GaussianBernoulli,
    };
    let var = spec.noise_variance();
    let norms: Vec<f64> = (0..2000)
        .map(|t| norm2(&gen_noise(var, spec.m, &mut trial_rng(spec.seed, t))))
        .collect();
    let mean = stats::mean(&norms);
    let elapsed = start.elapsed();
    let pass = (0.97..=1.03).contains(&mean) && elapsed < Duration::from_secs(5);
    let detail = format!("mean ||v|| = {mean:.4}");
    report(2, "noise calibration at 10 dB", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn a03_recovery_error_magnitude() {
    let start = Instant::now();
    let cfg = MseSweepConfig {
        rates: vec![0.05],
        trials: 2000,
        seed: 3,
        algorithms: vec![Algorithm::Gomp],
        ..MseSweepConfig::default()
    };
    let out = run_mse_sweep(&cfg).unwrap();
    let elapsed = start.elapsed();
    let at10 = out.row(0.05, Some(10.0), "gomp_s3").unwrap();
    let snrs: Vec<f64> = out.rows.iter().map(|r| r.snr_db.unwrap()).collect();
    let mses: Vec<f64> = out.rows.iter().map(|r| r.mean_mse).collect();
    let rho = stats::spearman(&snrs, &mses);
    let pass = (0.5..=2.0).contains(&at10.mean_l2)
        && snrs.len() >= 5
        && rho < -0.9
        && out.total_failures() == 0
        && elapsed < Duration::from_secs(120);
    let detail = format!(
        "mean l2 at 10 dB = {:.4}, spearman = {rho:.3} over {} SNR points",
        at10.mean_l2,
        snrs.len()
    );
    report(3, "gOMP recovery error and SNR trend", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn a04_theorem_error_bound() {
    let start = Instant::now();
    let cfg = CorpusConfig {
        theorem_instances: 100,
        ..CorpusConfig::default()
    };
    let rep = run_theorem_suite(&cfg).unwrap();
    let elapsed = start.elapsed();
    let pass = rep.instances == 100
        && rep.error.checked == 100
        && rep.error.violations == 0
        && rep.max_delta <= 0.125
        && elapsed < Duration::from_secs(600);
    let detail = format!(
        "{} certified instances, max delta {:.4}, {} violations, worst slack {:.3e}, {} uncertified draws",
        rep.error.checked, rep.max_delta, rep.error.violations, rep.error.worst_slack, rep.uncertified
    );
    report(4, "error bound C||v|| on certified matrices", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

fn random_sparse<R: Rng>(n: usize, k: usize, rng: &mut R) -> SparseSignal {
    let support = rand::seq::index::sample(rng, n, k).into_vec();
    let values = support
        .iter()
        .map(|_| {
            let v: f64 = rng.random_range(0.1..2.0);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    SparseSignal::new(n, IndexSet::new(support).unwrap(), values).unwrap()
}

fn recovers_exactly(phi: &Matrix, x: &SparseSignal, s: usize) -> bool {
    let y = phi.mul_vec(&x.to_dense()).unwrap();
    let res = gomp_solve(phi, &y, &PursuitConfig::gomp(x.sparsity(), s)).unwrap();
    res.residual_norm <= 1e-8 && res.support == *x.support()
}

#[test]
fn a05_noiseless_recovery() {
    let start = Instant::now();
    let mut rng = trial_rng(5, 0);
    let ident = Matrix::identity(40);
    let mut structured_ok = true;
    for k in 1..=10 {
        for s in 1..=k.min(4) {
            let x = random_sparse(40, k, &mut rng);
            structured_ok &= recovers_exactly(&ident, &x, s);
            let q = gen_orthonormal(60, 30, &mut rng).unwrap();
            let x = random_sparse(30, k, &mut rng);
            structured_ok &= recovers_exactly(&q, &x, s);
        }
    }

    let spec = TrialSpec {
        m: 100,
        n: 200,
        sparsity: Sparsity::Fixed(10),
        selection_size: 3,
        snr_db: None,
        seed: 5,
        signal_model: SignalModel::GaussianBernoulli,
    };
    let hits = (0..500u64)
        .filter(|&t| {
            let mut rng = trial_rng(spec.seed, t + 1);
            let phi = gen_matrix_with(spec.m, spec.n, &mut rng).unwrap();
            let x = gen_signal(&spec, 3, &mut rng).unwrap().signal;
            recovers_exactly(&phi, &x, 3)
        })
        .count();
    let rate = hits as f64 / 500.0;
    let elapsed = start.elapsed();
    let pass = structured_ok && rate >= 0.95;
    let detail = format!("identity/orthonormal exact: {structured_ok}, Gaussian support rate {rate:.3}");
    report(5, "noiseless exact recovery", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn a06_lemma_and_proposition_suites() {
    let start = Instant::now();
    let lemma = run_lemma_suite(10_000, 6).unwrap();
    let props = run_proposition_suite(500, 6).unwrap();
    let elapsed = start.elapsed();
    let tallies = [
        ("lemma1", &lemma),
        ("prop1 residual bound", &props.residual_bound),
        ("prop1 decrease", &props.residual_decrease),
        ("prop2 contraction", &props.contraction),
    ];
    let pass = lemma.checked == 10_000
        && props.instances == 500
        && tallies.iter().all(|(_, t)| t.violations == 0 && t.checked > 0)
        && elapsed < Duration::from_secs(900);
    let detail = tallies
        .iter()
        .map(|(name, t)| format!("{name}: {}/{} violated ({} vacuous)", t.violations, t.checked, t.vacuous))
        .collect::<Vec<_>>()
        .join("; ");
    report(6, "lemma and proposition corpora", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn a07_partition_invariants() {
    let start = Instant::now();
    let mut rng = trial_rng(7, 0);
    let mut failures = Vec::new();
    for draw in 0..10_000 {
        let n = rng.random_range(1..=64);
        let density = rng.random_range(0.05..1.0);
        let dense: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(density) {
                    // a few heavy entries keep every level reachable
                    rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-3..3))
                } else {
                    0.0
                }
            })
            .collect();
        let x = SparseSignal::from_dense(&dense).unwrap();
        let keep = rng.random_range(0.0..1.0);
        let tk: Vec<usize> = (0..n).filter(|_| rng.random_bool(keep)).collect();
        let s = rng.random_range(1..=8);
        let rep = partition(&x, &IndexSet::new(tk).unwrap(), s).unwrap();
        let bad = rep.verify();
        if !bad.is_empty() {
            failures.push((draw, bad));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    let mut detail = format!("{} of 10000 draws violate an invariant", failures.len());
    if let Some(first) = failures.first() {
        detail.push_str(&format!(", first: {first:?}"));
    }
    report(7, "partition invariants", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

// max over column pairs of the largest deviation of the 2x2 Gram eigenvalues from 1
fn pair_ric_oracle(phi: &Matrix) -> f64 {
    let n = phi.cols();
    let dot = |a: usize, b: usize| -> f64 { phi.column(a).iter().zip(phi.column(b)).map(|(u, v)| u * v).sum() };
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b, c) = (dot(i, i), dot(j, j), dot(i, j));
            let mid = 0.5 * (a + b);
            let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
            best = best.max((mid + rad - 1.0).abs()).max((1.0 - (mid - rad)).abs());
        }
    }
    best
}

#[test]
fn a08_ric_oracle_agreement() {
    let start = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut mc_above = 0;
    for t in 0..100 {
        let mut rng = trial_rng(8, t);
        let phi = gen_matrix_with(6, 10, &mut rng).unwrap();
        let exact = ric_exact(&phi, 2).unwrap().delta;
        worst_gap = worst_gap.max((exact - pair_ric_oracle(&phi)).abs());
        for trials in [1, 5, 45, 200] {
            if ric_monte_carlo(&phi, 2, trials, t).unwrap().delta > exact {
                mc_above += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_gap <= 1e-12 && mc_above == 0 && elapsed < Duration::from_secs(60);
    let detail = format!("max |exact - oracle| = {worst_gap:.2e}, Monte-Carlo above exact {mc_above} times");
    report(8, "RIC oracle agreement", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn a09_timing() {
    let start = Instant::now();
    let cfg = TimingSweepConfig {
        rates: vec![0.1],
        trials: 200,
        seed: 9,
        ..TimingSweepConfig::default()
    };
    let out = run_timing_sweep(&cfg).unwrap();
    let elapsed = start.elapsed();
    let omp = out.row(0.1, None, "omp").unwrap();
    let g = out.row(0.1, None, "gomp_s3").unwrap();
    let pass = omp.trials >= 200 && g.trials >= 200 && g.median_time_ms <= omp.median_time_ms;
    let detail = format!(
        "median gOMP {:.3} ms vs OMP {:.3} ms over {} instances",
        g.median_time_ms, omp.median_time_ms, g.trials
    );
    report(9, "gOMP faster than OMP at p=0.1", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

fn csv_without_timing(cfg: &MseSweepConfig, threads: Option<usize>) -> String {
    let out = gomp::experiments::with_threads(threads, || run_mse_sweep(cfg)).unwrap().unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&out.rows, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let drop = headers.iter().position(|h| h == "median_time_ms").unwrap();
    let mut text = String::new();
    for rec in std::iter::once(headers).chain(rdr.records().map(|r| r.unwrap())) {
        let fields: Vec<&str> = rec.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, f)| f).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    text
}

#[test]
fn a10_determinism() {
    let start = Instant::now();
    let cfg = MseSweepConfig {
        snr_db: vec![0.0, 20.0, 40.0],
        trials: 60,
        seed: 10,
        ..MseSweepConfig::default()
    };
    let first = csv_without_timing(&cfg, None);
    let second = csv_without_timing(&cfg, Some(1));
    let third = csv_without_timing(&cfg, Some(3));
    let elapsed = start.elapsed();
    let pass = first == second && second == third && first.lines().count() == 1 + 2 * 3 * 4;
    let detail = format!("{} CSV lines, identical across runs: {}", first.lines().count(), first == second && second == third);
    report(10, "sweep determinism", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}
