use std::path::Path;
use std::process::ExitCode;

use gomp::experiments::{
    gen_matrix_with, gen_noise, gen_perturbed_orthonormal, gen_signal, run_compressible, run_mse_sweep,
    run_timing_sweep, trial_rng, with_threads, write_compressible_csv, write_rows_csv, CompressibleConfig, Manifest,
    MseSweepConfig, Sparsity, SweepOutput, TimingSweepConfig, TrialSpec,
};
use gomp::linalg::io::{read_matrix, read_vector_csv};
use gomp::linalg::{norm2, sub};
use gomp::theory::corpus::{run_corpus, CorpusConfig, CorpusReport};
use gomp::theory::{ric_exact, ric_monte_carlo, ric_upper_bound};
use gomp::{gomp_solve, Matrix, PursuitConfig, PursuitResult};
use serde::Serialize;

use crate::config::{
    load, relative_to, CliError, CliResult, RicConfig, RicMethod, SolveConfig, EXIT_VIOLATIONS,
};
use crate::output::{to_json, Sink};
use crate::{Command, Common, Format};

pub fn run(cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Solve(a) => solve(&a),
        Command::SweepMse(a) => sweep_mse(&a),
        Command::SweepTime(a) => sweep_time(&a),
        Command::Compressible(a) => compressible(&a),
        Command::VerifyTheory(a) => verify_theory(&a),
        Command::Ric(a) => ric(&a),
    }
}

fn threaded<T: Send>(a: &Common, f: impl FnOnce() -> gomp::Result<T> + Send) -> CliResult<T> {
    if a.threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    Ok(with_threads(a.threads, f)??)
}

fn sink(a: &Common) -> Sink {
    Sink { out: a.out.clone() }
}

fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> gomp::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct Truth {
    support: Vec<usize>,
    values: Vec<f64>,
    noise_norm: f64,
    error_l2: f64,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(flatten)]
    result: &'a PursuitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<Truth>,
}

fn solve(a: &Common) -> CliResult<ExitCode> {
    let mut cfg: SolveConfig = load(&a.config)?;
    let pursuit = PursuitConfig {
        sparsity: cfg.sparsity,
        selection_size: cfg.selection_size,
        residual_threshold: cfg.residual_threshold,
        max_iterations: cfg.max_iterations,
        stopping_mode: cfg.stopping_mode,
    };
    let (phi, y, truth) = match (&cfg.matrix, &cfg.measurements, cfg.generate.as_mut()) {
        (Some(mp), Some(yp), None) => {
            let phi = read_matrix(relative_to(&a.config, mp))?;
            let y = read_vector_csv(relative_to(&a.config, yp))?;
            pursuit.resolve(phi.rows(), phi.cols())?;
            (phi, y, None)
        }
        (None, None, Some(g)) => {
            if let Some(seed) = a.seed {
                g.seed = seed;
            }
            let spec = TrialSpec {
                m: g.m,
                n: g.n,
                sparsity: Sparsity::Fixed(cfg.sparsity),
                selection_size: cfg.selection_size,
                snr_db: g.snr_db,
                seed: g.seed,
                signal_model: g.signal_model,
            };
            spec.validate()?;
            pursuit.resolve(g.m, g.n)?;
            let mut rng = trial_rng(spec.seed, 0);
            let phi = gen_matrix_with(spec.m, spec.n, &mut rng)?;
            let x = gen_signal(&spec, cfg.selection_size, &mut rng)?.signal;
            let v = gen_noise(spec.noise_variance(), spec.m, &mut rng);
            let clean = phi.mul_vec(&x.to_dense())?;
            let y: Vec<f64> = clean.iter().zip(&v).map(|(s, e)| s + e).collect();
            (phi, y, Some((x, norm2(&v))))
        }
        _ => {
            return Err(CliError::config(
                "solve needs either `matrix` and `measurements` or a [generate] table",
            ))
        }
    };
    let result = gomp_solve(&phi, &y, &pursuit)?;
    let truth = truth.map(|(x, noise_norm)| Truth {
        support: x.support().as_slice().to_vec(),
        values: x.values().to_vec(),
        noise_norm,
        error_l2: norm2(&sub(&result.estimate, &x.to_dense())),
    });
    let bytes = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SolveOutput {
            result: &result,
            truth,
        })?,
        Format::Csv => {
            let mut s = String::from("index,estimate\n");
            for &j in result.support.iter() {
                s.push_str(&format!("{j},{}\n", result.estimate[j]));
            }
            s.into_bytes()
        }
    };
    sink(a).emit(&bytes)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TableOutput<'a, T: Serialize> {
    manifest: &'a Manifest,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct Rows<'a> {
    rows: &'a [gomp::experiments::SweepRow],
}

fn emit_sweep<C: Serialize>(a: &Common, command: &str, seed: u64, cfg: &C, out: &SweepOutput) -> CliResult<()> {
    let manifest = Manifest::new(command, seed, cfg, out.rows.len(), out.total_failures(), out.clamped_iterations)?;
    let sink = sink(a);
    match a.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            sink.emit(&csv_text(|buf| write_rows_csv(&out.rows, buf))?)?;
            if let Some(p) = sink.manifest_path() {
                crate::output::write_atomic(&p, &to_json(&manifest)?)?;
            }
        }
        Format::Json => sink.emit(&to_json(&TableOutput {
            manifest: &manifest,
            body: Rows { rows: &out.rows },
        })?)?,
    }
    Ok(())
}

fn sweep_mse(a: &Common) -> CliResult<ExitCode> {
    let mut cfg: MseSweepConfig = load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let out = threaded(a, || run_mse_sweep(&cfg))?;
    emit_sweep(a, "sweep-mse", cfg.seed, &cfg, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_time(a: &Common) -> CliResult<ExitCode> {
    let mut cfg: TimingSweepConfig = load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let out = threaded(a, || run_timing_sweep(&cfg))?;
    emit_sweep(a, "sweep-time", cfg.seed, &cfg, &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    report: &'a R,
}

fn compressible(a: &Common) -> CliResult<ExitCode> {
    let mut cfg: CompressibleConfig = load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let rep = threaded(a, || run_compressible(&cfg))?;
    let manifest = Manifest::new(
        "compressible",
        cfg.seed,
        &cfg,
        rep.records.len(),
        rep.failures,
        rep.clamped_iterations,
    )?;
    let sink = sink(a);
    match a.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            sink.emit(&csv_text(|buf| write_compressible_csv(&rep.records, buf))?)?;
            if let Some(p) = sink.manifest_path() {
                let with_summary = serde_json::json!({ "manifest": manifest, "summary": rep.summary, "iterations": rep.iterations });
                crate::output::write_atomic(&p, &to_json(&with_summary)?)?;
            }
        }
        Format::Json => sink.emit(&to_json(&TableOutput {
            manifest: &manifest,
            body: Report { report: &rep },
        })?)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn tally_csv(rep: &CorpusReport) -> Vec<u8> {
    let rows = [
        ("lemma1", &rep.lemma1),
        ("prop1_residual_bound", &rep.propositions.residual_bound),
        ("prop1_residual_decrease", &rep.propositions.residual_decrease),
        ("prop2_contraction", &rep.propositions.contraction),
        ("theorem_residual", &rep.theorems.residual),
        ("theorem_iterate_error", &rep.theorems.iterate_error),
        ("theorem_error", &rep.theorems.error),
    ];
    let mut s = String::from("inequality,checked,vacuous,violations,worst_slack\n");
    for (name, t) in rows {
        s.push_str(&format!("{name},{},{},{},{:e}\n", t.checked, t.vacuous, t.violations, t.worst_slack));
    }
    s.into_bytes()
}

fn verify_theory(a: &Common) -> CliResult<ExitCode> {
    let mut cfg: CorpusConfig = load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let rep = threaded(a, || run_corpus(&cfg))?;
    let bytes = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&serde_json::json!({
            "total_violations": rep.total_violations(),
            "report": rep,
        }))?,
        Format::Csv => tally_csv(&rep),
    };
    sink(a).emit(&bytes)?;
    eprintln!("{} violations", rep.total_violations());
    if rep.total_violations() > 0 {
        return Ok(ExitCode::from(EXIT_VIOLATIONS));
    }
    Ok(ExitCode::SUCCESS)
}

fn ric_matrix(cfg: &RicConfig, config_path: &Path) -> CliResult<Matrix> {
    match (&cfg.matrix, &cfg.generate) {
        (Some(p), None) => Ok(read_matrix(relative_to(config_path, p))?),
        (None, Some(g)) => {
            let mut rng = trial_rng(cfg.seed, 0);
            Ok(match g.perturbation {
                Some(eps) => gen_perturbed_orthonormal(g.m, g.n, eps, &mut rng)?,
                None => gen_matrix_with(g.m, g.n, &mut rng)?,
            })
        }
        _ => Err(CliError::config("ric needs either `matrix` or a [generate] table")),
    }
}

fn ric(a: &Common) -> CliResult<ExitCode> {
    let mut cfg: RicConfig = load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let phi = ric_matrix(&cfg, &a.config)?;
    let est = match cfg.method {
        RicMethod::Exact => ric_exact(&phi, cfg.order)?,
        RicMethod::MonteCarlo => ric_monte_carlo(&phi, cfg.order, cfg.trials, cfg.seed)?,
        RicMethod::UpperBound => ric_upper_bound(&phi, cfg.order)?,
    };
    let bytes = match a.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&est)?,
        Format::Csv => {
            let kind = serde_json::to_value(est.kind).map_err(|e| CliError::config(e.to_string()))?;
            format!(
                "order,kind,delta,witness\n{},{},{},{}\n",
                est.order,
                kind.as_str().unwrap_or_default(),
                est.delta,
                est.witness.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ")
            )
            .into_bytes()
        }
    };
    sink(a).emit(&bytes)?;
    Ok(ExitCode::SUCCESS)
}
