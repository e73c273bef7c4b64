//! Problem generation, baselines and the Monte-Carlo simulation protocol.

pub mod baselines;
pub mod generate;
pub mod stats;
pub mod sweep;

pub use baselines::{linear_mmse, oracle_ls};
pub use generate::{
    gen_matrix, gen_matrix_with, gen_noise, gen_orthonormal, gen_perturbed_orthonormal, gen_signal, trial_rng,
    GeneratedSignal, SignalModel, Sparsity, TrialSpec, MAX_SNR_DB,
};
pub use sweep::{
    run_compressible, run_mse_sweep, run_timing_sweep, with_threads, write_compressible_csv, write_rows_csv,
    Algorithm, AlgoOutcome, CompressibleConfig, CompressibleRecord, CompressibleReport, Manifest, MatrixMode,
    MseSweepConfig, RatioSummary, SolverSparsity, SweepOutput, SweepRow, TimingSweepConfig, TrialRecord,
};
