//! Configuration files and the error type shared by the commands.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use gomp::experiments::SignalModel;
use gomp::StoppingMode;
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub code: u8,
}

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_VIOLATIONS: u8 = 5;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: "invalid_config".into(),
            message: message.into(),
            code: EXIT_CONFIG,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: "io".into(),
            message: format!("{}: {err}", path.display()),
            code: EXIT_IO,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message },
            "exit_code": self.code,
        })
        .to_string()
    }
}

impl From<gomp::Error> for CliError {
    fn from(e: gomp::Error) -> Self {
        let code = match e.kind() {
            "invalid_config" | "invalid_argument" | "dimension" | "parse" => EXIT_CONFIG,
            "budget_exceeded" => EXIT_BUDGET,
            "io" => EXIT_IO,
            _ => EXIT_NUMERIC,
        };
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
            code,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reads `path` as JSON when it ends in `.json`, TOML otherwise.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Resolves a path from a config file against the file's directory.
pub fn relative_to(config: &Path, p: &Path) -> PathBuf {
    match config.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn gaussian_bernoulli() -> SignalModel {
    SignalModel::GaussianBernoulli
}

/// A random instance for `solve`: Gaussian `Phi`, exactly `K`-sparse `x`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub m: usize,
    pub n: usize,
    /// `None` means noiseless.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "gaussian_bernoulli")]
    pub signal_model: SignalModel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub sparsity: usize,
    #[serde(default = "one")]
    pub selection_size: usize,
    #[serde(default)]
    pub residual_threshold: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub stopping_mode: StoppingMode,
    /// CSV, or binary when the name ends in `.bin`.
    #[serde(default)]
    pub matrix: Option<PathBuf>,
    #[serde(default)]
    pub measurements: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<GenerateSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RicMethod {
    #[default]
    Exact,
    MonteCarlo,
    /// Exact when affordable, else the order-`n` constant.
    UpperBound,
}

/// Gaussian `N(0, 1/m)` matrix, or `Q + eps E` with orthonormal `Q` when
/// `perturbation` is set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub perturbation: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RicConfig {
    pub order: usize,
    #[serde(default)]
    pub method: RicMethod,
    #[serde(default = "default_ric_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub matrix: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<MatrixSpec>,
}

fn default_ric_trials() -> usize {
    10_000
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let e: CliError = gomp::Error::InvalidConfig("x".into()).into();
        assert_eq!(e.code, EXIT_CONFIG);
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "invalid_config");
        assert_eq!(v["exit_code"], 2);
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let p = relative_to(Path::new("runs/a.toml"), Path::new("phi.csv"));
        assert_eq!(p, Path::new("runs/phi.csv"));
        assert_eq!(relative_to(Path::new("a.toml"), Path::new("/x/phi.csv")), Path::new("/x/phi.csv"));
    }

    #[test]
    fn solve_defaults_to_omp() {
        let c: SolveConfig = toml::from_str("sparsity = 4").unwrap();
        assert_eq!(c.selection_size, 1);
        assert!(c.generate.is_none());
    }
}
