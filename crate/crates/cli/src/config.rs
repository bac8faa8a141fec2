//! Experiment configuration: the JSON file, command-line overrides and the
//! fully resolved form echoed into `manifest.json`.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use linproc_core::lsd::{EquationVariant, LsdGrid, SolverConfig};
use linproc_core::process::{CoefficientModel, InnovationDistribution, InnovationSpec, ProcessSpec, DEFAULT_TAIL_TOL};
use linproc_core::verify::DEFAULT_BUDGET;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Solve,
    Compare,
    Calibrate,
    Study,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Simulate => "simulate",
            Command::Solve => "solve",
            Command::Compare => "compare",
            Command::Calibrate => "calibrate",
            Command::Study => "study",
        };
        f.write_str(name)
    }
}

pub const DEFAULT_N: usize = 256;
pub const DEFAULT_SIZES: [usize; 4] = [64, 128, 256, 512];
pub const DEFAULT_OUT: &str = "linproc-out";

/// A validation failure tied to one configuration key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// The file as written; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub model: Option<CoefficientModel>,
    pub innovations: Option<InnovationDistribution>,
    pub horizon: Option<usize>,
    pub tail_tol: Option<f64>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub y: Option<f64>,
    pub sizes: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub variant: Option<EquationVariant>,
    /// Variants compared by `compare`; defaults to `[variant]`.
    pub variants: Option<Vec<EquationVariant>>,
    pub solver: Option<SolverConfig>,
    pub grid: Option<LsdGrid>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub budget_entries: Option<u128>,
    pub keep_eigenvalues: Option<bool>,
}

impl FileConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            // the path ends in the offending key, unknown ones included
            let path = e.path().to_string();
            let key = if path == "." { "<file>".to_string() } else { path };
            let msg = e.inner().to_string();
            ConfigError { key, message: msg }
        })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub variant: Option<EquationVariant>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub y: Option<f64>,
    pub replicates: Option<usize>,
}

fn take<T: PartialEq + fmt::Debug>(key: &str, file: &mut Option<T>, flag: Option<T>) {
    if let Some(v) = flag {
        if let Some(old) = file.as_ref().filter(|old| **old != v) {
            log::info!("flag --{key} {v:?} overrides config value {old:?}");
        }
        *file = Some(v);
    }
}

impl Overrides {
    pub fn apply(self, file: &mut FileConfig) {
        let dims_flagged = self.p.is_some() || self.n.is_some();
        let y_flagged = self.y.is_some();
        take("command", &mut file.command, self.command);
        take("seed", &mut file.seed, self.seed);
        take("out", &mut file.out, self.out);
        take("jobs", &mut file.jobs, self.jobs);
        take("variant", &mut file.variant, self.variant);
        take("p", &mut file.p, self.p);
        take("n", &mut file.n, self.n);
        take("y", &mut file.y, self.y);
        take("replicates", &mut file.replicates, self.replicates);
        // a file ratio would otherwise contradict flag-supplied p and n
        if dims_flagged && !y_flagged && file.p.is_some() && file.n.is_some() {
            if let Some(y) = file.y.take() {
                log::info!("config value y = {y} dropped in favour of p/n from flags");
            }
        }
    }
}

/// Fully resolved configuration. `p`, `n` are set for the matrix commands,
/// `sizes` for `study`; `y` is always set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub process: ProcessSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    pub replicates: usize,
    pub seed: u64,
    pub variant: EquationVariant,
    pub variants: Vec<EquationVariant>,
    pub solver: SolverConfig,
    pub grid: LsdGrid,
    pub out: PathBuf,
    /// Worker threads; does not change any output except the manifest.
    #[serde(skip)]
    pub jobs: Option<usize>,
    pub budget_entries: u128,
    pub keep_eigenvalues: bool,
}

fn default_replicates(command: Command) -> usize {
    match command {
        Command::Simulate | Command::Compare | Command::Solve => 1,
        Command::Calibrate => 10,
        Command::Study => 5,
    }
}

fn positive_ratio(key: &str, y: f64) -> Result<f64, ConfigError> {
    if y > 0.0 && y.is_finite() {
        Ok(y)
    } else {
        Err(ConfigError::new(key, format!("must be a positive finite number, got {y}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize, ConfigError> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, "must be >= 1"))
    }
}

/// `(p, n)` from any two of `p`, `n`, `y`; a given `y` must agree with `p/n`.
fn matrix_dims(p: Option<usize>, n: Option<usize>, y: Option<f64>) -> Result<(usize, usize), ConfigError> {
    let y = y.map(|v| positive_ratio("y", v)).transpose()?;
    let (p, n) = match (p, n) {
        (Some(p), Some(n)) => (p, n),
        (Some(p), None) => {
            let n = (p as f64 / y.unwrap_or(1.0)).round() as usize;
            (p, n.max(1))
        }
        (None, Some(n)) => ((y.unwrap_or(1.0) * n as f64).round().max(1.0) as usize, n),
        (None, None) => ((y.unwrap_or(1.0) * DEFAULT_N as f64).round().max(1.0) as usize, DEFAULT_N),
    };
    let p = at_least_one("p", p)?;
    let n = at_least_one("n", n)?;
    if let Some(y) = y {
        let ratio = p as f64 / n as f64;
        if (ratio - y).abs() > 0.5 / n as f64 {
            return Err(ConfigError::new(
                "y",
                format!("{y} conflicts with p/n = {p}/{n} = {ratio}"),
            ));
        }
    }
    Ok((p, n))
}

impl ExperimentConfig {
    /// Fills documented defaults and validates every field.
    pub fn resolve(file: FileConfig) -> Result<Self, ConfigError> {
        let command = file
            .command
            .ok_or_else(|| ConfigError::new("command", "missing; one of simulate, solve, compare, calibrate, study"))?;
        let model = file.model.unwrap_or(CoefficientModel::WhiteNoise);
        let seed = file.seed.unwrap_or(0);
        let mut process = ProcessSpec::new(model, InnovationSpec::new(file.innovations.unwrap_or_default(), seed));
        process.horizon = file.horizon;
        process.tail_tol = file.tail_tol.unwrap_or(DEFAULT_TAIL_TOL);
        process.validate().map_err(|e| {
            let key = if file.horizon.is_some() && e.to_string().contains("horizon") {
                "horizon"
            } else if !(process.tail_tol > 0.0 && process.tail_tol < 1.0) {
                "tail_tol"
            } else {
                "model"
            };
            ConfigError::new(key, e.to_string())
        })?;

        let (p, n, y, sizes) = match command {
            Command::Solve => {
                let y = match (file.y, file.p, file.n) {
                    (Some(y), _, _) => positive_ratio("y", y)?,
                    (None, Some(p), Some(n)) => at_least_one("p", p)? as f64 / at_least_one("n", n)? as f64,
                    _ => 1.0,
                };
                (None, None, y, None)
            }
            Command::Study => {
                let y = positive_ratio("y", file.y.unwrap_or(1.0))?;
                let sizes = file.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
                if sizes.is_empty() || sizes.contains(&0) {
                    return Err(ConfigError::new("sizes", "must be a non-empty list of positive n"));
                }
                if sizes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ConfigError::new("sizes", "must be strictly ascending"));
                }
                (None, None, y, Some(sizes))
            }
            _ => {
                let (p, n) = matrix_dims(file.p, file.n, file.y)?;
                (Some(p), Some(n), p as f64 / n as f64, None)
            }
        };
        if command != Command::Study && file.sizes.is_some() {
            log::warn!("`sizes` is only used by study; ignored for {command}");
        }

        let replicates = at_least_one("replicates", file.replicates.unwrap_or(default_replicates(command)))?;
        let jobs = file.jobs.map(|j| at_least_one("jobs", j)).transpose()?;
        let variant = file.variant.unwrap_or_default();
        let variants = file.variants.unwrap_or_else(|| vec![variant]);
        if variants.is_empty() {
            return Err(ConfigError::new("variants", "must not be empty"));
        }
        let solver = file.solver.unwrap_or_default();
        solver.validate().map_err(|e| ConfigError::new("solver", e.to_string()))?;
        let grid = file.grid.unwrap_or_default();
        if grid.points < 2 {
            return Err(ConfigError::new("grid", "points must be >= 2"));
        }
        if let Some(x) = grid.x_max.filter(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(ConfigError::new("grid", format!("x_max must be positive, got {x}")));
        }
        let budget_entries = file.budget_entries.unwrap_or(DEFAULT_BUDGET);
        if budget_entries == 0 {
            return Err(ConfigError::new("budget_entries", "must be >= 1"));
        }
        let out = file.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        if out.exists() && !out.is_dir() {
            return Err(ConfigError::new("out", format!("{} exists and is not a directory", out.display())));
        }
        Ok(ExperimentConfig {
            command,
            process,
            p,
            n,
            y,
            sizes,
            replicates,
            seed,
            variant,
            variants,
            solver,
            grid,
            out,
            jobs,
            budget_entries,
            keep_eigenvalues: file.keep_eigenvalues.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(json: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::resolve(FileConfig::from_json(json)?)
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = resolve(r#"{"command":"solve","model":{"kind":"white_noise"},"y":1.0}"#).unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.y, 1.0);
        assert_eq!(c.variant, EquationVariant::default());
        assert_eq!(c.variants, vec![EquationVariant::default()]);
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.grid, LsdGrid::default());
        assert_eq!(c.seed, 0);
        assert_eq!(c.replicates, 1);
        assert_eq!(c.budget_entries, DEFAULT_BUDGET);
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
        assert_eq!(c.process.tail_tol, DEFAULT_TAIL_TOL);
        assert!(c.p.is_none() && c.n.is_none());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = resolve(r#"{"command":"solve","ratoi":0.5}"#).unwrap_err();
        assert_eq!(err.key, "ratoi");
        assert!(err.to_string().contains("ratoi"));
        let err = resolve(r#"{"command":"solve","solver":{"dampng":0.5}}"#).unwrap_err();
        assert_eq!(err.key, "solver.dampng");
    }

    #[test]
    fn flags_win_over_file() {
        let mut file = FileConfig::from_json(r#"{"command":"simulate","p":128,"n":512,"seed":3}"#).unwrap();
        Overrides {
            p: Some(256),
            ..Default::default()
        }
        .apply(&mut file);
        let c = ExperimentConfig::resolve(file).unwrap();
        assert_eq!(c.p, Some(256));
        assert_eq!(c.n, Some(512));
        assert_eq!(c.y, 0.5);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn dimensions_from_two_of_three() {
        let c = resolve(r#"{"command":"compare","p":100,"y":0.5}"#).unwrap();
        assert_eq!((c.p, c.n), (Some(100), Some(200)));
        let c = resolve(r#"{"command":"compare","n":300,"y":2.0}"#).unwrap();
        assert_eq!((c.p, c.n), (Some(600), Some(300)));
        let c = resolve(r#"{"command":"compare"}"#).unwrap();
        assert_eq!((c.p, c.n), (Some(DEFAULT_N), Some(DEFAULT_N)));
        let err = resolve(r#"{"command":"compare","p":100,"n":100,"y":0.5}"#).unwrap_err();
        assert_eq!(err.key, "y");
    }

    #[test]
    fn ranges_are_checked() {
        assert_eq!(resolve(r#"{"command":"solve","y":-1}"#).unwrap_err().key, "y");
        assert_eq!(resolve(r#"{"command":"simulate","p":0,"n":5}"#).unwrap_err().key, "p");
        assert_eq!(resolve(r#"{"command":"study","sizes":[64,32]}"#).unwrap_err().key, "sizes");
        assert_eq!(resolve(r#"{"command":"calibrate","replicates":0}"#).unwrap_err().key, "replicates");
        assert_eq!(resolve(r#"{"command":"solve","solver":{"damping":2.0}}"#).unwrap_err().key, "solver");
        assert_eq!(
            resolve(r#"{"command":"solve","model":{"kind":"ar1","phi":1.2}}"#).unwrap_err().key,
            "model"
        );
        assert_eq!(resolve(r#"{"y":1.0}"#).unwrap_err().key, "command");
        assert_eq!(resolve(r#"{"command":"solve","variant":"odd"}"#).unwrap_err().key, "variant");
        assert_eq!(resolve(r#"{"command":"solve","p":"x"}"#).unwrap_err().key, "p");
    }

    #[test]
    fn per_command_replicate_defaults() {
        assert_eq!(resolve(r#"{"command":"calibrate"}"#).unwrap().replicates, 10);
        let s = resolve(r#"{"command":"study","y":0.5}"#).unwrap();
        assert_eq!(s.replicates, 5);
        assert_eq!(s.sizes.unwrap(), DEFAULT_SIZES.to_vec());
    }
}
