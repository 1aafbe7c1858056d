//! Command-line flags, the optional JSON config file, and the validated
//! [`RunConfig`] both resolve into.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pqk_core::analysis::{BoundKind, ParamSequence, DEFAULT_LOCAL_C};
use pqk_core::{FunctionSpec, IntegralOptions, PQParams, MAX_DEGREE};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pqk",
    version,
    about = "(p,q)-Bernstein-Kantorovich operator experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Closed-form moments and error scales over an x grid
    Moments(Flags),
    /// Operator curve x, f(x), K_n(f;x)
    Eval(Flags),
    /// Sup-norm errors along a parameter sequence
    Converge(Flags),
    /// Pointwise actual error against a theoretical bound
    Bounds(Flags),
    /// Multi-series curve data for a figure preset
    Figure(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Moments(_) => "moments",
            Command::Eval(_) => "eval",
            Command::Converge(_) => "converge",
            Command::Bounds(_) => "bounds",
            Command::Figure(_) => "figure",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Moments(f)
            | Command::Eval(f)
            | Command::Converge(f)
            | Command::Bounds(f)
            | Command::Figure(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqKind {
    Default,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum Theorem {
    #[value(name = "3.2")]
    #[serde(rename = "3.2")]
    Modulus,
    #[value(name = "3.3")]
    #[serde(rename = "3.3")]
    Lipschitz,
    #[value(name = "3.4")]
    #[serde(rename = "3.4")]
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, PartialEq, Args, Default)]
pub struct Flags {
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated, strictly increasing degrees
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Catalog function: one, t, t_sq, sin7, abs_half
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// Two-column CSV (t, f(t)) used instead of --fn
    #[arg(long = "fn-file")]
    pub fn_file: Option<PathBuf>,
    /// Number of equally spaced points on [0, 1]
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub seq: Option<SeqKind>,
    #[arg(long, value_enum)]
    pub theorem: Option<Theorem>,
    #[arg(long = "M", allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long = "max-terms")]
    pub max_terms: Option<usize>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// JSON file with any of the above settings; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// The JSON config file. Keys mirror the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "n-list", alias = "n_list")]
    pub n_list: Option<Vec<usize>>,
    #[serde(rename = "fn")]
    pub function: Option<String>,
    #[serde(rename = "fn-file", alias = "fn_file")]
    pub fn_file: Option<PathBuf>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seq: Option<SeqKind>,
    pub theorem: Option<Theorem>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub rtol: Option<f64>,
    #[serde(rename = "max-terms", alias = "max_terms")]
    pub max_terms: Option<usize>,
    pub preset: Option<Preset>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_P: f64 = 0.95;
pub const DEFAULT_Q: f64 = 0.9;
pub const DEFAULT_N: usize = 30;
pub const DEFAULT_GRID: usize = 201;
pub const DEFAULT_N_LIST: [usize; 5] = [10, 25, 50, 100, 200];

/// Fully resolved and validated settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub params: PQParams,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub function: FunctionSpec,
    pub grid: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seq: SeqKind,
    pub bound: BoundKind,
    pub preset: Option<Preset>,
    pub integral: IntegralOptions,
}

impl RunConfig {
    pub fn sequence(&self) -> ParamSequence {
        match self.seq {
            SeqKind::Default => ParamSequence::Default,
            SeqKind::Constant => ParamSequence::Constant(self.params),
        }
    }

    /// Merges flags over the config file and validates the result.
    pub fn resolve(command: &Command) -> Result<Self, CliError> {
        let flags = command.flags();
        let file = match &flags.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };

        let p = flags.p.or(file.p).unwrap_or(DEFAULT_P);
        let q = flags.q.or(file.q).unwrap_or(DEFAULT_Q);
        let params = PQParams::new(p, q).map_err(|e| CliError::Validation(e.to_string()))?;

        let n = flags.n.or(file.n).unwrap_or(DEFAULT_N);
        check_degree(n)?;
        let n_list = flags
            .n_list
            .clone()
            .or(file.n_list)
            .unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
        if n_list.is_empty() {
            return Err(CliError::Validation("--n-list is empty".into()));
        }
        for &k in &n_list {
            check_degree(k)?;
        }
        if n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Validation(
                "--n-list must be strictly increasing".into(),
            ));
        }

        let grid = flags.grid.or(file.grid).unwrap_or(DEFAULT_GRID);
        if grid < 2 {
            return Err(CliError::Validation(format!(
                "--grid must be at least 2, got {grid}"
            )));
        }

        let mut integral = IntegralOptions::default();
        if let Some(rtol) = flags.rtol.or(file.rtol) {
            integral.rtol = rtol;
        }
        if let Some(max_terms) = flags.max_terms.or(file.max_terms) {
            integral.max_terms = max_terms;
        }
        integral
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;

        let theorem = flags.theorem.or(file.theorem).unwrap_or(Theorem::Modulus);
        let m = flags.m.or(file.m);
        let alpha = flags.alpha.or(file.alpha);
        let bound = match theorem {
            Theorem::Modulus => BoundKind::Modulus,
            Theorem::Lipschitz => {
                let (Some(m), Some(alpha)) = (m, alpha) else {
                    return Err(CliError::Validation(
                        "--theorem 3.3 requires --M and --alpha".into(),
                    ));
                };
                if !(m > 0.0 && alpha > 0.0 && alpha <= 1.0) {
                    return Err(CliError::Validation(format!(
                        "require M > 0 and 0 < alpha <= 1, got M = {m}, alpha = {alpha}"
                    )));
                }
                BoundKind::Lipschitz { m, alpha }
            }
            Theorem::Local => {
                let c = flags.c.or(file.c).unwrap_or(DEFAULT_LOCAL_C);
                if !(c > 0.0 && c.is_finite()) {
                    return Err(CliError::Validation(format!(
                        "--C must be positive, got {c}"
                    )));
                }
                BoundKind::Local { c }
            }
        };

        let preset = flags.preset.or(file.preset);
        if matches!(command, Command::Figure(_)) && preset.is_none() {
            return Err(CliError::Validation("figure requires --preset".into()));
        }

        let fn_file = flags.fn_file.clone().or(file.fn_file);
        let name = flags.function.clone().or(file.function);
        let function = match (fn_file, name) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "use either --fn or --fn-file, not both".into(),
                ))
            }
            (Some(path), None) => FunctionSpec::from_csv_path(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            (None, Some(name)) => name
                .parse()
                .map_err(|e: pqk_core::Error| CliError::Validation(e.to_string()))?,
            (None, None) => FunctionSpec::Sin7,
        };

        Ok(Self {
            command: command.name(),
            params,
            n,
            n_list,
            function,
            grid,
            out: flags.out.clone().or(file.out),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            seq: flags.seq.or(file.seq).unwrap_or(SeqKind::Default),
            bound,
            preset,
            integral,
        })
    }
}

fn check_degree(n: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_DEGREE {
        Err(CliError::Validation(format!(
            "degree must lie in 1..={MAX_DEGREE}, got {n}"
        )))
    } else {
        Ok(())
    }
}
