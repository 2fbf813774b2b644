//! Command-line front-end: build models, enter symbols, run every check
//! and solver of the calculus, and emit CSV/JSON artifacts.
//!
//! Exit codes: 0 when all requested certificates pass, 2 on certificate
//! failure, 1 on usage or evaluation errors.

mod output;
mod run;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "lattice-pdo",
    about = "Pseudo-difference operator calculus on finite periodic lattice models",
    version
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Lattice dimension n
    #[arg(long, global = true)]
    pub dim: Option<usize>,

    /// Lattice spacing in (0, 1]
    #[arg(long, global = true)]
    pub hbar: Option<f64>,

    /// Points per axis (even)
    #[arg(long, global = true)]
    pub points: Option<usize>,

    /// Symbol expression, e.g. "exp(2*pi*i*theta1) - 1"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub symbol: Option<String>,

    /// Built-in symbol, e.g. "example3(c=3)" or "weight(s=2)"
    #[arg(long, global = true)]
    pub builtin: Option<String>,

    /// Parameter binding name=value for expression symbols (repeatable)
    #[arg(long = "param", global = true)]
    pub params: Vec<String>,

    /// Declared class "mu,rho,delta" for expression symbols
    #[arg(long, global = true)]
    pub class: Option<String>,

    /// Output directory for artifacts
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Artifact format: json or csv
    #[arg(long, global = true)]
    pub format: Option<Format>,

    /// Seed for randomized probes and sources
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Flat key = value config file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Fully resolved configuration after merging flags, config file and
/// defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub dim: usize,
    pub hbar: f64,
    pub points: usize,
    pub symbol: Option<String>,
    pub builtin: Option<String>,
    pub params: Vec<String>,
    pub class: Option<String>,
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
}

impl Resolved {
    pub fn config_json(&self, command: &str) -> serde_json::Value {
        serde_json::json!({
            "command": command,
            "dim": self.dim,
            "hbar": self.hbar,
            "points": self.points,
            "symbol": self.symbol,
            "builtin": self.builtin,
            "params": self.params,
            "class": self.class,
            "out": self.out.display().to_string(),
            "format": match self.format { Format::Json => "json", Format::Csv => "csv" },
            "seed": self.seed,
        })
    }
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            ));
        };
        map.insert(line[..eq].trim().to_string(), line[eq + 1..].trim().to_string());
    }
    Ok(map)
}

impl GlobalArgs {
    pub fn resolve(&self) -> Result<Resolved, String> {
        let file = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        let from_file = |key: &str| file.get(key).cloned();
        fn parse_key<T: std::str::FromStr>(key: &str, text: String) -> Result<T, String> {
            text.parse()
                .map_err(|_| format!("config key `{key}` has non-numeric value `{text}`"))
        }
        let dim = match self.dim {
            Some(v) => v,
            None => from_file("dim").map(|t| parse_key("dim", t)).transpose()?.unwrap_or(1),
        };
        let hbar = match self.hbar {
            Some(v) => v,
            None => from_file("hbar").map(|t| parse_key("hbar", t)).transpose()?.unwrap_or(0.5),
        };
        let points = match self.points {
            Some(v) => v,
            None => from_file("points").map(|t| parse_key("points", t)).transpose()?.unwrap_or(16),
        };
        let seed = match self.seed {
            Some(v) => v,
            None => from_file("seed").map(|t| parse_key("seed", t)).transpose()?.unwrap_or(0),
        };
        let format = match self.format {
            Some(f) => f,
            None => match from_file("format") {
                Some(t) => t.parse()?,
                None => Format::Json,
            },
        };
        Ok(Resolved {
            dim,
            hbar,
            points,
            symbol: self.symbol.clone().or_else(|| from_file("symbol")),
            builtin: self.builtin.clone().or_else(|| from_file("builtin")),
            params: self.params.clone(),
            class: self.class.clone().or_else(|| from_file("class")),
            out: self
                .out
                .clone()
                .or_else(|| from_file("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(".")),
            format,
            seed,
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fourier/difference/kernel invariant suite on the requested model
    Selftest,

    /// Symbol diagnostics
    #[command(subcommand)]
    Symbol(SymbolCmd),

    /// Build the kernel matrix: export and decay diagnostics
    Kernel {
        /// Largest Q in the kernel decay bound
        #[arg(long, default_value_t = 2)]
        decay_q: u32,
        /// Also write the dense kernel as CSV (row, col, re, im)
        #[arg(long)]
        export: bool,
    },

    /// Asymptotic calculus against exact matrix oracles
    #[command(subcommand)]
    Calculus(CalculusCmd),

    /// Norm identities, bounds and inequalities
    #[command(subcommand)]
    Analyze(AnalyzeCmd),

    /// Difference-equation solvers
    #[command(subcommand)]
    Solve(SolveCmd),

    /// Small-spacing convergence studies
    #[command(subcommand)]
    Limit(LimitCmd),

    /// End-to-end narratives for the built-in example symbols
    Demo {
        /// One of example1, example2, example3, intro
        name: String,
        /// Trailing name=value parameters for the example
        #[arg(trailing_var_arg = true)]
        params: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SymbolCmd {
    /// Seminorm constants and the ellipticity certificate
    Check {
        #[arg(long, default_value_t = 2)]
        max_alpha: u32,
        #[arg(long, default_value_t = 2)]
        max_beta: u32,
        /// Ellipticity order; defaults to the declared class order
        #[arg(long)]
        mu: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CalculusCmd {
    /// Composition expansion versus the exact kernel product
    Compose {
        /// Second factor as an expression
        #[arg(long)]
        with_symbol: Option<String>,
        /// Second factor as a builtin
        #[arg(long)]
        with_builtin: Option<String>,
        #[arg(long, default_value_t = 3)]
        terms: u32,
    },
    /// Adjoint expansion versus the conjugate-transpose oracle
    Adjoint {
        #[arg(long, default_value_t = 3)]
        terms: u32,
    },
    /// Transpose expansion versus the transpose oracle
    Transpose {
        #[arg(long, default_value_t = 3)]
        terms: u32,
    },
    /// Parametrix recursion with left/right inverse residuals
    Parametrix {
        #[arg(long, default_value_t = 2)]
        terms: u32,
    },
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeCmd {
    /// Hilbert-Schmidt identity: symbol norm versus kernel Frobenius norm
    Hs,
    /// Young-type l^p bound versus exact operator norms
    Lp {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Schatten membership bound and the trace identity
    Schatten {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Garding constants with eigenbasis verification
    Garding {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
    },
    /// Sharp Garding constant for pointwise nonnegative symbols
    SharpGarding {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
    },
    /// Lattice-torus conjugation identity at matrix level
    Link,
    /// Distance to low-rank operators versus the d indicator
    Gohberg {
        /// Comma-separated ranks
        #[arg(long, default_value = "0,1,4")]
        ranks: String,
        #[arg(long, default_value_t = 0.75)]
        fraction: f64,
    },
    /// Norm between weighted spaces for a class-declared symbol
    Weighted {
        #[arg(long, default_value_t = 0.0)]
        s: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum SolveCmd {
    /// Solve Op(sigma) f = g
    Elliptic {
        /// inverse-multiplier, parametrix or direct
        #[arg(long, default_value = "direct")]
        method: String,
        #[arg(long, default_value_t = 2)]
        terms: u32,
        /// Right-hand side: delta, gaussian or random
        #[arg(long, default_value = "gaussian")]
        rhs: String,
    },
    /// March dw/dt - Op(sigma) w = g from w(0) = w0
    Parabolic {
        #[arg(long, default_value_t = 1.0)]
        tfinal: f64,
        #[arg(long, default_value_t = 0.125)]
        dt: f64,
        /// implicit-euler or exact-multiplier
        #[arg(long, default_value = "implicit-euler")]
        scheme: String,
        /// Initial data: delta, gaussian or random
        #[arg(long, default_value = "gaussian")]
        initial: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum LimitCmd {
    /// Forward differences versus exact derivatives
    Diff {
        /// Comma-separated multi-index, e.g. "1" or "1,0"
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value = "0.5,0.25,0.125,0.0625,0.03125")]
        hbars: String,
    },
    /// Rescaled falling derivatives versus their Euclidean limit
    Dderiv {
        #[arg(long, default_value = "2")]
        beta: String,
        #[arg(long, default_value = "0.5,0.25,0.125,0.0625,0.03125")]
        hbars: String,
    },
    /// Truncated composition formula versus the Euclidean one
    Compose {
        #[arg(long, default_value_t = 3)]
        terms: u32,
        #[arg(long, default_value = "0.125,0.0625,0.03125,0.015625,0.0078125")]
        hbars: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let resolved = match cli.globals.resolve() {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    match run::dispatch(&resolved, &cli.command) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
