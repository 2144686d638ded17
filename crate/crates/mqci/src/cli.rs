use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use mqci_core::bench::Family;
use serde::Serialize;

/// Multiquadric cardinal interpolation on lattices.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "mqci", version, about)]
pub struct Cli {
    /// Write the result here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; reports default to json, tables to csv.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Directory for cached cardinal tables (also MQCI_CACHE_DIR).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Seed for random probe points.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Include wall-clock runtimes in the output.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    /// L̂ for the integer lattice.
    Cardinal,
    /// m_{α,h}, the cardinal spectrum for hZ^d with c = 1.
    Multiplier,
    /// The periodic symbol P_α.
    Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffKind {
    /// Coefficients a_j of P_α.
    P,
    /// Coefficients d_j of 1/P_α.
    PInverse,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Tabulate L̂, m or P along the first axis.
    Spectrum {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = SpectrumKind::Cardinal)]
        kind: SpectrumKind,
        /// Lattice spacing for the multiplier.
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        /// Largest ξ; defaults to three half-periods.
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long, default_value_t = 301)]
        points: usize,
    },
    /// Synthesize a cardinal table, report δ residuals and optionally export it.
    Cardinal {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1e-9)]
        accuracy: f64,
        #[arg(long, default_value_t = 6.0)]
        radius: f64,
        /// Table nodes per unit length (power of two); automatic if absent.
        #[arg(long)]
        points_per_unit: Option<usize>,
        /// Integer nodes with |k|_∞ up to this are checked.
        #[arg(long, default_value_t = 5)]
        residual_radius: i64,
        /// Export the table: `.csv` writes node rows, anything else the binary format.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Fourier coefficients of P_α or 1/P_α with a decay fit.
    Coeffs {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        radius: usize,
        /// DFT length; defaults to 8 × radius.
        #[arg(long)]
        dft_size: Option<usize>,
        #[arg(long, value_enum, default_value_t = CoeffKind::P)]
        kind: CoeffKind,
        #[arg(long, default_value_t = 8)]
        fit_lo: usize,
        /// Upper end of the decay fit; defaults to the radius.
        #[arg(long)]
        fit_hi: Option<usize>,
    },
    /// Interpolate a named test function on hZ^d.
    Interp {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.125)]
        h: f64,
        #[arg(long, value_parser = parse_family, default_value = "bspline")]
        family: Family,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        support_radius: f64,
        #[arg(long, default_value_t = 1e-10)]
        accuracy: f64,
        /// Evaluation points along the first axis of the window.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Additional uniformly random probes in the window.
        #[arg(long, default_value_t = 0)]
        probes: usize,
        /// Window half-width as a multiple of the support radius.
        #[arg(long, default_value_t = 1.5)]
        window_factor: f64,
    },
    /// Convergence study over a list of spacings.
    Converge {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Norm exponent, a number ≥ 1 or `inf`.
        #[arg(long, value_parser = parse_p, default_value = "2")]
        #[serde(with = "mqci_core::bench::norm_exponent")]
        p: f64,
        #[arg(long, value_parser = parse_family, default_value = "bspline")]
        family: Family,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        support_radius: f64,
        #[arg(long)]
        points_per_h: Option<usize>,
        #[arg(long)]
        accuracy: Option<f64>,
        #[arg(long)]
        window_factor: Option<f64>,
    },
    /// L1 norms of multiplier derivatives and their scaling in h.
    Multiplier {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.125,0.0625,0.03125")]
        h: Vec<f64>,
        /// Multi-index such as `2` or `1,0`; repeatable. Defaults to all of order 1 and 2.
        #[arg(long)]
        gamma: Vec<String>,
        /// Also report Mikhlin suprema for every order up to min(d, 2).
        #[arg(long)]
        mikhlin: bool,
        #[arg(long, default_value_t = 1)]
        shells: usize,
    },
    /// Run the acceptance suite and report pass/fail per criterion.
    Verify {
        /// Criteria to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).ok_or_else(|| format!("unknown family `{s}` (bspline, truncated_power, gaussian_bump)"))
}

fn parse_p(s: &str) -> Result<f64, String> {
    let p = match s {
        "inf" | "infinity" => f64::INFINITY,
        _ => s.parse::<f64>().map_err(|e| e.to_string())?,
    };
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(format!("p must be at least 1, got {s}"))
    }
}

pub fn parse_gamma(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"))).collect()
}

impl Cli {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}
