use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "qhermit", version, about = "Spectral flow, metrics, Dyson maps and Heisenberg evolution for the toy-universe models")]
pub struct Cli {
    /// Read the command and its flags from a JSON object instead
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    /// Track the spectrum over a time grid and write the flow CSV
    Scan(ScanArgs),
    /// Build and certify a physical metric at one time
    Metric(MetricArgs),
    /// Factorize the metric and hermitize Q
    Dyson(MetricArgs),
    /// Integrate the Heisenberg equation or the state pair
    Evolve(EvolveArgs),
    /// Locate the exceptional point in a bracket
    Ep(EpArgs),
    /// Jordan block sizes of an eigenvalue
    Jordan(JordanArgs),
    /// Physical expectation value of an observable
    Expect(ExpectArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::Metric(_) => "metric",
            Command::Dyson(_) => "dyson",
            Command::Evolve(_) => "evolve",
            Command::Ep(_) => "ep",
            Command::Jordan(_) => "jordan",
            Command::Expect(_) => "expect",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Bang,
    Cyclic,
    Crunchbang,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Source {
    /// Model family
    #[arg(long, value_enum, conflicts_with = "matrix_file", required_unless_present = "matrix_file")]
    pub model: Option<KindArg>,

    /// Dimension N (crunchbang is fixed at 8)
    #[arg(long)]
    pub n: Option<usize>,

    /// JSON list of {"t", "matrix"} samples, linearly interpolated
    #[arg(long, value_name = "FILE")]
    pub matrix_file: Option<PathBuf>,

    /// Relative tolerance of eigensolves and metric checks
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineArg {
    Auto,
    Never,
    Always,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t_min: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t_max: f64,
    /// Grid points, endpoints included
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    pub reality_tol: f64,
    /// Degeneracy threshold relative to the spectral radius
    #[arg(long, default_value_t = 2e-2, value_parser = positive)]
    pub cluster_tol: f64,
    #[arg(long, default_value_t = 5.0, value_parser = positive)]
    pub continuity_factor: f64,
    /// Extended-precision recomputation of untrustworthy grid points
    #[arg(long, value_enum, default_value_t = RefineArg::Auto)]
    pub refine: RefineArg,
    /// Flow CSV; degeneracy markers go to <stem>.markers.json beside it
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t: f64,
    /// Metric weights, one per eigenvalue in ascending order (default all 1)
    #[arg(long, value_delimiter = ',', conflicts_with = "diagonal")]
    pub kappa: Option<Vec<f64>>,
    /// Use the diagonal intertwiner of a tridiagonal Q
    #[arg(long)]
    pub diagonal: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    /// H = Σ, states frozen
    Heisenberg,
    /// G = H − Σ acting on a state pair
    Schrodinger,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t1: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Heisenberg)]
    pub mode: ModeArg,
    /// Initial observable A(t0) as a CMatrix JSON file
    #[arg(long, value_name = "FILE", conflicts_with = "hermitian")]
    pub observable: Option<PathBuf>,
    /// Hermitian image of the observable; pulled back with Ω(t0)
    #[arg(long, value_name = "FILE")]
    pub hermitian: Option<PathBuf>,
    /// State JSON {"ket": [[re, im], ...], "ketket": ...}; ketket defaults to Θ(t0) ket
    #[arg(long, value_name = "FILE")]
    pub state: Option<PathBuf>,
    /// Constant H of the Schrödinger mode (default zero)
    #[arg(long, value_name = "FILE")]
    pub hamiltonian: Option<PathBuf>,
    /// Metric weights defining Ω (default all 1)
    #[arg(long, value_delimiter = ',', conflicts_with = "diagonal")]
    pub kappa: Option<Vec<f64>>,
    /// Diagonal intertwiner instead of the eigenbasis family
    #[arg(long)]
    pub diagonal: bool,
    /// Central-difference step of the Coriolis term (default 1e-5·max(1,|t|))
    #[arg(long, value_parser = positive)]
    pub h_step: Option<f64>,
    /// Trajectory CSV
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EpArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t_lo: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t_hi: f64,
    /// Final bracket width
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub ep_tol: f64,
    #[arg(long, default_value_t = 21)]
    pub coarse: usize,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct JordanArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t: f64,
    /// Eigenvalue, e.g. 0, -1.5 or 0.5+2i
    #[arg(long, allow_hyphen_values = true, value_parser = complex)]
    pub lambda: Complex64,
    /// Rank threshold relative to ‖Q − λI‖^k
    #[arg(long, default_value_t = 1e-7, value_parser = positive)]
    pub rank_tol: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpectArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true, value_parser = time)]
    pub t: f64,
    /// State JSON; ketket defaults to Θ(t) ket
    #[arg(long, value_name = "FILE")]
    pub state: PathBuf,
    /// Observable CMatrix JSON (default Q(t))
    #[arg(long, value_name = "FILE")]
    pub observable: Option<PathBuf>,
    /// Metric weights defining Ω (default all 1)
    #[arg(long, value_delimiter = ',', conflicts_with = "diagonal")]
    pub kappa: Option<Vec<f64>>,
    /// Diagonal intertwiner instead of the eigenbasis family
    #[arg(long)]
    pub diagonal: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// A finite real, also written as a fraction `p/q`.
pub fn time(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            p / q
        }
        None => s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = time(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{s:?} must be positive"))
    }
}

fn complex(s: &str) -> Result<Complex64, String> {
    s.trim().parse::<Complex64>().map_err(|_| format!("not a complex number: {s:?}"))
}

/// Turns a JSON config object into the equivalent argument list.
///
/// Keys mirror the long flag names (`"t-min"`; underscores are accepted too),
/// `"command"` names the subcommand, `true` toggles a switch and arrays are
/// joined with commas.
pub fn config_to_argv(text: &str) -> Result<Vec<String>, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let obj = value.as_object().ok_or("config must be a JSON object")?;
    let command = obj
        .get("command")
        .and_then(|c| c.as_str())
        .ok_or("config needs a \"command\" string")?;
    let mut argv = vec!["qhermit".to_string(), command.to_string()];
    for (key, v) in obj {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => argv.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => {
                argv.push(flag);
                argv.push(s.clone());
            }
            serde_json::Value::Number(n) => {
                argv.push(flag);
                argv.push(n.to_string());
            }
            serde_json::Value::Array(items) => {
                let parts: Result<Vec<String>, String> = items
                    .iter()
                    .map(|x| match x {
                        serde_json::Value::Number(n) => Ok(n.to_string()),
                        serde_json::Value::String(s) => Ok(s.clone()),
                        _ => Err(format!("\"{key}\" must hold numbers or strings")),
                    })
                    .collect();
                argv.push(flag);
                argv.push(parts?.join(","));
            }
            serde_json::Value::Object(_) => return Err(format!("\"{key}\" cannot be an object")),
        }
    }
    Ok(argv)
}
