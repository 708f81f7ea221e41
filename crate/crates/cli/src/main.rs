//! `poscub`: build, compress, verify and benchmark positive cubature rules.

mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{parse_degrees, parse_override, RunConfig, CONFIG_KEYS};

#[derive(Parser, Debug)]
#[command(name = "poscub", version, about = "Positive least-squares cubature rules", after_long_help = CONFIG_KEYS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the first `count` generator points inside the domain (points.csv).
    #[command(after_long_help = CONFIG_KEYS)]
    Points(Args),
    /// Write the moments of the basis (moments.csv).
    #[command(after_long_help = CONFIG_KEYS)]
    Moments(Args),
    /// Build a positive LS rule (rule.csv and rule.json).
    #[command(after_long_help = CONFIG_KEYS)]
    Build(Args),
    /// Compress a rule to at most K points (rule_<method>.csv/.json, subsample_<method>.csv).
    #[command(after_long_help = CONFIG_KEYS)]
    Subsample(Args),
    /// Genz error experiment (errors.csv, summary.csv).
    #[command(after_long_help = CONFIG_KEYS)]
    GenzBench(Args),
    /// N(K) ratio experiment and power-law fit (ratio.csv, fit.json).
    #[command(after_long_help = CONFIG_KEYS)]
    Ratio(Args),
    /// Recheck a rule file against its sidecar; exit 4 on any violation.
    #[command(after_long_help = CONFIG_KEYS)]
    Verify(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; the value is parsed as JSON, else taken as a string.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    set: Vec<(String, Value)>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Domain preset name or JSON object.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Weight preset name or JSON object.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    centers: Option<usize>,
    /// Point generator: halton, sobol or random.
    #[arg(long, alias = "generator")]
    kind: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Subsampling method: steinitz or nnls.
    #[arg(long)]
    method: Option<String>,
    /// Degrees as `a..b` or a comma-separated list.
    #[arg(long, value_parser = |s: &str| parse_degrees(s).map(Degrees))]
    degrees: Option<Degrees>,
    /// Comma-separated generator kinds.
    #[arg(long)]
    generators: Option<String>,
    /// Comma-separated integrand names.
    #[arg(long)]
    integrands: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Report the doubling N instead of bisecting for the lowest positive N.
    #[arg(long)]
    no_refine: bool,
    /// Rule CSV (sidecar: same path with extension .json).
    #[arg(long)]
    rule: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Degrees(Vec<usize>);

impl Args {
    fn overrides(&self) -> Vec<(String, Value)> {
        let mut o = self.set.clone();
        let json_or_string = |s: &str| -> Value {
            match serde_json::from_str::<Value>(s) {
                Ok(v @ Value::Object(_)) => v,
                _ => Value::String(s.to_string()),
            }
        };
        let list = |s: &str| -> Value { Value::Array(s.split(',').map(|t| Value::String(t.trim().to_string())).collect()) };
        let mut put = |k: &str, v: Value| o.push((k.to_string(), v));
        if let Some(v) = &self.domain {
            put("domain", json_or_string(v));
        }
        if let Some(v) = self.dim {
            put("dim", json!(v));
        }
        if let Some(v) = &self.weight {
            put("weight", json_or_string(v));
        }
        if let Some(v) = &self.family {
            put("family", json!(v));
        }
        if let Some(v) = self.degree {
            put("degree", json!(v));
        }
        if let Some(v) = self.centers {
            put("centers", json!(v));
        }
        if let Some(v) = &self.kind {
            put("generator", json!(v));
        }
        if let Some(v) = self.seed {
            put("seed", json!(v));
        }
        if let Some(v) = self.count {
            put("count", json!(v));
        }
        if let Some(v) = self.n_max {
            put("n_max", json!(v));
        }
        if let Some(v) = &self.method {
            put("method", json!(v));
        }
        if let Some(v) = &self.degrees {
            put("degrees", json!(v.0));
        }
        if let Some(v) = &self.generators {
            put("generators", list(v));
        }
        if let Some(v) = &self.integrands {
            put("integrands", list(v));
        }
        if let Some(v) = self.trials {
            put("trials", json!(v));
        }
        if self.no_refine {
            put("refine", json!(false));
        }
        if let Some(v) = &self.rule {
            put("rule", json!(v));
        }
        o
    }
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Numerical { message: String, details: Option<Value> },
    Verify { message: String, report: Value },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Verify { .. } => 4,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message, extra) = match self {
            CliError::Io(m) => ("io", m, None),
            CliError::Config(m) => ("config", m, None),
            CliError::Numerical { message, details } => ("numerical", message, details.clone()),
            CliError::Verify { message, report } => ("verification", message, Some(report.clone())),
        };
        let mut v = json!({ "error": kind, "message": message, "exit_code": self.exit_code() });
        if let Some(extra) = extra {
            v["details"] = extra;
        }
        v
    }
}

impl From<poscub::Error> for CliError {
    fn from(e: poscub::Error) -> Self {
        use poscub::Error as E;
        match &e {
            E::Io(_) => CliError::Io(e.to_string()),
            E::UnisolvencyNotReached { report, .. } | E::PositivityNotReached { report, .. } => CliError::Numerical {
                message: e.to_string(),
                details: serde_json::to_value(report.as_ref()).ok(),
            },
            _ if e.is_numerical() => CliError::Numerical { message: e.to_string(), details: None },
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn run(command: Command) -> Result<Value, CliError> {
    let (name, args) = match &command {
        Command::Points(a) => ("points", a),
        Command::Moments(a) => ("moments", a),
        Command::Build(a) => ("build", a),
        Command::Subsample(a) => ("subsample", a),
        Command::GenzBench(a) => ("genz-bench", a),
        Command::Ratio(a) => ("ratio", a),
        Command::Verify(a) => ("verify", a),
    };
    let cfg = RunConfig::load(args.config.as_deref(), &args.overrides())?;
    let ctx = commands::Context::new(name, cfg, args.out.clone());
    match command {
        Command::Points(_) => commands::points(&ctx),
        Command::Moments(_) => commands::moments(&ctx),
        Command::Build(_) => commands::build(&ctx),
        Command::Subsample(_) => commands::subsample(&ctx),
        Command::GenzBench(_) => commands::genz_bench(&ctx),
        Command::Ratio(_) => commands::ratio(&ctx),
        Command::Verify(_) => verify::verify(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
