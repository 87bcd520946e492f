//! Batch front-end for the `smallcell` library: efficiency sweeps, density
//! optimisation, Monte Carlo validation and pattern dumps.
//!
//! Settings are layered, later layers winning: built-in defaults, the
//! `--config` file (the shipped picocell file when absent), `--set
//! key=value` overrides in order, then the dedicated flags.

pub mod commands;
pub mod config;

use clap::{Parser, Subcommand};
use commands::{Format, Perturbation};
use config::{ConfigError, ModeSelection, RunConfig, PICOCELL};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("computation failed: {0}")]
    Compute(#[from] smallcell::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    /// Configuration and usage problems exit with 2, everything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Compute(_) | CliError::Io(_) => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "smallcell", version, about = "Energy-efficient BS density for Poisson small cell networks")]
pub struct Cli {
    /// Configuration file (`key = value unit` per line).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Power-control policies to cover: all-on, on-off or both.
    #[arg(long, global = true)]
    pub mode: Option<ModeSelection>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format; sweeps default to csv, optimize and validate to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

/// Density flags take a number in BSs or users per km² unless a unit is
/// given (`--lambda-u "3.7e-4 per_m2"`).
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Efficiency against BS density at fixed user density (CSV rows).
    EfficiencySweep {
        #[arg(long)]
        lambda_u: Option<String>,
        #[arg(long)]
        lambda_b_min: Option<String>,
        #[arg(long)]
        lambda_b_max: Option<String>,
        /// Number of log-spaced BS densities.
        #[arg(long)]
        points: Option<u64>,
    },
    /// Energy-optimal BS density; a comma list of user densities gives the
    /// optimal-density curve.
    Optimize {
        #[arg(long)]
        lambda_u: Option<String>,
        /// Cell load of the fixed-load companion column.
        #[arg(long)]
        fixed_load: Option<f64>,
    },
    /// Compare analytic results with Monte Carlo; exits 1 on any mismatch.
    Validate {
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        lambda_u: Option<String>,
        #[arg(long)]
        lambda_b: Option<String>,
        #[arg(long)]
        realizations: Option<u64>,
        /// Outage threshold in dB.
        #[arg(long)]
        threshold_db: Option<f64>,
        /// Shift an analytic reference (RECORD=OFFSET) to exercise the
        /// failure path.
        #[arg(long, hide = true)]
        perturb_analytic: Vec<Perturbation>,
    },
    /// Analytic and simulated user rate against cell load (CSV rows).
    UserRateSweep {
        /// Comma-separated cell loads.
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        realizations: Option<u64>,
        /// Analytic column only.
        #[arg(long)]
        no_sim: bool,
    },
    /// One simulated realization as CSV for plotting.
    DumpPattern {
        #[arg(long)]
        lambda_b: Option<String>,
        #[arg(long)]
        lambda_u: Option<String>,
        #[arg(long, default_value_t = 0)]
        realization: u64,
    },
}

fn with_density_unit(raw: &str) -> String {
    let has_unit = raw.trim().rsplit_once(char::is_whitespace).is_some_and(|(_, u)| u.parse::<f64>().is_err());
    if has_unit {
        raw.trim().to_string()
    } else {
        format!("{} per_km2", raw.trim())
    }
}

/// Build the effective configuration for `cli`.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError {
                    location: Some(path.display().to_string()),
                    field: None,
                    message: e.to_string(),
                }
            })?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        None => cfg.apply_text(PICOCELL, "picocell.cfg")?,
    }
    for item in &cli.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set {item}: expected KEY=VALUE")))?;
        cfg.set(key.trim(), value.trim(), "--set")?;
    }
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    let density = |cfg: &mut RunConfig, key: &str, raw: &Option<String>, flag: &str| -> Result<(), CliError> {
        if let Some(raw) = raw {
            cfg.set(key, &with_density_unit(raw), flag)?;
        }
        Ok(())
    };
    let count = |cfg: &mut RunConfig, key: &str, v: Option<u64>, flag: &str| -> Result<(), CliError> {
        if let Some(v) = v {
            cfg.set(key, &v.to_string(), flag)?;
        }
        Ok(())
    };
    match &cli.command {
        Command::EfficiencySweep {
            lambda_u,
            lambda_b_min,
            lambda_b_max,
            points,
        } => {
            density(&mut cfg, "lambda_u", lambda_u, "--lambda-u")?;
            density(&mut cfg, "lambda_b_min", lambda_b_min, "--lambda-b-min")?;
            density(&mut cfg, "lambda_b_max", lambda_b_max, "--lambda-b-max")?;
            count(&mut cfg, "lambda_b_points", *points, "--points")?;
        }
        Command::Optimize { lambda_u, fixed_load } => {
            if let Some(raw) = lambda_u {
                if raw.contains(',') {
                    cfg.set("lambda_u_grid", &with_density_unit(raw), "--lambda-u")?;
                } else {
                    cfg.set("lambda_u", &with_density_unit(raw), "--lambda-u")?;
                    cfg.lambda_u_grid.clear();
                }
            }
            if let Some(v) = fixed_load {
                cfg.set("fixed_load", &v.to_string(), "--fixed-load")?;
            }
        }
        Command::Validate {
            mu,
            lambda_u,
            lambda_b,
            realizations,
            threshold_db,
            ..
        } => {
            if let Some(v) = mu {
                cfg.set("mu", &v.to_string(), "--mu")?;
            }
            density(&mut cfg, "lambda_u", lambda_u, "--lambda-u")?;
            density(&mut cfg, "lambda_b", lambda_b, "--lambda-b")?;
            count(&mut cfg, "n_realizations", *realizations, "--realizations")?;
            if let Some(v) = threshold_db {
                cfg.set("threshold", &format!("{v} dB"), "--threshold-db")?;
            }
        }
        Command::UserRateSweep {
            mu,
            realizations,
            no_sim,
        } => {
            if let Some(raw) = mu {
                cfg.set("mu_grid", raw, "--mu")?;
            }
            count(&mut cfg, "n_realizations", *realizations, "--realizations")?;
            if *no_sim {
                cfg.sim.enabled = false;
            }
        }
        Command::DumpPattern { lambda_b, lambda_u, .. } => {
            density(&mut cfg, "lambda_u", lambda_u, "--lambda-u")?;
            density(&mut cfg, "lambda_b", lambda_b, "--lambda-b")?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Output bytes and whether the run counts as a success.
pub fn execute(cli: &Cli) -> Result<(Vec<u8>, bool), CliError> {
    let cfg = load_config(cli)?;
    let format = |default| cli.format.unwrap_or(default);
    Ok(match &cli.command {
        Command::EfficiencySweep { .. } => (commands::efficiency_sweep(&cfg, format(Format::Csv))?, true),
        Command::Optimize { .. } => commands::optimize(&cfg, format(Format::Json))?,
        Command::Validate { perturb_analytic, .. } => {
            let report = commands::validate(&cfg, perturb_analytic)?;
            (commands::render_validation(&report, format(Format::Json))?, report.passed)
        }
        Command::UserRateSweep { .. } => (commands::user_rate_sweep(&cfg, format(Format::Csv))?, true),
        Command::DumpPattern { realization, .. } => {
            (commands::dump_pattern(&cfg, *realization, format(Format::Csv))?, true)
        }
    })
}

/// Parse arguments, run, write output and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (bytes, ok) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    };
    if let Err(e) = written {
        eprintln!("error: {}", CliError::Io(e));
        return EXIT_VALIDATION;
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
