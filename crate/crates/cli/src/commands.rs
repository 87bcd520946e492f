//! The batch commands. Each returns its complete output as bytes so the
//! caller decides where it goes; rows are always emitted in grid order.

use crate::config::RunConfig;
use crate::CliError;
use rayon::prelude::*;
use serde::Serialize;
use smallcell::efficiency::EfficiencyCurve;
use smallcell::montecarlo::{
    cell_count_frequencies, estimate_cell_and_user_rate, estimate_received_power_shortfall, estimate_void_fraction,
    sample_network, sample_patterns, TypicalUserDraws,
};
use smallcell::rate::achievable_rate;
use smallcell::{
    active_density, cell_rate, gamma, optimal_density_curve, optimize_density, outage, user_count_pmf,
    user_rate, void_probability, EstimatorOutput, PowerMode, Scenario,
};

const PER_KM2: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Full round-trip precision, locale independent.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

trait Row: Serialize {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

fn render<R: Row>(rows: &[R], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(R::HEADER).map_err(CliError::from)?;
            for r in rows {
                w.write_record(r.cells()).map_err(CliError::from)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))
        }
        Format::Json => json_bytes(&rows),
    }
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    out.push(b'\n');
    Ok(out)
}

fn positive_lambda_u(cfg: &RunConfig) -> Result<f64, CliError> {
    if cfg.lambda_u > 0.0 {
        Ok(cfg.lambda_u)
    } else {
        Err(CliError::usage(format!(
            "field `lambda_u`: {} violates lambda_u > 0 for this command",
            cfg.lambda_u
        )))
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    lambda_b: f64,
    lambda_b_over_lambda_u: f64,
    mode: PowerMode,
    eta: f64,
    cell_rate: f64,
    power_draw: f64,
    quad_error: f64,
}

impl Row for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_b_per_km2",
        "lambda_b_over_lambda_u",
        "mode",
        "eta",
        "cell_rate",
        "power_draw_w",
        "quad_error",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            fmt_float(self.lambda_b),
            fmt_float(self.lambda_b_over_lambda_u),
            self.mode.as_str().to_string(),
            fmt_float(self.eta),
            fmt_float(self.cell_rate),
            fmt_float(self.power_draw),
            fmt_float(self.quad_error),
        ]
    }
}

/// Efficiency over the configured log grid of BS densities at fixed user
/// density.
pub fn efficiency_sweep(cfg: &RunConfig, format: Format) -> Result<Vec<u8>, CliError> {
    let lambda_u = positive_lambda_u(cfg)?;
    let grid = cfg.lambda_b_grid();
    let mut rows = Vec::new();
    for mode in cfg.mode.modes() {
        let curve = EfficiencyCurve::new(lambda_u, mode, &cfg.network, &cfg.quadrature)?;
        let part: Result<Vec<SweepRow>, smallcell::Error> = grid
            .par_iter()
            .map(|&lambda_b| {
                let r = curve.at(lambda_b)?;
                Ok(SweepRow {
                    lambda_b: lambda_b * PER_KM2,
                    lambda_b_over_lambda_u: lambda_b / lambda_u,
                    mode,
                    eta: r.eta,
                    cell_rate: r.cell_rate,
                    power_draw: r.power_draw,
                    quad_error: r.abs_error_estimate,
                })
            })
            .collect();
        rows.extend(part?);
    }
    render(&rows, format)
}

#[derive(Debug, Serialize)]
struct TraceRecord {
    lambda_b: f64,
    eta: f64,
}

#[derive(Debug, Serialize)]
struct OptimumRecord {
    mode: PowerMode,
    lambda_u: f64,
    lambda_b_star: Option<f64>,
    eta_star: Option<f64>,
    mu_star: Option<f64>,
    unimodal: Option<bool>,
    /// Cell load of the fixed-load companion point.
    fixed_load: f64,
    fixed_load_eta: Option<f64>,
    error: Option<String>,
    search_trace: Vec<TraceRecord>,
}

impl Row for OptimumRecord {
    const HEADER: &'static [&'static str] = &[
        "lambda_u_per_km2",
        "mode",
        "lambda_b_star_per_km2",
        "eta_star",
        "mu_star",
        "unimodal",
        "fixed_load",
        "fixed_load_eta",
        "error",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            fmt_float(self.lambda_u),
            self.mode.as_str().to_string(),
            fmt_opt(self.lambda_b_star),
            fmt_opt(self.eta_star),
            fmt_opt(self.mu_star),
            self.unimodal.map(|u| u.to_string()).unwrap_or_default(),
            fmt_float(self.fixed_load),
            fmt_opt(self.fixed_load_eta),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Serialize)]
struct OptimizeDocument {
    density_unit: &'static str,
    eta_unit: &'static str,
    results: Vec<OptimumRecord>,
}

/// Energy-optimal BS density for every configured user density, with the
/// efficiency of a fixed-cell-load deployment alongside. The fixed load
/// defaults to the optimal load at the configured `lambda_u`.
///
/// The second value is false when any grid point failed.
pub fn optimize(cfg: &RunConfig, format: Format) -> Result<(Vec<u8>, bool), CliError> {
    let grid = cfg.lambda_u_values();
    let mut results = Vec::new();
    for mode in cfg.mode.modes() {
        let fixed_load = match cfg.fixed_load {
            Some(mu) => mu,
            None => {
                let lambda_u = positive_lambda_u(cfg)?;
                optimize_density(lambda_u, mode, &cfg.network, &cfg.quadrature, &cfg.search)?.mu_star
            }
        };
        let curve = optimal_density_curve(&grid, mode, &cfg.network, &cfg.quadrature, &cfg.search);
        let fixed: Vec<Result<f64, smallcell::Error>> = grid
            .par_iter()
            .map(|&lambda_u| {
                let s = Scenario::from_load(lambda_u, fixed_load, mode)?;
                Ok(smallcell::efficiency(&s, &cfg.network, &cfg.quadrature)?.eta)
            })
            .collect();
        for (point, fixed) in curve.into_iter().zip(fixed) {
            let opt = point.optimum.as_ref();
            let (fixed_load_eta, fixed_err) = match fixed {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(format!("fixed load: {e}"))),
            };
            let error = match (point.error, fixed_err) {
                (Some(a), Some(b)) => Some(format!("{a}; {b}")),
                (a, b) => a.or(b),
            };
            results.push(OptimumRecord {
                mode,
                lambda_u: point.lambda_u * PER_KM2,
                lambda_b_star: opt.map(|o| o.lambda_b_star * PER_KM2),
                eta_star: opt.map(|o| o.eta_star),
                mu_star: opt.map(|o| o.mu_star),
                unimodal: opt.map(|o| o.unimodal),
                fixed_load,
                fixed_load_eta,
                error,
                search_trace: opt
                    .map(|o| {
                        o.search_trace
                            .iter()
                            .map(|t| TraceRecord {
                                lambda_b: t.lambda_b * PER_KM2,
                                eta: t.eta,
                            })
                            .collect()
                    })
                    .unwrap_or_default(),
            });
        }
    }
    let ok = results.iter().all(|r| r.error.is_none());
    let bytes = match format {
        Format::Csv => render(&results, format)?,
        Format::Json => json_bytes(&OptimizeDocument {
            density_unit: "per_km2",
            eta_unit: "bit/s/Hz/W",
            results,
        })?,
    };
    Ok((bytes, ok))
}

/// Shift applied to one analytic reference before comparison; used to
/// exercise the failure path of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    /// Record name, optionally qualified by mode (`cell_rate/on-off`).
    pub record: String,
    pub offset: f64,
}

impl std::str::FromStr for Perturbation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (record, offset) = s.split_once('=').ok_or("expected RECORD=OFFSET")?;
        Ok(Self {
            record: record.to_string(),
            offset: offset.parse().map_err(|_| format!("`{offset}` is not a number"))?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationRecord {
    pub name: String,
    pub mode: Option<PowerMode>,
    pub analytic: f64,
    pub empirical: f64,
    pub half_width_95: f64,
    /// Extra absolute allowance on top of the half-width.
    pub slack: f64,
    pub n_samples: usize,
    pub n_draws: usize,
    pub pass: bool,
}

impl ValidationRecord {
    fn new(name: &str, mode: Option<PowerMode>, analytic: f64, est: EstimatorOutput, slack: f64) -> Self {
        Self {
            name: name.to_string(),
            mode,
            analytic,
            empirical: est.mean,
            half_width_95: est.half_width_95,
            slack,
            n_samples: est.n_samples,
            n_draws: est.n_draws,
            pass: false,
        }
    }

    fn judge(&mut self) {
        self.pass = (self.analytic - self.empirical).abs() <= self.half_width_95 + self.slack;
    }

    fn id(&self) -> String {
        match self.mode {
            Some(m) => format!("{}/{}", self.name, m.as_str()),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ScenarioInfo {
    lambda_u_per_km2: f64,
    lambda_b_per_km2: f64,
    mu: f64,
    threshold_db: f64,
}

#[derive(Debug, Serialize)]
struct SimInfo {
    seed: u64,
    n_realizations: usize,
    window_side_m: f64,
    expected_bs_per_window: f64,
    boundary: smallcell::Boundary,
    probes_per_realization: usize,
    sampled_cells: usize,
    sampled_users: usize,
    resampled_empty_windows: u32,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    scenario: ScenarioInfo,
    sim: SimInfo,
    pub records: Vec<ValidationRecord>,
    pub passed: bool,
}

/// Compare every analytic quantity with its Monte Carlo estimate at one
/// scenario. The BS density is `lambda_b` if set, else `lambda_u / mu`.
pub fn validate(cfg: &RunConfig, perturbations: &[Perturbation]) -> Result<ValidationReport, CliError> {
    let lambda_u = cfg.lambda_u;
    let lambda_b = match cfg.lambda_b {
        Some(v) => v,
        None if lambda_u > 0.0 => lambda_u / cfg.mu,
        None => return Err(CliError::usage("field `lambda_b`: required when lambda_u = 0")),
    };
    let sim = cfg.sim.config_for(lambda_b);
    sim.validate(lambda_b)?;
    let patterns = sample_patterns(lambda_b, lambda_u, &sim)?;
    let mu = lambda_u / lambda_b;
    let params = &cfg.network;
    let quad = &cfg.quadrature;
    let modes = cfg.mode.modes();

    let mut records = vec![ValidationRecord::new(
        "void_fraction",
        None,
        void_probability(mu),
        estimate_void_fraction(&patterns),
        0.02,
    )];

    if lambda_u == 0.0 {
        for &mode in &modes {
            let (cell, _) = estimate_cell_and_user_rate(&patterns, mode, params, &sim);
            records.push(ValidationRecord::new("cell_rate", Some(mode), 0.0, cell, 0.0));
        }
    } else {
        let freq = cell_count_frequencies(&patterns, 10);
        let tv = 0.5
            * freq
                .iter()
                .enumerate()
                .map(|(n, f)| (f - user_count_pmf(n as u32, mu)).abs())
                .sum::<f64>();
        let tv_est = EstimatorOutput {
            mean: tv,
            half_width_95: 0.0,
            n_samples: patterns.len(),
            n_draws: patterns.len(),
        };
        records.push(ValidationRecord::new("cell_count_total_variation", None, 0.0, tv_est, 0.03));

        let long_term = params.delta.powf(1.0 / gamma(1.0 + 2.0 / params.alpha)?);
        records.push(ValidationRecord::new(
            "received_power_shortfall",
            None,
            long_term,
            estimate_received_power_shortfall(&patterns, params, &sim, false),
            0.0,
        ));

        for &mode in &modes {
            let scenario = Scenario::new(lambda_b, lambda_u, mode)?;
            let draws = TypicalUserDraws::collect(&patterns, mode, params, &sim);
            let kappa = active_density(&scenario) / lambda_b;
            records.push(ValidationRecord::new(
                "link_rate",
                Some(mode),
                achievable_rate(kappa, params, quad)?.value,
                draws.rate(),
                0.0,
            ));
            records.push(ValidationRecord::new(
                "outage",
                Some(mode),
                outage(&scenario, cfg.threshold, params, quad)?.value,
                draws.outage(cfg.threshold),
                0.0,
            ));
            let (cell, user) = estimate_cell_and_user_rate(&patterns, mode, params, &sim);
            records.push(ValidationRecord::new(
                "cell_rate",
                Some(mode),
                cell_rate(&scenario, params, quad)?.value,
                cell,
                0.0,
            ));
            records.push(ValidationRecord::new(
                "user_rate",
                Some(mode),
                user_rate(&scenario, params, quad)?.value,
                user,
                0.0,
            ));
        }
    }

    for r in &mut records {
        for p in perturbations {
            if p.record == r.name || p.record == r.id() {
                r.analytic += p.offset;
            }
        }
        r.judge();
    }
    let passed = records.iter().all(|r| r.pass);
    Ok(ValidationReport {
        scenario: ScenarioInfo {
            lambda_u_per_km2: lambda_u * PER_KM2,
            lambda_b_per_km2: lambda_b * PER_KM2,
            mu,
            threshold_db: 10.0 * cfg.threshold.log10(),
        },
        sim: SimInfo {
            seed: sim.seed,
            n_realizations: sim.n_realizations,
            window_side_m: sim.window_side,
            expected_bs_per_window: lambda_b * sim.window_side * sim.window_side,
            boundary: sim.boundary,
            probes_per_realization: sim.probes_per_realization,
            sampled_cells: sim.sampled_cells,
            sampled_users: sim.sampled_users,
            resampled_empty_windows: patterns.iter().map(|p| p.resamples).sum(),
        },
        records,
        passed,
    })
}

impl Row for ValidationRecord {
    const HEADER: &'static [&'static str] = &[
        "name",
        "mode",
        "analytic",
        "empirical",
        "half_width_95",
        "slack",
        "n_samples",
        "n_draws",
        "pass",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            self.mode.map(|m| m.as_str().to_string()).unwrap_or_default(),
            fmt_float(self.analytic),
            fmt_float(self.empirical),
            fmt_float(self.half_width_95),
            fmt_float(self.slack),
            self.n_samples.to_string(),
            self.n_draws.to_string(),
            self.pass.to_string(),
        ]
    }
}

pub fn render_validation(report: &ValidationReport, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => json_bytes(report),
        Format::Csv => render(&report.records, format),
    }
}

#[derive(Debug, Serialize)]
struct UserRateRow {
    mu: f64,
    mode: PowerMode,
    analytic_user_rate: f64,
    mc_user_rate: Option<f64>,
    mc_half_width: Option<f64>,
}

impl Row for UserRateRow {
    const HEADER: &'static [&'static str] = &["mu", "mode", "analytic_user_rate", "mc_user_rate", "mc_half_width"];

    fn cells(&self) -> Vec<String> {
        vec![
            fmt_float(self.mu),
            self.mode.as_str().to_string(),
            fmt_float(self.analytic_user_rate),
            fmt_opt(self.mc_user_rate),
            fmt_opt(self.mc_half_width),
        ]
    }
}

/// Analytic user rate over the configured cell loads, with Monte Carlo
/// estimates when simulation is enabled.
pub fn user_rate_sweep(cfg: &RunConfig, format: Format) -> Result<Vec<u8>, CliError> {
    let lambda_u = positive_lambda_u(cfg)?;
    let modes = cfg.mode.modes();
    let mut rows = Vec::new();
    for &mu in &cfg.mu_grid {
        let lambda_b = lambda_u / mu;
        let patterns = if cfg.sim.enabled {
            let sim = cfg.sim.config_for(lambda_b);
            Some((sample_patterns(lambda_b, lambda_u, &sim)?, sim))
        } else {
            None
        };
        for &mode in &modes {
            let scenario = Scenario::new(lambda_b, lambda_u, mode)?;
            let analytic = user_rate(&scenario, &cfg.network, &cfg.quadrature)?.value;
            let mc = patterns
                .as_ref()
                .map(|(p, sim)| estimate_cell_and_user_rate(p, mode, &cfg.network, sim).1);
            rows.push(UserRateRow {
                mu,
                mode,
                analytic_user_rate: analytic,
                mc_user_rate: mc.map(|e| e.mean),
                mc_half_width: mc.map(|e| e.half_width_95),
            });
        }
    }
    render(&rows, format)
}

/// One realization as CSV (`x, y, kind, serving_index, active`). Under
/// `--mode both` the active column follows on-off control.
pub fn dump_pattern(cfg: &RunConfig, realization: u64, format: Format) -> Result<Vec<u8>, CliError> {
    if format != Format::Csv {
        return Err(CliError::usage("dump-pattern writes CSV only"));
    }
    let lambda_b = match cfg.lambda_b {
        Some(v) => v,
        None => positive_lambda_u(cfg)? / cfg.mu,
    };
    let mode = match cfg.mode.modes().as_slice() {
        [single] => *single,
        _ => PowerMode::OnOff,
    };
    let sim = cfg.sim.config_for(lambda_b);
    let pattern = sample_network(lambda_b, cfg.lambda_u, &sim, realization)?;
    let mut out = Vec::new();
    pattern.write_csv(mode, &mut out)?;
    Ok(out)
}
