//! Flat `key = value [unit]` run configuration.
//!
//! One setting per line, `#` starts a comment. Physical quantities must
//! carry their unit (`p_r_min = -100 dBm`, `lambda_u = 370 per_km2`); the
//! parser converts everything to SI. Keys left out keep the defaults of the
//! shipped picocell configuration. Unknown keys and invalid values are
//! rejected with the offending line and field.

use smallcell::montecarlo::DEFAULT_EXPECTED_BS;
use smallcell::{convert_units, Boundary, NetworkParams, PowerMode, QuadratureConfig, SearchConfig, SimConfig, Unit};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// The shipped default configuration.
pub const PICOCELL: &str = include_str!("../../../configs/picocell.cfg");

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// `file:line`, or the flag the value came from.
    pub location: Option<String>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(loc) = &self.location {
            write!(f, "{loc}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn new(location: Option<&str>, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            location: location.map(str::to_string),
            field: field.map(str::to_string),
            message: message.into(),
        }
    }
}

/// Which power-control policies a command covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    AllOn,
    OnOff,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<PowerMode> {
        match self {
            ModeSelection::AllOn => vec![PowerMode::AllOn],
            ModeSelection::OnOff => vec![PowerMode::OnOff],
            ModeSelection::Both => PowerMode::BOTH.to_vec(),
        }
    }
}

impl FromStr for ModeSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all-on" => Ok(ModeSelection::AllOn),
            "on-off" => Ok(ModeSelection::OnOff),
            "both" => Ok(ModeSelection::Both),
            other => Err(format!("unknown mode `{other}` (expected all-on, on-off or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Torus,
    Guard,
}

/// Simulation settings; the window is sized per BS density unless fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub enabled: bool,
    pub seed: u64,
    pub n_realizations: usize,
    /// Metres; `None` sizes the window for the default expected BS count.
    pub window_side: Option<f64>,
    pub boundary: BoundaryKind,
    /// Metres.
    pub guard_width: Option<f64>,
    pub probes_per_realization: usize,
    pub sampled_cells: usize,
    pub sampled_users: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            seed: 1,
            n_realizations: 200,
            window_side: None,
            boundary: BoundaryKind::Torus,
            guard_width: None,
            probes_per_realization: 50,
            sampled_cells: 100,
            sampled_users: 100,
        }
    }
}

impl SimSettings {
    /// Concrete simulation config for BS density `lambda_b` (per m²). In
    /// guard mode an automatic window keeps the default expected BS count
    /// inside the measured region.
    pub fn config_for(&self, lambda_b: f64) -> SimConfig {
        let base = SimConfig::for_density(lambda_b, self.seed, self.n_realizations);
        let boundary = match self.boundary {
            BoundaryKind::Torus => Boundary::Torus,
            BoundaryKind::Guard => Boundary::Guard {
                width: self.guard_width.unwrap_or(0.0),
            },
        };
        let guard = match boundary {
            Boundary::Guard { width } => 2.0 * width,
            Boundary::Torus => 0.0,
        };
        SimConfig {
            window_side: self
                .window_side
                .unwrap_or_else(|| (DEFAULT_EXPECTED_BS / lambda_b).sqrt() + guard),
            boundary,
            probes_per_realization: self.probes_per_realization,
            sampled_cells: self.sampled_cells,
            sampled_users: self.sampled_users,
            ..base
        }
    }
}

/// Everything a command needs, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkParams,
    pub quadrature: QuadratureConfig,
    pub search: SearchConfig,
    pub sim: SimSettings,
    /// Per m².
    pub lambda_u: f64,
    /// Per m²; empty means `[lambda_u]`.
    pub lambda_u_grid: Vec<f64>,
    /// Per m²; fixed BS density for `validate` and `dump-pattern`.
    pub lambda_b: Option<f64>,
    pub lambda_b_min: f64,
    pub lambda_b_max: f64,
    pub lambda_b_points: usize,
    /// Cell load for `validate` when `lambda_b` is not set.
    pub mu: f64,
    pub mu_grid: Vec<f64>,
    /// Linear SINR threshold for outage.
    pub threshold: f64,
    /// Cell load of the fixed-load companion curve.
    pub fixed_load: Option<f64>,
    pub mode: ModeSelection,
    origins: HashMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: NetworkParams::picocell(),
            quadrature: QuadratureConfig::default(),
            search: SearchConfig::default(),
            sim: SimSettings::default(),
            lambda_u: 370e-6,
            lambda_u_grid: Vec::new(),
            lambda_b: None,
            lambda_b_min: 30e-6,
            lambda_b_max: 1000e-6,
            lambda_b_points: 64,
            mu: 1.0,
            mu_grid: vec![0.5, 1.0, 2.0, 4.0],
            threshold: 10f64.powf(0.5),
            fixed_load: None,
            mode: ModeSelection::Both,
            origins: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Power,
    Density,
    DensityList,
    /// dB or linear, unit required.
    Ratio,
    Length,
    PathLoss,
    Real,
    RealList,
    Integer,
    Flag,
    Word,
}

const KEYS: &[(&str, Kind)] = &[
    ("path_loss_constant", Kind::PathLoss),
    ("alpha", Kind::Real),
    ("delta", Kind::Real),
    ("p_r_min", Kind::Power),
    ("noise_power", Kind::Power),
    ("p0_circuit", Kind::Power),
    ("delta_slope", Kind::Real),
    ("p_off", Kind::Power),
    ("rel_tol", Kind::Real),
    ("abs_tol", Kind::Real),
    ("tail_epsilon", Kind::Real),
    ("grid_points", Kind::Integer),
    ("lower_fraction", Kind::Real),
    ("rel_width", Kind::Real),
    ("max_iter", Kind::Integer),
    ("flat_tolerance", Kind::Real),
    ("simulate", Kind::Flag),
    ("seed", Kind::Integer),
    ("n_realizations", Kind::Integer),
    ("window_side", Kind::Length),
    ("boundary", Kind::Word),
    ("guard_width", Kind::Length),
    ("probes_per_realization", Kind::Integer),
    ("sampled_cells", Kind::Integer),
    ("sampled_users", Kind::Integer),
    ("lambda_u", Kind::Density),
    ("lambda_u_grid", Kind::DensityList),
    ("lambda_b", Kind::Density),
    ("lambda_b_min", Kind::Density),
    ("lambda_b_max", Kind::Density),
    ("lambda_b_points", Kind::Integer),
    ("mu", Kind::Real),
    ("mu_grid", Kind::RealList),
    ("threshold", Kind::Ratio),
    ("fixed_load", Kind::Real),
    ("mode", Kind::Word),
];

/// Names of every accepted key.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|k| k.0)
}

enum Parsed {
    Real(f64),
    List(Vec<f64>),
    Integer(u64),
    Flag(bool),
    Word(String),
}

fn split_unit(value: &str) -> (&str, Option<&str>) {
    match value.rsplit_once(char::is_whitespace) {
        Some((head, tail)) if tail.parse::<f64>().is_err() && !tail.ends_with(',') => (head.trim(), Some(tail)),
        _ => (value, None),
    }
}

fn parse_real(text: &str) -> Result<f64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("`{}` is not a number", text.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", text.trim()))
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    let values: Result<Vec<f64>, String> = text.split(',').map(parse_real).collect();
    let values = values?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

fn convert(value: f64, unit: Option<&str>, allowed: &[Unit], target: Unit) -> Result<f64, String> {
    let symbols: Vec<&str> = allowed.iter().map(|u| u.symbol()).collect();
    let Some(unit) = unit else {
        return Err(format!("missing unit (expected one of {})", symbols.join(", ")));
    };
    let parsed: Unit = unit
        .parse()
        .map_err(|_| format!("unknown unit `{unit}` (expected one of {})", symbols.join(", ")))?;
    if !allowed.contains(&parsed) {
        return Err(format!("unit `{unit}` does not fit (expected one of {})", symbols.join(", ")));
    }
    convert_units(value, parsed, target).map_err(|e| e.to_string())
}

fn no_unit(unit: Option<&str>) -> Result<(), String> {
    match unit {
        None => Ok(()),
        Some(u) => Err(format!("unexpected unit `{u}` on a dimensionless value")),
    }
}

fn parse_value(kind: Kind, value: &str) -> Result<Parsed, String> {
    let (number, unit) = split_unit(value);
    let densities = [Unit::PerM2, Unit::PerKm2];
    Ok(match kind {
        Kind::Power => Parsed::Real(convert(parse_real(number)?, unit, &[Unit::Watt, Unit::Dbm], Unit::Watt)?),
        Kind::Density => Parsed::Real(convert(parse_real(number)?, unit, &densities, Unit::PerM2)?),
        Kind::DensityList => Parsed::List(
            parse_list(number)?
                .into_iter()
                .map(|v| convert(v, unit, &densities, Unit::PerM2))
                .collect::<Result<_, _>>()?,
        ),
        Kind::Ratio => Parsed::Real(convert(parse_real(number)?, unit, &[Unit::Db, Unit::Linear], Unit::Linear)?),
        Kind::Length => match unit {
            Some("m") => Parsed::Real(parse_real(number)?),
            Some(u) => return Err(format!("unit `{u}` does not fit (expected m)")),
            None => return Err("missing unit (expected m)".into()),
        },
        Kind::PathLoss => match unit {
            None | Some("m^alpha") => Parsed::Real(parse_real(number)?),
            Some(u) => return Err(format!("unit `{u}` does not fit (expected m^alpha)")),
        },
        Kind::Real => {
            no_unit(unit)?;
            Parsed::Real(parse_real(number)?)
        }
        Kind::RealList => {
            no_unit(unit)?;
            Parsed::List(parse_list(number)?)
        }
        Kind::Integer => {
            no_unit(unit)?;
            Parsed::Integer(
                number
                    .parse()
                    .map_err(|_| format!("`{number}` is not a non-negative integer"))?,
            )
        }
        Kind::Flag => match value {
            "true" | "yes" | "on" => Parsed::Flag(true),
            "false" | "no" | "off" => Parsed::Flag(false),
            other => return Err(format!("`{other}` is not a boolean")),
        },
        Kind::Word => Parsed::Word(value.to_string()),
    })
}

fn usize_of(v: u64) -> Result<usize, String> {
    usize::try_from(v).map_err(|_| format!("{v} is too large"))
}

impl RunConfig {
    /// Defaults overlaid with the settings in `text`; `source` names the
    /// file in diagnostics.
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply_text(text, source)?;
        config.validate()?;
        Ok(config)
    }

    /// Apply every `key = value` line of `text` on top of the current values.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let location = format!("{source}:{}", i + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(Some(&location), None, "expected `key = value`"));
            };
            self.set(key.trim(), value.trim(), &location)?;
        }
        Ok(())
    }

    /// Set one key from its textual value. `location` is reported in errors.
    pub fn set(&mut self, key: &str, value: &str, location: &str) -> Result<(), ConfigError> {
        let Some(&(name, kind)) = KEYS.iter().find(|k| k.0 == key) else {
            return Err(ConfigError::new(Some(location), Some(key), "unknown key"));
        };
        let err = |message: String| ConfigError::new(Some(location), Some(name), message);
        if value.is_empty() {
            return Err(err("missing value".into()));
        }
        let parsed = parse_value(kind, value).map_err(err)?;
        self.store(name, parsed).map_err(err)?;
        self.origins.insert(name, location.to_string());
        Ok(())
    }

    fn store(&mut self, name: &'static str, value: Parsed) -> Result<(), String> {
        let net = &mut self.network;
        match (name, value) {
            ("path_loss_constant", Parsed::Real(v)) => net.path_loss_constant = v,
            ("alpha", Parsed::Real(v)) => net.alpha = v,
            ("delta", Parsed::Real(v)) => net.delta = v,
            ("p_r_min", Parsed::Real(v)) => net.p_r_min = v,
            ("noise_power", Parsed::Real(v)) => net.noise_power = v,
            ("p0_circuit", Parsed::Real(v)) => net.p0_circuit = v,
            ("delta_slope", Parsed::Real(v)) => net.delta_slope = v,
            ("p_off", Parsed::Real(v)) => net.p_off = v,
            ("rel_tol", Parsed::Real(v)) => self.quadrature.rel_tol = v,
            ("abs_tol", Parsed::Real(v)) => self.quadrature.abs_tol = v,
            ("tail_epsilon", Parsed::Real(v)) => self.quadrature.tail_epsilon = v,
            ("grid_points", Parsed::Integer(v)) => self.search.grid_points = usize_of(v)?,
            ("lower_fraction", Parsed::Real(v)) => self.search.lower_fraction = v,
            ("rel_width", Parsed::Real(v)) => self.search.rel_width = v,
            ("max_iter", Parsed::Integer(v)) => self.search.max_iter = usize_of(v)?,
            ("flat_tolerance", Parsed::Real(v)) => self.search.flat_tolerance = v,
            ("simulate", Parsed::Flag(v)) => self.sim.enabled = v,
            ("seed", Parsed::Integer(v)) => self.sim.seed = v,
            ("n_realizations", Parsed::Integer(v)) => self.sim.n_realizations = usize_of(v)?,
            ("window_side", Parsed::Real(v)) => self.sim.window_side = Some(v),
            ("boundary", Parsed::Word(w)) => {
                self.sim.boundary = match w.as_str() {
                    "torus" => BoundaryKind::Torus,
                    "guard" => BoundaryKind::Guard,
                    other => return Err(format!("unknown boundary `{other}` (expected torus or guard)")),
                }
            }
            ("guard_width", Parsed::Real(v)) => self.sim.guard_width = Some(v),
            ("probes_per_realization", Parsed::Integer(v)) => self.sim.probes_per_realization = usize_of(v)?,
            ("sampled_cells", Parsed::Integer(v)) => self.sim.sampled_cells = usize_of(v)?,
            ("sampled_users", Parsed::Integer(v)) => self.sim.sampled_users = usize_of(v)?,
            ("lambda_u", Parsed::Real(v)) => self.lambda_u = v,
            ("lambda_u_grid", Parsed::List(v)) => self.lambda_u_grid = v,
            ("lambda_b", Parsed::Real(v)) => self.lambda_b = Some(v),
            ("lambda_b_min", Parsed::Real(v)) => self.lambda_b_min = v,
            ("lambda_b_max", Parsed::Real(v)) => self.lambda_b_max = v,
            ("lambda_b_points", Parsed::Integer(v)) => self.lambda_b_points = usize_of(v)?,
            ("mu", Parsed::Real(v)) => self.mu = v,
            ("mu_grid", Parsed::List(v)) => self.mu_grid = v,
            ("threshold", Parsed::Real(v)) => self.threshold = v,
            ("fixed_load", Parsed::Real(v)) => self.fixed_load = Some(v),
            ("mode", Parsed::Word(w)) => self.mode = w.parse()?,
            _ => unreachable!("key table and store disagree on {name}"),
        }
        Ok(())
    }

    fn fail(&self, field: &str, message: impl Into<String>) -> ConfigError {
        let location = self.origins.get(field).map(String::as_str);
        ConfigError::new(location, Some(field), message)
    }

    fn require(&self, ok: bool, field: &'static str, value: f64, bound: &str) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(field, format!("{value} violates {bound}")))
        }
    }

    /// Check every value against the invariants of the type it feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let from_core = |e: smallcell::Error| match e {
            smallcell::Error::InvalidParam { field, value, bound } => {
                self.fail(field, format!("{value} violates {bound}"))
            }
            other => ConfigError::new(None, None, other.to_string()),
        };
        self.network.validate().map_err(from_core)?;
        self.quadrature.validate().map_err(from_core)?;

        let s = &self.search;
        self.require(s.grid_points >= 3, "grid_points", s.grid_points as f64, "grid_points >= 3")?;
        self.require(
            s.lower_fraction > 0.0 && s.lower_fraction <= 1.0,
            "lower_fraction",
            s.lower_fraction,
            "0 < lower_fraction <= 1",
        )?;
        self.require(s.rel_width > 0.0, "rel_width", s.rel_width, "rel_width > 0")?;
        self.require(s.max_iter >= 1, "max_iter", s.max_iter as f64, "max_iter >= 1")?;
        self.require(s.flat_tolerance >= 0.0, "flat_tolerance", s.flat_tolerance, "flat_tolerance >= 0")?;

        let sim = &self.sim;
        self.require(
            sim.n_realizations >= 2,
            "n_realizations",
            sim.n_realizations as f64,
            "n_realizations >= 2",
        )?;
        self.require(
            sim.probes_per_realization >= 1,
            "probes_per_realization",
            sim.probes_per_realization as f64,
            "probes_per_realization >= 1",
        )?;
        if let Some(w) = sim.window_side {
            self.require(w > 0.0, "window_side", w, "window_side > 0")?;
        }
        match (sim.boundary, sim.guard_width) {
            (BoundaryKind::Guard, None) => {
                return Err(self.fail("guard_width", "required when boundary = guard"));
            }
            (_, Some(w)) => self.require(w >= 0.0, "guard_width", w, "guard_width >= 0")?,
            _ => {}
        }

        self.require(self.lambda_u >= 0.0, "lambda_u", self.lambda_u, "lambda_u >= 0")?;
        for &v in &self.lambda_u_grid {
            self.require(v > 0.0, "lambda_u_grid", v, "every entry > 0")?;
        }
        if let Some(v) = self.lambda_b {
            self.require(v > 0.0, "lambda_b", v, "lambda_b > 0")?;
        }
        self.require(self.lambda_b_min > 0.0, "lambda_b_min", self.lambda_b_min, "lambda_b_min > 0")?;
        self.require(
            self.lambda_b_max >= self.lambda_b_min,
            "lambda_b_max",
            self.lambda_b_max,
            "lambda_b_max >= lambda_b_min",
        )?;
        self.require(
            self.lambda_b_points >= 1,
            "lambda_b_points",
            self.lambda_b_points as f64,
            "lambda_b_points >= 1",
        )?;
        self.require(self.mu > 0.0, "mu", self.mu, "mu > 0")?;
        for &v in &self.mu_grid {
            self.require(v > 0.0, "mu_grid", v, "every entry > 0")?;
        }
        self.require(self.threshold > 0.0, "threshold", self.threshold, "threshold > 0 (linear)")?;
        if let Some(v) = self.fixed_load {
            self.require(v > 0.0, "fixed_load", v, "fixed_load > 0")?;
        }
        Ok(())
    }

    /// User densities an `optimize` run covers.
    pub fn lambda_u_values(&self) -> Vec<f64> {
        if self.lambda_u_grid.is_empty() {
            vec![self.lambda_u]
        } else {
            self.lambda_u_grid.clone()
        }
    }

    /// Log-spaced BS densities for `efficiency-sweep`, per m².
    pub fn lambda_b_grid(&self) -> Vec<f64> {
        let n = self.lambda_b_points;
        if n == 1 {
            return vec![self.lambda_b_min];
        }
        let (lo, hi) = (self.lambda_b_min.ln(), self.lambda_b_max.ln());
        (0..n)
            .map(|i| match i {
                0 => self.lambda_b_min,
                i if i == n - 1 => self.lambda_b_max,
                i => (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect()
    }

    /// Where `key` was last set, if anywhere.
    pub fn origin(&self, key: &str) -> Option<&str> {
        self.origins.get(key).map(String::as_str)
    }
}
