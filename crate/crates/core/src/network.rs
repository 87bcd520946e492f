//! Point-process network model: transmit-power rule, cell-load statistics
//! and the density of transmitting base stations.

use crate::error::{Error, Result};
use crate::special::{gamma, ln_gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Shape parameter of the empirical cell-load distribution.
pub const CELL_SHAPE: f64 = 3.5;

/// Base-station power control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMode {
    /// Every BS transmits regardless of load.
    AllOn,
    /// A BS with no associated users sleeps.
    OnOff,
}

impl PowerMode {
    pub const BOTH: [PowerMode; 2] = [PowerMode::AllOn, PowerMode::OnOff];

    pub fn as_str(self) -> &'static str {
        match self {
            PowerMode::AllOn => "all-on",
            PowerMode::OnOff => "on-off",
        }
    }
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PowerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all-on" | "allon" | "all_on" => Ok(PowerMode::AllOn),
            "on-off" | "onoff" | "on_off" => Ok(PowerMode::OnOff),
            _ => Err(format!("unknown power mode `{s}` (expected all-on or on-off)")),
        }
    }
}

/// Physical-layer and power-model constants, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Path-loss exponent, > 2.
    pub alpha: f64,
    /// Path-loss constant in m^α.
    pub path_loss_constant: f64,
    /// Tolerated probability that the long-term received power falls
    /// below `p_r_min`.
    pub delta: f64,
    /// Minimum received power, watts.
    pub p_r_min: f64,
    /// Noise power, watts.
    pub noise_power: f64,
    /// Static power of a transmitting BS, watts.
    pub p0_circuit: f64,
    /// Power-amplifier slope.
    pub delta_slope: f64,
    /// Sleep-mode power, watts.
    pub p_off: f64,
}

impl NetworkParams {
    /// Picocell deployment used throughout the documentation: C = 4.33e-6,
    /// α = 3.67, δ = 0.01, P_r,min = -100 dBm, σ² = -95 dBm, P₀ = 6.8 W,
    /// Δ = 4.0, P_off = 4.3 W.
    pub fn picocell() -> Self {
        Self {
            alpha: 3.67,
            path_loss_constant: 4.33e-6,
            delta: 0.01,
            p_r_min: 1e-13,
            noise_power: 10f64.powf(-9.5) * 1e-3,
            p0_circuit: 6.8,
            delta_slope: 4.0,
            p_off: 4.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &'static str, value: f64, bound: &'static str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParam { field, value, bound })
            }
        }
        check(self.alpha > 2.0 && self.alpha.is_finite(), "alpha", self.alpha, "alpha > 2")?;
        check(
            self.path_loss_constant > 0.0 && self.path_loss_constant.is_finite(),
            "path_loss_constant",
            self.path_loss_constant,
            "C > 0",
        )?;
        check(self.delta > 0.0 && self.delta < 1.0, "delta", self.delta, "0 < delta < 1")?;
        check(self.p_r_min > 0.0 && self.p_r_min.is_finite(), "p_r_min", self.p_r_min, "p_r_min > 0")?;
        check(
            self.noise_power > 0.0 && self.noise_power.is_finite(),
            "noise_power",
            self.noise_power,
            "noise_power > 0",
        )?;
        check(self.p_off > 0.0 && self.p_off.is_finite(), "p_off", self.p_off, "p_off > 0")?;
        check(
            self.p0_circuit > self.p_off && self.p0_circuit.is_finite(),
            "p0_circuit",
            self.p0_circuit,
            "p0_circuit > p_off",
        )?;
        check(
            self.delta_slope >= 0.0 && self.delta_slope.is_finite(),
            "delta_slope",
            self.delta_slope,
            "delta_slope >= 0",
        )?;
        Ok(())
    }

    /// Noise power normalised by the received-power scale, `σ²/P_r,0`.
    pub fn noise_to_received_scale(&self) -> f64 {
        self.noise_power / received_power_scale(self)
    }
}

/// A pair of base-station and user densities (per m²) and the power-control
/// mode in force. The cell load `μ = λ_u/λ_b` is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub lambda_b: f64,
    pub lambda_u: f64,
    pub mode: PowerMode,
}

impl Scenario {
    pub fn new(lambda_b: f64, lambda_u: f64, mode: PowerMode) -> Result<Self> {
        if !(lambda_b > 0.0 && lambda_b.is_finite()) {
            return Err(Error::InvalidParam {
                field: "lambda_b",
                value: lambda_b,
                bound: "lambda_b > 0",
            });
        }
        if !(lambda_u > 0.0 && lambda_u.is_finite()) {
            return Err(Error::InvalidParam {
                field: "lambda_u",
                value: lambda_u,
                bound: "lambda_u > 0",
            });
        }
        Ok(Self {
            lambda_b,
            lambda_u,
            mode,
        })
    }

    /// Scenario at a prescribed cell load: `λ_b = λ_u / μ`.
    pub fn from_load(lambda_u: f64, mu: f64, mode: PowerMode) -> Result<Self> {
        Self::new(lambda_u / mu, lambda_u, mode)
    }

    pub fn cell_load(&self) -> f64 {
        self.lambda_u / self.lambda_b
    }

    pub fn with_mode(self, mode: PowerMode) -> Self {
        Self { mode, ..self }
    }
}

/// Received-power scale `P_r,0 = (-ln δ / (π Γ(1 + 2/α)))^{α/2} P_r,min`.
pub fn received_power_scale(params: &NetworkParams) -> f64 {
    let alpha = params.alpha;
    // 1 + 2/α ∈ (1, 2) for any α > 2, so gamma cannot fail here
    let g = gamma(1.0 + 2.0 / alpha).expect("gamma argument is in (1, 2)");
    (-params.delta.ln() / (PI * g)).powf(alpha / 2.0) * params.p_r_min
}

/// Smallest transmit power keeping the received-power shortfall probability
/// below δ under nearest-BS association: `P_t = P_r,0 / (C λ_b^{α/2})`.
pub fn min_transmit_power(lambda_b: f64, params: &NetworkParams) -> f64 {
    received_power_scale(params) / (params.path_loss_constant * lambda_b.powf(params.alpha / 2.0))
}

/// Probability that a cell holds no users, `p₀(μ) = (1 + μ/3.5)^{-3.5}`.
pub fn void_probability(mu: f64) -> f64 {
    (1.0 + mu / CELL_SHAPE).powf(-CELL_SHAPE)
}

/// Probability that a cell at load `μ` serves exactly `n` users.
///
/// Evaluated in log space so that large `n` neither overflows the Gamma
/// ratio nor underflows the power of `μ`.
pub fn user_count_pmf(n: u32, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let k = CELL_SHAPE;
    let n_f = n as f64;
    // arguments are all ≥ 1 here, so ln_gamma cannot fail
    let lg = |x: f64| ln_gamma(x).expect("positive argument");
    let log_p = k * k.ln() + lg(n_f + k) + n_f * mu.ln() - lg(k) - lg(n_f + 1.0) - (n_f + k) * (mu + k).ln();
    log_p.exp()
}

/// Smallest `n` at which the cumulative cell-count mass exceeds
/// `1 - 1e-12`, capped at 10 000.
pub fn pmf_cutoff(mu: f64) -> u32 {
    const CAP: u32 = 10_000;
    let mut cumulative = 0.0;
    for n in 0..=CAP {
        cumulative += user_count_pmf(n, mu);
        if cumulative > 1.0 - 1e-12 {
            return n;
        }
    }
    CAP
}

/// Fraction of base stations that transmit, `λ_k / λ_b`.
pub fn active_fraction(mode: PowerMode, mu: f64) -> f64 {
    match mode {
        PowerMode::AllOn => 1.0,
        PowerMode::OnOff => 1.0 - void_probability(mu),
    }
}

/// Density of transmitting base stations, per m².
pub fn active_density(scenario: &Scenario) -> f64 {
    active_fraction(scenario.mode, scenario.cell_load()) * scenario.lambda_b
}
