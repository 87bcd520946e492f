//! Average achievable rate, outage, cell rate and user rate.
//!
//! With `P_t` pinned to [`min_transmit_power`](crate::network::min_transmit_power)
//! and the substitution `x = λ_b r²`, the probability that a typical user
//! sees SINR above `T` becomes
//!
//! ```text
//! π ∫₀^∞ exp(-(σ²/P_r,0) T x^{α/2} - π x (κ ρ(T, α) + 1)) dx
//! ```
//!
//! where `κ = λ_k/λ_b` is the fraction of transmitting base stations. The
//! average rate integrates that coverage over `T = 2^t - 1`, `t ∈ [0, ∞)`.
//! Neither integral depends on `λ_b` except through `κ`.

use crate::error::{Error, Result};
use crate::network::{active_fraction, void_probability, NetworkParams, PowerMode, Scenario};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::special::rho;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Upper limit of the outer (bits/s/Hz) integral.
pub const MAX_RATE_TRUNCATION: f64 = 64.0;
const MAX_PANELS: usize = 2_000;
/// Inner integrals run this much tighter than the requested tolerance.
const INNER_TIGHTENING: f64 = 0.1;

/// An analytical quantity together with its numerical provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// Upper limit used for the outer rate integral; zero when there is none.
    pub t_truncation: f64,
    /// Largest upper limit used for the inner integral.
    pub x_truncation: f64,
}

impl RateResult {
    fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            abs_error_estimate: self.abs_error_estimate * factor.abs(),
            ..self
        }
    }
}

/// Exponent at which the inner integrand is cut: the tail left over, summed
/// across the full outer range, stays well below `tail_epsilon`.
fn truncation_exponent(quad: &QuadratureConfig) -> f64 {
    (MAX_RATE_TRUNCATION / quad.tail_epsilon).ln() + 5.0
}

struct CoverageTerm {
    value: f64,
    abs_error: f64,
    x_truncation: f64,
}

/// Coverage `P[SINR ≥ T]` for a given fraction `kappa` of transmitting BSs.
fn coverage_term(
    threshold: f64,
    kappa: f64,
    noise_ratio: f64,
    alpha: f64,
    quad: &QuadratureConfig,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<CoverageTerm> {
    let noise_coeff = noise_ratio * threshold;
    let linear_coeff = PI * (kappa * rho(threshold, alpha)? + 1.0);
    // cut where the exponent reaches `cut`; the neglected tail is then at
    // most π e^{-cut} / linear_coeff since the exponent grows at least that fast
    let cut = truncation_exponent(quad);
    let mut x_max = cut / linear_coeff;
    if noise_coeff > 0.0 {
        x_max = x_max.min((cut / noise_coeff).powf(2.0 / alpha));
    }
    let half_alpha = 0.5 * alpha;
    let inner = integrate(
        |x: f64| (-noise_coeff * x.powf(half_alpha) - linear_coeff * x).exp(),
        0.0,
        x_max,
        abs_tol / PI,
        rel_tol,
        MAX_PANELS,
    )?;
    let tail = PI * (-cut).exp() / linear_coeff;
    Ok(CoverageTerm {
        value: PI * inner.value,
        abs_error: PI * inner.abs_error + tail,
        x_truncation: x_max,
    })
}

fn check_inputs(params: &NetworkParams, quad: &QuadratureConfig) -> Result<()> {
    params.validate()?;
    quad.validate()
}

/// Average maximum achievable rate `E[log₂(1 + SINR)]` when a fraction
/// `kappa ∈ [0, 1]` of base stations transmits. `kappa = 0` gives the
/// interference-free ceiling.
pub fn achievable_rate(kappa: f64, params: &NetworkParams, quad: &QuadratureConfig) -> Result<RateResult> {
    check_inputs(params, quad)?;
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParam {
            field: "kappa",
            value: kappa,
            bound: "0 <= kappa <= 1",
        });
    }
    let noise_ratio = params.noise_to_received_scale();
    let alpha = params.alpha;
    let inner_rel = quad.rel_tol * INNER_TIGHTENING;
    // inner absolute errors accumulate over the whole outer range
    let inner_abs = quad.abs_tol * INNER_TIGHTENING / MAX_RATE_TRUNCATION;
    let coverage_at =
        |t: f64| coverage_term(t.exp2() - 1.0, kappa, noise_ratio, alpha, quad, inner_rel, inner_abs);

    // Locate the truncation point. Coverage decays roughly geometrically in
    // t, so the remainder past t is estimated from the last decay ratio.
    let mut previous = coverage_at(0.0)?.value;
    let mut running = 0.0;
    let mut t_max = MAX_RATE_TRUNCATION;
    let mut tail_estimate = 0.0;
    for k in 1..=(MAX_RATE_TRUNCATION as u32) {
        let current = coverage_at(k as f64)?.value;
        running += 0.5 * (previous + current);
        let ratio = current / previous;
        tail_estimate = if ratio > 0.0 && ratio < 1.0 {
            current / -ratio.ln()
        } else {
            current * MAX_RATE_TRUNCATION
        };
        previous = current;
        if tail_estimate <= quad.tail_epsilon * running {
            t_max = k as f64;
            break;
        }
    }

    let mut x_truncation = 0.0_f64;
    let mut failure = None;
    let outer = integrate(
        |t: f64| match coverage_at(t) {
            Ok(term) => {
                x_truncation = x_truncation.max(term.x_truncation);
                term.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t_max,
        quad.abs_tol * 0.5,
        quad.rel_tol * 0.5,
        MAX_PANELS,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let value = outer.value;
    // each inner integral met max(abs, rel·value), plus its truncated tail
    let cut_tail = (-truncation_exponent(quad)).exp();
    let inner_bound = inner_rel * value + t_max * (inner_abs + cut_tail);
    let abs_error = outer.abs_error + inner_bound + tail_estimate;
    let tolerance = quad.tolerance_for(value);
    if abs_error > tolerance {
        return Err(Error::Convergence {
            value,
            abs_error,
            tolerance,
        });
    }
    Ok(RateResult {
        value,
        abs_error_estimate: abs_error,
        t_truncation: t_max,
        x_truncation,
    })
}

/// `(1 - p₀(μ)) / μ`, the expected share of a cell's resources a randomly
/// chosen user receives. Tends to 1 as `μ → 0`.
pub fn user_share(mu: f64) -> f64 {
    if mu == 0.0 {
        return 1.0;
    }
    // 1 - (1 + μ/3.5)^{-3.5} without cancellation for small μ
    -(-3.5 * (mu / 3.5).ln_1p()).exp_m1() / mu
}

fn interference_fraction(scenario: &Scenario) -> f64 {
    active_fraction(scenario.mode, scenario.cell_load())
}

/// Average maximum achievable rate `C_k` in bits/s/Hz.
pub fn avg_rate(scenario: &Scenario, params: &NetworkParams, quad: &QuadratureConfig) -> Result<RateResult> {
    achievable_rate(interference_fraction(scenario), params, quad)
}

/// Outage probability `P[SINR < T]` at a linear threshold `T > 0`.
pub fn outage(
    scenario: &Scenario,
    threshold: f64,
    params: &NetworkParams,
    quad: &QuadratureConfig,
) -> Result<RateResult> {
    check_inputs(params, quad)?;
    if !(threshold > 0.0) {
        return Err(Error::Domain {
            function: "outage",
            value: threshold,
            requirement: "T > 0",
        });
    }
    if threshold.is_infinite() {
        return Ok(RateResult {
            value: 1.0,
            abs_error_estimate: 0.0,
            t_truncation: 0.0,
            x_truncation: 0.0,
        });
    }
    let term = coverage_term(
        threshold,
        interference_fraction(scenario),
        params.noise_to_received_scale(),
        params.alpha,
        quad,
        quad.rel_tol,
        quad.abs_tol,
    )?;
    Ok(RateResult {
        value: (1.0 - term.value).clamp(0.0, 1.0),
        abs_error_estimate: term.abs_error,
        t_truncation: 0.0,
        x_truncation: term.x_truncation,
    })
}

/// Average cell rate `(1 - p₀(μ)) C_k`.
pub fn cell_rate(scenario: &Scenario, params: &NetworkParams, quad: &QuadratureConfig) -> Result<RateResult> {
    let c = avg_rate(scenario, params, quad)?;
    Ok(c.scaled(1.0 - void_probability(scenario.cell_load())))
}

/// Average user rate `(1 - p₀(μ)) C_k / μ`.
pub fn user_rate(scenario: &Scenario, params: &NetworkParams, quad: &QuadratureConfig) -> Result<RateResult> {
    let c = avg_rate(scenario, params, quad)?;
    Ok(c.scaled(user_share(scenario.cell_load())))
}

/// Scenario-free rate for the always-on network, which depends on neither
/// density.
pub fn all_on_rate(params: &NetworkParams, quad: &QuadratureConfig) -> Result<RateResult> {
    achievable_rate(active_fraction(PowerMode::AllOn, 1.0), params, quad)
}
