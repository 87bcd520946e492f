//! Energy efficiency of a base station and the density that maximises it.
//!
//! Efficiency is the average cell rate divided by the average power a BS
//! draws, in bits/s/Hz per watt. Under on-off control a void cell draws
//! only its sleep power, which is what lets it beat the always-on network.

use crate::error::{Error, Result};
use crate::network::{
    min_transmit_power, received_power_scale, void_probability, NetworkParams, PowerMode, Scenario,
};
use crate::quadrature::QuadratureConfig;
use crate::rate::{achievable_rate, all_on_rate, RateResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyResult {
    /// Bits/s/Hz per watt.
    pub eta: f64,
    pub cell_rate: f64,
    /// Average per-BS power draw, watts.
    pub power_draw: f64,
    pub mode: PowerMode,
    /// Quadrature error carried through to `eta`.
    pub abs_error_estimate: f64,
}

/// Power drawn by a transmitting BS, `P₀ + Δ P_t`.
pub fn power_on(lambda_b: f64, params: &NetworkParams) -> f64 {
    params.p0_circuit + params.delta_slope * min_transmit_power(lambda_b, params)
}

/// Average power drawn per BS under the scenario's power control.
pub fn power_draw(scenario: &Scenario, params: &NetworkParams) -> f64 {
    let on = power_on(scenario.lambda_b, params);
    match scenario.mode {
        PowerMode::AllOn => on,
        PowerMode::OnOff => {
            let p0 = void_probability(scenario.cell_load());
            (1.0 - p0) * on + p0 * params.p_off
        }
    }
}

fn efficiency_from_rate(scenario: &Scenario, params: &NetworkParams, rate: &RateResult) -> EfficiencyResult {
    let busy = 1.0 - void_probability(scenario.cell_load());
    let cell_rate = busy * rate.value;
    let power = power_draw(scenario, params);
    EfficiencyResult {
        eta: cell_rate / power,
        cell_rate,
        power_draw: power,
        mode: scenario.mode,
        abs_error_estimate: busy * rate.abs_error_estimate / power,
    }
}

/// Energy efficiency `η_k` of the scenario.
pub fn efficiency(scenario: &Scenario, params: &NetworkParams, quad: &QuadratureConfig) -> Result<EfficiencyResult> {
    let rate = match scenario.mode {
        PowerMode::AllOn => all_on_rate(params, quad)?,
        PowerMode::OnOff => achievable_rate(1.0 - void_probability(scenario.cell_load()), params, quad)?,
    };
    Ok(efficiency_from_rate(scenario, params, &rate))
}

/// Evaluates efficiency across densities at a fixed user density, reusing
/// the always-on rate, which does not depend on `λ_b`.
pub struct EfficiencyCurve<'a> {
    lambda_u: f64,
    mode: PowerMode,
    params: &'a NetworkParams,
    quad: &'a QuadratureConfig,
    all_on: Option<RateResult>,
}

impl<'a> EfficiencyCurve<'a> {
    pub fn new(lambda_u: f64, mode: PowerMode, params: &'a NetworkParams, quad: &'a QuadratureConfig) -> Result<Self> {
        let all_on = match mode {
            PowerMode::AllOn => Some(all_on_rate(params, quad)?),
            PowerMode::OnOff => None,
        };
        Ok(Self {
            lambda_u,
            mode,
            params,
            quad,
            all_on,
        })
    }

    pub fn at(&self, lambda_b: f64) -> Result<EfficiencyResult> {
        let scenario = Scenario::new(lambda_b, self.lambda_u, self.mode)?;
        let rate = match self.all_on {
            Some(rate) => rate,
            None => achievable_rate(1.0 - void_probability(scenario.cell_load()), self.params, self.quad)?,
        };
        Ok(efficiency_from_rate(&scenario, self.params, &rate))
    }
}

/// Settings for the grid-then-golden-section density search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Log-spaced points in the coarse scan.
    pub grid_points: usize,
    /// Lower end of the search interval as a fraction of `λ_u`.
    pub lower_fraction: f64,
    /// Golden-section stops once the bracket is this narrow relative to its
    /// midpoint.
    pub rel_width: f64,
    pub max_iter: usize,
    /// Grid differences below this fraction of the peak count as flat when
    /// checking unimodality.
    pub flat_tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 64,
            lower_fraction: 0.01,
            rel_width: 1e-4,
            max_iter: 200,
            flat_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub lambda_b: f64,
    pub eta: f64,
}

/// Maximiser of a scalar objective over an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarMax {
    pub argmax: f64,
    pub max: f64,
    /// Every evaluation, grid first, then refinement.
    pub trace: Vec<TracePoint>,
    /// Whether the coarse grid rose then fell (allowing flats) with a single
    /// peak.
    pub unimodal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub lambda_u: f64,
    pub mode: PowerMode,
    pub lambda_b_star: f64,
    pub eta_star: f64,
    pub mu_star: f64,
    pub unimodal: bool,
    pub search_trace: Vec<TracePoint>,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn grid_is_unimodal(values: &[f64], tolerance: f64) -> bool {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut falling = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tolerance * scale {
            continue;
        }
        if d < 0.0 {
            falling = true;
        } else if falling {
            return false;
        }
    }
    true
}

/// Better of two evaluations: larger value, ties go to the larger argument.
fn better(a: &TracePoint, b: &TracePoint) -> bool {
    a.eta > b.eta || (a.eta == b.eta && a.lambda_b > b.lambda_b)
}

/// Maximise `objective` on `[lo, hi]`: a log-spaced scan (evaluated in
/// parallel) picks the best bracket, then golden-section search refines it.
///
/// Ties are broken toward the larger argument, so a flat objective returns
/// `hi`. A multimodal scan is not an error; the global grid best is refined
/// and `unimodal` is cleared.
pub fn maximize_scalar<F>(objective: F, lo: f64, hi: f64, search: &SearchConfig) -> Result<ScalarMax>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParam {
            field: "search interval",
            value: lo,
            bound: "0 < lo <= hi",
        });
    }
    if search.grid_points == 0 {
        return Err(Error::InvalidParam {
            field: "grid_points",
            value: 0.0,
            bound: "grid_points >= 1",
        });
    }
    let grid = log_grid(lo, hi, search.grid_points);
    let values = grid.par_iter().map(|&x| objective(x)).collect::<Result<Vec<f64>>>()?;
    let mut trace: Vec<TracePoint> = grid
        .iter()
        .zip(&values)
        .map(|(&lambda_b, &eta)| TracePoint { lambda_b, eta })
        .collect();
    let unimodal = grid_is_unimodal(&values, search.flat_tolerance);

    let mut best_idx = 0;
    for (i, p) in trace.iter().enumerate() {
        if better(p, &trace[best_idx]) {
            best_idx = i;
        }
    }

    if grid.len() > 1 {
        let mut a = grid[best_idx.saturating_sub(1)];
        let mut b = grid[(best_idx + 1).min(grid.len() - 1)];
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = objective(c)?;
        let mut fd = objective(d)?;
        trace.push(TracePoint { lambda_b: c, eta: fc });
        trace.push(TracePoint { lambda_b: d, eta: fd });
        for _ in 0..search.max_iter {
            if (b - a) <= search.rel_width * 0.5 * (a + b) {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = objective(c)?;
                trace.push(TracePoint { lambda_b: c, eta: fc });
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = objective(d)?;
                trace.push(TracePoint { lambda_b: d, eta: fd });
            }
        }
    }

    let best = trace
        .iter()
        .skip(1)
        .fold(trace[0], |acc, p| if better(p, &acc) { *p } else { acc });
    Ok(ScalarMax {
        argmax: best.lambda_b,
        max: best.eta,
        trace,
        unimodal,
    })
}

/// Energy-optimal BS density for user density `lambda_u` (per m²), subject
/// to `λ_b ≤ λ_u`.
pub fn optimize_density(
    lambda_u: f64,
    mode: PowerMode,
    params: &NetworkParams,
    quad: &QuadratureConfig,
    search: &SearchConfig,
) -> Result<Optimum> {
    if !(lambda_u > 0.0 && lambda_u.is_finite()) {
        return Err(Error::InvalidParam {
            field: "lambda_u",
            value: lambda_u,
            bound: "lambda_u > 0",
        });
    }
    if !(search.lower_fraction > 0.0 && search.lower_fraction <= 1.0) {
        return Err(Error::InvalidParam {
            field: "lower_fraction",
            value: search.lower_fraction,
            bound: "0 < lower_fraction <= 1",
        });
    }
    let curve = EfficiencyCurve::new(lambda_u, mode, params, quad)?;
    let found = maximize_scalar(
        |lambda_b| curve.at(lambda_b).map(|r| r.eta),
        lambda_u * search.lower_fraction,
        lambda_u,
        search,
    )?;
    Ok(Optimum {
        lambda_u,
        mode,
        lambda_b_star: found.argmax,
        eta_star: found.max,
        mu_star: lambda_u / found.argmax,
        unimodal: found.unimodal,
        search_trace: found.trace,
    })
}

/// One point of the optimal-density curve. Failures are kept in place so
/// the rest of the curve survives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda_u: f64,
    pub optimum: Option<Optimum>,
    pub error: Option<String>,
}

/// Optimal density for every user density in `lambda_u_grid`.
pub fn optimal_density_curve(
    lambda_u_grid: &[f64],
    mode: PowerMode,
    params: &NetworkParams,
    quad: &QuadratureConfig,
    search: &SearchConfig,
) -> Vec<CurvePoint> {
    lambda_u_grid
        .par_iter()
        .map(|&lambda_u| match optimize_density(lambda_u, mode, params, quad, search) {
            Ok(opt) => CurvePoint {
                lambda_u,
                optimum: Some(opt),
                error: None,
            },
            Err(e) => CurvePoint {
                lambda_u,
                optimum: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Diagnostic functions of the cell load from the reformulated problem:
/// for the always-on network `1/η₁ = g(μ) / (q(μ) C₁)`, and `v(μ)` is
/// `λ_u^{α/2}` times the on-off power draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixObjectives {
    pub g: f64,
    pub q: f64,
    pub v: f64,
}

pub fn appendix_objectives(mu: f64, lambda_u: f64, params: &NetworkParams) -> Result<AppendixObjectives> {
    if !(mu > 0.0) {
        return Err(Error::Domain {
            function: "appendix_objectives",
            value: mu,
            requirement: "mu > 0",
        });
    }
    let half_alpha = params.alpha / 2.0;
    let pr0 = received_power_scale(params);
    let scale = lambda_u.powf(half_alpha);
    let amp = params.delta_slope * pr0 / params.path_loss_constant * mu.powf(half_alpha);
    let p0 = void_probability(mu);
    let on = scale * params.p0_circuit + amp;
    Ok(AppendixObjectives {
        g: params.p0_circuit + amp / scale,
        q: 1.0 - p0,
        v: on - p0 * (on - scale * params.p_off),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_on_limits() {
        let mut p = NetworkParams::picocell();
        assert!(power_on(1e3, &p) - p.p0_circuit < 1e-12);
        p.delta_slope = 0.0;
        assert_eq!(power_on(333e-6, &p), p.p0_circuit);
    }

    #[test]
    fn power_on_picocell() {
        // 6.8 + 4 · 0.13925707710105091
        assert_relative_eq!(
            power_on(333e-6, &NetworkParams::picocell()),
            7.357_028_308_404_203_469_453_415_048_950_026,
            max_relative = 1e-12
        );
    }

    #[test]
    fn eta_is_ratio() {
        let p = NetworkParams::picocell();
        let q = QuadratureConfig::default();
        for mode in PowerMode::BOTH {
            let s = Scenario::new(200e-6, 370e-6, mode).unwrap();
            let r = efficiency(&s, &p, &q).unwrap();
            assert_eq!(r.eta, r.cell_rate / r.power_draw);
            assert!(r.power_draw >= p.p_off && r.power_draw <= power_on(s.lambda_b, &p));
        }
    }

    #[test]
    fn light_load_all_on_vanishes() {
        let p = NetworkParams::picocell();
        let s = Scenario::new(1.0, 1e-9, PowerMode::AllOn).unwrap();
        assert!(efficiency(&s, &p, &QuadratureConfig::default()).unwrap().eta < 1e-8);
    }

    #[test]
    fn flat_objective_prefers_upper_boundary() {
        let r = maximize_scalar(|_| Ok(0.5), 1.0, 100.0, &SearchConfig::default()).unwrap();
        assert_eq!(r.argmax, 100.0);
        assert!(r.unimodal);
    }

    #[test]
    fn concave_objective() {
        let lu = 370e-6;
        let r = maximize_scalar(
            |x| Ok(-(x - lu / 2.0).powi(2)),
            lu / 100.0,
            lu,
            &SearchConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(r.argmax, lu / 2.0, max_relative = 1e-4);
        assert!(r.unimodal);
    }

    #[test]
    fn two_peaks_flagged() {
        let f = |x: f64| Ok((-(x - 2.0).powi(2) * 20.0).exp() + 1.5 * (-(x - 8.0).powi(2) * 20.0).exp());
        let r = maximize_scalar(f, 1.0, 10.0, &SearchConfig::default()).unwrap();
        assert!(!r.unimodal);
        assert_relative_eq!(r.argmax, 8.0, max_relative = 1e-3);
    }

    #[test]
    fn refinement_never_loses_to_grid() {
        let f = |x: f64| Ok((x.ln() - 1.3).cos());
        let s = SearchConfig::default();
        let r = maximize_scalar(f, 0.5, 9.0, &s).unwrap();
        let grid_best = r.trace[..s.grid_points].iter().map(|p| p.eta).fold(f64::MIN, f64::max);
        assert!(r.max >= grid_best);
    }

    #[test]
    fn objective_errors_propagate() {
        let r = maximize_scalar(
            |x| {
                if x > 5.0 {
                    Err(Error::Domain {
                        function: "stub",
                        value: x,
                        requirement: "x <= 5",
                    })
                } else {
                    Ok(x)
                }
            },
            1.0,
            10.0,
            &SearchConfig::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn appendix_q_and_g() {
        let p = NetworkParams::picocell();
        let lu = 370e-6;
        let mut prev = 0.0;
        for i in 1..=100 {
            let mu = i as f64 * 0.01;
            let o = appendix_objectives(mu, lu, &p).unwrap();
            assert_relative_eq!(o.q, 1.0 - void_probability(mu), max_relative = 1e-15);
            assert!(o.g > prev);
            prev = o.g;
        }
        assert!(appendix_objectives(0.0, lu, &p).is_err());
    }

    #[test]
    fn appendix_v_is_scaled_on_off_power() {
        let p = NetworkParams::picocell();
        let lu = 370e-6;
        for mu in [0.25, 0.5, 1.0, 2.0] {
            let o = appendix_objectives(mu, lu, &p).unwrap();
            let s = Scenario::from_load(lu, mu, PowerMode::OnOff).unwrap();
            let scaled = power_draw(&s, &p) * lu.powf(p.alpha / 2.0);
            assert_relative_eq!(o.v, scaled, max_relative = 1e-12);
        }
    }
}
