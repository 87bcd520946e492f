//! Energy-efficient base-station density for Poisson small cell networks.
//!
//! Base stations and users are independent homogeneous Poisson point
//! processes. Every user attaches to its nearest base station, so some cells
//! end up empty ("void"). Two power-control policies are modelled: every BS
//! transmits (`AllOn`), or BSs with void cells sleep (`OnOff`). The crate
//! evaluates rates and energy efficiency for both, finds the BS density that
//! maximises efficiency for a given user density, and checks every analytical
//! quantity against a Monte Carlo simulation of the same spatial model.
//!
//! ```
//! use smallcell::{efficiency, NetworkParams, PowerMode, QuadratureConfig, Scenario};
//!
//! let params = NetworkParams::picocell();
//! let scenario = Scenario::new(333e-6, 370e-6, PowerMode::OnOff)?;
//! let eta = efficiency(&scenario, &params, &QuadratureConfig::default())?;
//! assert!(eta.eta > 0.2 && eta.eta < 0.25);
//! # Ok::<(), smallcell::Error>(())
//! ```

pub mod efficiency;
pub mod error;
pub mod montecarlo;
pub mod network;
pub mod quadrature;
pub mod rate;
pub mod special;
pub mod units;

pub use efficiency::{
    appendix_objectives, efficiency, maximize_scalar, optimal_density_curve, optimize_density, power_draw,
    power_on, AppendixObjectives, CurvePoint, EfficiencyCurve, EfficiencyResult, Optimum, SearchConfig,
    TracePoint,
};
pub use error::{Error, Result};
pub use montecarlo::{Boundary, EstimatorOutput, PointPattern, SimConfig};
pub use network::{
    active_density, min_transmit_power, received_power_scale, user_count_pmf, void_probability, NetworkParams,
    PowerMode, Scenario,
};
pub use quadrature::QuadratureConfig;
pub use rate::{avg_rate, cell_rate, outage, user_rate, user_share, RateResult};
pub use special::{gamma, hyp2f1, rho, Hyp2F1Args};
pub use units::{convert_units, Unit};
