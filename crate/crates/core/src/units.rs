//! Unit conversions at the configuration boundary. Everything inside the
//! crate is SI: watts, metres, points per square metre.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Watt,
    Dbm,
    PerM2,
    PerKm2,
    /// Linear power ratio.
    Linear,
    Db,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Watt => "W",
            Unit::Dbm => "dBm",
            Unit::PerM2 => "per_m2",
            Unit::PerKm2 => "per_km2",
            Unit::Linear => "linear",
            Unit::Db => "dB",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "W" | "w" | "watt" | "watts" => Unit::Watt,
            "dBm" | "dbm" => Unit::Dbm,
            "per_m2" | "/m2" | "m^-2" => Unit::PerM2,
            "per_km2" | "/km2" | "km^-2" => Unit::PerKm2,
            "linear" => Unit::Linear,
            "dB" | "db" => Unit::Db,
            other => {
                return Err(Error::UnitMismatch {
                    from: other.to_string(),
                    to: "a known unit".to_string(),
                })
            }
        })
    }
}

/// Convert `value` between two units of the same dimension.
pub fn convert_units(value: f64, from: Unit, to: Unit) -> Result<f64> {
    use Unit::*;
    Ok(match (from, to) {
        (a, b) if a == b => value,
        (Dbm, Watt) => 10f64.powf((value - 30.0) / 10.0),
        (Watt, Dbm) => 10.0 * value.log10() + 30.0,
        (PerKm2, PerM2) => value / 1e6,
        (PerM2, PerKm2) => value * 1e6,
        (Db, Linear) => 10f64.powf(value / 10.0),
        (Linear, Db) => 10.0 * value.log10(),
        _ => {
            return Err(Error::UnitMismatch {
                from: from.to_string(),
                to: to.to_string(),
            })
        }
    })
}
