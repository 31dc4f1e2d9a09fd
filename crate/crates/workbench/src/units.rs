//! Physical quantities written as a number followed by an SI prefix and a
//! unit, e.g. `10kohm`, `155kHz`, `0.625V`. Parsing is strict: the unit is
//! mandatory, case-sensitive and may not be separated by whitespace.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("cannot parse {input:?} as a {unit} quantity: {reason}")]
pub struct UnitError {
    pub input: String,
    pub unit: &'static str,
    pub reason: &'static str,
}

const PREFIXES: [(&str, f64); 6] = [("G", 1e9), ("M", 1e6), ("k", 1e3), ("m", 1e-3), ("u", 1e-6), ("", 1.0)];

/// Parses `<number><prefix><unit>` into base units.
pub fn parse_quantity(input: &str, unit: &'static str) -> Result<f64, UnitError> {
    let err = |reason| UnitError { input: input.to_string(), unit, reason };
    let body = input.strip_suffix(unit).ok_or_else(|| err("missing or wrong unit"))?;
    let (number, scale) = PREFIXES
        .iter()
        .find_map(|(p, s)| body.strip_suffix(p).map(|n| (n, *s)))
        .ok_or_else(|| err("bad prefix"))?;
    if number.is_empty() || number.trim() != number {
        return Err(err("expected a number directly before the unit"));
    }
    if number.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return Err(err("bad prefix"));
    }
    let value: f64 = number.parse().map_err(|_| err("not a number"))?;
    if !value.is_finite() {
        return Err(err("not finite"));
    }
    Ok(value * scale)
}

fn format_quantity(value: f64, unit: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{value}{unit}")
}

macro_rules! quantity {
    ($name:ident, $unit:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl FromStr for $name {
            type Err = UnitError;

            fn from_str(s: &str) -> Result<Self, UnitError> {
                parse_quantity(s, $unit).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                format_quantity(self.0, $unit, f)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

quantity!(Resistance, "ohm");
quantity!(Frequency, "Hz");
quantity!(Voltage, "V");
