//! Unit-tagged scalar quantities used by the configuration document.
//!
//! A quantity is written either as a string `"130 deg"` or as an object
//! `{"value": 130, "unit": "deg"}`. Every quantity is converted to SI on
//! load; the serializer always writes SI units.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dimension {
    Angle,
    Length,
    Pressure,
    Force,
    Torque,
    AngularSpeed,
}

impl Dimension {
    fn si_unit(self) -> &'static str {
        match self {
            Dimension::Angle => "rad",
            Dimension::Length => "m",
            Dimension::Pressure => "Pa",
            Dimension::Force => "N",
            Dimension::Torque => "N*m",
            Dimension::AngularSpeed => "rad/s",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        use std::f64::consts::PI;
        let scale = match (self, unit) {
            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Angle, "deg") => PI / 180.0,
            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "cm") => 1e-2,
            (Dimension::Pressure, "Pa") => 1.0,
            (Dimension::Pressure, "MPa") => 1e6,
            (Dimension::Pressure, "GPa") => 1e9,
            (Dimension::Force, "N") => 1.0,
            (Dimension::Force, "kN") => 1e3,
            (Dimension::Torque, "N*m" | "Nm" | "N.m") => 1.0,
            (Dimension::AngularSpeed, "rad/s") => 1.0,
            (Dimension::AngularSpeed, "rpm") => 2.0 * PI / 60.0,
            (Dimension::AngularSpeed, "deg/s") => PI / 180.0,
            _ => return None,
        };
        Some(scale)
    }
}

/// Raw tagged quantity as it appears in the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum Tagged {
    Text(String),
    Object { value: f64, unit: String },
}

impl Tagged {
    pub(crate) fn si(value: f64, dim: Dimension) -> Self {
        Tagged::Text(format!("{} {}", value, dim.si_unit()))
    }

    /// Converts to SI, failing on a missing or mismatched unit tag.
    pub(crate) fn to_si(&self, dim: Dimension) -> Result<f64, String> {
        let (value, unit) = match self {
            Tagged::Text(text) => {
                let mut parts = text.split_whitespace();
                let value = parts
                    .next()
                    .ok_or_else(|| "empty quantity".to_string())?
                    .parse::<f64>()
                    .map_err(|e| format!("bad number in {text:?}: {e}"))?;
                let unit = parts
                    .next()
                    .ok_or_else(|| format!("missing unit tag in {text:?}"))?;
                if parts.next().is_some() {
                    return Err(format!("trailing text in {text:?}"));
                }
                (value, unit.to_string())
            }
            Tagged::Object { value, unit } => (*value, unit.clone()),
        };
        let scale = dim
            .scale(&unit)
            .ok_or_else(|| format!("unit {unit:?} is not a valid {dim:?} unit"))?;
        if !value.is_finite() {
            return Err(format!("non-finite value {value}"));
        }
        Ok(value * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_tagged_text_and_objects() {
        let deg = Tagged::Text("180 deg".into()).to_si(Dimension::Angle).unwrap();
        assert!((deg - std::f64::consts::PI).abs() < 1e-15);
        let mm = Tagged::Object {
            value: 25.0,
            unit: "mm".into(),
        };
        assert_eq!(mm.to_si(Dimension::Length).unwrap(), 0.025);
        let rpm = Tagged::Text("300 rpm".into())
            .to_si(Dimension::AngularSpeed)
            .unwrap();
        assert!((rpm - 10.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_untagged_and_mismatched_units() {
        assert!(Tagged::Text("12".into()).to_si(Dimension::Length).is_err());
        assert!(Tagged::Text("12 deg".into())
            .to_si(Dimension::Length)
            .is_err());
        assert!(Tagged::Text("abc m".into())
            .to_si(Dimension::Length)
            .is_err());
    }

    #[test]
    fn si_text_round_trips_exactly() {
        for v in [0.1 + 0.2, -1.0 / 3.0, 1e-300, 123456.789e10] {
            let t = Tagged::si(v, Dimension::Length);
            assert_eq!(t.to_si(Dimension::Length).unwrap(), v);
        }
    }
}
