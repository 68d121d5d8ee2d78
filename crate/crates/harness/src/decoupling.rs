//! Virtual decoupling test: sweep upstream joints through their full range
//! and watch the cables that merely pass through them.

use cablearm::transmission::{cable_displacements, tension_for_elongation};
use cablearm::ArmConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{num, write_table, Report, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingOptions {
    /// Independent joints to sweep, 0-based.
    pub joints: Vec<usize>,
    /// Samples per sweep, endpoints included.
    pub steps: usize,
    /// Routed length used to turn a displacement into a tension change;
    /// defaults to the affected cable's free length.
    pub routed_length: Option<f64>,
}

impl Default for DecouplingOptions {
    fn default() -> Self {
        Self {
            joints: vec![0, 1, 2],
            steps: 241,
            routed_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// 1-based joint number.
    pub joint: usize,
    pub lower_rad: f64,
    pub upper_rad: f64,
    pub steps: usize,
    /// Pass-through cable with the largest displacement; `None` when no
    /// cable crosses the joint.
    pub worst_cable: Option<String>,
    pub max_displacement_m: f64,
    pub routed_length_m: f64,
    #[serde(rename = "tension_change_N")]
    pub tension_change_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub sweeps: Vec<SweepResult>,
    pub max_displacement_m: f64,
    #[serde(rename = "max_tension_change_N")]
    pub max_tension_change_n: f64,
}

impl DecouplingReport {
    fn from_sweeps(sweeps: Vec<SweepResult>) -> Self {
        let max_displacement_m = sweeps.iter().map(|s| s.max_displacement_m).fold(0.0, f64::max);
        let max_tension_change_n = sweeps.iter().map(|s| s.tension_change_n).fold(0.0, f64::max);
        Self {
            sweeps,
            max_displacement_m,
            max_tension_change_n,
        }
    }
}

/// Sweeps each joint in `options.joints` from its lower to its upper limit
/// with all other joints at zero, recording the largest absolute
/// displacement of any cable routed through the swept joint.
pub fn decoupling_experiment(config: &ArmConfig, options: &DecouplingOptions) -> Result<DecouplingReport> {
    if options.steps < 2 {
        return Err(HarnessError::input("a sweep needs at least 2 steps"));
    }
    if let Some(l) = options.routed_length {
        if !(l.is_finite() && l > 0.0) {
            return Err(HarnessError::input("routed length must be > 0"));
        }
    }
    let n = config.independent_count();
    let mut sweeps = Vec::with_capacity(options.joints.len());
    for &joint in &options.joints {
        if joint >= n {
            return Err(HarnessError::input(format!("no Joint{}", joint + 1)));
        }
        let crossing: Vec<usize> = (0..config.cables.len())
            .filter(|&i| config.cables[i].pass_through.iter().any(|p| p.joint == joint))
            .collect();
        let (lower, upper) = (config.limits.lower[joint], config.limits.upper[joint]);
        let mut worst: Option<(usize, f64)> = None;
        for step in 0..options.steps {
            let t = step as f64 / (options.steps - 1) as f64;
            let mut q = vec![0.0; n];
            q[joint] = if step + 1 == options.steps { upper } else { lower + (upper - lower) * t };
            let d = cable_displacements(config, &config.state(&q))?;
            for &i in &crossing {
                if worst.is_none_or(|(_, best)| d[i].abs() > best) {
                    worst = Some((i, d[i].abs()));
                }
            }
        }
        let (worst_cable, max_displacement_m, routed_length_m) = match worst {
            Some((i, d)) => (
                Some(config.cables[i].id.clone()),
                d,
                options.routed_length.unwrap_or(config.cables[i].free_length),
            ),
            None => (None, 0.0, options.routed_length.unwrap_or(0.0)),
        };
        let tension_change_n = if max_displacement_m == 0.0 {
            0.0
        } else {
            tension_for_elongation(&config.cable_spec, max_displacement_m, routed_length_m)?
        };
        sweeps.push(SweepResult {
            joint: joint + 1,
            lower_rad: lower,
            upper_rad: upper,
            steps: options.steps,
            worst_cable,
            max_displacement_m,
            routed_length_m,
            tension_change_n,
        });
    }
    Ok(DecouplingReport::from_sweeps(sweeps))
}

const COLUMNS: [&str; 8] = [
    "joint",
    "lower_rad",
    "upper_rad",
    "steps",
    "worst_cable",
    "max_displacement_m",
    "routed_length_m",
    "tension_change_N",
];

impl Report for DecouplingReport {
    const KIND: &'static str = "decoupling";

    fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .sweeps
            .iter()
            .map(|s| {
                vec![
                    s.joint.to_string(),
                    num(s.lower_rad),
                    num(s.upper_rad),
                    s.steps.to_string(),
                    s.worst_cable.clone().unwrap_or_default(),
                    num(s.max_displacement_m),
                    num(s.routed_length_m),
                    num(s.tension_change_n),
                ]
            })
            .collect();
        write_table(&COLUMNS.map(String::from), &rows)
    }

    fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let cols = COLUMNS
            .iter()
            .map(|c| table.column(c))
            .collect::<Result<Vec<_>>>()?;
        let int = |row: &csv::StringRecord, c: usize| -> Result<usize> {
            let s = table.text(row, c);
            s.parse()
                .map_err(|_| HarnessError::report(format!("{}: {s:?}", table.header[c])))
        };
        let sweeps = table
            .rows
            .iter()
            .map(|row| {
                Ok(SweepResult {
                    joint: int(row, cols[0])?,
                    lower_rad: table.f64(row, cols[1])?,
                    upper_rad: table.f64(row, cols[2])?,
                    steps: int(row, cols[3])?,
                    worst_cable: Some(table.text(row, cols[4]).to_owned()).filter(|s| !s.is_empty()),
                    max_displacement_m: table.f64(row, cols[5])?,
                    routed_length_m: table.f64(row, cols[6])?,
                    tension_change_n: table.f64(row, cols[7])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_sweeps(sweeps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_routing_shows_no_displacement() {
        let report = decoupling_experiment(&ArmConfig::d3_arm(), &DecouplingOptions::default()).unwrap();
        assert_eq!(report.sweeps.len(), 3);
        assert_eq!(report.max_displacement_m, 0.0);
        assert_eq!(report.max_tension_change_n, 0.0);
        assert!(report.sweeps.iter().all(|s| s.worst_cable.is_some()));
    }

    #[test]
    fn naive_wrap_follows_arc_length() {
        let options = DecouplingOptions {
            joints: vec![0],
            ..Default::default()
        };
        let report = decoupling_experiment(&ArmConfig::naive_routing(), &options).unwrap();
        let expected = 0.01 * 60f64.to_radians();
        assert!((report.max_displacement_m - expected).abs() < 1e-15);
        assert!((report.max_displacement_m - 0.01047).abs() < 1e-5);
        assert!(report.max_tension_change_n > 0.0);
    }

    #[test]
    fn rejects_bad_options() {
        let config = ArmConfig::d3_arm();
        let bad_steps = DecouplingOptions { steps: 1, ..Default::default() };
        assert!(decoupling_experiment(&config, &bad_steps).is_err());
        let bad_joint = DecouplingOptions { joints: vec![9], ..Default::default() };
        assert!(decoupling_experiment(&config, &bad_joint).is_err());
    }
}
