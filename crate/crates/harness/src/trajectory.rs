//! Joint-space trajectory simulation.
//!
//! Joints are interpolated between waypoints, the end-effector position is
//! obtained by forward kinematics at uniformly spaced samples, and speed and
//! acceleration come from finite differences of those positions (central in
//! the interior, second-order one-sided at both ends), the way tracked
//! marker data would be post-processed.

use std::str::FromStr;

use cablearm::kinematics::forward_kinematics;
use cablearm::transmission::{cable_displacements, motor_angle};
use cablearm::ArmConfig;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{num, write_table, Report, Table};

const MAX_SAMPLES: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingLaw {
    /// Cubic with zero velocity at every waypoint.
    Cubic,
    /// Cubic Hermite through the waypoints with finite-difference tangents
    /// in the interior and rest at both ends.
    Hermite,
}

impl FromStr for TimingLaw {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cubic" => Ok(TimingLaw::Cubic),
            "hermite" => Ok(TimingLaw::Hermite),
            other => Err(HarnessError::input(format!(
                "unknown timing law {other:?} (expected cubic or hermite)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub time: f64,
    /// Independent joint angles, radians.
    pub joints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time_s: f64,
    pub joints_rad: Vec<f64>,
    pub position_m: [f64; 3],
    pub speed_m_per_s: f64,
    pub acceleration_m_per_s2: f64,
    /// Per cable, in `TrajectoryReport::cable_ids` order.
    pub cable_displacements_m: Vec<f64>,
    pub motor_angles_rad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub cable_ids: Vec<String>,
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryReport {
    pub fn peak_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.speed_m_per_s).fold(0.0, f64::max)
    }

    pub fn peak_acceleration(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.acceleration_m_per_s2)
            .fold(0.0, f64::max)
    }
}

fn validate(config: &ArmConfig, waypoints: &[Waypoint]) -> Result<()> {
    if waypoints.len() < 2 {
        return Err(HarnessError::input("a trajectory needs at least 2 waypoints"));
    }
    for (i, w) in waypoints.iter().enumerate() {
        if !w.time.is_finite() {
            return Err(HarnessError::input(format!("waypoint {}: time is not finite", i + 1)));
        }
        if w.joints.len() != config.independent_count() {
            return Err(HarnessError::input(format!(
                "waypoint {}: {} joints given, arm has {}",
                i + 1,
                w.joints.len(),
                config.independent_count()
            )));
        }
        if let Some(k) = (0..w.joints.len()).find(|&k| {
            !(config.limits.lower[k]..=config.limits.upper[k]).contains(&w.joints[k])
        }) {
            return Err(HarnessError::input(format!(
                "waypoint {}: Joint{} = {} rad lies outside [{}, {}]",
                i + 1,
                k + 1,
                w.joints[k],
                config.limits.lower[k],
                config.limits.upper[k]
            )));
        }
    }
    if waypoints.windows(2).any(|w| w[1].time <= w[0].time) {
        return Err(HarnessError::input("waypoint times must be strictly increasing"));
    }
    Ok(())
}

fn tangents(waypoints: &[Waypoint]) -> Vec<Vec<f64>> {
    let n = waypoints.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return vec![0.0; waypoints[i].joints.len()];
            }
            let (a, b) = (&waypoints[i - 1], &waypoints[i + 1]);
            a.joints
                .iter()
                .zip(&b.joints)
                .map(|(qa, qb)| (qb - qa) / (b.time - a.time))
                .collect()
        })
        .collect()
}

fn evaluate(waypoints: &[Waypoint], slopes: &[Vec<f64>], law: TimingLaw, t: f64) -> Vec<f64> {
    let last = waypoints.len() - 1;
    let seg = waypoints[1..]
        .iter()
        .position(|w| t <= w.time)
        .unwrap_or(last - 1);
    let (a, b) = (&waypoints[seg], &waypoints[seg + 1]);
    let span = b.time - a.time;
    let s = ((t - a.time) / span).clamp(0.0, 1.0);
    if s == 1.0 {
        return b.joints.clone();
    }
    let (s2, s3) = (s * s, s * s * s);
    // h00·qa + h01·qb written as qa + h01·(qb − qa), exact when qa = qb
    let h01 = 3.0 * s2 - 2.0 * s3;
    match law {
        TimingLaw::Cubic => a
            .joints
            .iter()
            .zip(&b.joints)
            .map(|(qa, qb)| qa + h01 * (qb - qa))
            .collect(),
        TimingLaw::Hermite => {
            let h10 = s3 - 2.0 * s2 + s;
            let h11 = s3 - s2;
            (0..a.joints.len())
                .map(|k| {
                    a.joints[k]
                        + h01 * (b.joints[k] - a.joints[k])
                        + h10 * span * slopes[seg][k]
                        + h11 * span * slopes[seg + 1][k]
                })
                .collect()
        }
    }
}

/// Joint angles at time `t` (clamped to the waypoint time span).
pub fn interpolate(
    config: &ArmConfig,
    waypoints: &[Waypoint],
    law: TimingLaw,
    t: f64,
) -> Result<Vec<f64>> {
    validate(config, waypoints)?;
    Ok(evaluate(waypoints, &tangents(waypoints), law, t))
}

fn derivatives(p: &[Vector3<f64>], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = p.len();
    let mut speed = vec![0.0; n];
    let mut accel = vec![0.0; n];
    if n < 2 {
        return (speed, accel);
    }
    if n == 2 {
        let v = ((p[1] - p[0]) / h).norm();
        return (vec![v, v], accel);
    }
    // stencils are written in differences so that a resting arm gives
    // exact zeros
    let d = |i: usize, j: usize| p[i] - p[j];
    for i in 1..n - 1 {
        speed[i] = (d(i + 1, i - 1) / (2.0 * h)).norm();
        accel[i] = ((d(i + 1, i) - d(i, i - 1)) / (h * h)).norm();
    }
    let m = n - 1;
    speed[0] = ((4.0 * d(1, 0) - d(2, 0)) / (2.0 * h)).norm();
    speed[m] = ((4.0 * d(m - 1, m) - d(m - 2, m)) / (2.0 * h)).norm();
    if n >= 4 {
        accel[0] = ((-5.0 * d(1, 0) + 4.0 * d(2, 0) - d(3, 0)) / (h * h)).norm();
        accel[m] = ((-5.0 * d(m - 1, m) + 4.0 * d(m - 2, m) - d(m - 3, m)) / (h * h)).norm();
    } else {
        accel[0] = accel[1];
        accel[m] = accel[m - 1];
    }
    (speed, accel)
}

/// Samples the trajectory every `sample_interval` seconds (shortened so the
/// final waypoint falls on a sample).
pub fn simulate_trajectory(
    config: &ArmConfig,
    waypoints: &[Waypoint],
    law: TimingLaw,
    sample_interval: f64,
) -> Result<TrajectoryReport> {
    validate(config, waypoints)?;
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(HarnessError::input("sample interval must be > 0"));
    }
    let (t0, t1) = (waypoints[0].time, waypoints[waypoints.len() - 1].time);
    let intervals = ((t1 - t0) / sample_interval * (1.0 - 1e-12)).ceil().max(1.0);
    if intervals >= MAX_SAMPLES as f64 {
        return Err(HarnessError::input("sample interval too small for the trajectory duration"));
    }
    let intervals = intervals as usize;
    let h = (t1 - t0) / intervals as f64;
    let slopes = tangents(waypoints);

    let mut times = Vec::with_capacity(intervals + 1);
    let mut joints = Vec::with_capacity(intervals + 1);
    let mut positions = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let t = if i == intervals { t1 } else { t0 + h * i as f64 };
        let mut q = evaluate(waypoints, &slopes, law, t);
        // interpolation may overshoot a limit by rounding only
        config.limits.clamp(&mut q);
        positions.push(forward_kinematics(config, &config.state(&q))?.position);
        times.push(t);
        joints.push(q);
    }
    let (speed, accel) = derivatives(&positions, h);

    let samples = (0..=intervals)
        .map(|i| {
            let state = config.state(&joints[i]);
            let d = cable_displacements(config, &state)?;
            let angles = config
                .cables
                .iter()
                .zip(&d)
                .map(|(c, &d)| motor_angle(&config.motors[c.driven_joint], d))
                .collect();
            let p = positions[i];
            Ok(TrajectorySample {
                time_s: times[i],
                joints_rad: joints[i].clone(),
                position_m: [p.x, p.y, p.z],
                speed_m_per_s: speed[i],
                acceleration_m_per_s2: accel[i],
                cable_displacements_m: d,
                motor_angles_rad: angles,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryReport {
        cable_ids: config.cables.iter().map(|c| c.id.clone()).collect(),
        samples,
    })
}

/// A swing of the first three joints through most of their range and back,
/// used when no waypoints are given.
pub fn default_swing() -> Vec<Waypoint> {
    let deg = |v: [f64; 6]| v.iter().map(|d| d.to_radians()).collect();
    vec![
        Waypoint { time: 0.0, joints: deg([-50.0, 30.0, -30.0, 0.0, 0.0, 0.0]) },
        Waypoint { time: 0.8, joints: deg([0.0, 60.0, -90.0, 0.0, 30.0, 0.0]) },
        Waypoint { time: 1.6, joints: deg([50.0, 30.0, -30.0, 0.0, 0.0, 0.0]) },
    ]
}

/// Reads waypoints from CSV with a `time_s` column and `joint1_rad`,
/// `joint2_rad`, ... columns.
pub fn parse_waypoint_csv(text: &str) -> Result<Vec<Waypoint>> {
    let table = Table::parse(text)?;
    let time = table.column("time_s")?;
    let joint_cols = joint_columns(&table)?;
    table
        .rows
        .iter()
        .map(|row| {
            Ok(Waypoint {
                time: table.f64(row, time)?,
                joints: joint_cols
                    .iter()
                    .map(|&c| table.f64(row, c))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

fn joint_columns(table: &Table) -> Result<Vec<usize>> {
    let mut cols = Vec::new();
    for k in 1.. {
        match table.column(&format!("joint{k}_rad")) {
            Ok(c) => cols.push(c),
            Err(_) => break,
        }
    }
    if cols.is_empty() {
        return Err(HarnessError::report("no joint1_rad column"));
    }
    Ok(cols)
}

impl Report for TrajectoryReport {
    const KIND: &'static str = "trajectory";

    fn to_csv(&self) -> Result<String> {
        let joints = self.samples.first().map_or(0, |s| s.joints_rad.len());
        let mut header = vec!["time_s".to_string()];
        header.extend((1..=joints).map(|k| format!("joint{k}_rad")));
        header.extend(["x_m", "y_m", "z_m", "speed_m_per_s", "acceleration_m_per_s2"].map(String::from));
        header.extend(self.cable_ids.iter().map(|id| format!("displacement_{id}_m")));
        header.extend(self.cable_ids.iter().map(|id| format!("motor_angle_{id}_rad")));
        let rows: Vec<Vec<String>> = self
            .samples
            .iter()
            .map(|s| {
                let mut row = vec![num(s.time_s)];
                row.extend(s.joints_rad.iter().copied().map(num));
                row.extend(s.position_m.map(num));
                row.push(num(s.speed_m_per_s));
                row.push(num(s.acceleration_m_per_s2));
                row.extend(s.cable_displacements_m.iter().copied().map(num));
                row.extend(s.motor_angles_rad.iter().copied().map(num));
                row
            })
            .collect();
        write_table(&header, &rows)
    }

    fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let time = table.column("time_s")?;
        let joint_cols = joint_columns(&table)?;
        let xyz = [table.column("x_m")?, table.column("y_m")?, table.column("z_m")?];
        let speed = table.column("speed_m_per_s")?;
        let accel = table.column("acceleration_m_per_s2")?;
        let disp = table.columns_between("displacement_", "_m");
        let motor = table.columns_between("motor_angle_", "_rad");
        let cable_ids: Vec<String> = disp.iter().map(|(_, id)| id.clone()).collect();
        if motor.iter().map(|(_, id)| id).ne(cable_ids.iter()) {
            return Err(HarnessError::report("displacement and motor angle columns disagree"));
        }
        let values = |row: &csv::StringRecord, cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter().map(|&c| table.f64(row, c)).collect()
        };
        let disp_cols: Vec<usize> = disp.iter().map(|(c, _)| *c).collect();
        let motor_cols: Vec<usize> = motor.iter().map(|(c, _)| *c).collect();
        let samples = table
            .rows
            .iter()
            .map(|row| {
                Ok(TrajectorySample {
                    time_s: table.f64(row, time)?,
                    joints_rad: values(row, &joint_cols)?,
                    position_m: [
                        table.f64(row, xyz[0])?,
                        table.f64(row, xyz[1])?,
                        table.f64(row, xyz[2])?,
                    ],
                    speed_m_per_s: table.f64(row, speed)?,
                    acceleration_m_per_s2: table.f64(row, accel)?,
                    cable_displacements_m: values(row, &disp_cols)?,
                    motor_angles_rad: values(row, &motor_cols)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cable_ids, samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hold(q: Vec<f64>) -> Vec<Waypoint> {
        vec![
            Waypoint { time: 0.0, joints: q.clone() },
            Waypoint { time: 1.0, joints: q },
        ]
    }

    #[test]
    fn stationary_trajectory_has_zero_speed() {
        let config = ArmConfig::d3_arm();
        for law in [TimingLaw::Cubic, TimingLaw::Hermite] {
            let r = simulate_trajectory(&config, &hold(vec![0.2, 0.3, -0.4, 0.1, 0.2, 0.3]), law, 0.01).unwrap();
            assert_eq!(r.samples.len(), 101);
            assert!(r.samples.iter().all(|s| s.speed_m_per_s == 0.0));
            assert!(r.samples.iter().all(|s| s.acceleration_m_per_s2 == 0.0));
        }
    }

    #[test]
    fn waypoints_outside_limits_are_rejected() {
        let config = ArmConfig::d3_arm();
        let err = simulate_trajectory(&config, &hold(vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0]), TimingLaw::Cubic, 0.01)
            .unwrap_err();
        assert!(err.to_string().contains("Joint1"));
        let mut w = hold(vec![0.0; 6]);
        w[1].time = 0.0;
        assert!(simulate_trajectory(&config, &w, TimingLaw::Cubic, 0.01).is_err());
        assert!(simulate_trajectory(&config, &hold(vec![0.0; 6]), TimingLaw::Cubic, 0.0).is_err());
    }

    #[test]
    fn interpolation_hits_waypoints() {
        let config = ArmConfig::d3_arm();
        let w = default_swing();
        for law in [TimingLaw::Cubic, TimingLaw::Hermite] {
            for p in &w {
                assert_eq!(interpolate(&config, &w, law, p.time).unwrap(), p.joints);
            }
        }
    }

    #[test]
    fn timing_law_names() {
        assert_eq!("cubic".parse::<TimingLaw>().unwrap(), TimingLaw::Cubic);
        assert_eq!("hermite".parse::<TimingLaw>().unwrap(), TimingLaw::Hermite);
        assert!("linear".parse::<TimingLaw>().is_err());
    }
}
