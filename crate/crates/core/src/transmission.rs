//! Cable routing and length transmission.
//!
//! Every cable is tracked as a motor-side displacement from the zero pose
//! (positive = reeled in). A cable collects:
//!
//! - from its driven joint: `±R·θₑ/2` for a rolling pair (radius `R`, joint
//!   angle `θₑ`), `±r·θ` for a direct capstan of radius `r`;
//! - from every joint it passes through: nothing for an aligner or a rolling
//!   pass-through, `±w·θ` for a naive wrap of radius `w`.
//!
//! The sign is the cable's `direction`; the two cables of an antagonistic
//! pair carry opposite directions, so their displacements always cancel.
//! The joint angle of an independent joint is `(U θ)_k`, the total rotation
//! of its equivalent joints (`θₑ = θ₂ + θ₃` for a rolling pair).

use log::warn;
use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::arm::{ArmConfig, CableSpec, ConstraintMatrix, JointState, MotorSpec};
use crate::error::{Error, Result};
use crate::kinematics::improved_jacobian;

/// How a cable drives its own joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveKind {
    DirectCapstan { radius: f64 },
    RollingPair { radius: f64 },
}

impl DriveKind {
    /// Displacement per radian of joint angle.
    pub fn ratio(&self) -> f64 {
        match *self {
            DriveKind::DirectCapstan { radius } => radius,
            DriveKind::RollingPair { radius } => radius / 2.0,
        }
    }
}

/// How a cable crosses an upstream joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PassKind {
    /// Pulleys keep the cable on the joint axis.
    Aligner,
    /// Cable crosses the rolling contact point; the two pulley segments
    /// change length by equal and opposite amounts.
    RollingPair,
    /// Cable wraps the joint at `wrap_radius` and is coupled to it.
    NaiveWrap { wrap_radius: f64 },
}

impl PassKind {
    pub fn ratio(&self) -> f64 {
        match *self {
            PassKind::Aligner | PassKind::RollingPair => 0.0,
            PassKind::NaiveWrap { wrap_radius } => wrap_radius,
        }
    }

    pub fn is_decoupled(&self) -> bool {
        !matches!(self, PassKind::NaiveWrap { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassThrough {
    /// Independent joint index (0-based).
    pub joint: usize,
    pub kind: PassKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CableRouting {
    pub id: String,
    /// Independent joint index (0-based).
    pub driven_joint: usize,
    /// +1 or -1; antagonists carry opposite signs.
    pub direction: i8,
    pub drive: DriveKind,
    /// Upstream joints crossed on the way to the motor, in chain order.
    pub pass_through: Vec<PassThrough>,
    /// Routed length at the zero pose, meters.
    pub free_length: f64,
}

impl CableRouting {
    pub(crate) fn validate(&self, constraint: &ConstraintMatrix) -> Result<()> {
        let field = |name: &str| format!("cables[{}].{}", self.id, name);
        if self.id.is_empty() {
            return Err(Error::invalid("cables", "cable id must not be empty"));
        }
        if self.driven_joint >= constraint.independent_count() {
            return Err(Error::invalid(field("driven_joint"), "no such joint"));
        }
        if self.direction != 1 && self.direction != -1 {
            return Err(Error::invalid(field("direction"), "must be 1 or -1"));
        }
        let radius = match self.drive {
            DriveKind::DirectCapstan { radius } | DriveKind::RollingPair { radius } => radius,
        };
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(field("drive.radius"), "must be > 0"));
        }
        if !(self.free_length.is_finite() && self.free_length > 0.0) {
            return Err(Error::invalid(field("free_length"), "must be > 0"));
        }
        let first_driven = constraint
            .members(self.driven_joint)
            .map(|(c, _)| c)
            .min()
            .expect("validated row");
        let mut previous_last = None;
        for pass in &self.pass_through {
            if pass.joint >= constraint.independent_count() {
                return Err(Error::invalid(field("pass_through"), "no such joint"));
            }
            if let PassKind::NaiveWrap { wrap_radius } = pass.kind {
                if !(wrap_radius.is_finite() && wrap_radius > 0.0) {
                    return Err(Error::invalid(
                        field("pass_through.wrap_radius"),
                        "must be > 0",
                    ));
                }
            }
            let cols: Vec<usize> = constraint.members(pass.joint).map(|(c, _)| c).collect();
            let last = *cols.iter().max().expect("validated row");
            let first = *cols.iter().min().expect("validated row");
            if last >= first_driven {
                return Err(Error::invalid(
                    field("pass_through"),
                    format!(
                        "Joint{} does not precede driven Joint{}",
                        pass.joint + 1,
                        self.driven_joint + 1
                    ),
                ));
            }
            if previous_last.is_some_and(|p| first <= p) {
                return Err(Error::invalid(
                    field("pass_through"),
                    "pass-through joints must be listed once, in chain order",
                ));
            }
            previous_last = Some(last);
        }
        Ok(())
    }

    /// Displacement at equivalent joint angles `expanded`.
    pub fn displacement(&self, constraint: &ConstraintMatrix, expanded: &[f64]) -> f64 {
        let angle = |joint: usize| -> f64 {
            constraint
                .members(joint)
                .map(|(c, s)| f64::from(s) * expanded[c])
                .sum()
        };
        let driven = self.drive.ratio() * angle(self.driven_joint);
        let coupled: f64 = self
            .pass_through
            .iter()
            .filter(|p| !p.kind.is_decoupled())
            .map(|p| p.kind.ratio() * angle(p.joint))
            .sum();
        f64::from(self.direction) * (driven + coupled)
    }

    /// Analytic row `∂Δl/∂θ_j` over the equivalent joints.
    pub fn coupling_row(&self, constraint: &ConstraintMatrix) -> Vec<f64> {
        let mut row = vec![0.0; constraint.equivalent_count()];
        let sign = f64::from(self.direction);
        for (c, s) in constraint.members(self.driven_joint) {
            row[c] += sign * self.drive.ratio() * f64::from(s);
        }
        for pass in &self.pass_through {
            if pass.kind.is_decoupled() {
                continue;
            }
            for (c, s) in constraint.members(pass.joint) {
                row[c] += sign * pass.kind.ratio() * f64::from(s);
            }
        }
        row
    }
}

/// Per-cable motor-side state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableState {
    /// Motor-side length change, meters (+ = reel-in).
    pub displacement: f64,
    /// Newtons, never negative.
    pub tension: f64,
    pub motor_angle: f64,
}

/// `∂(displacement of cable c)/∂θ_j`, rows in cable-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub cable_ids: Vec<String>,
    /// n_cables × n_equivalent, meters per radian.
    pub entries: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn entry(&self, cable: usize, joint: usize) -> f64 {
        self.entries[(cable, joint)]
    }

    /// `(cable, equivalent joint, value)` for every column belonging to a
    /// joint that the cable passes through.
    pub fn pass_through_entries<'a>(
        &'a self,
        config: &'a ArmConfig,
    ) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
        config.cables.iter().enumerate().flat_map(move |(i, cable)| {
            cable.pass_through.iter().flat_map(move |pass| {
                config
                    .constraint
                    .members(pass.joint)
                    .map(move |(c, _)| (i, c, self.entries[(i, c)]))
            })
        })
    }

    pub fn max_abs_difference(&self, other: &CouplingMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }
}

/// Displacements for all cables at equivalent joint angles (no constraint check).
pub fn displacements_at(config: &ArmConfig, expanded: &[f64]) -> Vec<f64> {
    config
        .cables
        .iter()
        .map(|c| c.displacement(&config.constraint, expanded))
        .collect()
}

/// Motor-side displacement of every cable, in cable order.
pub fn cable_displacements(config: &ArmConfig, state: &JointState) -> Result<Vec<f64>> {
    state.check(&config.constraint)?;
    Ok(displacements_at(config, &state.expanded))
}

/// Routed length of every cable: free length minus its displacement.
pub fn routed_lengths(config: &ArmConfig, state: &JointState) -> Result<Vec<f64>> {
    let d = cable_displacements(config, state)?;
    Ok(config
        .cables
        .iter()
        .zip(d)
        .map(|(c, d)| c.free_length - d)
        .collect())
}

/// Analytic coupling matrix. The model is linear, so it does not depend on
/// `state` beyond validation.
pub fn coupling_matrix(config: &ArmConfig, state: &JointState) -> Result<CouplingMatrix> {
    state.check(&config.constraint)?;
    let n = config.equivalent_count();
    let mut entries = DMatrix::zeros(config.cables.len(), n);
    for (i, cable) in config.cables.iter().enumerate() {
        for (j, v) in cable.coupling_row(&config.constraint).into_iter().enumerate() {
            entries[(i, j)] = v;
        }
    }
    Ok(CouplingMatrix {
        cable_ids: config.cables.iter().map(|c| c.id.clone()).collect(),
        entries,
    })
}

/// Central finite-difference coupling matrix around `state` with step `h`.
pub fn coupling_matrix_fd(config: &ArmConfig, state: &JointState, h: f64) -> Result<CouplingMatrix> {
    state.check(&config.constraint)?;
    let n = config.equivalent_count();
    let mut entries = DMatrix::zeros(config.cables.len(), n);
    for j in 0..n {
        let mut plus = state.expanded.clone();
        let mut minus = state.expanded.clone();
        plus[j] += h;
        minus[j] -= h;
        let dp = displacements_at(config, &plus);
        let dm = displacements_at(config, &minus);
        for i in 0..config.cables.len() {
            entries[(i, j)] = (dp[i] - dm[i]) / (2.0 * h);
        }
    }
    Ok(CouplingMatrix {
        cable_ids: config.cables.iter().map(|c| c.id.clone()).collect(),
        entries,
    })
}

/// Cable displacement per radian of independent joint motion, `C · Uᵀ`.
pub fn transmission_matrix(config: &ArmConfig) -> DMatrix<f64> {
    let u = &config.constraint;
    DMatrix::from_fn(config.cables.len(), config.independent_count(), |i, k| {
        let row = config.cables[i].coupling_row(u);
        u.members(k).map(|(c, s)| row[c] * f64::from(s)).sum()
    })
}

/// Elastic elongation `ΔL = F·L / (E·A)`.
pub fn elongation(spec: &CableSpec, tension_delta: f64, routed_length: f64) -> Result<f64> {
    if !(routed_length.is_finite() && routed_length > 0.0) {
        return Err(Error::invalid("routed_length", "must be > 0"));
    }
    Ok(tension_delta * routed_length / spec.axial_stiffness())
}

/// Tension change producing elongation `delta` over `routed_length`.
pub fn tension_for_elongation(spec: &CableSpec, delta: f64, routed_length: f64) -> Result<f64> {
    if !(routed_length.is_finite() && routed_length > 0.0) {
        return Err(Error::invalid("routed_length", "must be > 0"));
    }
    Ok(delta * spec.axial_stiffness() / routed_length)
}

/// Roller angle that reels in `displacement`.
pub fn motor_angle(motor: &MotorSpec, displacement: f64) -> f64 {
    displacement / motor.roller_radius
}

/// Angle as reported by the encoder: whole ticks, truncated toward zero.
pub fn quantize_angle(motor: &MotorSpec, angle: f64) -> f64 {
    (angle / motor.encoder_resolution).trunc() * motor.encoder_resolution
}

pub fn motor_angle_quantized(motor: &MotorSpec, displacement: f64) -> f64 {
    quantize_angle(motor, motor_angle(motor, displacement))
}

/// Cable states after pretensioning.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretensioned {
    pub states: Vec<CableState>,
    /// Set when the pretension is zero and cables may go slack.
    pub slack_risk: bool,
}

/// Every cable at rest with the baseline tension of `spec`.
pub fn pretension_apply(spec: &CableSpec, cables: &[CableRouting]) -> Result<Pretensioned> {
    if !spec.pretension.is_finite() || spec.pretension < 0.0 {
        return Err(Error::invalid("cable_spec.pretension", "must be >= 0"));
    }
    if spec.pretension > spec.max_tension {
        return Err(Error::invalid(
            "cable_spec.pretension",
            format!("exceeds maximum tension {} N", spec.max_tension),
        ));
    }
    let slack_risk = spec.pretension == 0.0;
    if slack_risk {
        warn!("zero pretension: cables may slacken and leave the pulley grooves");
    }
    Ok(Pretensioned {
        states: cables
            .iter()
            .map(|_| CableState {
                displacement: 0.0,
                tension: spec.pretension,
                motor_angle: 0.0,
            })
            .collect(),
        slack_risk,
    })
}

/// Full cable states at `state` with the given tensions.
pub fn cable_states(config: &ArmConfig, state: &JointState, tensions: &[f64]) -> Result<Vec<CableState>> {
    let displacements = cable_displacements(config, state)?;
    Ok(config
        .cables
        .iter()
        .zip(displacements)
        .zip(tensions)
        .map(|((cable, displacement), &tension)| CableState {
            displacement,
            tension: tension.max(0.0),
            motor_angle: motor_angle(&config.motors[cable.driven_joint], displacement),
        })
        .collect())
}

/// Tensions of an antagonistic pair carrying differential `d ≥ 0` over
/// pretension `t0`: the loaded cable gains `d/2` while the other loses `d/2`
/// until it goes slack, after which the loaded cable carries all of `d`.
pub fn pair_tensions(t0: f64, d: f64) -> (f64, f64) {
    let d = d.abs();
    ((t0 + d / 2.0).max(d), (t0 - d / 2.0).max(0.0))
}

/// Static load analysis result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub payload_mass: f64,
    pub gravity: f64,
    /// Gravity generalized force on each independent joint, N·m per rad.
    pub joint_loads: Vec<f64>,
    /// Tension difference the joint's pair must hold, N (0 if undriven).
    pub tension_differentials: Vec<f64>,
    /// Required tension per cable, N, in cable order.
    pub tensions: Vec<f64>,
    /// Motor torque per independent joint, N·m.
    pub motor_torques: Vec<f64>,
    pub feasible: bool,
    pub violations: Vec<String>,
}

struct Pair {
    positive: usize,
    negative: usize,
    arm: f64,
}

fn antagonistic_pairs(config: &ArmConfig, a: &DMatrix<f64>) -> Result<Vec<Option<Pair>>> {
    (0..config.independent_count())
        .map(|k| {
            let driving: Vec<usize> = (0..config.cables.len())
                .filter(|&i| config.cables[i].driven_joint == k)
                .collect();
            if driving.is_empty() {
                return Ok(None);
            }
            let field = || format!("cables driving Joint{}", k + 1);
            let (pos, neg): (Vec<usize>, Vec<usize>) =
                driving.iter().partition(|&&i| a[(i, k)] > 0.0);
            if pos.len() != 1 || neg.len() != 1 {
                return Err(Error::invalid(
                    field(),
                    "static load analysis needs exactly one antagonistic pair per driven joint",
                ));
            }
            let (ap, an) = (a[(pos[0], k)], -a[(neg[0], k)]);
            if (ap - an).abs() > 1e-12 * ap.max(an) {
                return Err(Error::invalid(field(), "antagonistic moment arms differ"));
            }
            Ok(Some(Pair {
                positive: pos[0],
                negative: neg[0],
                arm: ap,
            }))
        })
        .collect()
}

/// Cable tensions and motor torques holding a point payload at the
/// end-effector against gravity (link masses ignored).
///
/// Joints are balanced from the tip inward, so tension differentials of
/// downstream pairs that wrap an upstream joint are accounted for.
pub fn static_load_tensions(
    config: &ArmConfig,
    state: &JointState,
    payload_mass: f64,
    gravity: f64,
) -> Result<LoadReport> {
    if !(payload_mass.is_finite() && payload_mass >= 0.0) {
        return Err(Error::invalid("payload_mass", "must be finite and >= 0"));
    }
    if !gravity.is_finite() {
        return Err(Error::invalid("gravity", "must be finite"));
    }
    let jim = improved_jacobian(config, state)?;
    let force: Vector3<f64> = config.gravity_direction * (payload_mass * gravity);
    let n = config.independent_count();
    let joint_loads: Vec<f64> = (0..n)
        .map(|k| {
            let v = Vector3::new(jim[(0, k)], jim[(1, k)], jim[(2, k)]);
            v.dot(&force)
        })
        .collect();

    let a = transmission_matrix(config);
    let pairs = antagonistic_pairs(config, &a)?;
    let t0 = config.cable_spec.pretension;
    let mut tensions = vec![t0; config.cables.len()];
    let mut differentials = vec![0.0; n];
    let mut motor_torques = vec![0.0; n];
    let mut violations = Vec::new();

    for k in (0..n).rev() {
        let downstream: f64 = (0..config.cables.len())
            .filter(|&i| config.cables[i].driven_joint > k)
            .map(|i| tensions[i] * a[(i, k)])
            .sum();
        let required = -joint_loads[k] - downstream;
        match &pairs[k] {
            Some(pair) => {
                let d = required / pair.arm;
                let (high, low) = pair_tensions(t0, d);
                let (hi_idx, lo_idx) = if d >= 0.0 {
                    (pair.positive, pair.negative)
                } else {
                    (pair.negative, pair.positive)
                };
                tensions[hi_idx] = high;
                tensions[lo_idx] = low;
                differentials[k] = d.abs();
                motor_torques[k] = d.abs() * config.motors[k].roller_radius;
            }
            None => {
                if required.abs() > 0.0 {
                    violations.push(format!("Joint{} has no driving cables", k + 1));
                }
            }
        }
    }

    for (cable, &t) in config.cables.iter().zip(&tensions) {
        if t > config.cable_spec.max_tension {
            violations.push(format!(
                "cable {} tension {:.1} N exceeds {} N",
                cable.id, t, config.cable_spec.max_tension
            ));
        }
    }
    for (k, (&tau, motor)) in motor_torques.iter().zip(&config.motors).enumerate() {
        if tau > motor.nominal_torque {
            violations.push(format!(
                "Joint{} motor torque {:.2} N*m exceeds {} N*m",
                k + 1,
                tau,
                motor.nominal_torque
            ));
        }
    }

    Ok(LoadReport {
        payload_mass,
        gravity,
        joint_loads,
        tension_differentials: differentials,
        tensions,
        motor_torques,
        feasible: violations.is_empty(),
        violations,
    })
}

/// Largest payload mass that keeps every tension and motor torque within its
/// limit at `state`. Infinite if gravity produces no joint load.
pub fn max_payload(config: &ArmConfig, state: &JointState, gravity: f64) -> Result<f64> {
    // every differential is linear in the payload; evaluate per kilogram
    let unit = static_load_tensions(config, state, 1.0, gravity)?;
    if unit.violations.iter().any(|v| v.contains("no driving cables")) {
        return Ok(0.0);
    }
    let t0 = config.cable_spec.pretension;
    let t_max = config.cable_spec.max_tension;
    // differential at which the loaded cable reaches t_max
    let d_tension = if t_max <= 2.0 * t0 {
        2.0 * (t_max - t0)
    } else {
        t_max
    };
    let mut best = f64::INFINITY;
    for (k, &d) in unit.tension_differentials.iter().enumerate() {
        if d <= 0.0 {
            continue;
        }
        let d_torque = config.motors[k].nominal_torque / config.motors[k].roller_radius;
        best = best.min(d_tension.min(d_torque) / d);
    }
    Ok(best)
}
