//! Report types for the single-shot commands (forward and inverse
//! kinematics, coupling matrix, static load check).

use cablearm::ik::solve_position;
use cablearm::kinematics::forward_kinematics;
use cablearm::transmission::{coupling_matrix, coupling_matrix_fd, max_payload, static_load_tensions};
use cablearm::{ArmConfig, IkRequest, Pose};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{num, write_table, Report, Table};

/// Step used for the finite-difference coupling matrix, radians.
pub const COUPLING_FD_STEP: f64 = 1e-6;

fn check_joints(config: &ArmConfig, joints: &[f64]) -> Result<()> {
    if joints.len() != config.independent_count() {
        return Err(HarnessError::input(format!(
            "{} joint values given, arm has {}",
            joints.len(),
            config.independent_count()
        )));
    }
    if joints.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::input("joint values must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkReport {
    pub joints_rad: Vec<f64>,
    pub equivalent_joints_rad: Vec<f64>,
    pub position_m: [f64; 3],
    /// Row-major rotation matrix of the end-effector frame.
    pub rotation: [[f64; 3]; 3],
    pub rotation_vector_rad: [f64; 3],
}

impl Report for FkReport {
    const KIND: &'static str = "fk";
}

pub fn fk_report(config: &ArmConfig, joints: &[f64]) -> Result<FkReport> {
    check_joints(config, joints)?;
    let state = config.state(joints);
    let pose = forward_kinematics(config, &state)?;
    let r = pose.rotation;
    let rv = pose.rotation_vector();
    Ok(FkReport {
        joints_rad: joints.to_vec(),
        equivalent_joints_rad: state.expanded,
        position_m: [pose.position.x, pose.position.y, pose.position.z],
        rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
        rotation_vector_rad: [rv.x, rv.y, rv.z],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkReport {
    pub converged: bool,
    pub iterations_used: usize,
    pub residual_position_m: f64,
    pub residual_orientation_rad: f64,
    pub solution_rad: Vec<f64>,
    pub initial_rad: Vec<f64>,
    pub target_position_m: [f64; 3],
    pub target_rotation_vector_rad: [f64; 3],
    pub residual_history: Vec<f64>,
}

impl Report for IkReport {
    const KIND: &'static str = "ik";
}

/// Solves for `target`; `request.seed` is the initial guess.
pub fn ik_report(config: &ArmConfig, request: &IkRequest) -> Result<IkReport> {
    let result = solve_position(config, request)?;
    let t = request.target.position;
    let rv = request.target.rotation_vector();
    Ok(IkReport {
        converged: result.converged,
        iterations_used: result.iterations_used,
        residual_position_m: result.residual_position,
        residual_orientation_rad: result.residual_orientation,
        solution_rad: result.solution,
        initial_rad: request.seed.clone(),
        target_position_m: [t.x, t.y, t.z],
        target_rotation_vector_rad: [rv.x, rv.y, rv.z],
        residual_history: result.residual_history,
    })
}

/// Target at `position` with the orientation the arm has at `joints`.
pub fn target_keeping_orientation(
    config: &ArmConfig,
    joints: &[f64],
    position: nalgebra::Vector3<f64>,
) -> Result<Pose> {
    check_joints(config, joints)?;
    let pose = forward_kinematics(config, &config.state(joints))?;
    Ok(Pose::new(pose.rotation, position))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub cable_ids: Vec<String>,
    /// 1-based joint driven by each cable.
    pub driven_joints: Vec<usize>,
    /// Largest |entry| over the columns of joints the cable passes through.
    pub pass_through_max_m_per_rad: Vec<f64>,
    /// Row per cable, column per equivalent joint.
    pub entries_m_per_rad: Vec<Vec<f64>>,
}

pub fn coupling_report(config: &ArmConfig, joints: &[f64], finite_difference: bool) -> Result<CouplingReport> {
    check_joints(config, joints)?;
    let state = config.state(joints);
    let c = if finite_difference {
        coupling_matrix_fd(config, &state, COUPLING_FD_STEP)?
    } else {
        coupling_matrix(config, &state)?
    };
    let mut pass_max = vec![0.0f64; config.cables.len()];
    for (i, _, v) in c.pass_through_entries(config) {
        pass_max[i] = pass_max[i].max(v.abs());
    }
    Ok(CouplingReport {
        cable_ids: c.cable_ids.clone(),
        driven_joints: config.cables.iter().map(|c| c.driven_joint + 1).collect(),
        pass_through_max_m_per_rad: pass_max,
        entries_m_per_rad: c.entries.row_iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

impl Report for CouplingReport {
    const KIND: &'static str = "coupling";

    fn to_csv(&self) -> Result<String> {
        let columns = self.entries_m_per_rad.first().map_or(0, Vec::len);
        let mut header: Vec<String> = ["cable_id", "driven_joint", "pass_through_max_m_per_rad"]
            .map(String::from)
            .to_vec();
        header.extend((1..=columns).map(|j| format!("theta{j}_m_per_rad")));
        let rows: Vec<Vec<String>> = (0..self.cable_ids.len())
            .map(|i| {
                let mut row = vec![
                    self.cable_ids[i].clone(),
                    self.driven_joints[i].to_string(),
                    num(self.pass_through_max_m_per_rad[i]),
                ];
                row.extend(self.entries_m_per_rad[i].iter().copied().map(num));
                row
            })
            .collect();
        write_table(&header, &rows)
    }

    fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let id = table.column("cable_id")?;
        let driven = table.column("driven_joint")?;
        let pass = table.column("pass_through_max_m_per_rad")?;
        let mut theta = Vec::new();
        for j in 1.. {
            match table.column(&format!("theta{j}_m_per_rad")) {
                Ok(c) => theta.push(c),
                Err(_) => break,
            }
        }
        let mut report = CouplingReport {
            cable_ids: vec![],
            driven_joints: vec![],
            pass_through_max_m_per_rad: vec![],
            entries_m_per_rad: vec![],
        };
        for row in &table.rows {
            report.cable_ids.push(table.text(row, id).to_owned());
            let d = table.text(row, driven);
            report.driven_joints.push(
                d.parse()
                    .map_err(|_| HarnessError::report(format!("driven_joint: {d:?}")))?,
            );
            report.pass_through_max_m_per_rad.push(table.f64(row, pass)?);
            report
                .entries_m_per_rad
                .push(theta.iter().map(|&c| table.f64(row, c)).collect::<Result<_>>()?);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableTension {
    pub id: String,
    #[serde(rename = "tension_N")]
    pub tension_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCheckReport {
    pub joints_rad: Vec<f64>,
    pub payload_kg: f64,
    pub gravity_m_per_s2: f64,
    pub feasible: bool,
    pub violations: Vec<String>,
    #[serde(rename = "joint_loads_Nm")]
    pub joint_loads_nm: Vec<f64>,
    #[serde(rename = "tension_differentials_N")]
    pub tension_differentials_n: Vec<f64>,
    #[serde(rename = "motor_torques_Nm")]
    pub motor_torques_nm: Vec<f64>,
    pub cables: Vec<CableTension>,
    /// `None` when gravity puts no load on any driven joint.
    pub max_payload_kg: Option<f64>,
}

impl Report for LoadCheckReport {
    const KIND: &'static str = "load_check";
}

pub fn load_check_report(config: &ArmConfig, joints: &[f64], payload_kg: f64, gravity: f64) -> Result<LoadCheckReport> {
    check_joints(config, joints)?;
    let state = config.state(joints);
    let report = static_load_tensions(config, &state, payload_kg, gravity)?;
    let limit = max_payload(config, &state, gravity)?;
    Ok(LoadCheckReport {
        joints_rad: joints.to_vec(),
        payload_kg,
        gravity_m_per_s2: gravity,
        feasible: report.feasible,
        violations: report.violations,
        joint_loads_nm: report.joint_loads,
        tension_differentials_n: report.tension_differentials,
        motor_torques_nm: report.motor_torques,
        cables: config
            .cables
            .iter()
            .zip(report.tensions)
            .map(|(c, t)| CableTension {
                id: c.id.clone(),
                tension_n: t,
            })
            .collect(),
        max_payload_kg: Some(limit).filter(|m| m.is_finite()),
    })
}
