//! Kinematics and cable-transmission models for serial cable-driven arms.
//!
//! The arm is described by an [`ArmConfig`]: a chain of equivalent revolute
//! joints in standard (distal) Denavit-Hartenberg form, an integer constraint
//! matrix tying those equivalent joints to the independent, motor-driven
//! joints, and the cable routing that connects every joint to its motor.
//!
//! Rolling joints are modelled as two equivalent revolute joints that each
//! turn through half of the joint angle. The shipped default,
//! [`ArmConfig::d3_arm`], has ten equivalent joints and six independent ones.
//!
//! Modules:
//! - [`arm`]: configuration types, validation and JSON ingestion.
//! - [`kinematics`]: forward kinematics, geometric Jacobian, improved Jacobian.
//! - [`ik`]: damped least-squares velocity and position inverse kinematics.
//! - [`transmission`]: cable displacement, coupling matrices, elasticity,
//!   motor angles and static load tensions.

pub mod arm;
pub mod error;
pub mod ik;
pub mod kinematics;
pub mod transmission;
mod units;

pub use arm::{
    expand_joints, ArmConfig, CableSpec, ConstraintMatrix, DhRow, JointLimits, JointState,
    MotorSpec,
};
pub use error::{Error, Result};
pub use ik::{IkRequest, IkResult};
pub use kinematics::{Jacobian, Pose};
pub use transmission::{CableRouting, CableState, CouplingMatrix, DriveKind, PassKind};
