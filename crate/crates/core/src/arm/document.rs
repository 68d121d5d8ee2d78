//! JSON configuration document.
//!
//! Top-level keys: `dh`, `constraint`, `limits`, `cables`, `cable_spec`,
//! `motors`, plus optional `schema_version`, `name`, `notes` and
//! `gravity_direction`. Angles and lengths must carry unit tags
//! (`deg`/`rad`, `mm`/`cm`/`m`). Joint numbers in the document are 1-based
//! independent-joint numbers (`1` is Joint1).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{ArmConfig, CableSpec, ConstraintMatrix, DhRow, JointLimits, MotorSpec};
use crate::error::{Error, Result};
use crate::transmission::{CableRouting, DriveKind, PassKind, PassThrough};
use crate::units::{Dimension, Tagged};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default = "schema_version")]
    schema_version: u32,
    #[serde(default)]
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    dh: Vec<DhDoc>,
    constraint: Vec<Vec<i8>>,
    limits: Vec<LimitDoc>,
    #[serde(default)]
    cables: Vec<CableDoc>,
    cable_spec: CableSpecDoc,
    motors: Vec<MotorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gravity_direction: Option<[f64; 3]>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn zero_angle() -> Tagged {
    Tagged::si(0.0, Dimension::Angle)
}

fn zero_length() -> Tagged {
    Tagged::si(0.0, Dimension::Length)
}

fn positive_direction() -> i8 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DhDoc {
    link_twist: Tagged,
    link_length: Tagged,
    #[serde(default = "zero_length")]
    link_offset: Tagged,
    #[serde(default = "zero_angle")]
    joint_angle_offset: Tagged,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitDoc {
    lower: Tagged,
    upper: Tagged,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CableDoc {
    id: String,
    driven_joint: usize,
    #[serde(default = "positive_direction")]
    direction: i8,
    drive: DriveDoc,
    #[serde(default)]
    pass_through: Vec<PassDoc>,
    free_length: Tagged,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DriveDoc {
    DirectCapstan { radius: Tagged },
    RollingPair { radius: Tagged },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PassDoc {
    Aligner { joint: usize },
    RollingPair { joint: usize },
    NaiveWrap { joint: usize, wrap_radius: Tagged },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CableSpecDoc {
    diameter: Tagged,
    youngs_modulus: Tagged,
    max_tension: Tagged,
    pretension: Tagged,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotorDoc {
    roller_radius: Tagged,
    nominal_torque: Tagged,
    nominal_speed: Tagged,
    encoder_resolution: Tagged,
}

fn convert(q: &Tagged, dim: Dimension, field: impl FnOnce() -> String) -> Result<f64> {
    q.to_si(dim).map_err(|message| Error::Invalid {
        field: field(),
        message,
    })
}

fn joint_index(number: usize, count: usize, field: impl FnOnce() -> String) -> Result<usize> {
    if number == 0 || number > count {
        return Err(Error::Invalid {
            field: field(),
            message: format!("joint number {number} outside 1..={count}"),
        });
    }
    Ok(number - 1)
}

/// Parses and validates a configuration document.
pub fn load_config(source: &str) -> Result<ArmConfig> {
    let doc: Document = serde_json::from_str(source).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(
            "schema_version",
            format!("unsupported version {}", doc.schema_version),
        ));
    }

    let constraint = ConstraintMatrix::new(doc.constraint)?;
    let n_ind = constraint.independent_count();

    let dh_rows = doc
        .dh
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let f = |name: &'static str| move || format!("dh[{}].{}", i + 1, name);
            Ok(DhRow {
                link_twist: convert(&row.link_twist, Dimension::Angle, f("link_twist"))?,
                link_length: convert(&row.link_length, Dimension::Length, f("link_length"))?,
                link_offset: convert(&row.link_offset, Dimension::Length, f("link_offset"))?,
                joint_angle_offset: convert(
                    &row.joint_angle_offset,
                    Dimension::Angle,
                    f("joint_angle_offset"),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut lower = Vec::with_capacity(doc.limits.len());
    let mut upper = Vec::with_capacity(doc.limits.len());
    for (k, lim) in doc.limits.iter().enumerate() {
        lower.push(convert(&lim.lower, Dimension::Angle, || {
            format!("limits of Joint{}", k + 1)
        })?);
        upper.push(convert(&lim.upper, Dimension::Angle, || {
            format!("limits of Joint{}", k + 1)
        })?);
    }
    let limits = JointLimits { lower, upper };

    let mut cables = doc
        .cables
        .iter()
        .map(|c| cable_from_doc(c, n_ind))
        .collect::<Result<Vec<_>>>()?;
    cables.sort_by(|a, b| a.id.cmp(&b.id));

    let s = &doc.cable_spec;
    let cable_spec = CableSpec {
        diameter: convert(&s.diameter, Dimension::Length, || "cable_spec.diameter".into())?,
        youngs_modulus: convert(&s.youngs_modulus, Dimension::Pressure, || {
            "cable_spec.youngs_modulus".into()
        })?,
        max_tension: convert(&s.max_tension, Dimension::Force, || {
            "cable_spec.max_tension".into()
        })?,
        pretension: convert(&s.pretension, Dimension::Force, || {
            "cable_spec.pretension".into()
        })?,
    };

    let motors = doc
        .motors
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let f = |name: &'static str| move || format!("motors[{}].{}", i + 1, name);
            Ok(MotorSpec {
                roller_radius: convert(&m.roller_radius, Dimension::Length, f("roller_radius"))?,
                nominal_torque: convert(&m.nominal_torque, Dimension::Torque, f("nominal_torque"))?,
                nominal_speed: convert(
                    &m.nominal_speed,
                    Dimension::AngularSpeed,
                    f("nominal_speed"),
                )?,
                encoder_resolution: convert(
                    &m.encoder_resolution,
                    Dimension::Angle,
                    f("encoder_resolution"),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let gravity_direction = doc
        .gravity_direction
        .map(Vector3::from)
        .unwrap_or_else(|| Vector3::new(0.0, -1.0, 0.0));

    let config = ArmConfig {
        name: doc.name,
        notes: doc.notes,
        dh_rows,
        constraint,
        limits,
        cables,
        cable_spec,
        motors,
        gravity_direction,
    };
    config.validate()?;
    Ok(config)
}

fn cable_from_doc(doc: &CableDoc, n_ind: usize) -> Result<CableRouting> {
    let field = |name: &str| format!("cables[{}].{}", doc.id, name);
    let driven_joint = joint_index(doc.driven_joint, n_ind, || field("driven_joint"))?;
    let drive = match &doc.drive {
        DriveDoc::DirectCapstan { radius } => DriveKind::DirectCapstan {
            radius: convert(radius, Dimension::Length, || field("drive.radius"))?,
        },
        DriveDoc::RollingPair { radius } => DriveKind::RollingPair {
            radius: convert(radius, Dimension::Length, || field("drive.radius"))?,
        },
    };
    let pass_through = doc
        .pass_through
        .iter()
        .map(|p| {
            let (joint, kind) = match p {
                PassDoc::Aligner { joint } => (*joint, PassKind::Aligner),
                PassDoc::RollingPair { joint } => (*joint, PassKind::RollingPair),
                PassDoc::NaiveWrap { joint, wrap_radius } => (
                    *joint,
                    PassKind::NaiveWrap {
                        wrap_radius: convert(wrap_radius, Dimension::Length, || {
                            field("pass_through.wrap_radius")
                        })?,
                    },
                ),
            };
            Ok(PassThrough {
                joint: joint_index(joint, n_ind, || field("pass_through.joint"))?,
                kind,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CableRouting {
        id: doc.id.clone(),
        driven_joint,
        direction: doc.direction,
        drive,
        pass_through,
        free_length: convert(&doc.free_length, Dimension::Length, || field("free_length"))?,
    })
}

/// Writes a configuration as a document in SI units. Loading the output
/// reproduces `config` exactly.
pub(super) fn serialize(config: &ArmConfig) -> String {
    let angle = |v: f64| Tagged::si(v, Dimension::Angle);
    let length = |v: f64| Tagged::si(v, Dimension::Length);
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        name: config.name.clone(),
        notes: config.notes.clone(),
        dh: config
            .dh_rows
            .iter()
            .map(|r| DhDoc {
                link_twist: angle(r.link_twist),
                link_length: length(r.link_length),
                link_offset: length(r.link_offset),
                joint_angle_offset: angle(r.joint_angle_offset),
            })
            .collect(),
        constraint: config.constraint.rows(),
        limits: config
            .limits
            .lower
            .iter()
            .zip(&config.limits.upper)
            .map(|(&lo, &hi)| LimitDoc {
                lower: angle(lo),
                upper: angle(hi),
            })
            .collect(),
        cables: config
            .cables
            .iter()
            .map(|c| CableDoc {
                id: c.id.clone(),
                driven_joint: c.driven_joint + 1,
                direction: c.direction,
                drive: match c.drive {
                    DriveKind::DirectCapstan { radius } => DriveDoc::DirectCapstan {
                        radius: length(radius),
                    },
                    DriveKind::RollingPair { radius } => DriveDoc::RollingPair {
                        radius: length(radius),
                    },
                },
                pass_through: c
                    .pass_through
                    .iter()
                    .map(|p| match p.kind {
                        PassKind::Aligner => PassDoc::Aligner { joint: p.joint + 1 },
                        PassKind::RollingPair => PassDoc::RollingPair { joint: p.joint + 1 },
                        PassKind::NaiveWrap { wrap_radius } => PassDoc::NaiveWrap {
                            joint: p.joint + 1,
                            wrap_radius: length(wrap_radius),
                        },
                    })
                    .collect(),
                free_length: length(c.free_length),
            })
            .collect(),
        cable_spec: CableSpecDoc {
            diameter: length(config.cable_spec.diameter),
            youngs_modulus: Tagged::si(config.cable_spec.youngs_modulus, Dimension::Pressure),
            max_tension: Tagged::si(config.cable_spec.max_tension, Dimension::Force),
            pretension: Tagged::si(config.cable_spec.pretension, Dimension::Force),
        },
        motors: config
            .motors
            .iter()
            .map(|m| MotorDoc {
                roller_radius: length(m.roller_radius),
                nominal_torque: Tagged::si(m.nominal_torque, Dimension::Torque),
                nominal_speed: Tagged::si(m.nominal_speed, Dimension::AngularSpeed),
                encoder_resolution: angle(m.encoder_resolution),
            })
            .collect(),
        gravity_direction: Some(config.gravity_direction.into()),
    };
    serde_json::to_string_pretty(&doc).expect("document serializes")
}
