//! Arm description: DH chain, joint constraint matrix, limits, cables and motors.
//!
//! All quantities are SI internally (radians, meters, pascals, newtons).
//! The JSON document format lives in [`document`]; see `configs/d3arm.json`
//! for the shipped default.

mod document;

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::transmission::{CableRouting, DriveKind};

pub use document::load_config;

const D3_ARM_DOCUMENT: &str = include_str!("../../configs/d3arm.json");
const NAIVE_DOCUMENT: &str = include_str!("../../configs/naive.json");

/// One row of a standard (distal) Denavit-Hartenberg table.
///
/// The local transform is `Rz(θ + joint_angle_offset) · Tz(link_offset) ·
/// Tx(link_length) · Rx(link_twist)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub link_twist: f64,
    pub link_length: f64,
    pub link_offset: f64,
    pub joint_angle_offset: f64,
}

impl DhRow {
    pub fn new(link_twist: f64, link_length: f64, link_offset: f64, joint_angle_offset: f64) -> Self {
        Self {
            link_twist,
            link_length,
            link_offset,
            joint_angle_offset,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let field = format!("dh[{}]", index + 1);
        let all = [
            self.link_twist,
            self.link_length,
            self.link_offset,
            self.joint_angle_offset,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(field, "all DH parameters must be finite"));
        }
        if self.link_length < 0.0 || self.link_offset < 0.0 {
            return Err(Error::invalid(field, "link_length and link_offset must be >= 0"));
        }
        Ok(())
    }
}

/// Joint range for every independent joint, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLimits {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl JointLimits {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let limits = Self { lower, upper };
        limits.validate()?;
        Ok(limits)
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::invalid("limits", "lower/upper length mismatch"));
        }
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            let field = format!("limits of Joint{}", k + 1);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(field, "bounds must be finite"));
            }
            if lo >= hi {
                return Err(Error::invalid(
                    field,
                    format!("lower bound {lo} must be below upper bound {hi}"),
                ));
            }
        }
        Ok(())
    }

    pub fn contains(&self, independent: &[f64]) -> bool {
        independent.len() == self.len()
            && independent
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(q, (lo, hi))| q >= lo && q <= hi)
    }

    pub fn clamp(&self, independent: &mut [f64]) {
        for (q, (lo, hi)) in independent.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *q = q.clamp(*lo, *hi);
        }
    }

    pub fn span(&self, joint: usize) -> f64 {
        self.upper[joint] - self.lower[joint]
    }
}

/// Properties shared by every driving cable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableSpec {
    pub diameter: f64,
    pub youngs_modulus: f64,
    pub max_tension: f64,
    pub pretension: f64,
}

impl Default for CableSpec {
    /// 1 mm steel wire rope, 100 GPa, 900 N maximum, 120 N pretension.
    fn default() -> Self {
        Self {
            diameter: 1e-3,
            youngs_modulus: 100e9,
            max_tension: 900.0,
            pretension: 120.0,
        }
    }
}

impl CableSpec {
    /// Metallic cross-section area `π (d/2)²`.
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * (self.diameter / 2.0).powi(2)
    }

    /// Axial stiffness `E·A` in newtons.
    pub fn axial_stiffness(&self) -> f64 {
        self.youngs_modulus * self.area()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.diameter,
            self.youngs_modulus,
            self.max_tension,
            self.pretension,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("cable_spec", "values must be finite"));
        }
        if self.diameter <= 0.0 {
            return Err(Error::invalid("cable_spec.diameter", "must be > 0"));
        }
        if self.youngs_modulus <= 0.0 {
            return Err(Error::invalid("cable_spec.youngs_modulus", "must be > 0"));
        }
        if !(self.pretension > 0.0 && self.pretension < self.max_tension) {
            return Err(Error::invalid(
                "cable_spec.pretension",
                format!(
                    "must satisfy 0 < pretension < max_tension ({} N)",
                    self.max_tension
                ),
            ));
        }
        Ok(())
    }
}

/// Motor and roller parameters for one independent joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorSpec {
    pub roller_radius: f64,
    pub nominal_torque: f64,
    pub nominal_speed: f64,
    pub encoder_resolution: f64,
}

impl Default for MotorSpec {
    /// HT-04 motor (13 Nm, 300 rpm, 0.087° encoder) on an assumed 15 mm roller.
    fn default() -> Self {
        Self {
            roller_radius: 0.015,
            nominal_torque: 13.0,
            nominal_speed: 300.0 * 2.0 * std::f64::consts::PI / 60.0,
            encoder_resolution: 0.087_f64.to_radians(),
        }
    }
}

impl MotorSpec {
    fn validate(&self, index: usize) -> Result<()> {
        let field = format!("motors[{}]", index + 1);
        let values = [
            self.roller_radius,
            self.nominal_torque,
            self.nominal_speed,
            self.encoder_resolution,
        ];
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid(field, "all motor parameters must be finite and > 0"));
        }
        Ok(())
    }
}

/// Integer matrix `U` (independent × equivalent) with `θ = Uᵀ θ'`.
///
/// Entries are in {-1, 0, 1}, every row has a nonzero and every column has at
/// most one, so expansion is exact and `rank(U)` equals the row count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl ConstraintMatrix {
    pub fn new(rows: Vec<Vec<i8>>) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::invalid("constraint", "matrix has no rows"));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) || ncols == 0 {
            return Err(Error::invalid("constraint", "rows must be non-empty and equal length"));
        }
        let matrix = Self {
            rows: nrows,
            cols: ncols,
            entries: rows.into_iter().flatten().collect(),
        };
        matrix.validate()?;
        Ok(matrix)
    }

    /// The 6×10 matrix of the D3-Arm: Joint2 and Joint3 are rolling pairs,
    /// Joints 4–6 form the quaternion wrist.
    pub fn d3_arm() -> Self {
        Self::new(vec![
            vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 1, 1, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 1, 0, 0, -1, 0],
            vec![0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
            vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        ])
        .expect("built-in constraint matrix is valid")
    }

    fn validate(&self) -> Result<()> {
        if self.entries.iter().any(|e| !(-1..=1).contains(e)) {
            return Err(Error::invalid("constraint", "entries must be -1, 0 or 1"));
        }
        for r in 0..self.rows {
            if (0..self.cols).all(|c| self.get(r, c) == 0) {
                return Err(Error::invalid(
                    "constraint",
                    format!("row {} is all zeros", r + 1),
                ));
            }
        }
        for c in 0..self.cols {
            let nonzero = (0..self.rows).filter(|&r| self.get(r, c) != 0).count();
            if nonzero > 1 {
                return Err(Error::invalid(
                    "constraint",
                    format!("column {} has {} nonzero entries", c + 1, nonzero),
                ));
            }
        }
        Ok(())
    }

    pub fn independent_count(&self) -> usize {
        self.rows
    }

    pub fn equivalent_count(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.cols + col]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        self.entries.chunks(self.cols).map(<[i8]>::to_vec).collect()
    }

    /// Independent joint and sign driving equivalent joint `col`, if any.
    pub fn driver(&self, col: usize) -> Option<(usize, i8)> {
        (0..self.rows)
            .map(|r| (r, self.get(r, col)))
            .find(|&(_, s)| s != 0)
    }

    /// Equivalent joints (with sign) driven by independent joint `row`.
    pub fn members(&self, row: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        (0..self.cols)
            .map(move |c| (c, self.get(row, c)))
            .filter(|&(_, s)| s != 0)
    }

    /// `Uᵀ θ'`, evaluated exactly (each output is `±θ'_k` or zero).
    pub fn expand(&self, independent: &[f64]) -> Vec<f64> {
        assert_eq!(independent.len(), self.rows, "independent vector length");
        (0..self.cols)
            .map(|c| match self.driver(c) {
                Some((r, 1)) => independent[r],
                Some((r, _)) => -independent[r],
                None => 0.0,
            })
            .collect()
    }

    /// Recovers `θ'` from an expanded vector using the first member of each row.
    pub fn project(&self, expanded: &[f64]) -> Vec<f64> {
        assert_eq!(expanded.len(), self.cols, "expanded vector length");
        (0..self.rows)
            .map(|r| {
                let (c, s) = self.members(r).next().expect("validated row");
                f64::from(s) * expanded[c]
            })
            .collect()
    }

    /// `U θ`: the total rotation carried by each independent joint. For a
    /// rolling pair this is the joint angle `θₑ`, the sum of its two halves.
    pub fn joint_angles(&self, expanded: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.members(r).map(|(c, s)| f64::from(s) * expanded[c]).sum())
            .collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| f64::from(self.get(r, c)))
    }

    /// Largest violation of `θ = Uᵀ Uθ'`-consistency for an expanded vector.
    pub fn deviation(&self, independent: &[f64], expanded: &[f64]) -> f64 {
        self.expand(independent)
            .iter()
            .zip(expanded)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `θ = Uᵀ θ'`.
pub fn expand_joints(independent: &[f64], constraint: &ConstraintMatrix) -> Vec<f64> {
    constraint.expand(independent)
}

/// Independent joint angles together with the equivalent-joint expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub independent: Vec<f64>,
    pub expanded: Vec<f64>,
}

impl JointState {
    pub fn new(independent: &[f64], constraint: &ConstraintMatrix) -> Self {
        Self {
            independent: independent.to_vec(),
            expanded: constraint.expand(independent),
        }
    }

    /// Builds a state without checking consistency; solvers reject it later
    /// if `expanded ≠ Uᵀ independent`.
    pub fn from_parts(independent: Vec<f64>, expanded: Vec<f64>) -> Self {
        Self {
            independent,
            expanded,
        }
    }

    pub fn check(&self, constraint: &ConstraintMatrix) -> Result<()> {
        if self.independent.len() != constraint.independent_count()
            || self.expanded.len() != constraint.equivalent_count()
        {
            return Err(Error::invalid(
                "joint state",
                format!(
                    "expected {} independent / {} equivalent joints, got {} / {}",
                    constraint.independent_count(),
                    constraint.equivalent_count(),
                    self.independent.len(),
                    self.expanded.len()
                ),
            ));
        }
        if self
            .independent
            .iter()
            .chain(&self.expanded)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("joint state", "angles must be finite"));
        }
        let deviation = constraint.deviation(&self.independent, &self.expanded);
        if deviation > 1e-12 {
            return Err(Error::ConstraintViolation { deviation });
        }
        Ok(())
    }
}

/// Complete description of one arm instance. Immutable after loading.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmConfig {
    pub name: String,
    /// Free-form notes carried through the document (assumptions, sources).
    pub notes: Vec<String>,
    pub dh_rows: Vec<DhRow>,
    pub constraint: ConstraintMatrix,
    pub limits: JointLimits,
    /// Cable routings, sorted by cable id.
    pub cables: Vec<CableRouting>,
    pub cable_spec: CableSpec,
    pub motors: Vec<MotorSpec>,
    /// Unit vector of gravity in the base frame.
    pub gravity_direction: Vector3<f64>,
}

impl ArmConfig {
    /// The shipped D3-Arm configuration.
    pub fn d3_arm() -> Self {
        load_config(D3_ARM_DOCUMENT).expect("shipped configuration is valid")
    }

    /// The same arm with every pass-through replaced by a 10 mm naive wrap,
    /// used as the coupled baseline.
    pub fn naive_routing() -> Self {
        load_config(NAIVE_DOCUMENT).expect("shipped configuration is valid")
    }

    /// Source text of the shipped configuration document.
    pub fn d3_arm_document() -> &'static str {
        D3_ARM_DOCUMENT
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        load_config(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        document::serialize(self)
    }

    pub fn independent_count(&self) -> usize {
        self.constraint.independent_count()
    }

    pub fn equivalent_count(&self) -> usize {
        self.constraint.equivalent_count()
    }

    pub fn state(&self, independent: &[f64]) -> JointState {
        JointState::new(independent, &self.constraint)
    }

    pub fn zero_state(&self) -> JointState {
        self.state(&vec![0.0; self.independent_count()])
    }

    /// Upper bound on the distance from the base origin to the end-effector.
    pub fn max_reach(&self) -> f64 {
        self.dh_rows
            .iter()
            .map(|r| r.link_length.hypot(r.link_offset))
            .sum()
    }

    /// Rolling radius `R` of an independent joint driven by a rolling pair.
    pub fn rolling_radius(&self, joint: usize) -> Option<f64> {
        self.cables
            .iter()
            .filter(|c| c.driven_joint == joint)
            .find_map(|c| match c.drive {
                DriveKind::RollingPair { radius } => Some(radius),
                DriveKind::DirectCapstan { .. } => None,
            })
    }

    pub fn cable_index(&self, id: &str) -> Option<usize> {
        self.cables.iter().position(|c| c.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dh_rows.len() != self.constraint.equivalent_count() {
            return Err(Error::invalid(
                "dh",
                format!(
                    "{} rows but the constraint matrix has {} columns",
                    self.dh_rows.len(),
                    self.constraint.equivalent_count()
                ),
            ));
        }
        for (i, row) in self.dh_rows.iter().enumerate() {
            row.validate(i)?;
        }
        self.limits.validate()?;
        if self.limits.len() != self.independent_count() {
            return Err(Error::invalid(
                "limits",
                format!(
                    "{} entries for {} independent joints",
                    self.limits.len(),
                    self.independent_count()
                ),
            ));
        }
        if self.motors.len() != self.independent_count() {
            return Err(Error::invalid(
                "motors",
                format!(
                    "{} entries for {} independent joints",
                    self.motors.len(),
                    self.independent_count()
                ),
            ));
        }
        for (i, m) in self.motors.iter().enumerate() {
            m.validate(i)?;
        }
        self.cable_spec.validate()?;
        let g = self.gravity_direction;
        if !(g.iter().all(|v| v.is_finite()) && (g.norm() - 1.0).abs() < 1e-9) {
            return Err(Error::invalid("gravity_direction", "must be a unit vector"));
        }
        for (i, cable) in self.cables.iter().enumerate() {
            cable.validate(&self.constraint)?;
            if self.cables[..i].iter().any(|c| c.id == cable.id) {
                return Err(Error::invalid(
                    format!("cables[{}]", cable.id),
                    "duplicate cable id",
                ));
            }
        }
        if self.cables.windows(2).any(|w| w[0].id > w[1].id) {
            return Err(Error::invalid("cables", "cables must be sorted by id"));
        }
        for joint in 0..self.independent_count() {
            let radii: Vec<f64> = self
                .cables
                .iter()
                .filter(|c| c.driven_joint == joint)
                .filter_map(|c| match c.drive {
                    DriveKind::RollingPair { radius } => Some(radius),
                    DriveKind::DirectCapstan { .. } => None,
                })
                .collect();
            if radii.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::invalid(
                    format!("cables driving Joint{}", joint + 1),
                    "rolling-pair cables of one joint must share the rolling radius",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(v: f64) -> f64 {
        v.to_radians()
    }

    #[test]
    fn default_constraint_matches_published_matrix() {
        let expected: [[i8; 10]; 6] = [
            [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            [0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 1, 1, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 1, 0, 0, -1, 0],
            [0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        ];
        let u = ConstraintMatrix::d3_arm();
        for (r, row) in expected.iter().enumerate() {
            for (c, &e) in row.iter().enumerate() {
                assert_eq!(u.get(r, c), e, "U[{r}][{c}]");
            }
        }
        assert_eq!(ArmConfig::d3_arm().constraint, u);
    }

    #[test]
    fn expand_worked_example() {
        let u = ConstraintMatrix::d3_arm();
        let input: Vec<f64> = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0].map(deg).to_vec();
        let expected: Vec<f64> = [10.0, 20.0, 20.0, 30.0, 30.0, 40.0, 50.0, 50.0, -40.0, 60.0]
            .map(deg)
            .to_vec();
        assert_eq!(expand_joints(&input, &u), expected);
        assert_eq!(expand_joints(&[0.0; 6], &u), vec![0.0; 10]);
        assert_eq!(u.project(&expected), input);
    }

    #[test]
    fn joint_angles_sum_rolling_halves() {
        let u = ConstraintMatrix::d3_arm();
        let e = u.expand(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let phi = u.joint_angles(&e);
        assert_eq!(phi, vec![0.1, 0.4, 0.6, 0.8, 1.0, 0.6]);
    }

    #[test]
    fn rejects_zero_row_and_shared_column() {
        let err = ConstraintMatrix::new(vec![vec![1, 0], vec![0, 0]]).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err = ConstraintMatrix::new(vec![vec![1, 1], vec![0, 1]]).unwrap_err();
        assert!(err.to_string().contains("column 2"), "{err}");
        assert!(ConstraintMatrix::new(vec![vec![2]]).is_err());
    }

    #[test]
    fn limits_validation_names_joint() {
        let err = JointLimits::new(vec![-1.0, 1.0], vec![1.0, 0.5]).unwrap_err();
        assert!(err.to_string().contains("Joint2"), "{err}");
    }

    #[test]
    fn state_check_flags_inconsistent_expansion() {
        let u = ConstraintMatrix::d3_arm();
        let mut state = JointState::new(&[0.1; 6], &u);
        assert!(state.check(&u).is_ok());
        state.expanded[2] += 1e-6;
        assert!(matches!(
            state.check(&u),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn cable_spec_invariants() {
        let spec = CableSpec::default();
        assert!(spec.validate().is_ok());
        assert!((spec.area() - 7.853981633974483e-7).abs() < 1e-20);
        let bad = CableSpec {
            pretension: 1000.0,
            ..spec
        };
        assert!(bad.validate().is_err());
    }
}
