//! Forward kinematics over the equivalent-joint chain and the two Jacobians.
//!
//! Frames follow the standard (distal) DH convention: equivalent joint `i`
//! rotates about `z_{i-1}` and row `i` maps frame `i-1` to frame `i`.

use nalgebra::{DMatrix, Matrix3, Matrix3xX, Rotation3, Vector3};

use crate::arm::{ArmConfig, DhRow, JointState};
use crate::error::Result;

/// Rigid transform of a frame: rotation then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Self {
        Self { rotation, position }
    }

    /// Pose from a position and a rotation vector (axis · angle).
    pub fn from_rotation_vector(position: Vector3<f64>, rotation_vector: Vector3<f64>) -> Self {
        Self {
            rotation: Rotation3::new(rotation_vector).into_inner(),
            position,
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            position: self.rotation * other.position + self.position,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            position: -(rt * self.position),
        }
    }

    /// Rotation vector of the rotation block.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        rotation_log(&self.rotation)
    }

    /// `‖RᵀR − I‖` (Frobenius).
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm()
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }
}

/// Rotation vector `log(R)` of a rotation matrix, with the angle in `[0, π]`.
///
/// The angle comes from `atan2(sin, cos)` rather than `acos` of the trace,
/// which keeps full relative precision for small rotations.
pub fn rotation_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let s = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = s.norm();
    let angle = sin.atan2(c);
    if sin == 0.0 && c > 0.0 {
        return Vector3::zeros();
    }
    if c > -0.9 {
        return s * (angle / sin);
    }
    // Near a half turn the skew part vanishes; read the axis from the
    // symmetric part `(R + Rᵀ)/2 − cI = (1 − c) a aᵀ` instead.
    let b = (r + r.transpose()) * 0.5 - Matrix3::identity() * c;
    let k = (0..3).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap_or(0);
    let mut axis: Vector3<f64> = b.column(k).into_owned();
    axis /= axis.norm();
    if axis.dot(&s) < 0.0 {
        axis = -axis;
    }
    axis * angle
}

impl DhRow {
    /// Local transform `T_i^{i-1}` at joint angle `theta`.
    pub fn transform(&self, theta: f64) -> Pose {
        let (st, ct) = (theta + self.joint_angle_offset).sin_cos();
        let (sa, ca) = self.link_twist.sin_cos();
        let a = self.link_length;
        Pose {
            rotation: Matrix3::new(
                ct, -st * ca, st * sa, //
                st, ct * ca, -ct * sa, //
                0.0, sa, ca,
            ),
            position: Vector3::new(a * ct, a * st, self.link_offset),
        }
    }
}

/// Product of the local transforms of `rows` at `angles`.
pub fn chain_pose(rows: &[DhRow], angles: &[f64]) -> Pose {
    assert_eq!(rows.len(), angles.len(), "one angle per DH row");
    rows.iter()
        .zip(angles)
        .fold(Pose::identity(), |acc, (row, &theta)| acc.compose(&row.transform(theta)))
}

/// Frames `0..=n` of the chain at equivalent angles `expanded`; frame 0 is
/// the base and frame `n` the end-effector.
pub fn joint_frames(rows: &[DhRow], expanded: &[f64]) -> Vec<Pose> {
    let mut frames = Vec::with_capacity(rows.len() + 1);
    let mut current = Pose::identity();
    frames.push(current);
    for (row, &theta) in rows.iter().zip(expanded) {
        current = current.compose(&row.transform(theta));
        frames.push(current);
    }
    frames
}

/// End-effector pose `f(θ) = T₁⁰ T₂¹ ⋯ Tₙⁿ⁻¹`.
pub fn forward_kinematics(config: &ArmConfig, state: &JointState) -> Result<Pose> {
    state.check(&config.constraint)?;
    Ok(chain_pose(&config.dh_rows, &state.expanded))
}

/// Geometric Jacobian over the equivalent joints.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub linear: Matrix3xX<f64>,
    pub angular: Matrix3xX<f64>,
}

impl Jacobian {
    pub fn columns(&self) -> usize {
        self.linear.ncols()
    }

    /// Stacked `[linear; angular]` 6×n matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.columns();
        DMatrix::from_fn(6, n, |r, c| {
            if r < 3 {
                self.linear[(r, c)]
            } else {
                self.angular[(r - 3, c)]
            }
        })
    }
}

/// Columns `v_i = z_{i-1} × (p_end − p_{i-1})`, `ω_i = z_{i-1}`.
pub fn jacobian(config: &ArmConfig, state: &JointState) -> Result<Jacobian> {
    state.check(&config.constraint)?;
    Ok(geometric_jacobian(&config.dh_rows, &state.expanded))
}

pub(crate) fn geometric_jacobian(rows: &[DhRow], expanded: &[f64]) -> Jacobian {
    let frames = joint_frames(rows, expanded);
    let end = frames[rows.len()].position;
    let n = rows.len();
    let mut linear = Matrix3xX::zeros(n);
    let mut angular = Matrix3xX::zeros(n);
    for (i, frame) in frames[..n].iter().enumerate() {
        let axis: Vector3<f64> = frame.rotation.column(2).into_owned();
        linear.set_column(i, &axis.cross(&(end - frame.position)));
        angular.set_column(i, &axis);
    }
    Jacobian { linear, angular }
}

/// `J_IM = J · Uᵀ`, mapping independent joint rates to end-effector rates.
pub fn improved_jacobian(config: &ArmConfig, state: &JointState) -> Result<DMatrix<f64>> {
    let j = jacobian(config, state)?.to_matrix();
    Ok(reduce(&j, config))
}

/// Sums Jacobian columns into independent-joint columns, `J · Uᵀ`. Every
/// column of `U` has at most one ±1 entry, so no general product is needed.
fn reduce(j: &DMatrix<f64>, config: &ArmConfig) -> DMatrix<f64> {
    let u = &config.constraint;
    let mut out = DMatrix::zeros(j.nrows(), u.independent_count());
    for c in 0..u.equivalent_count() {
        if let Some((k, s)) = u.driver(c) {
            let mut col = out.column_mut(k);
            col.axpy(f64::from(s), &j.column(c), 1.0);
        }
    }
    out
}

/// Singular values of `J_IM`, largest first.
pub fn singular_values(jim: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = jim.clone().singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
