//! Inverse kinematics over the independent joints using the improved Jacobian.
//!
//! Velocity level: `θ̇' = J_IMᵀ (J_IM J_IMᵀ + λ² I)⁻¹ Ẋ`, evaluated through the
//! SVD of `J_IM` so that `λ = 0` reduces to the (pseudo-)inverse.
//!
//! Position level: Newton-style iteration on the pose error
//! `[p_target − p; log(R_target Rᵀ)]` with per-iteration clamping to the
//! joint limits and step halving whenever the error norm would grow.

use nalgebra::{DMatrix, DVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::arm::{ArmConfig, JointState};
use crate::error::{Error, Result};
use crate::kinematics::{chain_pose, forward_kinematics, improved_jacobian, rotation_log, Pose};

/// Smallest singular value accepted by the undamped (`λ = 0`) solve.
pub const SINGULAR_THRESHOLD: f64 = 1e-10;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct IkRequest {
    pub target: Pose,
    pub seed: Vec<f64>,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
}

impl IkRequest {
    /// Request with default tolerances (1e-9 m, 1e-9 rad), 100 iterations and
    /// damping 1e-3.
    pub fn new(target: Pose, seed: Vec<f64>) -> Self {
        Self {
            target,
            seed,
            position_tolerance: 1e-9,
            orientation_tolerance: 1e-9,
            max_iterations: 100,
            damping: 1e-3,
        }
    }

    pub fn validate(&self, config: &ArmConfig) -> Result<()> {
        if !(self.position_tolerance > 0.0 && self.orientation_tolerance > 0.0) {
            return Err(Error::invalid("ik request", "tolerances must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("ik request", "max_iterations must be >= 1"));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::invalid("ik request", "damping must be finite and >= 0"));
        }
        let target_finite = self.target.rotation.iter().all(|v| v.is_finite())
            && self.target.position.iter().all(|v| v.is_finite());
        if !target_finite {
            return Err(Error::invalid("ik request", "target pose must be finite"));
        }
        if self.seed.len() != config.independent_count() {
            return Err(Error::invalid(
                "ik request",
                format!(
                    "seed has {} joints, arm has {}",
                    self.seed.len(),
                    config.independent_count()
                ),
            ));
        }
        if !config.limits.contains(&self.seed) {
            return Err(Error::invalid("ik request", "seed lies outside the joint limits"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkResult {
    pub solution: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub residual_position: f64,
    pub residual_orientation: f64,
    /// Pose-error norm at the seed and after each iteration.
    pub residual_history: Vec<f64>,
}

/// Six-vector `[p_target − p_current; log(R_target R_currentᵀ)]`.
pub fn pose_error(target: &Pose, current: &Pose) -> Vector6<f64> {
    let dp = target.position - current.position;
    let dr = rotation_log(&(target.rotation * current.rotation.transpose()));
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Damped least-squares solve of `J_IM θ̇' = Ẋ` for a general matrix.
pub fn damped_solve(jim: &DMatrix<f64>, rate: &DVector<f64>, damping: f64) -> Result<DVector<f64>> {
    let svd = jim.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("Vᵀ requested");
    let sigma_min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let full_rank = jim.nrows().min(jim.ncols()) == jim.nrows();
    if damping == 0.0 && (sigma_min < SINGULAR_THRESHOLD || !full_rank) {
        return Err(Error::Singular {
            sigma_min: if full_rank { sigma_min } else { 0.0 },
        });
    }
    let lambda2 = damping * damping;
    let mut out = DVector::zeros(jim.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let denom = s * s + lambda2;
        if denom == 0.0 {
            continue;
        }
        let coeff = s / denom * u.column(i).dot(rate);
        out.axpy(coeff, &v_t.row(i).transpose(), 1.0);
    }
    Ok(out)
}

/// Independent joint rates producing `end_effector_rate` = `[v; ω]`.
pub fn solve_velocity(
    config: &ArmConfig,
    state: &JointState,
    end_effector_rate: &Vector6<f64>,
    damping: f64,
) -> Result<DVector<f64>> {
    let jim = improved_jacobian(config, state)?;
    damped_solve(&jim, &DVector::from_column_slice(end_effector_rate.as_slice()), damping)
}

/// One unscaled, unclamped update for the current state towards `target`.
pub fn newton_step(
    config: &ArmConfig,
    state: &JointState,
    target: &Pose,
    damping: f64,
) -> Result<DVector<f64>> {
    let current = forward_kinematics(config, state)?;
    solve_velocity(config, state, &pose_error(target, &current), damping)
}

struct Residual {
    position: f64,
    orientation: f64,
    norm: f64,
}

fn residual(config: &ArmConfig, independent: &[f64], target: &Pose) -> Residual {
    let expanded = config.constraint.expand(independent);
    let pose = chain_pose(&config.dh_rows, &expanded);
    let e = pose_error(target, &pose);
    Residual {
        position: e.fixed_rows::<3>(0).norm(),
        orientation: e.fixed_rows::<3>(3).norm(),
        norm: e.norm(),
    }
}

/// Iterative position-level IK from `request.seed`.
///
/// Unreachable targets and singular undamped steps end with
/// `converged = false` and the best residuals reached; only invalid requests
/// return an error.
pub fn solve_position(config: &ArmConfig, request: &IkRequest) -> Result<IkResult> {
    request.validate(config)?;
    let mut q = request.seed.clone();
    let mut current = residual(config, &q, &request.target);
    let mut history = vec![current.norm];
    let done = |r: &Residual| {
        r.position <= request.position_tolerance && r.orientation <= request.orientation_tolerance
    };

    // Levenberg-style schedule: full steps shrink the damping so that
    // convergence near a singularity stays fast, halving raises it back
    // towards the requested value.
    let mut damping = request.damping;
    let mut iterations = 0;
    while !done(&current) && iterations < request.max_iterations {
        iterations += 1;
        let state = config.state(&q);
        let step = match newton_step(config, &state, &request.target, damping) {
            Ok(step) => step,
            Err(Error::Singular { .. }) => {
                history.push(current.norm);
                break;
            }
            Err(e) => return Err(e),
        };

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial: Vec<f64> = q.iter().zip(step.iter()).map(|(a, d)| a + scale * d).collect();
            config.limits.clamp(&mut trial);
            let r = residual(config, &trial, &request.target);
            if r.norm <= current.norm {
                accepted = Some((trial, r));
                break;
            }
            scale *= 0.5;
        }
        damping = if scale == 1.0 { damping * 0.1 } else { (damping * 10.0).min(request.damping) };
        match accepted {
            Some((trial, r)) => {
                let stalled = trial == q;
                q = trial;
                current = r;
                history.push(current.norm);
                if stalled {
                    break;
                }
            }
            None => {
                history.push(current.norm);
                break;
            }
        }
    }

    Ok(IkResult {
        converged: done(&current),
        solution: q,
        iterations_used: iterations,
        residual_position: current.position,
        residual_orientation: current.orientation,
        residual_history: history,
    })
}
