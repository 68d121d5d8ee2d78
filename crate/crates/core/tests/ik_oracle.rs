//! Position and velocity IK checked against forward kinematics and a plain
//! matrix-inverse oracle.

use cablearm::ik::{damped_solve, newton_step, pose_error, solve_position, solve_velocity};
use cablearm::kinematics::{forward_kinematics, improved_jacobian};
use cablearm::{ArmConfig, Error, IkRequest};
use nalgebra::{DMatrix, DVector, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_independent(config: &ArmConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..config.independent_count())
        .map(|k| rng.random_range(config.limits.lower[k]..=config.limits.upper[k]))
        .collect()
}

fn perturbed(config: &ArmConfig, q: &[f64], rng: &mut ChaCha8Rng, size: f64) -> Vec<f64> {
    let mut seed: Vec<f64> = q.iter().map(|v| v + rng.random_range(-size..=size)).collect();
    config.limits.clamp(&mut seed);
    seed
}

#[test]
fn reachable_targets_converge_from_nearby_seeds() {
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let total = 500;
    let mut ok = 0;
    for _ in 0..total {
        let q = random_independent(&config, &mut rng);
        let target = forward_kinematics(&config, &config.state(&q)).unwrap();
        let seed = perturbed(&config, &q, &mut rng, 0.1);
        let result = solve_position(&config, &IkRequest::new(target, seed)).unwrap();
        let reached = forward_kinematics(&config, &config.state(&result.solution)).unwrap();
        let e = pose_error(&target, &reached);
        assert!(config.limits.contains(&result.solution));
        if result.converged && e.norm() < 1e-6 {
            ok += 1;
        }
    }
    assert!(ok * 100 >= total * 99, "{ok}/{total} converged");
}

#[test]
fn residual_history_never_increases() {
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let q = random_independent(&config, &mut rng);
        let target = forward_kinematics(&config, &config.state(&q)).unwrap();
        let seed = perturbed(&config, &q, &mut rng, 0.5);
        let result = solve_position(&config, &IkRequest::new(target, seed)).unwrap();
        assert_eq!(result.residual_history.len(), result.iterations_used + 1);
        for w in result.residual_history.windows(2) {
            assert!(w[1] <= w[0], "{:?}", result.residual_history);
        }
    }
}

#[test]
fn undamped_step_matches_matrix_inverse() {
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 100 {
        let q = random_independent(&config, &mut rng);
        let state = config.state(&q);
        let jim = improved_jacobian(&config, &state).unwrap();
        let Some(inverse) = jim.clone().try_inverse() else { continue };
        if inverse.amax() > 1e3 {
            continue; // too close to a singularity for a 1e-12 comparison
        }
        let target = forward_kinematics(&config, &config.state(&random_independent(&config, &mut rng))).unwrap();
        let current = forward_kinematics(&config, &state).unwrap();
        let e = pose_error(&target, &current);
        let expected = &inverse * DVector::from_column_slice(e.as_slice());
        let step = newton_step(&config, &state, &target, 0.0).unwrap();
        let scale = expected.amax().max(1.0);
        assert!((step - expected).amax() < 1e-12 * scale);
        checked += 1;
    }
}

#[test]
fn damped_rates_obey_the_damping_bound() {
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for damping in [1e-3, 1e-2, 1e-1] {
        // The straight-arm pose and small perturbations of it.
        for _ in 0..50 {
            let q: Vec<f64> = (0..6).map(|_| rng.random_range(-1e-6..1e-6)).collect();
            let state = config.state(&q);
            let rate = Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let rates = solve_velocity(&config, &state, &rate, damping).unwrap();
            assert!(rates.norm() <= rate.norm() / (2.0 * damping) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn damped_solve_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..50 {
        let j = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let x = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let lambda: f64 = 0.05;
        let normal = &j * j.transpose() + DMatrix::identity(6, 6) * lambda.powi(2);
        let expected = j.transpose() * normal.try_inverse().unwrap() * &x;
        let got = damped_solve(&j, &x, lambda).unwrap();
        assert!((got - expected).amax() < 1e-10);
    }
}

#[test]
fn undamped_singular_state_reports_sigma() {
    let config = ArmConfig::d3_arm();
    match solve_velocity(&config, &config.zero_state(), &Vector6::repeat(1.0), 0.0) {
        Err(Error::Singular { sigma_min }) => assert!(sigma_min < 1e-10),
        other => panic!("expected a singular error, got {other:?}"),
    }
}
