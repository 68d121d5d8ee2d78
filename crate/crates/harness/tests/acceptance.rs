//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cablearm::ik::{pose_error, solve_position};
use cablearm::kinematics::{chain_pose, forward_kinematics, improved_jacobian, jacobian};
use cablearm::transmission::{
    cable_displacements, coupling_matrix, coupling_matrix_fd, elongation, max_payload,
    static_load_tensions,
};
use cablearm::{expand_joints, ArmConfig, CableSpec, ConstraintMatrix, IkRequest, PassKind};
use cablearm_harness::decoupling::{decoupling_experiment, DecouplingOptions};
use cablearm_harness::repeatability::{hardware_reference, pose_stats, synthetic_clouds};
use cablearm_harness::trajectory::{simulate_trajectory, TimingLaw, Waypoint};
use cablearm_harness::workspace::workspace_sweep;
use cablearm_harness::{to_json, Report};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn random_independent(config: &ArmConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..config.independent_count())
        .map(|k| rng.random_range(config.limits.lower[k]..=config.limits.upper[k]))
        .collect()
}

fn skew_rate(r: &Matrix3<f64>, h: f64) -> Vector3<f64> {
    Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) / (4.0 * h)
}

/// Central differences of the chain pose over `angles`.
fn fd_columns(n: usize, h: f64, pose_at: impl Fn(usize, f64) -> cablearm::Pose) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(6, n);
    for j in 0..n {
        let (p, m) = (pose_at(j, h), pose_at(j, -h));
        let v = (p.position - m.position) / (2.0 * h);
        let w = skew_rate(&(p.rotation * m.rotation.transpose()), h);
        for r in 0..3 {
            out[(r, j)] = v[r];
            out[(r + 3, j)] = w[r];
        }
    }
    out
}

const EQ_U: [[i64; 10]; 6] = [
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0, -1, 0],
    [0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
];

fn constraint_fidelity() -> Check {
    let start = Instant::now();
    let u = ConstraintMatrix::d3_arm();
    for (r, row) in EQ_U.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            ensure(i64::from(u.get(r, c)) == v, || format!("U[{r}][{c}] = {}", u.get(r, c)))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..10_000 {
        // integer-valued inputs make Uᵀθ' checkable in exact integer arithmetic
        let ints: Vec<i64> = (0..6).map(|_| rng.random_range(-1_000_000..=1_000_000)).collect();
        let input: Vec<f64> = if i % 2 == 0 {
            ints.iter().map(|&v| v as f64).collect()
        } else {
            (0..6).map(|_| rng.random_range(-10.0..10.0)).collect()
        };
        let out = expand_joints(&input, &u);
        ensure(out.len() == 10, || "output length".into())?;
        ensure(out[1] == out[2] && out[3] == out[4] && out[5] == -out[8] && out[6] == out[7], || {
            format!("constraints violated for {input:?}")
        })?;
        if i % 2 == 0 {
            for c in 0..10 {
                let exact: i64 = (0..6).map(|r| EQ_U[r][c] * ints[r]).sum();
                ensure(out[c] == exact as f64, || format!("θ{} = {} ≠ {exact}", c + 1, out[c]))?;
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 1.0)?;
    Ok(format!("10000 inputs exact, U matches entry for entry, {:.3} s", elapsed.as_secs_f64()))
}

fn jacobian_correctness() -> Check {
    let start = Instant::now();
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = random_independent(&config, &mut rng);
        let state = config.state(&q);
        let j = jacobian(&config, &state).map_err(|e| e.to_string())?.to_matrix();
        let fd = fd_columns(10, h, |c, d| {
            let mut e = state.expanded.clone();
            e[c] += d;
            chain_pose(&config.dh_rows, &e)
        });
        worst = worst.max((&j - &fd).amax() / j.amax());
        let jim = improved_jacobian(&config, &state).map_err(|e| e.to_string())?;
        let fd = fd_columns(6, h, |k, d| {
            let mut p = q.clone();
            p[k] += d;
            forward_kinematics(&config, &config.state(&p)).unwrap()
        });
        worst = worst.max((&jim - &fd).amax() / jim.amax());
    }
    let elapsed = start.elapsed();
    ensure(worst < 1e-5, || format!("max relative error {worst:.3e}"))?;
    within(elapsed, 10.0)?;
    Ok(format!("1000 states, max relative error {worst:.2e}, {:.2} s", elapsed.as_secs_f64()))
}

fn ik_round_trip() -> Check {
    let start = Instant::now();
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let total = 500;
    let mut solved = 0;
    for _ in 0..total {
        let q = random_independent(&config, &mut rng);
        let target = forward_kinematics(&config, &config.state(&q)).unwrap();
        let mut seed: Vec<f64> = q.iter().map(|v| v + rng.random_range(-0.1..=0.1)).collect();
        config.limits.clamp(&mut seed);
        let result = solve_position(&config, &IkRequest::new(target, seed)).map_err(|e| e.to_string())?;
        ensure(config.limits.contains(&result.solution), || "solution outside limits".into())?;
        let reached = forward_kinematics(&config, &config.state(&result.solution)).unwrap();
        let e = pose_error(&target, &reached);
        if e.fixed_rows::<3>(0).norm() < 1e-6 && e.fixed_rows::<3>(3).norm() < 1e-6 {
            solved += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(solved * 100 >= total * 99, || format!("{solved}/{total} solved"))?;
    within(elapsed, 60.0)?;
    Ok(format!("{solved}/{total} solved, {:.2} s", elapsed.as_secs_f64()))
}

fn decoupling_property() -> Check {
    let config = ArmConfig::d3_arm();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst_fd: f64 = 0.0;
    let mut entries = 0;
    for _ in 0..200 {
        let state = config.state(&random_independent(&config, &mut rng));
        let analytic = coupling_matrix(&config, &state).map_err(|e| e.to_string())?;
        for (_, _, v) in analytic.pass_through_entries(&config) {
            ensure(v == 0.0, || format!("analytic pass-through entry {v:e}"))?;
            entries += 1;
        }
        let fd = coupling_matrix_fd(&config, &state, 1e-6).map_err(|e| e.to_string())?;
        for (_, _, v) in fd.pass_through_entries(&config) {
            worst_fd = worst_fd.max(v.abs());
        }
    }
    ensure(worst_fd < 1e-8, || format!("finite-difference entry {worst_fd:e}"))?;

    let naive = ArmConfig::naive_routing();
    let c = coupling_matrix(&naive, &naive.zero_state()).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (i, cable) in naive.cables.iter().enumerate() {
        for pass in cable.pass_through.iter().filter(|p| p.joint == 0) {
            let PassKind::NaiveWrap { wrap_radius } = pass.kind else {
                return Err("naive routing without a wrap".into());
            };
            let entry = c.entry(i, 0);
            ensure(entry == f64::from(cable.direction) * wrap_radius, || {
                format!("{} Joint1 entry {entry} vs wrap {wrap_radius}", cable.id)
            })?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no naive Joint1 wraps".into())?;

    let experiment = decoupling_experiment(&config, &DecouplingOptions::default()).map_err(|e| e.to_string())?;
    ensure(experiment.max_tension_change_n == 0.0, || {
        format!("tension change {} N", experiment.max_tension_change_n)
    })?;
    Ok(format!(
        "{entries} analytic entries = 0, max FD {worst_fd:.1e} m/rad, naive Joint1 = wrap radius on {checked} cables, sweep tension change 0 N"
    ))
}

fn elasticity() -> Check {
    let dl = elongation(&CableSpec::default(), 1.0, 0.75).map_err(|e| e.to_string())?;
    ensure((dl - 9.55e-6).abs() <= 1e-8, || format!("elongation {dl:e} m"))?;
    Ok(format!("elongation(1 N, 0.75 m) = {dl:.4e} m"))
}

fn rolling_transmission() -> Check {
    let config = ArmConfig::d3_arm();
    let mut worst: f64 = 0.0;
    let mut joints = 0;
    for k in 0..config.independent_count() {
        let Some(radius) = config.rolling_radius(k) else { continue };
        joints += 1;
        let (lo, hi) = (config.limits.lower[k], config.limits.upper[k]);
        for step in 0..=2000 {
            let mut q = vec![0.0; 6];
            q[k] = if step == 2000 { hi } else { lo + (hi - lo) * f64::from(step) / 2000.0 };
            let state = config.state(&q);
            // θe: total rotation across the pair's equivalent joints
            let theta_e: f64 = config.constraint.members(k).map(|(c, s)| f64::from(s) * state.expanded[c]).sum();
            let d = cable_displacements(&config, &state).map_err(|e| e.to_string())?;
            let pair: Vec<usize> = (0..config.cables.len()).filter(|&i| config.cables[i].driven_joint == k).collect();
            ensure(pair.len() == 2, || format!("Joint{} has {} cables", k + 1, pair.len()))?;
            for &i in &pair {
                let expected = f64::from(config.cables[i].direction) * radius * theta_e / 2.0;
                worst = worst.max((d[i] - expected).abs());
            }
            ensure(d[pair[0]] + d[pair[1]] == 0.0, || "antagonistic pair does not cancel".into())?;
        }
    }
    ensure(joints > 0, || "no rolling joints".into())?;
    ensure(worst <= 1e-12, || format!("max deviation {worst:e} m"))?;
    Ok(format!("{joints} rolling joints over full range, max deviation {worst:.1e} m, pairs cancel"))
}

fn repeatability_statistics() -> Check {
    let sigma_mm = 0.5;
    let clouds = synthetic_clouds(&[Vector3::new(0.5, 0.0, 0.2)], 100_000, sigma_mm / 1000.0, 105)
        .map_err(|e| e.to_string())?;
    let stats = pose_stats(&clouds[0]).map_err(|e| e.to_string())?;
    let expected = sigma_mm * (8.0 / std::f64::consts::PI).sqrt();
    let rel = (stats.mean_mm - expected).abs() / expected;
    ensure(rel < 0.01, || format!("mean {} vs {expected}", stats.mean_mm))?;
    let total = hardware_reference().total;
    ensure((total.mean_mm - 1.2896).abs() <= 1e-4, || format!("total mean {}", total.mean_mm))?;
    Ok(format!(
        "Gaussian mean {:.4} mm vs {expected:.4} mm ({:.2}%), published total mean {:.5} mm",
        stats.mean_mm,
        rel * 100.0,
        total.mean_mm
    ))
}

/// Boundary mass from an independent torque balance: gravity torques from
/// the gradient of the payload's potential, cable moment arms from
/// differences of cable displacement, each joint held by its own pair.
fn hand_balance_boundary(config: &ArmConfig, q: &[f64], g: f64) -> f64 {
    let h = 1e-6;
    let position = |q: &[f64]| forward_kinematics(config, &config.state(q)).unwrap().position;
    let spec = &config.cable_spec;
    let feasible = |mass: f64| -> bool {
        let force = config.gravity_direction * (mass * g);
        for k in 0..q.len() {
            let (mut plus, mut minus) = (q.to_vec(), q.to_vec());
            plus[k] += h;
            minus[k] -= h;
            let torque = force.dot(&(position(&plus) - position(&minus))) / (2.0 * h);
            let dp = cable_displacements(config, &config.state(&plus)).unwrap();
            let dm = cable_displacements(config, &config.state(&minus)).unwrap();
            let arm = config
                .cables
                .iter()
                .enumerate()
                .filter(|(_, c)| c.driven_joint == k)
                .map(|(i, _)| ((dp[i] - dm[i]) / (2.0 * h)).abs())
                .fold(0.0, f64::max);
            let differential = torque.abs() / arm;
            let loaded = (spec.pretension + differential / 2.0).max(differential);
            if loaded > spec.max_tension || differential * config.motors[k].roller_radius > config.motors[k].nominal_torque {
                return false;
            }
        }
        true
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while feasible(hi) {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn load_and_trajectory() -> Check {
    let config = ArmConfig::d3_arm();
    let g = 9.81;
    let zero = [0.0; 6];
    let report = static_load_tensions(&config, &config.state(&zero), 2.0, g).map_err(|e| e.to_string())?;
    ensure(report.feasible, || format!("2 kg infeasible: {:?}", report.violations))?;
    let peak_tension = report.tensions.iter().copied().fold(0.0, f64::max);
    ensure(peak_tension < 900.0, || format!("tension {peak_tension} N"))?;

    let oracle = hand_balance_boundary(&config, &zero, g);
    let implemented = max_payload(&config, &config.state(&zero), g).map_err(|e| e.to_string())?;
    let rel = (implemented - oracle).abs() / oracle;
    ensure(rel < 0.01, || format!("boundary {implemented} kg vs oracle {oracle} kg"))?;
    let below = static_load_tensions(&config, &config.state(&zero), implemented * 0.999, g).unwrap();
    let above = static_load_tensions(&config, &config.state(&zero), implemented * 1.001, g).unwrap();
    ensure(below.feasible && !above.feasible, || "feasibility does not flip at the boundary".into())?;

    // Joint1 rest-to-rest swing: speed r·Δ·6s(1−s)/T peaks at 1.5·r·Δ/T
    let (delta, duration) = (100f64.to_radians(), 1.0);
    let waypoints = vec![
        Waypoint { time: 0.0, joints: vec![-delta / 2.0, 0.0, 0.0, 0.0, 0.0, 0.0] },
        Waypoint { time: duration, joints: vec![delta / 2.0, 0.0, 0.0, 0.0, 0.0, 0.0] },
    ];
    let trajectory = simulate_trajectory(&config, &waypoints, TimingLaw::Cubic, 0.001).map_err(|e| e.to_string())?;
    let p = forward_kinematics(&config, &config.zero_state()).unwrap().position;
    let closed_form = p.x.hypot(p.y) * 1.5 * delta / duration;
    let speed_rel = (trajectory.peak_speed() - closed_form).abs() / closed_form;
    ensure(speed_rel < 0.01, || format!("peak speed {} vs {closed_form}", trajectory.peak_speed()))?;
    Ok(format!(
        "2 kg feasible (max tension {peak_tension:.1} N); boundary {implemented:.4} kg vs oracle {oracle:.4} kg ({:.3}%); peak speed error {:.3}%",
        rel * 100.0,
        speed_rel * 100.0
    ))
}

fn determinism() -> Check {
    let config = ArmConfig::d3_arm();
    let reference = workspace_sweep(&config, 20_000, 2024, 1).map_err(|e| e.to_string())?;
    let csv = reference.to_csv().map_err(|e| e.to_string())?;
    let json = to_json(&reference).map_err(|e| e.to_string())?;
    for workers in [1, 2, 4, 8, 13] {
        for _run in 0..2 {
            let again = workspace_sweep(&config, 20_000, 2024, workers).map_err(|e| e.to_string())?;
            ensure(again.to_csv().map_err(|e| e.to_string())? == csv, || format!("CSV differs with {workers} workers"))?;
            ensure(to_json(&again).map_err(|e| e.to_string())? == json, || format!("JSON differs with {workers} workers"))?;
        }
    }
    Ok("20000 samples bit-identical across 2 runs × {1, 2, 4, 8, 13} workers".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("constraint fidelity", constraint_fidelity),
        ("Jacobian correctness", jacobian_correctness),
        ("IK round trip", ik_round_trip),
        ("decoupling property", decoupling_property),
        ("cable elasticity", elasticity),
        ("rolling-joint transmission", rolling_transmission),
        ("repeatability statistics", repeatability_statistics),
        ("load feasibility and trajectory", load_and_trajectory),
        ("workspace determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(message)
        });
        match outcome {
            Ok(detail) => println!("PASS  AC{} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL  AC{} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
