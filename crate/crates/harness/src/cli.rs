//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 inverse kinematics
//! did not converge (the report is still written).

use std::io::Write;
use std::path::{Path, PathBuf};

use cablearm::{ArmConfig, IkRequest, Pose};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use crate::commands::{coupling_report, fk_report, ik_report, load_check_report, target_keeping_orientation};
use crate::decoupling::{decoupling_experiment, DecouplingOptions};
use crate::error::{HarnessError, Result};
use crate::repeatability::{hardware_reference, parse_point_csv, repeatability_stats, synthetic_clouds};
use crate::report::{to_json, Report};
use crate::trajectory::{default_swing, parse_waypoint_csv, simulate_trajectory, TimingLaw};
use crate::workspace::workspace_sweep;
use crate::svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "cablearm", version, about = "Virtual experiments on a cable-driven arm model")]
struct Cli {
    /// Arm configuration document (JSON); the built-in arm when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Random seed for sampled experiments.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// End-effector pose for the given joint angles.
    Fk {
        /// Comma-separated independent joint angles.
        #[arg(long, allow_hyphen_values = true)]
        joints: String,
        /// Read angles in degrees instead of radians.
        #[arg(long)]
        degrees: bool,
    },
    /// Joint angles reaching a target pose.
    Ik {
        /// Target position "x,y,z" in meters.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Target orientation as a rotation vector "rx,ry,rz" in radians;
        /// defaults to the orientation at the initial joints.
        #[arg(long, allow_hyphen_values = true)]
        orientation: Option<String>,
        /// Initial joint angles (radians); all zeros when omitted.
        #[arg(long, allow_hyphen_values = true)]
        initial: Option<String>,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1e-3)]
        damping: f64,
        #[arg(long, default_value_t = 1e-9)]
        position_tolerance: f64,
        #[arg(long, default_value_t = 1e-9)]
        orientation_tolerance: f64,
    },
    /// Cable coupling matrix (meters of cable per radian of equivalent joint).
    Coupling {
        #[arg(long, allow_hyphen_values = true)]
        joints: Option<String>,
        /// Central finite differences instead of the analytic matrix.
        #[arg(long)]
        finite_difference: bool,
    },
    /// Sweep upstream joints and report pass-through cable displacement.
    DecoupleTest {
        /// Comma-separated 1-based joints to sweep.
        #[arg(long, default_value = "1,2,3")]
        joints: String,
        #[arg(long, default_value_t = 241)]
        steps: usize,
        /// Routed length for the tension estimate, meters; the cable's free
        /// length when omitted.
        #[arg(long)]
        routed_length: Option<f64>,
    },
    /// Repeatability statistics of measured or synthetic point clouds.
    Repeatability {
        /// CSV with columns pose,x_m,y_m,z_m.
        #[arg(long, value_name = "PATH", conflicts_with = "reference")]
        input: Option<PathBuf>,
        /// Report the published hardware results instead.
        #[arg(long)]
        reference: bool,
        /// Synthetic clouds: poses.
        #[arg(long, default_value_t = 5)]
        poses: usize,
        /// Synthetic clouds: points per pose.
        #[arg(long, default_value_t = 30)]
        points: usize,
        /// Synthetic clouds: per-axis standard deviation, millimeters.
        #[arg(long, default_value_t = 0.5)]
        sigma_mm: f64,
    },
    /// Sample a joint-space trajectory.
    Trajectory {
        /// CSV with columns time_s,joint1_rad,...; a built-in swing when omitted.
        #[arg(long, value_name = "PATH")]
        waypoints: Option<PathBuf>,
        #[arg(long, default_value = "cubic")]
        law: String,
        /// Sample interval, seconds.
        #[arg(long, default_value_t = 0.005)]
        dt: f64,
    },
    /// Monte Carlo sweep of reachable positions.
    Workspace {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Worker threads; all available cores when omitted.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Cable tensions and motor torques holding a payload.
    LoadCheck {
        /// Payload mass, kilograms.
        #[arg(long)]
        mass: f64,
        #[arg(long, allow_hyphen_values = true)]
        joints: Option<String>,
        #[arg(long, default_value_t = 9.81)]
        gravity: f64,
    },
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::input(format!("{what}: {s:?} is not a number")))
        })
        .collect()
}

fn parse_vector(text: &str, what: &str) -> Result<Vector3<f64>> {
    match parse_list(text, what)?.as_slice() {
        &[x, y, z] => Ok(Vector3::new(x, y, z)),
        other => Err(HarnessError::input(format!("{what}: expected 3 values, got {}", other.len()))),
    }
}

fn joints_or_zero(config: &ArmConfig, text: Option<&str>) -> Result<Vec<f64>> {
    match text {
        Some(t) => parse_list(t, "joints"),
        None => Ok(vec![0.0; config.independent_count()]),
    }
}

fn load_config(path: Option<&Path>) -> Result<ArmConfig> {
    match path {
        Some(p) => ArmConfig::from_path(p).map_err(|e| match e {
            cablearm::Error::Io(io) => HarnessError::input(format!("{}: {io}", p.display())),
            other => other.into(),
        }),
        None => Ok(ArmConfig::d3_arm()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::input(format!("{}: {e}", path.display())))
}

fn emit<R: Report>(report: &R, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => report.to_csv(),
        Format::Svg => Err(HarnessError::input(
            "svg output is available for the workspace and trajectory commands",
        )),
    }
}

struct Outcome {
    text: String,
    exit: i32,
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let config = load_config(cli.config.as_deref())?;
    let ok = |text| Ok(Outcome { text, exit: EXIT_OK });
    match &cli.command {
        Command::Fk { joints, degrees } => {
            let mut q = parse_list(joints, "joints")?;
            if *degrees {
                q.iter_mut().for_each(|v| *v = v.to_radians());
            }
            ok(emit(&fk_report(&config, &q)?, cli.format.unwrap_or(Format::Json))?)
        }
        Command::Ik {
            target,
            orientation,
            initial,
            max_iterations,
            damping,
            position_tolerance,
            orientation_tolerance,
        } => {
            let initial = joints_or_zero(&config, initial.as_deref())?;
            let position = parse_vector(target, "target")?;
            let target = match orientation {
                Some(o) => Pose::from_rotation_vector(position, parse_vector(o, "orientation")?),
                None => target_keeping_orientation(&config, &initial, position)?,
            };
            let mut request = IkRequest::new(target, initial);
            request.max_iterations = *max_iterations;
            request.damping = *damping;
            request.position_tolerance = *position_tolerance;
            request.orientation_tolerance = *orientation_tolerance;
            let report = ik_report(&config, &request)?;
            Ok(Outcome {
                text: emit(&report, cli.format.unwrap_or(Format::Json))?,
                exit: if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED },
            })
        }
        Command::Coupling { joints, finite_difference } => {
            let q = joints_or_zero(&config, joints.as_deref())?;
            ok(emit(
                &coupling_report(&config, &q, *finite_difference)?,
                cli.format.unwrap_or(Format::Csv),
            )?)
        }
        Command::DecoupleTest { joints, steps, routed_length } => {
            let joints = joints
                .split(',')
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(k - 1),
                    _ => Err(HarnessError::input(format!("joints: {s:?} is not a joint number"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let options = DecouplingOptions {
                joints,
                steps: *steps,
                routed_length: *routed_length,
            };
            ok(emit(
                &decoupling_experiment(&config, &options)?,
                cli.format.unwrap_or(Format::Json),
            )?)
        }
        Command::Repeatability { input, reference, poses, points, sigma_mm } => {
            let report = if *reference {
                hardware_reference()
            } else if let Some(path) = input {
                repeatability_stats(&parse_point_csv(&read_text(path)?)?)?
            } else {
                // clouds around sampled reachable positions
                let centers = workspace_sweep(&config, (*poses).max(1), cli.seed, 1)?
                    .points_m
                    .iter()
                    .take(*poses)
                    .map(|p| Vector3::new(p[0], p[1], p[2]))
                    .collect::<Vec<_>>();
                if !(sigma_mm.is_finite() && *sigma_mm >= 0.0) {
                    return Err(HarnessError::input("sigma must be finite and >= 0"));
                }
                repeatability_stats(&synthetic_clouds(&centers, *points, sigma_mm / 1000.0, cli.seed)?)?
            };
            ok(emit(&report, cli.format.unwrap_or(Format::Json))?)
        }
        Command::Trajectory { waypoints, law, dt } => {
            let law: TimingLaw = law.parse()?;
            let waypoints = match waypoints {
                Some(path) => parse_waypoint_csv(&read_text(path)?)?,
                None => default_swing(),
            };
            let report = simulate_trajectory(&config, &waypoints, law, *dt)?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Svg => {
                    let column = |f: fn(&crate::trajectory::TrajectorySample) -> f64| {
                        report.samples.iter().map(f).collect::<Vec<_>>()
                    };
                    svg::speed_plot(
                        &format!("{} trajectory", config.name),
                        &column(|s| s.time_s),
                        &column(|s| s.speed_m_per_s),
                        &column(|s| s.acceleration_m_per_s2),
                    )
                }
                other => emit(&report, other)?,
            };
            ok(text)
        }
        Command::Workspace { samples, workers } => {
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, std::num::NonZeroUsize::get)
            });
            if workers == 0 {
                return Err(HarnessError::input("workers must be >= 1"));
            }
            let report = workspace_sweep(&config, *samples, cli.seed, workers)?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Svg => svg::projections(&format!("{} workspace", config.name), &report.points_m),
                other => emit(&report, other)?,
            };
            ok(text)
        }
        Command::LoadCheck { mass, joints, gravity } => {
            let q = joints_or_zero(&config, joints.as_deref())?;
            ok(emit(
                &load_check_report(&config, &q, *mass, *gravity)?,
                cli.format.unwrap_or(Format::Json),
            )?)
        }
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_INVALID
                }
            };
        }
    };
    let outcome = execute(&cli).and_then(|outcome| {
        match &cli.output {
            Some(path) => std::fs::write(path, &outcome.text)?,
            None => stdout.write_all(outcome.text.as_bytes())?,
        }
        Ok(outcome.exit)
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID
        }
    }
}
