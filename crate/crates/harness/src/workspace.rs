//! Monte Carlo sweep of the reachable end-effector positions.
//!
//! Sample `i` draws its joint angles from its own ChaCha stream (`seed`,
//! stream `i`), so the cloud is the same whichever worker computes which
//! sample.

use cablearm::kinematics::chain_pose;
use cablearm::ArmConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{num, write_table, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceStats {
    pub min_m: [f64; 3],
    pub max_m: [f64; 3],
    pub max_radius_m: f64,
    pub mean_radius_m: f64,
}

impl WorkspaceStats {
    fn of(points: &[[f64; 3]]) -> Self {
        let mut min_m = [f64::INFINITY; 3];
        let mut max_m = [f64::NEG_INFINITY; 3];
        let mut max_radius_m: f64 = 0.0;
        let mut radius_sum = 0.0;
        for p in points {
            for k in 0..3 {
                min_m[k] = min_m[k].min(p[k]);
                max_m[k] = max_m[k].max(p[k]);
            }
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            max_radius_m = max_radius_m.max(r);
            radius_sum += r;
        }
        Self {
            min_m,
            max_m,
            max_radius_m,
            mean_radius_m: radius_sum / points.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceReport {
    pub seed: u64,
    pub points_m: Vec<[f64; 3]>,
    pub stats: WorkspaceStats,
}

fn sample(config: &ArmConfig, seed: u64, index: usize) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let q: Vec<f64> = (0..config.independent_count())
        .map(|k| rng.random_range(config.limits.lower[k]..=config.limits.upper[k]))
        .collect();
    let p = chain_pose(&config.dh_rows, &config.constraint.expand(&q)).position;
    [p.x, p.y, p.z]
}

/// `sample_count` uniformly drawn in-limit configurations mapped through
/// forward kinematics, computed on `workers` threads.
pub fn workspace_sweep(
    config: &ArmConfig,
    sample_count: usize,
    seed: u64,
    workers: usize,
) -> Result<WorkspaceReport> {
    if sample_count == 0 {
        return Err(HarnessError::input("sample count must be >= 1"));
    }
    let workers = workers.clamp(1, sample_count);
    let mut points = vec![[0.0; 3]; sample_count];
    let chunk = sample_count.div_ceil(workers);
    std::thread::scope(|scope| {
        for (c, out) in points.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = sample(config, seed, c * chunk + j);
                }
            });
        }
    });
    Ok(WorkspaceReport {
        seed,
        stats: WorkspaceStats::of(&points),
        points_m: points,
    })
}

const COLUMNS: [&str; 5] = ["sample", "seed", "x_m", "y_m", "z_m"];

impl Report for WorkspaceReport {
    const KIND: &'static str = "workspace";

    fn to_csv(&self) -> Result<String> {
        let seed = self.seed.to_string();
        let rows: Vec<Vec<String>> = self
            .points_m
            .iter()
            .enumerate()
            .map(|(i, p)| vec![i.to_string(), seed.clone(), num(p[0]), num(p[1]), num(p[2])])
            .collect();
        write_table(&COLUMNS.map(String::from), &rows)
    }

    fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let cols = COLUMNS
            .iter()
            .map(|c| table.column(c))
            .collect::<Result<Vec<_>>>()?;
        let mut seed = None;
        let mut points = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let s: u64 = table
                .text(row, cols[1])
                .parse()
                .map_err(|_| HarnessError::report("seed column is not an integer"))?;
            if seed.is_some_and(|prev| prev != s) {
                return Err(HarnessError::report("rows carry different seeds"));
            }
            seed = Some(s);
            points.push([table.f64(row, cols[2])?, table.f64(row, cols[3])?, table.f64(row, cols[4])?]);
        }
        let seed = seed.ok_or_else(|| HarnessError::report("no rows"))?;
        Ok(Self {
            seed,
            stats: WorkspaceStats::of(&points),
            points_m: points,
        })
    }
}
