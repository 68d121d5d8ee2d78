//! Pose repeatability statistics in the ISO 9283 style.
//!
//! For each commanded pose the measured points are reduced to their
//! barycenter; the distances `l_j` from the barycenter give the mean `l̄`,
//! the sample standard deviation `s` (n − 1 denominator) and the
//! repeatability `l̄ + 3s`. The summary row averages each column over the
//! poses without weighting.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{num, parse_f64, write_table, Report, Table};

/// Measured positions for one commanded pose, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub label: String,
    pub points: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseStats {
    pub pose: String,
    /// Absent for rows that only carry published summary values.
    pub samples: Option<usize>,
    pub barycenter_mm: Option<[f64; 3]>,
    pub mean_mm: f64,
    pub std_mm: f64,
    pub three_sigma_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub mean_mm: f64,
    pub std_mm: f64,
    pub three_sigma_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityReport {
    pub poses: Vec<PoseStats>,
    pub total: Totals,
}

/// Statistics of a single cloud. Points are sorted before summation so the
/// result does not depend on their order.
pub fn pose_stats(cloud: &PointCloud) -> Result<PoseStats> {
    let n = cloud.points.len();
    if n < 2 {
        return Err(HarnessError::input(format!(
            "pose {} has {n} point(s); at least 2 are needed",
            cloud.label
        )));
    }
    if cloud.points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(HarnessError::input(format!("pose {} has non-finite points", cloud.label)));
    }
    let mut points: Vec<Vector3<f64>> = cloud.points.iter().map(|p| p * 1000.0).collect();
    points.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    let count = n as f64;
    let barycenter = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / count;
    let mut distances: Vec<f64> = points.iter().map(|p| (p - barycenter).norm()).collect();
    distances.sort_by(f64::total_cmp);
    let mean = distances.iter().sum::<f64>() / count;
    let variance = distances.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let std = variance.sqrt();
    Ok(PoseStats {
        pose: cloud.label.clone(),
        samples: Some(n),
        barycenter_mm: Some([barycenter.x, barycenter.y, barycenter.z]),
        mean_mm: mean,
        std_mm: std,
        three_sigma_mm: mean + 3.0 * std,
    })
}

/// Column averages over the poses.
pub fn aggregate(poses: &[PoseStats]) -> Totals {
    let n = poses.len() as f64;
    let avg = |f: fn(&PoseStats) -> f64| poses.iter().map(f).sum::<f64>() / n;
    Totals {
        mean_mm: avg(|p| p.mean_mm),
        std_mm: avg(|p| p.std_mm),
        three_sigma_mm: avg(|p| p.three_sigma_mm),
    }
}

pub fn repeatability_stats(clouds: &[PointCloud]) -> Result<RepeatabilityReport> {
    if clouds.is_empty() {
        return Err(HarnessError::input("no poses given"));
    }
    let poses = clouds.iter().map(pose_stats).collect::<Result<Vec<_>>>()?;
    Ok(RepeatabilityReport {
        total: aggregate(&poses),
        poses,
    })
}

/// Published hardware repeatability results of the reference arm, per pose:
/// (pose, mean, standard deviation, mean + 3σ), millimeters. These are
/// motion-capture measurements and cannot be regenerated by the model.
pub const HARDWARE_REFERENCE: [(&str, f64, f64, f64); 5] = [
    ("P1", 0.8562, 0.4902, 2.3269),
    ("P2", 1.9868, 1.1983, 5.5817),
    ("P3", 1.0997, 0.7271, 3.2810),
    ("P4", 1.5977, 1.0693, 4.8056),
    ("P5", 0.9078, 0.6749, 2.9324),
];

/// Published summary row for [`HARDWARE_REFERENCE`], millimeters.
pub const HARDWARE_REFERENCE_TOTAL: Totals = Totals {
    mean_mm: 1.2896,
    std_mm: 0.8320,
    three_sigma_mm: 3.7855,
};

/// [`HARDWARE_REFERENCE`] as a report, with the summary row recomputed.
pub fn hardware_reference() -> RepeatabilityReport {
    let poses: Vec<PoseStats> = HARDWARE_REFERENCE
        .iter()
        .map(|&(pose, mean, std, three_sigma)| PoseStats {
            pose: pose.into(),
            samples: None,
            barycenter_mm: None,
            mean_mm: mean,
            std_mm: std,
            three_sigma_mm: three_sigma,
        })
        .collect();
    RepeatabilityReport {
        total: aggregate(&poses),
        poses,
    }
}

/// Isotropic Gaussian clouds of `points` samples with standard deviation
/// `sigma` (meters, per axis) around each center.
pub fn synthetic_clouds(
    centers: &[Vector3<f64>],
    points: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<PointCloud>> {
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| HarnessError::input(format!("sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(centers
        .iter()
        .enumerate()
        .map(|(i, c)| PointCloud {
            label: format!("P{}", i + 1),
            points: (0..points)
                .map(|_| {
                    c + Vector3::new(
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    )
                })
                .collect(),
        })
        .collect())
}

/// Reads measured points from CSV with columns `pose,x_m,y_m,z_m`; clouds
/// keep the order in which their labels first appear.
pub fn parse_point_csv(text: &str) -> Result<Vec<PointCloud>> {
    let table = Table::parse(text)?;
    let (pose, x, y, z) = (
        table.column("pose")?,
        table.column("x_m")?,
        table.column("y_m")?,
        table.column("z_m")?,
    );
    let mut clouds: Vec<PointCloud> = Vec::new();
    for row in &table.rows {
        let label = table.text(row, pose);
        let p = Vector3::new(table.f64(row, x)?, table.f64(row, y)?, table.f64(row, z)?);
        match clouds.iter_mut().find(|c| c.label == label) {
            Some(cloud) => cloud.points.push(p),
            None => clouds.push(PointCloud {
                label: label.to_owned(),
                points: vec![p],
            }),
        }
    }
    Ok(clouds)
}

const TOTAL_LABEL: &str = "total";

impl Report for RepeatabilityReport {
    const KIND: &'static str = "repeatability";

    fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "pose",
            "samples",
            "barycenter_x_mm",
            "barycenter_y_mm",
            "barycenter_z_mm",
            "mean_mm",
            "std_mm",
            "three_sigma_mm",
        ]
        .map(String::from)
        .to_vec();
        let mut rows: Vec<Vec<String>> = self
            .poses
            .iter()
            .map(|p| {
                let b = p.barycenter_mm.map(|b| b.map(num));
                let [bx, by, bz] = b.unwrap_or_default();
                vec![
                    p.pose.clone(),
                    p.samples.map(|n| n.to_string()).unwrap_or_default(),
                    bx,
                    by,
                    bz,
                    num(p.mean_mm),
                    num(p.std_mm),
                    num(p.three_sigma_mm),
                ]
            })
            .collect();
        rows.push(vec![
            TOTAL_LABEL.into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            num(self.total.mean_mm),
            num(self.total.std_mm),
            num(self.total.three_sigma_mm),
        ]);
        write_table(&header, &rows)
    }

    fn from_csv(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let col = |name| table.column(name);
        let (pose, samples) = (col("pose")?, col("samples")?);
        let (bx, by, bz) = (col("barycenter_x_mm")?, col("barycenter_y_mm")?, col("barycenter_z_mm")?);
        let (mean, std, three) = (col("mean_mm")?, col("std_mm")?, col("three_sigma_mm")?);
        let Some((last, rows)) = table.rows.split_last() else {
            return Err(HarnessError::report("no rows"));
        };
        if table.text(last, pose) != TOTAL_LABEL {
            return Err(HarnessError::report("last row must be the total row"));
        }
        let poses = rows
            .iter()
            .map(|row| {
                let samples = match table.text(row, samples) {
                    "" => None,
                    s => Some(
                        s.parse()
                            .map_err(|_| HarnessError::report(format!("samples: {s:?}")))?,
                    ),
                };
                let barycenter_mm = match table.text(row, bx) {
                    "" => None,
                    _ => Some([table.f64(row, bx)?, table.f64(row, by)?, table.f64(row, bz)?]),
                };
                Ok(PoseStats {
                    pose: table.text(row, pose).to_owned(),
                    samples,
                    barycenter_mm,
                    mean_mm: table.f64(row, mean)?,
                    std_mm: table.f64(row, std)?,
                    three_sigma_mm: table.f64(row, three)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RepeatabilityReport {
            poses,
            total: Totals {
                mean_mm: parse_f64(table.text(last, mean), "mean_mm")?,
                std_mm: parse_f64(table.text(last, std), "std_mm")?,
                three_sigma_mm: parse_f64(table.text(last, three), "three_sigma_mm")?,
            },
        })
    }
}
