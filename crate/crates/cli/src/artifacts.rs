//! Run artifacts: the per-run manifest and the point store, readable back by
//! the verifier.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use gradflow::error::{Error, Result};
use gradflow::euclidean::EuclideanPoint;
use gradflow::metric::{DiscreteTrajectory, InterpMode, TimeGrid};
use gradflow::mms::StepCertificate;
use gradflow::wasserstein1d::QuantileMeasure;

use crate::config::RunConfig;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const POINTS_FILE: &str = "points.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub trajectory: String,
    pub points: String,
    #[serde(default)]
    pub snapshots: Vec<(f64, String)>,
}

/// Full record of a run: resolved configuration, scheme parameters, and the
/// per-step certificates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub carrier: String,
    pub lambda: f64,
    pub tau: f64,
    pub eta: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub files: ManifestFiles,
    pub certificates: Vec<StepCertificate>,
}

impl Manifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::InvalidInput(format!("missing artifact {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Write trajectory points as CSV: `n,t,x0,...` (Euclidean coordinates) or
/// `n,t,q0,...` (quantile values).
pub fn write_points_csv<W: Write>(
    out: &mut W,
    grid: &TimeGrid,
    rows: &[Vec<f64>],
    column_prefix: &str,
) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.len());
    let mut header = String::from("n,t");
    for j in 0..width {
        header.push(',');
        header.push_str(&format!("{column_prefix}{j}"));
    }
    writeln!(out, "{header}")?;
    for (n, row) in rows.iter().enumerate() {
        let mut line = format!("{},{}", n, grid.node(n));
        for v in row {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("missing artifact {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let _n = cols.next();
        let _t = cols.next();
        let values: std::result::Result<Vec<f64>, _> =
            cols.map(|c| c.trim().parse::<f64>()).collect();
        rows.push(values.map_err(|e| {
            Error::InvalidInput(format!("{}: line {}: {e}", path.display(), lineno + 1))
        })?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

pub fn load_euclidean_trajectory(
    dir: &Path,
    manifest: &Manifest,
) -> Result<DiscreteTrajectory<EuclideanPoint>> {
    let rows = read_points_csv(&dir.join(&manifest.files.points))?;
    let grid = TimeGrid::new(manifest.tau, manifest.n_steps)?;
    let points = rows.into_iter().map(EuclideanPoint::new).collect();
    DiscreteTrajectory::new(grid, points, InterpMode::PiecewiseConstant)
}

pub fn load_quantile_trajectory(
    dir: &Path,
    manifest: &Manifest,
) -> Result<DiscreteTrajectory<QuantileMeasure>> {
    let rows = read_points_csv(&dir.join(&manifest.files.points))?;
    let grid = TimeGrid::new(manifest.tau, manifest.n_steps)?;
    let points: Result<Vec<QuantileMeasure>> =
        rows.into_iter().map(QuantileMeasure::new).collect();
    DiscreteTrajectory::new(grid, points?, InterpMode::PiecewiseConstant)
}
