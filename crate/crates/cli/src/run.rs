//! `run` subcommand: execute a configured flow and write its artifacts.

use std::fs;
use std::path::Path;

use gradflow::error::{Error, Result};
use gradflow::euclidean::{EuclideanFunctional, EuclideanPoint, EuclideanSpace};
use gradflow::metric::{DiscreteTrajectory, Functional, TimeGrid};
use gradflow::mms::{
    mms_run, run_diagnostics, write_trajectory_csv, NewtonProx, QuantileNewtonProx,
    RelaxedSchemeParams, StepCertificate,
};
use gradflow::wasserstein1d::{
    barenblatt_quantiles, quantiles_to_density, write_density_csv, EnergyFunctional,
    QuantileMeasure, QuantileSpace,
};

use crate::artifacts::{
    write_points_csv, Manifest, ManifestFiles, POINTS_FILE, TRAJECTORY_FILE,
};
use crate::config::{Carrier, InitialDatum, RunConfig, SCHEMA_VERSION};
use crate::errors::{CliError, CliResult};

pub struct RunOutput {
    pub manifest: Manifest,
}

pub fn execute(config: &RunConfig, out_dir: &Path) -> CliResult<RunOutput> {
    fs::create_dir_all(out_dir).map_err(CliError::config)?;
    match config.carrier {
        Carrier::Euclidean => run_euclidean(config, out_dir),
        Carrier::Wasserstein1d => run_wasserstein(config, out_dir),
    }
}

fn scheme_params(config: &RunConfig) -> RelaxedSchemeParams {
    RelaxedSchemeParams {
        eta: config.eta,
        ..Default::default()
    }
}

fn run_euclidean(config: &RunConfig, out_dir: &Path) -> CliResult<RunOutput> {
    let f = config.functional.build_catalog()?;
    let coords = match &config.u0 {
        InitialDatum::Vector { coords } => coords.clone(),
        _ => unreachable!("validated by RunConfig::validate"),
    };
    let space = EuclideanSpace::new(f.dim());
    let u0 = space.point(coords)?;
    let grid = TimeGrid::new(config.tau, config.n_steps())?;
    let (traj, certs) = mms_run(&space, &f, &u0, &grid, &scheme_params(config), &NewtonProx)
        .map_err(|e| {
            // leave the partial artifacts behind, then fail loudly
            let _ = write_euclidean_artifacts(config, out_dir, &space, &f, &e.partial, &e.certificates);
            CliError::solver(format!("step {}: {}", e.step, e.source))
        })?;
    let manifest = write_euclidean_artifacts(config, out_dir, &space, &f, &traj, &certs)?;
    Ok(RunOutput { manifest })
}

fn write_euclidean_artifacts(
    config: &RunConfig,
    out_dir: &Path,
    space: &EuclideanSpace,
    f: &(impl EuclideanFunctional + Functional<EuclideanSpace>),
    traj: &DiscreteTrajectory<EuclideanPoint>,
    certs: &[StepCertificate],
) -> Result<Manifest> {
    let diag = run_diagnostics(space, f, traj, certs);
    let mut traj_csv = Vec::new();
    write_trajectory_csv(&mut traj_csv, traj.grid(), &diag)?;
    fs::write(out_dir.join(TRAJECTORY_FILE), traj_csv)?;

    let rows: Vec<Vec<f64>> = traj.points().iter().map(|p| p.coords().to_vec()).collect();
    let mut points_csv = Vec::new();
    write_points_csv(&mut points_csv, traj.grid(), &rows, "x")?;
    fs::write(out_dir.join(POINTS_FILE), points_csv)?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        carrier: config.carrier.to_string(),
        lambda: EuclideanFunctional::lambda(f),
        tau: config.tau,
        eta: config.eta,
        n_steps: traj.grid().n_steps(),
        seed: config.seed,
        config: config.clone(),
        files: ManifestFiles {
            trajectory: TRAJECTORY_FILE.to_string(),
            points: POINTS_FILE.to_string(),
            snapshots: Vec::new(),
        },
        certificates: certs.to_vec(),
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

pub fn build_initial_measure(u0: &InitialDatum, m: usize) -> Result<QuantileMeasure> {
    match u0 {
        InitialDatum::Gaussian { mean, var } => {
            if !(*var > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "gaussian variance must be positive, got {var}"
                )));
            }
            QuantileMeasure::gaussian(*mean, var.sqrt(), m)
        }
        InitialDatum::Uniform { a, b } => QuantileMeasure::uniform(*a, *b, m),
        InitialDatum::Barenblatt { t0 } => barenblatt_quantiles(*t0, m),
        InitialDatum::Quantiles { values } => {
            if values.len() != m {
                return Err(Error::DimensionMismatch(values.len(), m));
            }
            QuantileMeasure::new(values.clone())
        }
        InitialDatum::Vector { .. } => Err(Error::InvalidInput(
            "wasserstein1d carrier needs a measure-valued u0".into(),
        )),
    }
}

fn run_wasserstein(config: &RunConfig, out_dir: &Path) -> CliResult<RunOutput> {
    let spec = config.functional.energy_spec()?;
    let f = EnergyFunctional::new(spec)?;
    let m = config.m.expect("validated");
    let space = QuantileSpace::new(m);
    let u0 = build_initial_measure(&config.u0, m)?;
    if !f.in_domain(&u0) {
        return Err(CliError::Config(
            "initial measure has infinite energy for this spec".into(),
        ));
    }
    let grid = TimeGrid::new(config.tau, config.n_steps())?;
    let (traj, certs) = mms_run(
        &space,
        &f,
        &u0,
        &grid,
        &scheme_params(config),
        &QuantileNewtonProx,
    )
    .map_err(|e| {
        let _ = write_wasserstein_artifacts(config, out_dir, &space, &f, &e.partial, &e.certificates);
        CliError::solver(format!("step {}: {}", e.step, e.source))
    })?;
    let manifest = write_wasserstein_artifacts(config, out_dir, &space, &f, &traj, &certs)?;
    Ok(RunOutput { manifest })
}

fn write_wasserstein_artifacts(
    config: &RunConfig,
    out_dir: &Path,
    space: &QuantileSpace,
    f: &EnergyFunctional,
    traj: &DiscreteTrajectory<QuantileMeasure>,
    certs: &[StepCertificate],
) -> Result<Manifest> {
    let diag = run_diagnostics(space, f, traj, certs);
    let mut traj_csv = Vec::new();
    write_trajectory_csv(&mut traj_csv, traj.grid(), &diag)?;
    fs::write(out_dir.join(TRAJECTORY_FILE), traj_csv)?;

    let rows: Vec<Vec<f64>> = traj.points().iter().map(|p| p.values().to_vec()).collect();
    let mut points_csv = Vec::new();
    write_points_csv(&mut points_csv, traj.grid(), &rows, "q")?;
    fs::write(out_dir.join(POINTS_FILE), points_csv)?;

    // density snapshots at requested flow times
    let mut snapshots = Vec::new();
    if !config.snapshot_times.is_empty() {
        let cells = config.snapshot_cells.unwrap_or(200);
        for &t in &config.snapshot_times {
            let measure = traj.value_at(space, t)?;
            let (x_min, x_max) = config.snapshot_support.unwrap_or_else(|| {
                let q = measure.values();
                let pad = 0.05 * (q[q.len() - 1] - q[0]).max(1e-6);
                (q[0] - pad, q[q.len() - 1] + pad)
            });
            let density = quantiles_to_density(&measure, cells, x_min, x_max)?;
            let name = format!("density_t{t}.csv");
            let mut buf = Vec::new();
            write_density_csv(&mut buf, &density)?;
            fs::write(out_dir.join(&name), buf)?;
            snapshots.push((t, name));
        }
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        carrier: config.carrier.to_string(),
        lambda: f.spec().lambda(),
        tau: config.tau,
        eta: config.eta,
        n_steps: traj.grid().n_steps(),
        seed: config.seed,
        config: config.clone(),
        files: ManifestFiles {
            trajectory: TRAJECTORY_FILE.to_string(),
            points: POINTS_FILE.to_string(),
            snapshots,
        },
        certificates: certs.to_vec(),
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}
