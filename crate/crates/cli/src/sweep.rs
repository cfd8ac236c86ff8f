//! `sweep` subcommand: convergence study over a list of time steps (or grid
//! sizes), with the sup-error measured against a closed form when one exists
//! and against the finest run otherwise.

use std::fs;
use std::path::Path;

use gradflow::euclidean::{CatalogFunctional, EuclideanPoint, EuclideanSpace};
use gradflow::metric::{DiscreteTrajectory, InterpMode, MetricSpace, TimeGrid};
use gradflow::mms::{mms_run, NewtonProx, QuantileNewtonProx, RelaxedSchemeParams};
use gradflow::verify::fit_loglog_slope;
use gradflow::wasserstein1d::{EnergyFunctional, QuantileMeasure, QuantileSpace};

use crate::config::{Carrier, InitialDatum, RunConfig};
use crate::errors::{CliError, CliResult};
use crate::run::build_initial_measure;

pub const SWEEP_CSV: &str = "sweep.csv";
const SAMPLES: usize = 256;

pub struct SweepOutcome {
    pub fitted_slope: f64,
    pub errors: Vec<(f64, f64)>,
}

pub fn execute(
    config: &RunConfig,
    out_dir: &Path,
    taus: Option<Vec<f64>>,
    m_list: Option<Vec<usize>>,
) -> CliResult<SweepOutcome> {
    fs::create_dir_all(out_dir).map_err(CliError::config)?;
    match (taus, m_list) {
        (Some(taus), None) => tau_sweep(config, out_dir, &taus),
        (None, Some(ms)) => m_sweep(config, out_dir, &ms),
        (Some(_), Some(_)) => Err(CliError::Config(
            "choose either --taus or --m-list, not both".into(),
        )),
        (None, None) => Err(CliError::Config(
            "sweep needs --taus or --m-list".into(),
        )),
    }
}

fn write_sweep_csv(
    out_dir: &Path,
    label: &str,
    entries: &[(f64, f64)],
    slope: f64,
) -> CliResult<()> {
    let mut text = format!("{label},sup_error,ratio,fitted_slope\n");
    for (i, (x, err)) in entries.iter().enumerate() {
        let ratio = if i == 0 {
            String::new()
        } else {
            format!("{}", entries[i - 1].1 / err)
        };
        text.push_str(&format!("{x},{err},{ratio},{slope}\n"));
    }
    fs::write(out_dir.join(SWEEP_CSV), text).map_err(CliError::config)?;
    Ok(())
}

fn sample_times(t_final: f64) -> Vec<f64> {
    (0..=SAMPLES)
        .map(|k| t_final * k as f64 / SAMPLES as f64)
        .collect()
}

fn tau_sweep(config: &RunConfig, out_dir: &Path, taus: &[f64]) -> CliResult<SweepOutcome> {
    if taus.len() < 2 {
        return Err(CliError::Config(
            "sweep needs at least 2 time steps".into(),
        ));
    }
    let mut sorted = taus.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let times = sample_times(config.t_final);

    let entries = match config.carrier {
        Carrier::Euclidean => {
            let f = config.functional.build_catalog()?;
            let space = EuclideanSpace::new(gradflow::euclidean::EuclideanFunctional::dim(&f));
            let coords = match &config.u0 {
                InitialDatum::Vector { coords } => coords.clone(),
                _ => return Err(CliError::Config("euclidean sweep needs a vector u0".into())),
            };
            let u0 = space.point(coords)?;
            let run = |tau: f64| -> CliResult<DiscreteTrajectory<EuclideanPoint>> {
                let grid = TimeGrid::new(tau, (config.t_final / tau).round() as usize)?;
                let (traj, _) = mms_run(
                    &space,
                    &f,
                    &u0,
                    &grid,
                    &RelaxedSchemeParams {
                        eta: config.eta,
                        ..Default::default()
                    },
                    &NewtonProx,
                )
                .map_err(|e| CliError::solver(format!("tau={tau}, step {}: {}", e.step, e.source)))?;
                Ok(traj.with_mode(InterpMode::PiecewiseLinear))
            };
            // closed-form reference for quadratics, finest run otherwise
            if let CatalogFunctional::Quadratic(q) = &f {
                let mut entries = Vec::new();
                for &tau in &sorted {
                    let traj = run(tau)?;
                    let mut sup = 0.0f64;
                    for &t in &times {
                        let exact = q.exact_flow(&u0, t)?;
                        let approx = traj.value_at(&space, t)?;
                        sup = sup.max(space.dist(&exact, &approx));
                    }
                    entries.push((tau, sup));
                }
                entries
            } else {
                let reference = run(*sorted.last().unwrap())?;
                let mut entries = Vec::new();
                for &tau in &sorted[..sorted.len() - 1] {
                    let traj = run(tau)?;
                    let mut sup = 0.0f64;
                    for &t in &times {
                        let a = reference.value_at(&space, t)?;
                        let b = traj.value_at(&space, t)?;
                        sup = sup.max(space.dist(&a, &b));
                    }
                    entries.push((tau, sup));
                }
                entries
            }
        }
        Carrier::Wasserstein1d => {
            let spec = config.functional.energy_spec()?;
            let f = EnergyFunctional::new(spec)?;
            let m = config
                .m
                .ok_or_else(|| CliError::Config("sweep needs a grid size m".into()))?;
            let space = QuantileSpace::new(m);
            let u0 = build_initial_measure(&config.u0, m)?;
            let run = |tau: f64| -> CliResult<DiscreteTrajectory<QuantileMeasure>> {
                let grid = TimeGrid::new(tau, (config.t_final / tau).round() as usize)?;
                let (traj, _) = mms_run(
                    &space,
                    &f,
                    &u0,
                    &grid,
                    &RelaxedSchemeParams {
                        eta: config.eta,
                        ..Default::default()
                    },
                    &QuantileNewtonProx,
                )
                .map_err(|e| CliError::solver(format!("tau={tau}, step {}: {}", e.step, e.source)))?;
                Ok(traj.with_mode(InterpMode::PiecewiseLinear))
            };
            let reference = run(*sorted.last().unwrap())?;
            let mut entries = Vec::new();
            for &tau in &sorted[..sorted.len() - 1] {
                let traj = run(tau)?;
                let mut sup = 0.0f64;
                for &t in &times {
                    let a = reference.value_at(&space, t)?;
                    let b = traj.value_at(&space, t)?;
                    sup = sup.max(space.dist(&a, &b));
                }
                entries.push((tau, sup));
            }
            entries
        }
    };

    if entries.len() < 2 {
        return Err(CliError::Config(
            "sweep produced fewer than 2 comparable runs".into(),
        ));
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.1.max(1e-300)).collect();
    let slope = fit_loglog_slope(&xs, &ys).map_err(CliError::config)?;
    write_sweep_csv(out_dir, "tau", &entries, slope)?;
    Ok(SweepOutcome {
        fitted_slope: slope,
        errors: entries,
    })
}

fn m_sweep(config: &RunConfig, out_dir: &Path, ms: &[usize]) -> CliResult<SweepOutcome> {
    if ms.len() < 2 {
        return Err(CliError::Config("sweep needs at least 2 grid sizes".into()));
    }
    if config.carrier != Carrier::Wasserstein1d {
        return Err(CliError::Config(
            "grid-size sweeps apply to the wasserstein1d carrier".into(),
        ));
    }
    let mut sorted = ms.to_vec();
    sorted.sort();
    let spec = config.functional.energy_spec()?;
    let f = EnergyFunctional::new(spec)?;
    let times = sample_times(config.t_final);

    let run = |m: usize| -> CliResult<(QuantileSpace, DiscreteTrajectory<QuantileMeasure>)> {
        let space = QuantileSpace::new(m);
        let u0 = build_initial_measure(&config.u0, m)?;
        let grid = TimeGrid::new(config.tau, config.n_steps())?;
        let (traj, _) = mms_run(
            &space,
            &f,
            &u0,
            &grid,
            &RelaxedSchemeParams {
                eta: config.eta,
                ..Default::default()
            },
            &QuantileNewtonProx,
        )
        .map_err(|e| CliError::solver(format!("m={m}, step {}: {}", e.step, e.source)))?;
        Ok((space, traj.with_mode(InterpMode::PiecewiseLinear)))
    };

    let finest = *sorted.last().unwrap();
    let (fine_space, reference) = run(finest)?;
    let mut entries = Vec::new();
    for &m in &sorted[..sorted.len() - 1] {
        let (_, traj) = run(m)?;
        let mut sup = 0.0f64;
        for &t in &times {
            let coarse = traj.value_at(&QuantileSpace::new(m), t)?;
            let fine = reference.value_at(&fine_space, t)?;
            let resampled = coarse.resample(finest)?;
            sup = sup.max(fine_space.dist(&resampled, &fine));
        }
        entries.push((m as f64, sup));
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.1.max(1e-300)).collect();
    let slope = fit_loglog_slope(&xs, &ys).map_err(CliError::config)?;
    write_sweep_csv(out_dir, "m", &entries, slope)?;
    Ok(SweepOutcome {
        fitted_slope: slope,
        errors: entries,
    })
}
