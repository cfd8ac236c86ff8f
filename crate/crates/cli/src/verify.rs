//! `verify` subcommand: replay the estimate checks on stored run artifacts.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use gradflow::error::Result;
use gradflow::euclidean::{
    gaussian_point_sampler, CatalogFunctional, EuclideanPoint, EuclideanSpace,
};
use gradflow::metric::{DiscreteTrajectory, Functional, MetricSpace, SampledCurve};
use gradflow::mms::{NewtonProx, QuantileNewtonProx};
use gradflow::verify::{
    asymptotic_check, contraction_check, curvature_probes, energy_identity_check,
    evi_prime_residual, geodesic_convexity_probe, minimizer_by_flow, regularization_check,
    short_time_expansion_check, weighted_slope_monotonicity_check, CheckRecord, EviCheckConfig,
    Regime, VerificationReport,
};
use gradflow::wasserstein1d::{
    gaussian_measure_sampler, EnergyFunctional, QuantileMeasure, QuantileSpace,
};
use gradflow::{seeded_rng, ChaCha8Rng};

use crate::artifacts::{
    load_euclidean_trajectory, load_quantile_trajectory, Manifest, REPORT_CSV, REPORT_JSON,
};
use crate::config::Carrier;
use crate::errors::{CliError, CliResult};

/// Names accepted by `--checks`.
pub const CHECK_NAMES: &[&str] = &[
    "evi_prime",
    "contraction",
    "regularization",
    "asymptotic",
    "energy_identity",
    "convexity",
    "curvature",
    "slope_monotonicity",
    "short_time_expansion",
];

pub struct VerifyOutcome {
    pub report: VerificationReport,
}

pub fn execute(dir: &Path, checks: Option<&str>, seed: Option<u64>) -> CliResult<VerifyOutcome> {
    let manifest = Manifest::load(dir).map_err(CliError::config)?;
    let enabled: BTreeSet<String> = match checks {
        None => CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            let set: BTreeSet<String> = list
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            for name in &set {
                if !CHECK_NAMES.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "unknown check '{name}' (expected one of {CHECK_NAMES:?})"
                    )));
                }
            }
            set
        }
    };
    let seed = seed.unwrap_or(manifest.seed);

    let carrier = manifest.config.carrier;
    let report = match carrier {
        Carrier::Euclidean => verify_euclidean(dir, &manifest, &enabled, seed),
        Carrier::Wasserstein1d => verify_wasserstein(dir, &manifest, &enabled, seed),
    }
    .map_err(CliError::config)?;

    let json = report.to_json_string().map_err(CliError::config)?;
    fs::write(dir.join(REPORT_JSON), json + "\n").map_err(CliError::config)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(CliError::config)?;
    fs::write(dir.join(REPORT_CSV), csv).map_err(CliError::config)?;
    Ok(VerifyOutcome { report })
}

/// Additive model slack for scheme output: a tight analytic floor plus step-
/// and grid-dependent terms scaled by the run's energy drop.
fn discrete_slack(tau: f64, m: Option<usize>, energy_scale: f64) -> f64 {
    let grid_term = m.map_or(0.0, |m| 2.0 * energy_scale / m as f64);
    1e-8 + 10.0 * tau * energy_scale + grid_term
}

/// Subsample node indices so curve-based checks stay O(100) pairs.
fn sample_nodes(n_steps: usize, target: usize) -> Vec<usize> {
    if n_steps == 0 {
        return vec![0];
    }
    let stride = (n_steps / target).max(1);
    let mut idx: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *idx.last().unwrap() != n_steps {
        idx.push(n_steps);
    }
    idx
}

fn verify_euclidean(
    dir: &Path,
    manifest: &Manifest,
    enabled: &BTreeSet<String>,
    seed: u64,
) -> Result<VerificationReport> {
    let f: CatalogFunctional = manifest.config.functional.build_catalog()?;
    let traj = load_euclidean_trajectory(dir, manifest)?;
    let dim = traj.points()[0].dim();
    let space = EuclideanSpace::new(dim);
    let lambda = manifest.lambda;
    let tau = manifest.tau;

    let points = traj.points();
    let phi0 = Functional::value(&f, &points[0]);
    let phi_n = Functional::value(&f, points.last().unwrap());
    let scale = 1.0 + (phi0 - phi_n).abs();
    let slack = discrete_slack(tau, None, scale);

    let idx = sample_nodes(traj.grid().n_steps(), 20);
    let times: Vec<f64> = idx.iter().map(|&n| traj.grid().node(n)).collect();
    let curve_points: Vec<EuclideanPoint> = idx.iter().map(|&n| points[n].clone()).collect();
    let curve = SampledCurve::new(times.clone(), curve_points)?;

    let test_points = vec![
        points[0].clone(),
        points.last().unwrap().clone(),
        EuclideanPoint::new(vec![0.0; dim]),
    ];
    let cfg = EviCheckConfig {
        lambda,
        test_points,
        time_pairs: EviCheckConfig::<EuclideanPoint>::all_pairs(&times),
        tolerance: slack,
    };
    let slope_fn = |p: &EuclideanPoint| Functional::slope_exact(&f, p);

    let mut report = VerificationReport::new();
    if enabled.contains("evi_prime") {
        report.push(evi_prime_residual(&space, &f, &curve, &cfg, Regime::Discrete)?);
    }
    if enabled.contains("contraction") {
        report.push(self_shift_contraction(&space, &traj, lambda, 5.0 * tau + 1e-8)?);
    }
    if enabled.contains("regularization") {
        report.extend(regularization_check(
            &space,
            &f,
            &curve,
            &cfg,
            Some(&slope_fn),
            Regime::Discrete,
        )?);
    }
    if enabled.contains("slope_monotonicity") {
        report.push(weighted_slope_monotonicity_check(
            &space,
            &f,
            &curve,
            lambda,
            Some(&slope_fn),
            slack,
            Regime::Discrete,
        )?);
    }
    if enabled.contains("short_time_expansion") {
        report.push(short_time_expansion_check(
            &space,
            &f,
            &curve,
            &cfg,
            Some(&slope_fn),
            Regime::Discrete,
        )?);
    }
    if enabled.contains("asymptotic") {
        if lambda > 0.0 {
            match minimizer_by_flow(&space, &f, &points[0], &NewtonProx, None) {
                Ok(minimizer) => report.extend(asymptotic_check(
                    &space,
                    &f,
                    &curve,
                    &cfg,
                    Some(&minimizer),
                    Some(&slope_fn),
                    Regime::Discrete,
                )?),
                Err(e) => report.push(CheckRecord::skipped(
                    "asymptotic",
                    Regime::Discrete,
                    &format!("minimizer search failed: {e}"),
                )),
            }
        } else {
            report.extend(asymptotic_check(
                &space,
                &f,
                &curve,
                &cfg,
                None,
                Some(&slope_fn),
                Regime::Discrete,
            )?);
        }
    }
    if enabled.contains("energy_identity") {
        report.extend(energy_identity_check(
            &space,
            &f,
            &traj,
            None,
            slack,
            3.0 * tau * scale,
            Regime::Discrete,
        )?);
    }
    if enabled.contains("convexity") {
        let mut rng = seeded_rng(seed);
        let mut sampler = gaussian_point_sampler(&space, 2.0, seed);
        let mut sample = |_: &mut ChaCha8Rng| sampler();
        report.push(geodesic_convexity_probe(
            &space,
            &f,
            lambda,
            200,
            &mut rng,
            &mut sample,
            1e-9,
            Regime::Analytic,
        )?);
    }
    if enabled.contains("curvature") {
        let mut rng = seeded_rng(seed.wrapping_add(1));
        let mut sampler = gaussian_point_sampler(&space, 2.0, seed.wrapping_add(1));
        let mut sample = |_: &mut ChaCha8Rng| sampler();
        report.extend(curvature_probes(
            &space,
            200,
            1.0,
            &mut rng,
            &mut sample,
            1e-12,
            Regime::Analytic,
        )?);
    }
    Ok(report)
}

fn verify_wasserstein(
    dir: &Path,
    manifest: &Manifest,
    enabled: &BTreeSet<String>,
    seed: u64,
) -> Result<VerificationReport> {
    let spec = manifest.config.functional.energy_spec()?;
    let f = EnergyFunctional::new(spec)?;
    let traj = load_quantile_trajectory(dir, manifest)?;
    let m = traj.points()[0].m();
    let space = QuantileSpace::new(m);
    let lambda = manifest.lambda;
    let tau = manifest.tau;

    let points = traj.points();
    let phi0 = Functional::value(&f, &points[0]);
    let phi_n = Functional::value(&f, points.last().unwrap());
    let scale = 1.0 + (phi0 - phi_n).abs();
    let slack = discrete_slack(tau, Some(m), scale);

    let idx = sample_nodes(traj.grid().n_steps(), 20);
    let times: Vec<f64> = idx.iter().map(|&n| traj.grid().node(n)).collect();
    let curve_points: Vec<QuantileMeasure> = idx.iter().map(|&n| points[n].clone()).collect();
    let curve = SampledCurve::new(times.clone(), curve_points)?;

    let test_points = vec![
        points[0].clone(),
        points.last().unwrap().clone(),
        QuantileMeasure::gaussian(0.0, 1.0, m)?,
    ];
    let cfg = EviCheckConfig {
        lambda,
        test_points,
        time_pairs: EviCheckConfig::<QuantileMeasure>::all_pairs(&times),
        tolerance: slack,
    };
    let slope_fn = |p: &QuantileMeasure| f.metric_grad_norm(p);

    let mut report = VerificationReport::new();
    if enabled.contains("evi_prime") {
        report.push(evi_prime_residual(&space, &f, &curve, &cfg, Regime::Discrete)?);
    }
    if enabled.contains("contraction") {
        report.push(self_shift_contraction(&space, &traj, lambda, 5.0 * tau + 1e-8)?);
    }
    if enabled.contains("regularization") {
        report.extend(regularization_check(
            &space,
            &f,
            &curve,
            &cfg,
            Some(&slope_fn),
            Regime::Discrete,
        )?);
    }
    if enabled.contains("slope_monotonicity") {
        report.push(weighted_slope_monotonicity_check(
            &space,
            &f,
            &curve,
            lambda,
            Some(&slope_fn),
            slack,
            Regime::Discrete,
        )?);
    }
    if enabled.contains("short_time_expansion") {
        report.push(short_time_expansion_check(
            &space,
            &f,
            &curve,
            &cfg,
            Some(&slope_fn),
            Regime::Discrete,
        )?);
    }
    if enabled.contains("asymptotic") {
        if lambda > 0.0 {
            match minimizer_by_flow(&space, &f, &points[0], &QuantileNewtonProx, Some(&slope_fn)) {
                Ok(minimizer) => report.extend(asymptotic_check(
                    &space,
                    &f,
                    &curve,
                    &cfg,
                    Some(&minimizer),
                    Some(&slope_fn),
                    Regime::Discrete,
                )?),
                Err(e) => report.push(CheckRecord::skipped(
                    "asymptotic",
                    Regime::Discrete,
                    &format!("minimizer search failed: {e}"),
                )),
            }
        } else {
            report.extend(asymptotic_check(
                &space,
                &f,
                &curve,
                &cfg,
                None,
                Some(&slope_fn),
                Regime::Discrete,
            )?);
        }
    }
    if enabled.contains("energy_identity") {
        report.extend(energy_identity_check(
            &space,
            &f,
            &traj,
            Some(&slope_fn),
            slack,
            3.0 * tau * scale,
            Regime::Discrete,
        )?);
    }
    if enabled.contains("convexity") {
        let mut rng = seeded_rng(seed);
        let mut sampler = gaussian_measure_sampler(&space, seed);
        report.push(geodesic_convexity_probe(
            &space,
            &f,
            lambda,
            200,
            &mut rng,
            &mut sampler,
            1e-9,
            Regime::Analytic,
        )?);
    }
    if enabled.contains("curvature") {
        let mut rng = seeded_rng(seed.wrapping_add(1));
        let mut sampler = gaussian_measure_sampler(&space, seed.wrapping_add(1));
        report.extend(curvature_probes(
            &space,
            200,
            1.0,
            &mut rng,
            &mut sampler,
            1e-9,
            Regime::Analytic,
        )?);
    }
    Ok(report)
}

/// Contraction of the stored flow against its own one-cell time shift; both
/// are (approximate) solutions, so the estimate applies, and a corrupted
/// point breaks the decay.
fn self_shift_contraction<S>(
    space: &S,
    traj: &DiscreteTrajectory<S::Point>,
    lambda: f64,
    tolerance: f64,
) -> Result<CheckRecord>
where
    S: MetricSpace,
{
    let n = traj.grid().n_steps();
    if n < 2 {
        return Ok(CheckRecord::skipped(
            "contraction",
            Regime::Discrete,
            "trajectory too short for a time shift",
        ));
    }
    let idx = sample_nodes(n - 1, 20);
    let times: Vec<f64> = idx.iter().map(|&k| traj.grid().node(k)).collect();
    let base: Vec<S::Point> = idx.iter().map(|&k| traj.points()[k].clone()).collect();
    let shifted: Vec<S::Point> = idx.iter().map(|&k| traj.points()[k + 1].clone()).collect();
    let c1 = SampledCurve::new(times.clone(), base)?;
    let c2 = SampledCurve::new(times, shifted)?;
    contraction_check(space, &c1, &c2, lambda, tolerance, Regime::Discrete)
}
