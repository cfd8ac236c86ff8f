//! Validation of the independent PDE reference solvers against closed forms.
//! These run before anything in the acceptance suite relies on them.

mod common;

use common::pde::{drift_diffusion, quadratic_diffusion};
use common::{density_mean, density_variance, gaussian_cells};
use gradflow::wasserstein1d::{barenblatt_density, barenblatt_support_radius};

const X_MIN: f64 = -6.0;
const X_MAX: f64 = 6.0;
const K: usize = 1200;

#[test]
fn drift_diffusion_oracle_matches_linear_moment_odes() {
    // mean' = -a mean, var' = 2 - 2 a var (a = 1)
    let rho0 = gaussian_cells(2.0, 0.5, X_MIN, X_MAX, K);
    let dx = (X_MAX - X_MIN) / K as f64;
    let mut rho = rho0;
    let mut t = 0.0;
    for target in [0.5, 1.0, 2.0] {
        rho = drift_diffusion(&rho, X_MIN, X_MAX, 1.0, target - t);
        t = target;
        let mean = density_mean(X_MIN, dx, &rho);
        let var = density_variance(X_MIN, dx, &rho);
        let mean_cf = 2.0 * (-t).exp();
        let var_cf = 1.0 - 0.75 * (-2.0 * t).exp();
        assert!(
            (mean - mean_cf).abs() < 5e-3,
            "t={t}: oracle mean {mean} vs closed form {mean_cf}"
        );
        assert!(
            (var - var_cf).abs() < 5e-3,
            "t={t}: oracle var {var} vs closed form {var_cf}"
        );
        let mass: f64 = rho.iter().sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 1e-10, "mass drift {mass}");
    }
}

#[test]
fn heat_oracle_spreads_variance_at_rate_two() {
    let rho0 = gaussian_cells(0.0, 1.0, X_MIN, X_MAX, K);
    let dx = (X_MAX - X_MIN) / K as f64;
    let mut rho = rho0;
    let mut times = vec![0.0];
    let mut vars = vec![density_variance(X_MIN, dx, &rho)];
    for k in 1..=10 {
        rho = drift_diffusion(&rho, X_MIN, X_MAX, 0.0, 0.05);
        times.push(0.05 * k as f64);
        vars.push(density_variance(X_MIN, dx, &rho));
    }
    let slope = gradflow::verify::least_squares_slope(&times, &vars).unwrap();
    assert!(
        (slope - 2.0).abs() < 0.02,
        "heat oracle variance slope {slope}"
    );
}

#[test]
fn quantile_scheme_density_tracks_the_reference_solver_in_l1() {
    // bind the whole quantile pipeline (scheme + density deposit) to the
    // independent solver in a strong norm, not just in moments
    use gradflow::metric::TimeGrid;
    use gradflow::mms::{mms_run, QuantileNewtonProx, RelaxedSchemeParams};
    use gradflow::wasserstein1d::{
        quantiles_to_density, EnergyFunctional, EnergySpec, QuantileMeasure, QuantileSpace,
    };
    let m = 400;
    let tau = 1e-2;
    let t_final = 1.0;
    let space = QuantileSpace::new(m);
    let f = EnergyFunctional::new(EnergySpec::fokker_planck(1.0)).unwrap();
    let u0 = QuantileMeasure::gaussian(2.0, 0.5, m).unwrap();
    let grid = TimeGrid::new(tau, (t_final / tau).round() as usize).unwrap();
    let (traj, _) = mms_run(
        &space,
        &f,
        &u0,
        &grid,
        &RelaxedSchemeParams::default(),
        &QuantileNewtonProx,
    )
    .unwrap();
    let k = 300;
    let scheme_density =
        quantiles_to_density(traj.points().last().unwrap(), k, X_MIN, X_MAX).unwrap();

    let rho0 = gaussian_cells(2.0, 0.5, X_MIN, X_MAX, k);
    let rho_ref = drift_diffusion(&rho0, X_MIN, X_MAX, 1.0, t_final);
    let dx = (X_MAX - X_MIN) / k as f64;
    let l1: f64 = scheme_density
        .values()
        .iter()
        .zip(&rho_ref)
        .map(|(a, b)| (a - b).abs() * dx)
        .sum();
    assert!(l1 <= 0.05, "scheme density vs reference solver: L1 = {l1}");
}

#[test]
fn finite_volume_oracle_confirms_self_similar_profile_constants() {
    // start from the closed-form profile at t = 1, advance to t = 2, and
    // compare with the rescaled profile; this pins the mass-normalization
    // constant C = 3^(1/3)/4
    let k = 800;
    let (a, b) = (-4.0, 4.0);
    let dx = (b - a) / k as f64;
    let sub = 8;
    let cell_avg = |t: f64, j: usize| -> f64 {
        (0..sub)
            .map(|s| {
                let x = a + (j as f64 + (s as f64 + 0.5) / sub as f64) * dx;
                barenblatt_density(t, x).unwrap()
            })
            .sum::<f64>()
            / sub as f64
    };
    let rho1: Vec<f64> = (0..k).map(|j| cell_avg(1.0, j)).collect();
    let rho2_exact: Vec<f64> = (0..k).map(|j| cell_avg(2.0, j)).collect();
    let mass0: f64 = rho1.iter().sum::<f64>() * dx;
    assert!((mass0 - 1.0).abs() < 1e-4, "initial quadrature mass {mass0}");
    let rho2 = quadratic_diffusion(&rho1, a, b, 1.0);
    let l1: f64 = rho2
        .iter()
        .zip(&rho2_exact)
        .map(|(x, y)| (x - y).abs() * dx)
        .sum();
    assert!(l1 < 0.01, "finite-volume vs rescaled profile: L1 = {l1}");
    // support should have grown by the similarity factor 2^(1/3)
    let r2 = barenblatt_support_radius(2.0);
    assert!((r2 / barenblatt_support_radius(1.0) - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    let mass: f64 = rho2.iter().sum::<f64>() * dx;
    assert!((mass - mass0).abs() < 1e-12, "mass not conserved: {mass} vs {mass0}");
}
