//! Explicit conservative reference solvers for the flows under test:
//! linear drift-diffusion (density form) and quadratic nonlinear diffusion.
//! No-flux boundaries; the time step obeys the explicit stability limits
//! with a safety factor, so accuracy is governed by the spatial grid.

/// Solve `d rho/dt = d/dx ( d rho/dx + a x rho )` on `[x_min, x_max]` with
/// no-flux boundaries, from the cell averages `rho0`, up to time `t_final`.
/// `a = 0` is the heat equation; `a > 0` is the linear drift-diffusion
/// equation with confinement `a x^2 / 2`.
pub fn drift_diffusion(
    rho0: &[f64],
    x_min: f64,
    x_max: f64,
    a: f64,
    t_final: f64,
) -> Vec<f64> {
    let k = rho0.len();
    let dx = (x_max - x_min) / k as f64;
    let x_edge = |j: usize| x_min + j as f64 * dx; // edge j sits left of cell j
    let drift_max = (a * x_min.abs().max(x_max.abs())).abs().max(1e-12);
    let dt_diff = 0.25 * dx * dx;
    let dt_adv = 0.25 * dx / drift_max;
    let dt = dt_diff.min(dt_adv);
    let steps = (t_final / dt).ceil() as usize;
    let dt = t_final / steps as f64;

    let mut rho = rho0.to_vec();
    let mut flux = vec![0.0; k + 1]; // flux[j] at edge j; 0 and k stay zero
    for _ in 0..steps {
        for j in 1..k {
            let grad = (rho[j] - rho[j - 1]) / dx;
            let drift = a * x_edge(j) * 0.5 * (rho[j] + rho[j - 1]);
            flux[j] = grad + drift;
        }
        for j in 0..k {
            rho[j] += dt * (flux[j + 1] - flux[j]) / dx;
        }
    }
    rho
}

/// Solve the quadratic nonlinear diffusion law `d rho/dt = d^2(rho^2)/dx^2`
/// on `[x_min, x_max]` with no-flux boundaries (finite volumes, explicit).
pub fn quadratic_diffusion(rho0: &[f64], x_min: f64, x_max: f64, t_final: f64) -> Vec<f64> {
    let k = rho0.len();
    let dx = (x_max - x_min) / k as f64;
    let rho_max = rho0.iter().cloned().fold(0.0, f64::max).max(1e-12);
    // effective diffusivity 2 rho; the maximum decreases in time
    let dt = 0.2 * dx * dx / (2.0 * rho_max);
    let steps = (t_final / dt).ceil() as usize;
    let dt = t_final / steps as f64;

    let mut rho = rho0.to_vec();
    let mut flux = vec![0.0; k + 1];
    for _ in 0..steps {
        for j in 1..k {
            flux[j] = (rho[j] * rho[j] - rho[j - 1] * rho[j - 1]) / dx;
        }
        for j in 0..k {
            rho[j] += dt * (flux[j + 1] - flux[j]) / dx;
        }
    }
    rho
}

#[cfg(test)]
mod sanity {
    // compiled only when this file is used as a module of a test target that
    // runs #[test] items; the oracle checks live in the integration suites
}
