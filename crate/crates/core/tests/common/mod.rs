//! Shared test support: independent PDE reference solvers and small helpers.
//!
//! Everything here is deliberately decoupled from the variational solver it
//! is used to judge: plain conservative finite differences / finite volumes
//! in the density variable, explicit in time.

#![allow(dead_code)]

pub mod pde;

/// Mean of a cell-averaged density.
pub fn density_mean(x_min: f64, dx: f64, rho: &[f64]) -> f64 {
    rho.iter()
        .enumerate()
        .map(|(j, r)| (x_min + (j as f64 + 0.5) * dx) * r * dx)
        .sum()
}

/// Variance of a cell-averaged density.
pub fn density_variance(x_min: f64, dx: f64, rho: &[f64]) -> f64 {
    let mean = density_mean(x_min, dx, rho);
    rho.iter()
        .enumerate()
        .map(|(j, r)| {
            let x = x_min + (j as f64 + 0.5) * dx;
            (x - mean) * (x - mean) * r * dx
        })
        .sum()
}

/// Gaussian cell averages on a uniform grid, normalized to unit mass.
pub fn gaussian_cells(mean: f64, sd: f64, x_min: f64, x_max: f64, k: usize) -> Vec<f64> {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::new(mean, sd).unwrap();
    let dx = (x_max - x_min) / k as f64;
    let mut rho: Vec<f64> = (0..k)
        .map(|j| {
            let left = x_min + j as f64 * dx;
            (normal.cdf(left + dx) - normal.cdf(left)) / dx
        })
        .collect();
    let mass: f64 = rho.iter().sum::<f64>() * dx;
    rho.iter_mut().for_each(|r| *r /= mass);
    rho
}
