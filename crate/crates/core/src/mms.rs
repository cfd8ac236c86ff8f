//! Minimizing-movement (implicit Euler / JKO) scheme over any carrier, in its
//! relaxed form: an inner proximal solver produces each step, a certificate
//! records the first-order residual and the monotone-energy condition, and a
//! run assembles the discrete trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclidean::{cholesky_solve, AbsValue, EuclideanFunctional, EuclideanPoint, EuclideanSpace};
use crate::metric::{DiscreteTrajectory, Functional, InterpMode, MetricSpace, TimeGrid};
use crate::wasserstein1d::{EnergyFunctional, QuantileMeasure, QuantileSpace};

/// One-step objective `Phi(tau, anchor; U) = d(U, anchor)^2 / (2 tau) + phi(U)`.
pub struct ProximalObjective<'a, S: MetricSpace, F: Functional<S>> {
    pub space: &'a S,
    pub f: &'a F,
    pub tau: f64,
    pub anchor: S::Point,
}

impl<'a, S: MetricSpace, F: Functional<S>> ProximalObjective<'a, S, F> {
    pub fn new(space: &'a S, f: &'a F, tau: f64, anchor: S::Point) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "proximal step needs tau > 0, got {tau}"
            )));
        }
        Ok(Self {
            space,
            f,
            tau,
            anchor,
        })
    }

    pub fn value(&self, u: &S::Point) -> f64 {
        let d = self.space.dist(u, &self.anchor);
        d * d / (2.0 * self.tau) + self.f.value(u)
    }
}

/// Parameters of the relaxed scheme. `eta = 0` requests exact minimization;
/// `eta > 0` accepts inexact steps whose first-order residual is at most
/// `(eta/2) d(U, anchor)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RelaxedSchemeParams {
    pub eta: f64,
    pub inner_max_iter: usize,
    pub inner_tol_abs: f64,
}

impl Default for RelaxedSchemeParams {
    fn default() -> Self {
        Self {
            eta: 0.0,
            inner_max_iter: 200,
            inner_tol_abs: 1e-10,
        }
    }
}

impl RelaxedSchemeParams {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "relaxation eta must be >= 0, got {}",
                self.eta
            )));
        }
        if self.inner_max_iter == 0 {
            return Err(Error::InvalidInput("inner_max_iter must be >= 1".into()));
        }
        if !(self.inner_tol_abs >= 0.0) {
            return Err(Error::InvalidInput("inner_tol_abs must be >= 0".into()));
        }
        Ok(())
    }

    /// Scheme feasibility: `1 + tau lambda > 0` for the exact scheme,
    /// `eta - lambda < 1/(2 tau)` for the relaxed one.
    pub fn check_feasible(&self, tau: f64, lambda: f64) -> Result<()> {
        if self.eta == 0.0 {
            if !(1.0 + tau * lambda > 0.0) {
                return Err(Error::Infeasible {
                    tau,
                    eta: self.eta,
                    lambda,
                    requirement: "1 + tau*lambda > 0".into(),
                });
            }
        } else if !(self.eta - lambda < 1.0 / (2.0 * tau)) {
            return Err(Error::Infeasible {
                tau,
                eta: self.eta,
                lambda,
                requirement: "eta - lambda < 1/(2*tau)".into(),
            });
        }
        Ok(())
    }

    /// Inner stopping tolerance at the current iterate.
    pub fn inner_tolerance(&self, dist_to_anchor: f64) -> f64 {
        self.inner_tol_abs.max(0.5 * self.eta * dist_to_anchor)
    }
}

/// Per-step acceptance record.
///
/// For convex one-step objectives the residual criterion is equivalent to the
/// relaxed acceptance condition quantified over all competitors; for
/// nonconvex generators (negative modulus) it is necessary but not
/// sufficient, and reports should say so.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepCertificate {
    /// First-order residual of the one-step objective in the metric gradient
    /// norm of the carrier.
    pub residual: f64,
    /// Monotone-energy condition `Phi(tau, anchor; U) <= phi(anchor)`.
    pub energy_decrease_ok: bool,
    pub eta_used: f64,
    pub inner_iters: usize,
}

/// Inner proximal solver: minimizes the one-step objective from `start` up to
/// the residual tolerance dictated by the scheme parameters.
pub trait InnerSolver<S: MetricSpace, F: Functional<S>> {
    fn solve(
        &self,
        obj: &ProximalObjective<'_, S, F>,
        start: &S::Point,
        params: &RelaxedSchemeParams,
    ) -> Result<(S::Point, StepCertificate)>;
}

// ---------------------------------------------------------------------------
// single step and full run
// ---------------------------------------------------------------------------

/// One (relaxed) minimizing-movement step from `anchor`.
///
/// The accepted point must satisfy the inner first-order criterion and the
/// monotone-energy condition; a violation of the latter is a loud failure,
/// never silently adapted.
pub fn mms_step<S, F, I>(
    space: &S,
    f: &F,
    tau: f64,
    anchor: &S::Point,
    params: &RelaxedSchemeParams,
    inner: &I,
) -> Result<(S::Point, StepCertificate)>
where
    S: MetricSpace,
    F: Functional<S>,
    I: InnerSolver<S, F>,
{
    params.validate()?;
    params.check_feasible(tau, f.lambda())?;
    let phi_anchor = f.value(anchor);
    if !phi_anchor.is_finite() {
        return Err(Error::NotInDomain(
            "step anchor has infinite energy".into(),
        ));
    }
    let obj = ProximalObjective::new(space, f, tau, anchor.clone())?;
    let (point, mut cert) = inner.solve(&obj, anchor, params)?;
    let obj_value = obj.value(&point);
    cert.energy_decrease_ok = obj_value <= phi_anchor + 1e-10 * (1.0 + phi_anchor.abs());
    cert.eta_used = params.eta;
    if !cert.energy_decrease_ok {
        return Err(Error::EnergyIncrease {
            objective: obj_value,
            anchor_value: phi_anchor,
        });
    }
    Ok((point, cert))
}

/// Run failure carrying the trajectory computed so far.
#[derive(Debug)]
pub struct RunError<P> {
    pub step: usize,
    pub source: Error,
    pub partial: DiscreteTrajectory<P>,
    pub certificates: Vec<StepCertificate>,
}

impl<P: std::fmt::Debug> std::fmt::Display for RunError<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scheme aborted at step {}: {}", self.step, self.source)
    }
}

impl<P: std::fmt::Debug> std::error::Error for RunError<P> {}

/// Full minimizing-movement run: `n_steps` successive proximal steps from
/// `u0`, returned as a piecewise-constant trajectory plus one certificate per
/// step.
pub fn mms_run<S, F, I>(
    space: &S,
    f: &F,
    u0: &S::Point,
    grid: &TimeGrid,
    params: &RelaxedSchemeParams,
    inner: &I,
) -> std::result::Result<(DiscreteTrajectory<S::Point>, Vec<StepCertificate>), RunError<S::Point>>
where
    S: MetricSpace,
    F: Functional<S>,
    I: InnerSolver<S, F>,
{
    let mut points = vec![u0.clone()];
    let mut certificates = Vec::with_capacity(grid.n_steps());
    for n in 1..=grid.n_steps() {
        let anchor = points.last().unwrap().clone();
        match mms_step(space, f, grid.tau(), &anchor, params, inner) {
            Ok((next, cert)) => {
                points.push(next);
                certificates.push(cert);
            }
            Err(source) => {
                let partial_grid = TimeGrid::new(grid.tau(), points.len() - 1)
                    .expect("partial grid from a valid grid");
                let partial = DiscreteTrajectory::new(
                    partial_grid,
                    points,
                    InterpMode::PiecewiseConstant,
                )
                .expect("consistent partial trajectory");
                return Err(RunError {
                    step: n,
                    source,
                    partial,
                    certificates,
                });
            }
        }
    }
    let traj = DiscreteTrajectory::new(grid.clone(), points, InterpMode::PiecewiseConstant)
        .expect("points match grid by construction");
    Ok((traj, certificates))
}

// ---------------------------------------------------------------------------
// Euclidean inner solver: damped Newton
// ---------------------------------------------------------------------------

/// Damped Newton with Armijo backtracking for smooth Euclidean functionals.
/// On quadratics it reproduces the resolvent in a single iteration.
#[derive(Clone, Copy, Debug, Default)]
pub struct NewtonProx;

impl<F> InnerSolver<EuclideanSpace, F> for NewtonProx
where
    F: EuclideanFunctional + Functional<EuclideanSpace>,
{
    fn solve(
        &self,
        obj: &ProximalObjective<'_, EuclideanSpace, F>,
        start: &EuclideanPoint,
        params: &RelaxedSchemeParams,
    ) -> Result<(EuclideanPoint, StepCertificate)> {
        let d = obj.space.dim();
        let tau = obj.tau;
        let anchor = obj.anchor.coords();
        let mut x = start.coords().to_vec();
        let grad = |x: &[f64]| -> Vec<f64> {
            let mut g = obj.f.gradient(x);
            for i in 0..d {
                g[i] += (x[i] - anchor[i]) / tau;
            }
            g
        };
        let value = |x: &[f64]| -> f64 {
            let dd: f64 = x
                .iter()
                .zip(anchor)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dd / (2.0 * tau) + EuclideanFunctional::value(obj.f, x)
        };
        let mut residual = f64::INFINITY;
        for iter in 0..params.inner_max_iter {
            let g = grad(&x);
            residual = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dist_anchor: f64 = x
                .iter()
                .zip(anchor)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if residual <= params.inner_tolerance(dist_anchor) {
                return Ok((
                    EuclideanPoint::new(x),
                    StepCertificate {
                        residual,
                        energy_decrease_ok: true,
                        eta_used: params.eta,
                        inner_iters: iter,
                    },
                ));
            }
            let mut h = obj.f.hessian(&x);
            for i in 0..d {
                h[i * d + i] += 1.0 / tau;
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let p = cholesky_solve(&h, &neg_g, d)?;
            // Armijo backtracking on the objective; the additive term keeps
            // the test meaningful once the true decrease sinks below the
            // rounding noise of the objective evaluation
            let f0 = value(&x);
            let noise = 1e-14 * (1.0 + f0.abs());
            let slope: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
                if value(&trial) <= f0 + 1e-4 * t * slope + noise {
                    x = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(Error::LineSearch { iter, residual });
            }
        }
        Err(Error::InnerSolve {
            iters: params.inner_max_iter,
            residual,
            tol: params.inner_tol_abs,
        })
    }
}

/// Closed-form proximal map of the absolute value on the line: the
/// soft-threshold `prox_{tau |.|}(v) = sign(v) max(|v| - tau, 0)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SoftThresholdProx;

impl InnerSolver<EuclideanSpace, AbsValue> for SoftThresholdProx {
    fn solve(
        &self,
        obj: &ProximalObjective<'_, EuclideanSpace, AbsValue>,
        _start: &EuclideanPoint,
        params: &RelaxedSchemeParams,
    ) -> Result<(EuclideanPoint, StepCertificate)> {
        let v = obj.anchor.coords()[0];
        let u = v.signum() * (v.abs() - obj.tau).max(0.0);
        Ok((
            EuclideanPoint::scalar(u),
            StepCertificate {
                residual: 0.0,
                energy_decrease_ok: true,
                eta_used: params.eta,
                inner_iters: 1,
            },
        ))
    }
}

// ---------------------------------------------------------------------------
// isotonic projection (pool adjacent violators)
// ---------------------------------------------------------------------------

/// Equal-weight pool-adjacent-violators: the Euclidean projection of `y`
/// onto the cone of nondecreasing vectors.
pub fn pava(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for &v in y {
        means.push(v);
        counts.push(1);
        while means.len() > 1 {
            let k = means.len();
            if means[k - 2] <= means[k - 1] {
                break;
            }
            let absorbed = counts[k - 1];
            let merged = (means[k - 2] * counts[k - 2] as f64 + means[k - 1] * absorbed as f64)
                / (counts[k - 2] + absorbed) as f64;
            means.truncate(k - 1);
            counts.truncate(k - 1);
            *means.last_mut().unwrap() = merged;
            *counts.last_mut().unwrap() += absorbed;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (m, c) in means.iter().zip(&counts) {
        out.extend(std::iter::repeat(*m).take(*c));
    }
    out
}

// ---------------------------------------------------------------------------
// tridiagonal solve
// ---------------------------------------------------------------------------

/// Thomas algorithm for an SPD tridiagonal system (diag, off-diagonal).
fn thomas_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() != n - 1 || rhs.len() != n {
        return Err(Error::DimensionMismatch(off.len(), n - 1));
    }
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom <= 0.0 {
        return Err(Error::Linalg("tridiagonal pivot not positive".into()));
    }
    if n > 1 {
        c[0] = off[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom <= 0.0 {
            return Err(Error::Linalg("tridiagonal pivot not positive".into()));
        }
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// quantile inner solver: damped Newton with monotonicity safeguards
// ---------------------------------------------------------------------------

/// Damped Newton with backtracking line search on the quantile vector.
///
/// The discretized one-step objective is `(1/tau + lambda)`-convex in the
/// quantile embedding, so Newton with an Armijo safeguard converges fast.
/// Monotonicity is protected in two ways: barrier-type internal costs cap the
/// step so every increment stays positive, and barrier-free objectives project
/// the proposed point back onto the monotone cone (pool adjacent violators)
/// before acceptance.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuantileNewtonProx;

impl InnerSolver<QuantileSpace, EnergyFunctional> for QuantileNewtonProx {
    fn solve(
        &self,
        obj: &ProximalObjective<'_, QuantileSpace, EnergyFunctional>,
        start: &QuantileMeasure,
        params: &RelaxedSchemeParams,
    ) -> Result<(QuantileMeasure, StepCertificate)> {
        let m = obj.space.m();
        let mf = m as f64;
        let tau = obj.tau;
        let anchor = obj.anchor.values();
        let barrier = obj.f.spec().alpha1 > 0.0;
        let mut q = start.values().to_vec();
        if barrier {
            if q.windows(2).any(|w| w[1] - w[0] <= 0.0) {
                return Err(Error::NotInDomain(
                    "inner solver start needs strictly increasing quantiles for barrier-type costs"
                        .into(),
                ));
            }
        }

        let obj_value = |q: &[f64]| -> f64 {
            let dd: f64 = q
                .iter()
                .zip(anchor)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / mf;
            dd / (2.0 * tau)
                + Functional::value(obj.f, &QuantileMeasure::new(q.to_vec()).expect("monotone"))
        };
        // full objective gradient in q coordinates (with 1/M weights)
        let full_grad = |q: &[f64]| -> Option<Vec<f64>> {
            let mut g = obj.f.grad_q(q)?;
            for i in 0..m {
                g[i] += (q[i] - anchor[i]) / (tau * mf);
            }
            Some(g)
        };

        let metric_norm = |g: &[f64]| (g.iter().map(|x| x * x).sum::<f64>() * mf).sqrt();

        let mut residual = f64::INFINITY;
        for iter in 0..params.inner_max_iter {
            let g = full_grad(&q).ok_or_else(|| {
                Error::NotInDomain("iterate left the differentiable interior".into())
            })?;
            residual = metric_norm(&g);
            let w2_anchor = (q
                .iter()
                .zip(anchor)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / mf)
                .sqrt();
            if residual <= params.inner_tolerance(w2_anchor) {
                let point = QuantileMeasure::new(q)?;
                return Ok((
                    point,
                    StepCertificate {
                        residual,
                        energy_decrease_ok: true,
                        eta_used: params.eta,
                        inner_iters: iter,
                    },
                ));
            }

            // Newton direction
            let p = if let Some((mut diag, off)) = obj.f.hess_tridiag(&q) {
                for v in diag.iter_mut() {
                    *v += 1.0 / (tau * mf);
                }
                let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
                thomas_solve(&diag, &off, &neg_g)?
            } else if let Some(mut h) = obj.f.hess_dense(&q) {
                for i in 0..m {
                    h[i * m + i] += 1.0 / (tau * mf);
                }
                let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
                cholesky_solve(&h, &neg_g, m)?
            } else {
                return Err(Error::NotInDomain(
                    "Hessian unavailable outside the differentiable interior".into(),
                ));
            };

            let f0 = obj_value(&q);
            let noise = 1e-14 * (1.0 + f0.abs());
            let slope: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
            let mut t = 1.0f64;
            if barrier {
                // keep all increments strictly positive
                let mut cap = f64::INFINITY;
                for i in 0..m - 1 {
                    let d_delta = p[i + 1] - p[i];
                    if d_delta < 0.0 {
                        cap = cap.min(-(q[i + 1] - q[i]) / d_delta);
                    }
                }
                if cap.is_finite() {
                    t = t.min(0.95 * cap);
                }
                if !(t > 0.0) {
                    return Err(Error::LineSearch { iter, residual });
                }
            }
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial: Vec<f64> = q.iter().zip(&p).map(|(a, b)| a + t * b).collect();
                if !barrier {
                    trial = pava(&trial);
                }
                let monotone_ok = trial.windows(2).all(|w| {
                    if barrier {
                        w[1] - w[0] > 0.0
                    } else {
                        w[1] >= w[0]
                    }
                });
                if monotone_ok && obj_value(&trial) <= f0 + 1e-4 * t * slope.min(0.0) + noise {
                    q = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(Error::LineSearch { iter, residual });
            }
        }
        Err(Error::InnerSolve {
            iters: params.inner_max_iter,
            residual,
            tol: params.inner_tol_abs,
        })
    }
}

// ---------------------------------------------------------------------------
// trajectory export
// ---------------------------------------------------------------------------

/// Per-node diagnostics of a finished run.
pub struct RunDiagnostics {
    pub phi: Vec<f64>,
    pub dist_step: Vec<f64>,
    pub grad_residual: Vec<f64>,
}

/// Evaluate the energy, step distances, and certificate residuals along a
/// trajectory.
pub fn run_diagnostics<S, F>(
    space: &S,
    f: &F,
    traj: &DiscreteTrajectory<S::Point>,
    certificates: &[StepCertificate],
) -> RunDiagnostics
where
    S: MetricSpace,
    F: Functional<S>,
{
    let points = traj.points();
    let phi: Vec<f64> = points.iter().map(|p| f.value(p)).collect();
    let mut dist_step = vec![0.0];
    for w in points.windows(2) {
        dist_step.push(space.dist(&w[0], &w[1]));
    }
    let mut grad_residual = vec![0.0];
    for n in 1..points.len() {
        grad_residual.push(certificates.get(n - 1).map_or(f64::NAN, |c| c.residual));
    }
    RunDiagnostics {
        phi,
        dist_step,
        grad_residual,
    }
}

/// Write trajectory diagnostics as CSV with header
/// `n,t,phi,dist_step,grad_residual`.
pub fn write_trajectory_csv<W: std::io::Write>(
    out: &mut W,
    grid: &TimeGrid,
    diag: &RunDiagnostics,
) -> Result<()> {
    writeln!(out, "n,t,phi,dist_step,grad_residual")?;
    for n in 0..=grid.n_steps() {
        writeln!(
            out,
            "{},{},{},{},{}",
            n,
            grid.node(n),
            diag.phi[n],
            diag.dist_step[n],
            diag.grad_residual[n]
        )?;
    }
    Ok(())
}
