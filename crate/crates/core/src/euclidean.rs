//! Euclidean carrier: `R^d` with the Euclidean distance, a catalog of
//! lambda-convex test functionals with closed-form flows, and an independent
//! Runge-Kutta reference integrator.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{Functional, MetricSpace};

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanPoint(Vec<f64>);

impl EuclideanPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `R^d` with `d(u, v) = |u - v|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EuclideanSpace {
    dim: usize,
}

impl EuclideanSpace {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Validated point constructor: fixed dimension, finite entries.
    pub fn point(&self, coords: Vec<f64>) -> Result<EuclideanPoint> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch(coords.len(), self.dim));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point coordinate".into()));
        }
        Ok(EuclideanPoint(coords))
    }
}

/// Checked Euclidean distance between two points.
pub fn dist(a: &EuclideanPoint, b: &EuclideanPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(norm2_diff(a.coords(), b.coords()))
}

fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl MetricSpace for EuclideanSpace {
    type Point = EuclideanPoint;

    fn dist(&self, a: &EuclideanPoint, b: &EuclideanPoint) -> f64 {
        debug_assert_eq!(a.dim(), b.dim());
        norm2_diff(a.coords(), b.coords())
    }

    fn geodesic(&self, a: &EuclideanPoint, b: &EuclideanPoint, s: f64) -> Option<EuclideanPoint> {
        debug_assert_eq!(a.dim(), b.dim());
        Some(EuclideanPoint(
            a.coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| (1.0 - s) * x + s * y)
                .collect(),
        ))
    }
}

/// Smooth functional on `R^d` with first- and second-order oracles.
pub trait EuclideanFunctional {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Dense row-major `d x d` Hessian.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
    /// Convexity modulus (infimum of the Hessian spectrum).
    fn lambda(&self) -> f64;
}

impl<T: EuclideanFunctional> Functional<EuclideanSpace> for T {
    fn value(&self, p: &EuclideanPoint) -> f64 {
        EuclideanFunctional::value(self, p.coords())
    }

    fn lambda(&self) -> f64 {
        EuclideanFunctional::lambda(self)
    }

    fn slope_exact(&self, p: &EuclideanPoint) -> Option<f64> {
        let g = self.gradient(p.coords());
        Some(g.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

// ---------------------------------------------------------------------------
// small dense symmetric linear algebra (d <= 16 at desk scale)
// ---------------------------------------------------------------------------

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major).
/// Returns eigenvalues (ascending) and the matching eigenvectors as columns
/// of a row-major `d x d` matrix.
pub fn jacobi_eigh(a: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != d * d {
        return Err(Error::DimensionMismatch(a.len(), d * d));
    }
    let mut m = a.to_vec();
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        q[i * d + i] = 1.0;
    }
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-14 * norm;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for r in p + 1..d {
                off += m[p * d + r] * m[p * d + r];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..d {
            for r in p + 1..d {
                let apq = m[p * d + r];
                if apq.abs() <= tol / (d as f64) {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[r * d + r];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + r];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + r] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[r * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[r * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let qkp = q[k * d + p];
                    let qkq = q[k * d + r];
                    q[k * d + p] = c * qkp - s * qkq;
                    q[k * d + r] = s * qkp + c * qkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[i * d + i].partial_cmp(&m[j * d + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i * d + i]).collect();
    let mut vectors = vec![0.0; d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..d {
            vectors[k * d + new_col] = q[k * d + old_col];
        }
    }
    Ok((values, vectors))
}

/// In-place Cholesky solve of the SPD system `a x = b` (row-major `a`).
pub fn cholesky_solve(a: &[f64], b: &[f64], d: usize) -> Result<Vec<f64>> {
    if a.len() != d * d || b.len() != d {
        return Err(Error::DimensionMismatch(a.len(), d * d));
    }
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Linalg(format!(
                        "matrix not positive definite (pivot {sum:.3e} at {i})"
                    )));
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * d + k] * y[k];
        }
        y[i] = sum / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = y[i];
        for k in i + 1..d {
            sum -= l[k * d + i] * x[k];
        }
        x[i] = sum / l[i * d + i];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// quadratic functionals
// ---------------------------------------------------------------------------

/// `phi(x) = 1/2 <Ax, x> + <b, x> + c` with symmetric `A`; the convexity
/// modulus equals the smallest eigenvalue of `A`.
#[derive(Clone, Debug)]
pub struct QuadraticFunctional {
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
    dim: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
    lambda: f64,
}

impl QuadraticFunctional {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let dim = b.len();
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch(a.len(), dim * dim));
        }
        let scale: f64 = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        for i in 0..dim {
            for j in 0..dim {
                if (a[i * dim + j] - a[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(
                        "quadratic functional needs a symmetric matrix".into(),
                    ));
                }
            }
        }
        let (eigenvalues, eigenvectors) = jacobi_eigh(&a, dim)?;
        let lambda = eigenvalues[0];
        Ok(Self {
            a,
            b,
            c,
            dim,
            eigenvalues,
            eigenvectors,
            lambda,
        })
    }

    /// Scalar convenience: `phi(x) = a x^2 / 2 + b x + c`.
    pub fn scalar(a: f64, b: f64, c: f64) -> Self {
        Self::new(vec![a], vec![b], c).expect("1x1 matrix is symmetric")
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut a = vec![0.0; d * d];
        for (i, &v) in diag.iter().enumerate() {
            a[i * d + i] = v;
        }
        Self::new(a, vec![0.0; d], 0.0).expect("diagonal matrix is symmetric")
    }

    fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for j in 0..d {
            for k in 0..d {
                y[j] += self.eigenvectors[k * d + j] * x[k];
            }
        }
        y
    }

    fn from_eigenbasis(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut x = vec![0.0; d];
        for k in 0..d {
            for j in 0..d {
                x[k] += self.eigenvectors[k * d + j] * y[j];
            }
        }
        x
    }

    /// Exact solution at time `t` of `u' = -(Au + b)` from `u0`.
    ///
    /// Solved per eigencomponent as
    /// `y_i(t) = exp(-mu_i t) y_i(0) - E_{-mu_i}(t) b_i`, which handles zero
    /// eigenvalues (pure drift) through the integrated exponential weight.
    pub fn exact_flow(&self, u0: &EuclideanPoint, t: f64) -> Result<EuclideanPoint> {
        if u0.dim() != self.dim {
            return Err(Error::DimensionMismatch(u0.dim(), self.dim));
        }
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("flow time must be >= 0, got {t}")));
        }
        let y0 = self.to_eigenbasis(u0.coords());
        let bt = self.to_eigenbasis(&self.b);
        let mut yt = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mu = self.eigenvalues[i];
            let decay = (-mu * t).exp();
            let drift = crate::metric::e_lambda(-mu, t)?;
            yt[i] = decay * y0[i] - drift * bt[i];
        }
        Ok(EuclideanPoint(self.from_eigenbasis(&yt)))
    }

    /// Resolvent `J_tau(v) = (I + tau A)^{-1} (v - tau b)`, the unique
    /// minimizer of the one-step objective when `1 + tau lambda > 0`.
    pub fn resolvent(&self, tau: f64, v: &EuclideanPoint) -> Result<EuclideanPoint> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch(v.dim(), self.dim));
        }
        if !(1.0 + tau * self.lambda > 0.0) {
            return Err(Error::Infeasible {
                tau,
                eta: 0.0,
                lambda: self.lambda,
                requirement: "1/tau > -lambda (resolvent needs I + tau A invertible)".into(),
            });
        }
        let rhs: Vec<f64> = v
            .coords()
            .iter()
            .zip(&self.b)
            .map(|(vi, bi)| vi - tau * bi)
            .collect();
        let y = self.to_eigenbasis(&rhs);
        let yt: Vec<f64> = y
            .iter()
            .zip(&self.eigenvalues)
            .map(|(yi, mu)| yi / (1.0 + tau * mu))
            .collect();
        Ok(EuclideanPoint(self.from_eigenbasis(&yt)))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unique minimizer `-A^{-1} b` when `A` is positive definite.
    pub fn minimizer(&self) -> Option<EuclideanPoint> {
        if self.lambda <= 0.0 {
            return None;
        }
        let bt = self.to_eigenbasis(&self.b);
        let y: Vec<f64> = bt
            .iter()
            .zip(&self.eigenvalues)
            .map(|(bi, mu)| -bi / mu)
            .collect();
        Some(EuclideanPoint(self.from_eigenbasis(&y)))
    }
}

impl EuclideanFunctional for QuadraticFunctional {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut quad = 0.0;
        for i in 0..d {
            let mut axi = 0.0;
            for j in 0..d {
                axi += self.a[i * d + j] * x[j];
            }
            quad += x[i] * axi;
        }
        let lin: f64 = self.b.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
        0.5 * quad + lin + self.c
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut g = self.b.clone();
        for i in 0..d {
            for j in 0..d {
                g[i] += self.a[i * d + j] * x[j];
            }
        }
        g
    }

    fn hessian(&self, _x: &[f64]) -> Vec<f64> {
        self.a.clone()
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }
}

// ---------------------------------------------------------------------------
// one-dimensional catalog entries
// ---------------------------------------------------------------------------

/// Double well `phi(x) = (x^2 - 1)^2 / 4` on the line. The Hessian
/// `3x^2 - 1` is bounded below by `-1`, so the modulus is `-1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleWell;

impl EuclideanFunctional for DoubleWell {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = x[0] * x[0] - 1.0;
        0.25 * s * s
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] * (x[0] * x[0] - 1.0)]
    }

    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        vec![3.0 * x[0] * x[0] - 1.0]
    }

    fn lambda(&self) -> f64 {
        -1.0
    }
}

/// Smoothed absolute value `phi(x) = sqrt(x^2 + eps^2) - eps` on the line;
/// convex (modulus 0) and converging uniformly to `|x|` as `eps -> 0`.
#[derive(Clone, Copy, Debug)]
pub struct SmoothAbs {
    pub eps: f64,
}

impl SmoothAbs {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput(format!(
                "smoothing width must be positive, got {eps}"
            )));
        }
        Ok(Self { eps })
    }
}

impl EuclideanFunctional for SmoothAbs {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        (x[0] * x[0] + self.eps * self.eps).sqrt() - self.eps
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] / (x[0] * x[0] + self.eps * self.eps).sqrt()]
    }

    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let r2 = x[0] * x[0] + self.eps * self.eps;
        vec![self.eps * self.eps / (r2 * r2.sqrt())]
    }

    fn lambda(&self) -> f64 {
        0.0
    }
}

/// Nonsmooth absolute value `phi(x) = |x|` on the line. Exposes only the
/// value and the exact metric slope; its proximal map is the soft-threshold
/// (see the solver module).
#[derive(Clone, Copy, Debug, Default)]
pub struct AbsValue;

impl Functional<EuclideanSpace> for AbsValue {
    fn value(&self, p: &EuclideanPoint) -> f64 {
        p.coords()[0].abs()
    }

    fn lambda(&self) -> f64 {
        0.0
    }

    fn slope_exact(&self, p: &EuclideanPoint) -> Option<f64> {
        // descending slope of |x|: 1 away from the minimizer, 0 at it
        Some(if p.coords()[0] == 0.0 { 0.0 } else { 1.0 })
    }
}

/// Named catalog used by the command-line interface; covers the
/// `lambda > 0`, `lambda = 0` and `lambda < 0` branches of every estimate.
#[derive(Clone, Debug)]
pub enum CatalogFunctional {
    Quadratic(QuadraticFunctional),
    DoubleWell(DoubleWell),
    SmoothAbs(SmoothAbs),
}

impl CatalogFunctional {
    /// Construct a catalog entry by name.
    ///
    /// * `quadratic` - `1/2 <Ax,x> + <b,x>`, `A` from `diag` (default `[1]`)
    /// * `quadratic_flat` - pure drift `<b, x>` (modulus 0)
    /// * `double_well` - `(x^2-1)^2/4` (modulus -1)
    /// * `smooth_abs` - `sqrt(x^2 + eps^2) - eps` (modulus 0)
    pub fn by_name(name: &str, diag: Option<&[f64]>, drift: Option<&[f64]>, eps: Option<f64>) -> Result<Self> {
        match name {
            "quadratic" => {
                let diag = diag.map(|d| d.to_vec()).unwrap_or_else(|| vec![1.0]);
                let mut q = QuadraticFunctional::diagonal(&diag);
                if let Some(b) = drift {
                    if b.len() != diag.len() {
                        return Err(Error::DimensionMismatch(b.len(), diag.len()));
                    }
                    q = QuadraticFunctional::new(q.a.clone(), b.to_vec(), 0.0)?;
                }
                Ok(Self::Quadratic(q))
            }
            "quadratic_flat" => {
                let b = drift.map(|d| d.to_vec()).unwrap_or_else(|| vec![1.0]);
                let d = b.len();
                Ok(Self::Quadratic(QuadraticFunctional::new(
                    vec![0.0; d * d],
                    b,
                    0.0,
                )?))
            }
            "double_well" => Ok(Self::DoubleWell(DoubleWell)),
            "smooth_abs" => Ok(Self::SmoothAbs(SmoothAbs::new(eps.unwrap_or(0.25))?)),
            other => Err(Error::InvalidInput(format!(
                "unknown catalog functional '{other}'"
            ))),
        }
    }

    pub fn names() -> &'static [(&'static str, &'static str)] {
        &[
            (
                "quadratic",
                "1/2 <Ax,x> + <b,x> with A = diag(...); modulus = min diagonal entry",
            ),
            ("quadratic_flat", "pure drift <b,x>; modulus 0"),
            ("double_well", "(x^2-1)^2/4 on the line; modulus -1"),
            (
                "smooth_abs",
                "sqrt(x^2+eps^2)-eps on the line; modulus 0, limit |x|",
            ),
        ]
    }
}

impl EuclideanFunctional for CatalogFunctional {
    fn dim(&self) -> usize {
        match self {
            Self::Quadratic(f) => f.dim(),
            Self::DoubleWell(f) => f.dim(),
            Self::SmoothAbs(f) => f.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Quadratic(f) => EuclideanFunctional::value(f, x),
            Self::DoubleWell(f) => EuclideanFunctional::value(f, x),
            Self::SmoothAbs(f) => EuclideanFunctional::value(f, x),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Quadratic(f) => f.gradient(x),
            Self::DoubleWell(f) => f.gradient(x),
            Self::SmoothAbs(f) => f.gradient(x),
        }
    }

    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Quadratic(f) => f.hessian(x),
            Self::DoubleWell(f) => f.hessian(x),
            Self::SmoothAbs(f) => f.hessian(x),
        }
    }

    fn lambda(&self) -> f64 {
        match self {
            Self::Quadratic(f) => EuclideanFunctional::lambda(f),
            Self::DoubleWell(f) => EuclideanFunctional::lambda(f),
            Self::SmoothAbs(f) => EuclideanFunctional::lambda(f),
        }
    }
}

// ---------------------------------------------------------------------------
// reference integrator
// ---------------------------------------------------------------------------

/// Classical 4th-order one-step integration of `u' = -grad phi(u)` with step
/// `h` up to time `t` (global error `O(h^4)` on smooth flows). Reference
/// oracle, deliberately independent of the variational solver.
pub fn ode_oracle<F: EuclideanFunctional>(
    f: &F,
    u0: &EuclideanPoint,
    t: f64,
    h: f64,
) -> Result<EuclideanPoint> {
    if u0.dim() != f.dim() {
        return Err(Error::DimensionMismatch(u0.dim(), f.dim()));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    if !(h > 0.0) || h > t {
        return Err(Error::InvalidInput(format!(
            "step h = {h} must satisfy 0 < h <= t = {t}"
        )));
    }
    let rhs = |x: &[f64]| -> Result<Vec<f64>> {
        let g = f.gradient(x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient value in ode oracle".into()));
        }
        Ok(g.iter().map(|v| -v).collect())
    };
    let mut u = u0.coords().to_vec();
    let mut time = 0.0;
    while time < t - 1e-15 * t.max(1.0) {
        let step = h.min(t - time);
        let k1 = rhs(&u)?;
        let u2: Vec<f64> = u.iter().zip(&k1).map(|(x, k)| x + 0.5 * step * k).collect();
        let k2 = rhs(&u2)?;
        let u3: Vec<f64> = u.iter().zip(&k2).map(|(x, k)| x + 0.5 * step * k).collect();
        let k3 = rhs(&u3)?;
        let u4: Vec<f64> = u.iter().zip(&k3).map(|(x, k)| x + step * k).collect();
        let k4 = rhs(&u4)?;
        for i in 0..u.len() {
            u[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        time += step;
    }
    Ok(EuclideanPoint(u))
}

// ---------------------------------------------------------------------------
// deterministic probe directions
// ---------------------------------------------------------------------------

/// Deterministic neighborhood sampler: signed coordinate directions plus
/// `extra_random` seeded random unit directions, scaled to each radius.
pub fn probe_sampler(
    space: &EuclideanSpace,
    extra_random: usize,
    seed: u64,
) -> impl FnMut(&EuclideanPoint, f64) -> Vec<EuclideanPoint> {
    let d = space.dim();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra_random {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            dirs.push(v);
            dirs.push(neg);
        }
    }
    move |p: &EuclideanPoint, r: f64| {
        dirs.iter()
            .map(|dir| {
                EuclideanPoint(
                    p.coords()
                        .iter()
                        .zip(dir)
                        .map(|(x, u)| x + r * u)
                        .collect(),
                )
            })
            .collect()
    }
}

/// Seeded sampler of Gaussian points, used by the randomized probes.
pub fn gaussian_point_sampler(
    space: &EuclideanSpace,
    spread: f64,
    seed: u64,
) -> impl FnMut() -> EuclideanPoint {
    let d = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move || {
        // Box-Muller from uniform draws keeps the dependency surface small
        let coords: Vec<f64> = (0..d)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                spread * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        EuclideanPoint(coords)
    }
}
