//! Metric-space and functional contracts, time grids, interpolants, and the
//! basic numeric estimators (metric derivative, metric slope, the integrated
//! exponential weight) everything else builds on.

use crate::error::{Error, Result};

/// Abstract carrier: a set of points with a distance.
///
/// Implementations must satisfy the metric axioms (see
/// [`max_metric_axiom_violation`] for a randomized probe). Carriers that are
/// geodesic spaces expose constant-speed geodesics through [`MetricSpace::geodesic`];
/// carriers without a usable geodesic leave the default `None`.
pub trait MetricSpace {
    type Point: Clone;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Point at parameter `s` on a constant-speed geodesic from `a` to `b`,
    /// if the carrier exposes one.
    fn geodesic(&self, a: &Self::Point, b: &Self::Point, s: f64) -> Option<Self::Point> {
        let _ = (a, b, s);
        None
    }
}

/// A proper, lower-bounded functional on a carrier.
///
/// `value` returns `+inf` outside the domain. `lambda` is the claimed
/// convexity modulus along geodesics. `slope_exact`, when available, is the
/// metric slope (the descending slope, i.e. the local norm of the gradient for
/// smooth functionals).
pub trait Functional<S: MetricSpace> {
    fn value(&self, p: &S::Point) -> f64;

    fn lambda(&self) -> f64;

    fn slope_exact(&self, p: &S::Point) -> Option<f64> {
        let _ = p;
        None
    }

    fn in_domain(&self, p: &S::Point) -> bool {
        self.value(p).is_finite()
    }
}

/// Integrated exponential weight `E_lambda(t) = int_0^t exp(lambda r) dr`.
///
/// Equals `(exp(lambda t) - 1) / lambda` for `lambda != 0` and `t` for
/// `lambda = 0`. A 3-term Taylor branch is used for `|lambda t| < 1e-8` to
/// avoid catastrophic cancellation.
pub fn e_lambda(lambda: f64, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("e_lambda requires t >= 0, got {t}")));
    }
    let x = lambda * t;
    if x.abs() < 1e-8 {
        Ok(t * (1.0 + x / 2.0 + x * x / 6.0))
    } else {
        Ok((x.exp() - 1.0) / lambda)
    }
}

/// Uniform partition of `[0, n_steps * tau]` with nodes `t(n) = n * tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "time step must be positive, got {tau}"
            )));
        }
        Ok(Self { tau, n_steps })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn end(&self) -> f64 {
        self.node(self.n_steps)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|n| self.node(n))
    }
}

/// Interpolation rule for discrete trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpMode {
    /// Right-closed cells: the value on `(t(n-1), t(n)]` is `U^n`; `t = 0`
    /// maps to `U^0`.
    PiecewiseConstant,
    /// Affine blend inside each cell; requires the carrier to expose
    /// geodesics (convex combinations).
    PiecewiseLinear,
}

/// Output of the minimizing-movement scheme: grid nodes plus one point per node.
#[derive(Clone, Debug)]
pub struct DiscreteTrajectory<P> {
    grid: TimeGrid,
    points: Vec<P>,
    mode: InterpMode,
}

impl<P: Clone> DiscreteTrajectory<P> {
    pub fn new(grid: TimeGrid, points: Vec<P>, mode: InterpMode) -> Result<Self> {
        if points.len() != grid.n_steps() + 1 {
            return Err(Error::InvalidInput(format!(
                "trajectory needs n_steps+1 = {} points, got {}",
                grid.n_steps() + 1,
                points.len()
            )));
        }
        Ok(Self { grid, points, mode })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn mode(&self) -> InterpMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: InterpMode) -> Self {
        self.mode = mode;
        self
    }

    /// Index of the cell `(t(n-1), t(n)]` containing `t > 0`. Times within a
    /// few ulps of a node snap to it, so node evaluations are exact.
    fn cell_index(&self, t: f64) -> Result<(usize, bool)> {
        let end = self.grid.end();
        if !t.is_finite() || t < 0.0 || t > end * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside trajectory range [0, {end}]"
            )));
        }
        if t == 0.0 {
            return Ok((0, true));
        }
        let nearest = (t / self.grid.tau()).round();
        if (t - nearest * self.grid.tau()).abs() <= 4.0 * f64::EPSILON * t.abs().max(self.grid.tau())
        {
            let n = (nearest as usize).min(self.grid.n_steps());
            return Ok((n, true));
        }
        let n = (t / self.grid.tau()).ceil() as usize;
        Ok((
            n.clamp(1, self.grid.n_steps().max(1)).min(self.grid.n_steps()),
            false,
        ))
    }

    /// Trajectory value at time `t` according to the interpolation mode.
    pub fn value_at<S>(&self, space: &S, t: f64) -> Result<P>
    where
        S: MetricSpace<Point = P>,
    {
        let (n, at_node) = self.cell_index(t)?;
        match self.mode {
            InterpMode::PiecewiseConstant => Ok(self.points[n].clone()),
            InterpMode::PiecewiseLinear => {
                if at_node || n == 0 {
                    return Ok(self.points[n].clone());
                }
                let t_prev = self.grid.node(n - 1);
                let theta = ((t - t_prev) / self.grid.tau()).clamp(0.0, 1.0);
                space
                    .geodesic(&self.points[n - 1], &self.points[n], theta)
                    .ok_or(Error::UnsupportedInterpolation(
                        "piecewise-linear interpolation needs a carrier with convex combinations",
                    ))
            }
        }
    }

    /// Resample the trajectory at its grid nodes as a [`SampledCurve`].
    pub fn as_sampled_curve(&self) -> SampledCurve<P> {
        SampledCurve {
            times: self.grid.nodes().collect(),
            points: self.points.clone(),
        }
    }
}

/// A curve known at finitely many strictly increasing times.
#[derive(Clone, Debug)]
pub struct SampledCurve<P> {
    times: Vec<f64>,
    points: Vec<P>,
}

impl<P: Clone> SampledCurve<P> {
    pub fn new(times: Vec<f64>, points: Vec<P>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Empty("sampled curve"));
        }
        if times.len() != points.len() {
            return Err(Error::DimensionMismatch(times.len(), points.len()));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(format!(
                    "sample times must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("sample time".into()));
        }
        Ok(Self { times, points })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample at time `t` (within a small relative slack).
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| {
                Error::InvalidInput(format!("curve samples do not cover requested time {t}"))
            })
    }
}

/// Central difference quotients `dist(v(t-h), v(t+h)) / 2h` at interior
/// samples, one-sided quotients at the two ends.
pub fn estimate_metric_derivative<S: MetricSpace>(
    space: &S,
    curve: &SampledCurve<S::Point>,
) -> Result<Vec<f64>> {
    let n = curve.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "metric derivative estimation needs at least 2 samples".into(),
        ));
    }
    let t = curve.times();
    let p = curve.points();
    let mut out = Vec::with_capacity(n);
    out.push(space.dist(&p[0], &p[1]) / (t[1] - t[0]));
    for i in 1..n - 1 {
        out.push(space.dist(&p[i - 1], &p[i + 1]) / (t[i + 1] - t[i - 1]));
    }
    out.push(space.dist(&p[n - 2], &p[n - 1]) / (t[n - 1] - t[n - 2]));
    Ok(out)
}

/// A finite-radius slope estimate. The underlying definition is a limsup, so
/// any finite-radius value is an approximation "at radius r", not the exact
/// slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeEstimate {
    pub value: f64,
    pub radius: f64,
}

/// Max over probe points of `(phi(v) - phi(w))^+ / dist(v, w)`, probing at
/// each of the given radii; ties are resolved towards the smallest radius.
///
/// Points outside the domain get the `+inf` sentinel of the metric-slope
/// definition.
pub fn estimate_slope<S, F>(
    space: &S,
    f: &F,
    v: &S::Point,
    probe_radii: &[f64],
    sampler: &mut dyn FnMut(&S::Point, f64) -> Vec<S::Point>,
) -> Result<SlopeEstimate>
where
    S: MetricSpace,
    F: Functional<S>,
{
    if probe_radii.is_empty() {
        return Err(Error::Empty("probe radii"));
    }
    for w in probe_radii.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "probe radii must be strictly decreasing".into(),
            ));
        }
    }
    if probe_radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidInput("probe radii must be positive".into()));
    }
    let phi_v = f.value(v);
    if !phi_v.is_finite() {
        return Ok(SlopeEstimate {
            value: f64::INFINITY,
            radius: probe_radii[0],
        });
    }
    let mut best = SlopeEstimate {
        value: 0.0,
        radius: probe_radii[0],
    };
    let mut probed = false;
    for &r in probe_radii {
        for w in sampler(v, r) {
            let d = space.dist(v, &w);
            if d <= 0.0 {
                continue;
            }
            probed = true;
            let phi_w = f.value(&w);
            let quotient = if phi_w.is_finite() {
                ((phi_v - phi_w).max(0.0)) / d
            } else {
                0.0
            };
            if quotient >= best.value {
                best = SlopeEstimate {
                    value: quotient,
                    radius: r,
                };
            }
        }
    }
    if !probed {
        return Err(Error::InvalidInput(
            "sampler yielded no usable probe points".into(),
        ));
    }
    Ok(best)
}

/// Maximum relative violation of the metric axioms over the given triples:
/// `d(x,x) = 0`, symmetry, and the triangle inequality.
pub fn max_metric_axiom_violation<S: MetricSpace>(
    space: &S,
    triples: &[(S::Point, S::Point, S::Point)],
) -> f64 {
    let mut worst = 0.0f64;
    for (x, y, z) in triples {
        let dxy = space.dist(x, y);
        let dyx = space.dist(y, x);
        let dxz = space.dist(x, z);
        let dyz = space.dist(y, z);
        let scale = dxy.abs().max(dxz.abs()).max(dyz.abs()).max(1.0);
        worst = worst.max(space.dist(x, x) / scale);
        worst = worst.max((dxy - dyx).abs() / scale);
        worst = worst.max((dxz - dxy - dyz) / scale);
        if dxy < 0.0 {
            worst = worst.max(-dxy / scale);
        }
    }
    worst
}

/// Max violation of the quadratic lower bound
/// `phi(x) + kappa/2 * d(x, o)^2 >= phi_o` over the sample points.
pub fn max_lower_bound_violation<S, F>(
    space: &S,
    f: &F,
    kappa: f64,
    phi_floor: f64,
    origin: &S::Point,
    samples: &[S::Point],
) -> f64
where
    S: MetricSpace,
    F: Functional<S>,
{
    let mut worst = f64::NEG_INFINITY;
    for x in samples {
        let v = f.value(x);
        if !v.is_finite() {
            continue; // +inf satisfies any lower bound
        }
        let d = space.dist(x, origin);
        worst = worst.max(phi_floor - v - 0.5 * kappa * d * d);
    }
    worst.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclidean::{EuclideanPoint, EuclideanSpace};

    fn pt(xs: &[f64]) -> EuclideanPoint {
        EuclideanPoint::new(xs.to_vec())
    }

    #[test]
    fn e_lambda_matches_closed_forms() {
        assert_eq!(e_lambda(0.0, 3.5).unwrap(), 3.5);
        assert_eq!(e_lambda(1.0, 0.0).unwrap(), 0.0);
        let e1 = e_lambda(1.0, 1.0).unwrap();
        assert!((e1 - (1.0f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn e_lambda_rejects_negative_time() {
        assert!(e_lambda(1.0, -0.1).is_err());
    }

    #[test]
    fn e_lambda_is_continuous_near_zero_modulus() {
        // E_lambda(t) -> t uniformly as lambda -> 0: |E_lambda(t) - t| <= |lambda| t^2
        // on a lambda grid straddling the series branch
        let t = 2.0;
        for k in 1..=20 {
            for sign in [-1.0, 1.0] {
                let lam = sign * 10f64.powi(-k);
                let v = e_lambda(lam, t).unwrap();
                assert!(
                    (v - t).abs() <= lam.abs() * t * t,
                    "lambda={lam}: {v} vs {t}"
                );
            }
        }
        // series branch agrees with a long reference expansion
        let lam = 4e-9;
        let x = lam * t;
        let reference = t * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0);
        assert!((e_lambda(lam, t).unwrap() - reference).abs() <= 1e-15 * t);
    }

    #[test]
    fn e_lambda_monotone_in_time() {
        for &lam in &[-2.0, -0.5, 0.0, 0.5, 2.0] {
            let mut prev = 0.0;
            for k in 1..=50 {
                let t = k as f64 * 0.1;
                let v = e_lambda(lam, t).unwrap();
                assert!(v > prev, "E_lambda must increase in t (lambda={lam})");
                prev = v;
            }
        }
    }

    #[test]
    fn constant_interpolation_uses_right_closed_cells() {
        let space = EuclideanSpace::new(1);
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let traj = DiscreteTrajectory::new(
            grid,
            vec![pt(&[1.0]), pt(&[0.5])],
            InterpMode::PiecewiseConstant,
        )
        .unwrap();
        assert_eq!(traj.value_at(&space, 0.3).unwrap(), pt(&[0.5]));
        assert_eq!(traj.value_at(&space, 1.0).unwrap(), pt(&[0.5]));
        assert_eq!(traj.value_at(&space, 0.0).unwrap(), pt(&[1.0]));
    }

    #[test]
    fn linear_interpolation_blends_midpoint() {
        let space = EuclideanSpace::new(1);
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let traj = DiscreteTrajectory::new(
            grid,
            vec![pt(&[1.0]), pt(&[0.5])],
            InterpMode::PiecewiseLinear,
        )
        .unwrap();
        let mid = traj.value_at(&space, 0.5).unwrap();
        assert!((mid.coords()[0] - 0.75).abs() < 1e-15);
        assert_eq!(traj.value_at(&space, 0.0).unwrap(), pt(&[1.0]));
    }

    #[test]
    fn interpolants_agree_at_grid_nodes() {
        let space = EuclideanSpace::new(1);
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let points: Vec<_> = (0..=4).map(|n| pt(&[(n as f64).sin()])).collect();
        for mode in [InterpMode::PiecewiseConstant, InterpMode::PiecewiseLinear] {
            let traj = DiscreteTrajectory::new(grid.clone(), points.clone(), mode).unwrap();
            for n in 0..=4 {
                let v = traj.value_at(&space, grid.node(n)).unwrap();
                assert_eq!(v, points[n], "mode {mode:?}, node {n}");
            }
        }
    }

    #[test]
    fn linear_interpolation_needs_geodesics() {
        // carrier with a distance but no convex combinations
        struct DiscreteSpace;
        impl MetricSpace for DiscreteSpace {
            type Point = u8;
            fn dist(&self, a: &u8, b: &u8) -> f64 {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
        }
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let traj =
            DiscreteTrajectory::new(grid, vec![0u8, 1u8], InterpMode::PiecewiseLinear).unwrap();
        let err = traj.value_at(&DiscreteSpace, 0.5).unwrap_err();
        assert!(matches!(err, Error::UnsupportedInterpolation(_)));
        // the constant mode still works on such carriers
        let constant = traj.with_mode(InterpMode::PiecewiseConstant);
        assert_eq!(constant.value_at(&DiscreteSpace, 0.5).unwrap(), 1);
    }

    #[test]
    fn interpolation_rejects_out_of_range_time() {
        let space = EuclideanSpace::new(1);
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let traj = DiscreteTrajectory::new(
            grid,
            vec![pt(&[0.0]), pt(&[1.0])],
            InterpMode::PiecewiseConstant,
        )
        .unwrap();
        assert!(traj.value_at(&space, 1.5).is_err());
        assert!(traj.value_at(&space, -0.1).is_err());
    }

    #[test]
    fn metric_derivative_of_exponential_decay() {
        let space = EuclideanSpace::new(1);
        let h = 1e-3;
        let times: Vec<f64> = (0..5).map(|k| k as f64 * h).collect();
        let points: Vec<_> = times.iter().map(|t| pt(&[(-t).exp()])).collect();
        let curve = SampledCurve::new(times.clone(), points).unwrap();
        let speeds = estimate_metric_derivative(&space, &curve).unwrap();
        for i in 1..4 {
            let exact = (-times[i]).exp();
            assert!(
                (speeds[i] - exact).abs() < 1e-5,
                "at t={}: {} vs {}",
                times[i],
                speeds[i],
                exact
            );
        }
    }

    #[test]
    fn metric_derivative_of_constant_curve_is_zero() {
        let space = EuclideanSpace::new(2);
        let times = vec![0.0, 0.5, 1.0];
        let points = vec![pt(&[1.0, 2.0]); 3];
        let curve = SampledCurve::new(times, points).unwrap();
        let speeds = estimate_metric_derivative(&space, &curve).unwrap();
        assert!(speeds.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn metric_derivative_of_straight_line_in_r2() {
        // u_t = (t, 2t): speed sqrt(5) everywhere
        let space = EuclideanSpace::new(2);
        let times: Vec<f64> = (0..9).map(|k| k as f64 * 0.125).collect();
        let points: Vec<_> = times.iter().map(|&t| pt(&[t, 2.0 * t])).collect();
        let curve = SampledCurve::new(times, points).unwrap();
        let speeds = estimate_metric_derivative(&space, &curve).unwrap();
        let exact = 5.0f64.sqrt();
        for (i, &s) in speeds.iter().enumerate() {
            assert!((s - exact).abs() < 1e-12, "node {i}: {s} vs {exact}");
        }
    }

    #[test]
    fn metric_derivative_needs_two_samples() {
        let space = EuclideanSpace::new(1);
        let curve = SampledCurve::new(vec![0.0], vec![pt(&[1.0])]).unwrap();
        assert!(estimate_metric_derivative(&space, &curve).is_err());
    }

    #[test]
    fn sampled_curve_rejects_non_increasing_times() {
        assert!(SampledCurve::new(vec![0.0, 0.0], vec![pt(&[0.0]), pt(&[1.0])]).is_err());
        assert!(SampledCurve::new(vec![1.0, 0.5], vec![pt(&[0.0]), pt(&[1.0])]).is_err());
    }
}
