//! Accuracy measures of an approximate solution: optimality gap `delta`,
//! integral equality residual `rho` and pointwise bound violation `gamma`,
//! plus least-squares convergence orders over mesh levels.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::points::{chebyshev_lobatto, gauss_legendre};
use crate::fem::trajectory::Trajectory;
use crate::ocp::{OcpProblem, ReferenceSolution};

/// Values at or below this level are treated as converged to the solver
/// floor when fitting orders.
pub const ORDER_FLOOR: f64 = 1e-12;

/// Optimality gap with its sign flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub value: f64,
    /// The objective lies below the reference optimum.
    pub below: bool,
}

/// Empirical orders of each measure over a mesh study.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Orders {
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
}

/// JSON report `{delta, delta_below, rho, gamma, gamma_bound, orders,
/// iterations, wall_time_s}`. Absent values serialize as `null`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeasureReport {
    pub delta: Option<f64>,
    pub delta_below: bool,
    pub rho: f64,
    pub gamma: f64,
    pub gamma_bound: Option<f64>,
    pub orders: Option<Orders>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
}

impl MeasureReport {
    /// Gap, residual and bound violation of `traj`. `gamma_bound` is left
    /// to the caller since it depends on the transcription.
    pub fn of(problem: &OcpProblem, traj: &Trajectory, reference: Option<&ReferenceSolution>) -> Result<Self> {
        let gap = reference.map(|r| compute_delta(problem, traj, r)).transpose()?;
        Ok(Self {
            delta: gap.map(|g| g.value),
            delta_below: gap.is_some_and(|g| g.below),
            rho: compute_rho(problem, traj, 2 * traj.p() + 2),
            gamma: compute_gamma(problem, traj, 10),
            ..Self::default()
        })
    }

    /// Fails if a number is not finite.
    pub fn check_finite(&self) -> Result<()> {
        let mut values = vec![self.rho, self.gamma];
        values.extend(self.delta);
        values.extend(self.gamma_bound);
        values.extend(self.wall_time_s);
        if let Some(o) = &self.orders {
            values.extend(o.rho.iter().chain(&o.delta).chain(&o.gamma));
        }
        if values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("measure report".into()))
        }
    }
}

/// `sqrt(Q[|f(ydot, y, u, t)|^2] + |b(y(0), y(T))|^2)` with `quad_points`
/// Gauss-Legendre points per interval.
pub fn compute_rho(problem: &OcpProblem, traj: &Trajectory, quad_points: usize) -> f64 {
    let (x, w) = gauss_legendre(quad_points.max(1));
    let table = traj.element.table(&x);
    let mut f = vec![0.0; problem.n_f()];
    let mut sum = 0.0;
    for i in 0..traj.mesh.n_intervals() {
        let half = 0.5 * traj.mesh.len(i);
        for k in 0..table.len() {
            let s = traj.combine(i, &table.ly[k], &table.dly[k], &table.lu[k]);
            problem.residual(&s.y, &s.ydot, &s.u, traj.mesh.to_time(i, x[k]), &mut f);
            sum += w[k] * half * f.iter().map(|v| v * v).sum::<f64>();
        }
    }
    let mut b = vec![0.0; problem.n_b];
    (problem.boundary)(traj.y_initial(), traj.y_final(), &mut b);
    (sum + b.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Largest bound violation over `dense_factor (p + 1)` CGL points per
/// interval. Interval ends use the one-sided limits of each interval, so
/// control jumps are seen from both sides.
pub fn compute_gamma(problem: &OcpProblem, traj: &Trajectory, dense_factor: usize) -> f64 {
    let m = (dense_factor * (traj.p() + 1)).max(2) - 1;
    let taus = chebyshev_lobatto(m);
    let table = traj.element.table(&taus);
    let mut gamma: f64 = 0.0;
    for i in 0..traj.mesh.n_intervals() {
        for k in 0..table.len() {
            let s = traj.combine(i, &table.ly[k], &table.dly[k], &table.lu[k]);
            let (yl, yr, ul, ur) = problem.bounds_at(traj.mesh.to_time(i, taus[k]));
            for (v, (lo, hi)) in s.y.iter().zip(yl.iter().zip(&yr)).chain(s.u.iter().zip(ul.iter().zip(&ur))) {
                gamma = gamma.max(lo - v).max(v - hi);
            }
        }
    }
    gamma
}

/// Bound on the CGL overshoot of a degree-`p` interpolant sampled at `m`
/// points per interval, for bounds of diameter `c_box`:
/// `(pi^2 c_box / 8) sqrt(p) (p / m)^2`.
pub fn gamma_bound(p: usize, m: usize, c_box: f64) -> Result<f64> {
    if p == 0 || m == 0 || !m.is_multiple_of(p) {
        return Err(Error::InvalidParameter(format!("m = {m} is not a positive multiple of p = {p}")));
    }
    let ratio = p as f64 / m as f64;
    Ok(PI * PI * c_box / 8.0 * (p as f64).sqrt() * ratio * ratio)
}

/// Largest finite width `upper - lower` over all bounded components,
/// sampled at the mesh-free times `0`, `T/2` and `T`.
pub fn bound_diameter(problem: &OcpProblem) -> Option<f64> {
    let mut d: Option<f64> = None;
    for t in [0.0, 0.5 * problem.horizon, problem.horizon] {
        let (yl, yr, ul, ur) = problem.bounds_at(t);
        for (lo, hi) in yl.iter().zip(&yr).chain(ul.iter().zip(&ur)) {
            let w = hi - lo;
            if w.is_finite() {
                d = Some(d.map_or(w, |v| v.max(w)));
            }
        }
    }
    d
}

/// Objective including the Lagrange term minus the reference optimum.
pub fn compute_delta(problem: &OcpProblem, traj: &Trajectory, reference: &ReferenceSolution) -> Result<Gap> {
    let j = problem.objective(traj);
    if !j.is_finite() {
        return Err(Error::NonFinite("objective".into()));
    }
    let value = j - reference.objective_star;
    Ok(Gap {
        value,
        below: value < 0.0,
    })
}

/// Least-squares slope of `log(value)` against `log(h)`. Values at or
/// below [`ORDER_FLOOR`] and non-finite values are skipped.
pub fn empirical_order(pairs: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(h, v)| *h > 0.0 && v.is_finite() && *v > ORDER_FLOOR)
        .map(|(h, v)| (h.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "{} usable mesh levels, at least 2 needed",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("mesh levels share the same h".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}
