//! Continuous-time optimal control problems in Bolza form and the built-in
//! problem corpus.
//!
//! A problem is
//!
//! ```txt
//!   min  M(y(0), y(T))                (+ integral of a Lagrange term)
//!   s.t. b(y(0), y(T)) = 0
//!        f1(y, u, t) = ydot,   f2(y, u, t) = 0
//!        y_L <= y <= y_R,      u_L <= u <= u_R
//! ```
//!
//! The merged residual is `f = [f1 - ydot; f2]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::points::{gauss_legendre, RefPointSet};
use crate::fem::trajectory::Trajectory;

pub mod corpus;
pub mod fd;

pub use corpus::{corpus_get, corpus_names};

/// `(y, u, t, out)`.
pub type PointFn = Arc<dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync>;
/// `(y0, yT, out)`.
pub type EndFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
pub type MayerFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type LagrangeFn = Arc<dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// One component of a bound function.
#[derive(Clone)]
pub enum Bound {
    Free,
    Const(f64),
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Bound {
    /// Value at `t`, with `free` substituted for an absent bound.
    pub fn value(&self, t: f64, free: f64) -> f64 {
        match self {
            Bound::Free => free,
            Bound::Const(v) => *v,
            Bound::Func(f) => f(t),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Bound::Free)
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Free => write!(f, "Free"),
            Bound::Const(v) => write!(f, "Const({v})"),
            Bound::Func(_) => write!(f, "Func"),
        }
    }
}

/// Optional analytic first derivatives. Row-major layouts:
/// `mayer_grad` 2 n_y, `lagrange_grad` n_y + n_u, `boundary_jac` n_b x 2 n_y,
/// `ode_jac` n_y x (n_y + n_u), `alg_jac` n_alg x (n_y + n_u).
#[derive(Clone, Default)]
pub struct Derivatives {
    pub mayer_grad: Option<EndFn>,
    pub lagrange_grad: Option<PointFn>,
    pub boundary_jac: Option<EndFn>,
    pub ode_jac: Option<PointFn>,
    pub alg_jac: Option<PointFn>,
}

#[derive(Clone)]
pub struct OcpProblem {
    pub name: String,
    pub horizon: f64,
    pub n_y: usize,
    pub n_u: usize,
    pub n_alg: usize,
    pub n_b: usize,
    pub mayer: MayerFn,
    pub lagrange: Option<LagrangeFn>,
    pub boundary: EndFn,
    pub ode: PointFn,
    pub alg: PointFn,
    pub y_lower: Vec<Bound>,
    pub y_upper: Vec<Bound>,
    pub u_lower: Vec<Bound>,
    pub u_upper: Vec<Bound>,
    pub derivatives: Derivatives,
    /// Reference rule used to fold the Lagrange term into the objective.
    pub lagrange_rule: Option<RefPointSet>,
    /// How the stored form was obtained from the textbook statement.
    pub conversion_note: Option<String>,
}

impl fmt::Debug for OcpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OcpProblem")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("n_y", &self.n_y)
            .field("n_u", &self.n_u)
            .field("n_alg", &self.n_alg)
            .field("n_b", &self.n_b)
            .finish_non_exhaustive()
    }
}

/// Whether a reference solution is known in closed form or only numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    Analytic,
    Tabulated,
}

#[derive(Clone)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub y_star: TimeFn,
    pub u_star: TimeFn,
    pub objective_star: f64,
}

impl fmt::Debug for ReferenceSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceSolution")
            .field("kind", &self.kind)
            .field("objective_star", &self.objective_star)
            .finish_non_exhaustive()
    }
}

impl OcpProblem {
    pub fn n_z(&self) -> usize {
        self.n_y + self.n_u
    }

    /// Rows of the merged residual `f`.
    pub fn n_f(&self) -> usize {
        self.n_y + self.n_alg
    }

    /// `f = [f1(y,u,t) - ydot; f2(y,u,t)]`.
    pub fn residual(&self, y: &[f64], ydot: &[f64], u: &[f64], t: f64, out: &mut [f64]) {
        let (a, b) = out.split_at_mut(self.n_y);
        (self.ode)(y, u, t, a);
        for (v, d) in a.iter_mut().zip(ydot) {
            *v -= d;
        }
        if self.n_alg > 0 {
            (self.alg)(y, u, t, b);
        }
    }

    fn point_values(&self, z: &[f64], t: f64, out: &mut [f64]) {
        let (y, u) = z.split_at(self.n_y);
        let (a, b) = out.split_at_mut(self.n_y);
        (self.ode)(y, u, t, a);
        if self.n_alg > 0 {
            (self.alg)(y, u, t, b);
        }
    }

    fn point_jac(&self, z: &[f64], t: f64, out: &mut [f64]) {
        let nz = self.n_z();
        let (y, u) = z.split_at(self.n_y);
        let (a, b) = out.split_at_mut(self.n_y * nz);
        match &self.derivatives.ode_jac {
            Some(j) => j(y, u, t, a),
            None => fd::jacobian(
                |zz: &[f64], o: &mut [f64]| {
                    let (yy, uu) = zz.split_at(self.n_y);
                    (self.ode)(yy, uu, t, o)
                },
                z,
                self.n_y,
                a,
            ),
        }
        if self.n_alg > 0 {
            match &self.derivatives.alg_jac {
                Some(j) => j(y, u, t, b),
                None => fd::jacobian(
                    |zz: &[f64], o: &mut [f64]| {
                        let (yy, uu) = zz.split_at(self.n_y);
                        (self.alg)(yy, uu, t, o)
                    },
                    z,
                    self.n_alg,
                    b,
                ),
            }
        }
    }

    /// Jacobian of `[f1; f2]` with respect to `(y, u)`, row-major
    /// `n_f x n_z`. The `-ydot` part is left to the caller.
    pub fn residual_jac(&self, y: &[f64], u: &[f64], t: f64, out: &mut [f64]) {
        let z: Vec<f64> = y.iter().chain(u).copied().collect();
        self.point_jac(&z, t, out);
    }

    /// `sum_i w_i * Hessian([f1; f2]_i)` with respect to `(y, u)`.
    pub fn residual_hess(&self, y: &[f64], u: &[f64], t: f64, w: &[f64], out: &mut [f64]) {
        let nz = self.n_z();
        let nf = self.n_f();
        let z: Vec<f64> = y.iter().chain(u).copied().collect();
        let analytic = self.derivatives.ode_jac.is_some() && (self.n_alg == 0 || self.derivatives.alg_jac.is_some());
        if analytic {
            let mut jac = vec![0.0; nf * nz];
            fd::hessian_from_gradient(
                |zz: &[f64], g: &mut [f64]| {
                    self.point_jac(zz, t, &mut jac);
                    for c in 0..nz {
                        g[c] = (0..nf).map(|r| w[r] * jac[r * nz + c]).sum();
                    }
                },
                &z,
                out,
            );
        } else {
            let mut vals = vec![0.0; nf];
            fd::hessian_from_values(
                |zz: &[f64]| {
                    self.point_values(zz, t, &mut vals);
                    vals.iter().zip(w).map(|(a, b)| a * b).sum()
                },
                &z,
                out,
            );
        }
    }

    pub fn boundary_jac(&self, y0: &[f64], yt: &[f64], out: &mut [f64]) {
        match &self.derivatives.boundary_jac {
            Some(j) => j(y0, yt, out),
            None => {
                let ends: Vec<f64> = y0.iter().chain(yt).copied().collect();
                fd::jacobian(
                    |e: &[f64], o: &mut [f64]| {
                        let (a, b) = e.split_at(self.n_y);
                        (self.boundary)(a, b, o)
                    },
                    &ends,
                    self.n_b,
                    out,
                )
            }
        }
    }

    /// `sum_i w_i * Hessian(b_i)` with respect to `(y0, yT)`.
    pub fn boundary_hess(&self, y0: &[f64], yt: &[f64], w: &[f64], out: &mut [f64]) {
        let ne = 2 * self.n_y;
        let ends: Vec<f64> = y0.iter().chain(yt).copied().collect();
        if self.derivatives.boundary_jac.is_some() {
            let mut jac = vec![0.0; self.n_b * ne];
            fd::hessian_from_gradient(
                |e: &[f64], g: &mut [f64]| {
                    let (a, b) = e.split_at(self.n_y);
                    self.boundary_jac(a, b, &mut jac);
                    for c in 0..ne {
                        g[c] = (0..self.n_b).map(|r| w[r] * jac[r * ne + c]).sum();
                    }
                },
                &ends,
                out,
            );
        } else {
            let mut vals = vec![0.0; self.n_b];
            fd::hessian_from_values(
                |e: &[f64]| {
                    let (a, b) = e.split_at(self.n_y);
                    (self.boundary)(a, b, &mut vals);
                    vals.iter().zip(w).map(|(a, b)| a * b).sum()
                },
                &ends,
                out,
            );
        }
    }

    pub fn mayer_grad(&self, y0: &[f64], yt: &[f64], out: &mut [f64]) {
        match &self.derivatives.mayer_grad {
            Some(g) => g(y0, yt, out),
            None => {
                let ends: Vec<f64> = y0.iter().chain(yt).copied().collect();
                fd::jacobian(
                    |e: &[f64], o: &mut [f64]| {
                        let (a, b) = e.split_at(self.n_y);
                        o[0] = (self.mayer)(a, b)
                    },
                    &ends,
                    1,
                    out,
                )
            }
        }
    }

    pub fn mayer_hess(&self, y0: &[f64], yt: &[f64], out: &mut [f64]) {
        let ends: Vec<f64> = y0.iter().chain(yt).copied().collect();
        if self.derivatives.mayer_grad.is_some() {
            fd::hessian_from_gradient(
                |e: &[f64], g: &mut [f64]| {
                    let (a, b) = e.split_at(self.n_y);
                    self.mayer_grad(a, b, g)
                },
                &ends,
                out,
            );
        } else {
            fd::hessian_from_values(
                |e: &[f64]| {
                    let (a, b) = e.split_at(self.n_y);
                    (self.mayer)(a, b)
                },
                &ends,
                out,
            );
        }
    }

    /// Gradient of the Lagrange integrand with respect to `(y, u)`.
    pub fn lagrange_grad(&self, y: &[f64], u: &[f64], t: f64, out: &mut [f64]) {
        let Some(l) = &self.lagrange else {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        };
        match &self.derivatives.lagrange_grad {
            Some(g) => g(y, u, t, out),
            None => {
                let z: Vec<f64> = y.iter().chain(u).copied().collect();
                fd::jacobian(
                    |zz: &[f64], o: &mut [f64]| {
                        let (a, b) = zz.split_at(self.n_y);
                        o[0] = l(a, b, t)
                    },
                    &z,
                    1,
                    out,
                )
            }
        }
    }

    pub fn lagrange_hess(&self, y: &[f64], u: &[f64], t: f64, out: &mut [f64]) {
        let Some(l) = &self.lagrange else {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        };
        let z: Vec<f64> = y.iter().chain(u).copied().collect();
        if self.derivatives.lagrange_grad.is_some() {
            fd::hessian_from_gradient(
                |zz: &[f64], g: &mut [f64]| {
                    let (a, b) = zz.split_at(self.n_y);
                    self.lagrange_grad(a, b, t, g)
                },
                &z,
                out,
            );
        } else {
            fd::hessian_from_values(
                |zz: &[f64]| {
                    let (a, b) = zz.split_at(self.n_y);
                    l(a, b, t)
                },
                &z,
                out,
            );
        }
    }

    /// Bounds `(y_L, y_R, u_L, u_R)` at time `t`, infinite where absent.
    pub fn bounds_at(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let lo = |b: &[Bound]| b.iter().map(|v| v.value(t, f64::NEG_INFINITY)).collect();
        let hi = |b: &[Bound]| b.iter().map(|v| v.value(t, f64::INFINITY)).collect();
        (lo(&self.y_lower), hi(&self.y_upper), lo(&self.u_lower), hi(&self.u_upper))
    }

    /// Rule used for the Lagrange term on a trajectory of degree `p`: the
    /// recorded augmentation rule, else `2p + 2` Gauss-Legendre points.
    pub fn objective_rule(&self, p: usize) -> RefPointSet {
        self.lagrange_rule.clone().unwrap_or_else(|| {
            let (points, weights) = gauss_legendre(2 * p + 2);
            RefPointSet {
                family: crate::fem::points::Family::LG,
                degree: 2 * p + 2,
                points,
                weights: Some(weights),
            }
        })
    }

    /// Mayer term plus the quadrature of the Lagrange term along `traj`.
    pub fn objective(&self, traj: &Trajectory) -> f64 {
        let mut j = (self.mayer)(traj.y_initial(), traj.y_final());
        if let Some(l) = &self.lagrange {
            let rule = self.objective_rule(traj.p());
            let w = rule.weights.as_ref().expect("quadrature rule with weights");
            let table = traj.element.table(&rule.points);
            for i in 0..traj.mesh.n_intervals() {
                let half = 0.5 * traj.mesh.len(i);
                for k in 0..table.len() {
                    let s = traj.combine(i, &table.ly[k], &table.dly[k], &table.lu[k]);
                    let t = traj.mesh.to_time(i, table.tau[k]);
                    j += w[k] * half * l(&s.y, &s.u, t);
                }
            }
        }
        j
    }

    /// Checks that lower bounds do not exceed upper bounds at the samples.
    pub fn check_bounds(&self, samples: &[f64]) -> Result<()> {
        for &t in samples {
            let (yl, yr, ul, ur) = self.bounds_at(t);
            if yl.iter().zip(&yr).chain(ul.iter().zip(&ur)).any(|(a, b)| a > b) {
                return Err(Error::InvalidParameter(format!("crossing bounds at t={t}")));
            }
        }
        Ok(())
    }
}

/// Records the rule that folds the Lagrange term into the objective. The
/// transcriptions and measures then evaluate `M + Q[L]` per interval with
/// this rule. Without a Lagrange term the problem is returned unchanged.
pub fn augment_lagrange(problem: &OcpProblem, rule: &RefPointSet) -> Result<OcpProblem> {
    if rule.weights.is_none() {
        return Err(Error::InvalidParameter(format!("{} points carry no weights", rule.family)));
    }
    let mut p = problem.clone();
    if p.lagrange.is_some() {
        p.lagrange_rule = Some(rule.clone());
    }
    Ok(p)
}
