//! Transcription of an [`OcpProblem`] into an NLP over `X_{h,p}`.
//!
//! The decision vector is [`pack`]ed node by node. Equality rows are the
//! boundary residual followed by the merged residual `f` at the residual
//! points of every interval, scaled by `sqrt(alpha)` for quadrature-based
//! modes. Bounds become linear rows `A x` sampling the trajectory.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::mesh::Mesh;
use crate::fem::points::{chebyshev_lobatto, ref_points, Family, RefPointSet};
use crate::fem::trajectory::{Element, PointTable, Trajectory};
use crate::ipm::IpmConfig;
use crate::nlp::{LinearIneq, NlpModel};
use crate::ocp::OcpProblem;
use crate::sparse::{Csr, Triplets};

mod init;
mod pack;

pub use init::{initial_guess, InitialGuess};
pub use pack::{n_x, pack, unpack};

/// Penalty used to relax collocation equalities in the solver.
pub const DCM_OMEGA: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dcm,
    Qpm,
    Pbf,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Dcm => "dcm",
            Mode::Qpm => "qpm",
            Mode::Pbf => "pbf",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NlpMeta {
    pub mode: Mode,
    /// Penalty weight of the equality rows.
    pub omega: f64,
    /// Barrier weight (PBF); zero otherwise.
    pub tau: f64,
    pub p: usize,
    pub n_intervals: usize,
    pub residual_family: Family,
    pub residual_points: usize,
    pub bound_points: usize,
}

/// Which trajectory component a bound row samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundVar {
    State(usize),
    Control(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct BoundSample {
    pub interval: usize,
    pub tau: f64,
    pub t: f64,
    pub var: BoundVar,
}

struct Points {
    table: PointTable,
    /// Reference quadrature weights, or ones for collocation rows.
    weights: Vec<f64>,
    quadrature: bool,
}

impl Points {
    fn new(element: &Element, set: &RefPointSet, quadrature: bool) -> Result<Self> {
        let weights = if quadrature {
            set.weights
                .clone()
                .ok_or_else(|| Error::InvalidParameter(format!("{} points carry no weights", set.family)))?
        } else {
            vec![1.0; set.len()]
        };
        Ok(Self {
            table: element.table(&set.points),
            weights,
            quadrature,
        })
    }

    fn len(&self) -> usize {
        self.table.len()
    }

    /// Row scale at point `k` of an interval of length `len`.
    fn row_scale(&self, k: usize, len: f64) -> f64 {
        if self.quadrature {
            (self.weights[k] * 0.5 * len).sqrt()
        } else {
            1.0
        }
    }
}

/// Transcribed problem.
pub struct Nlp {
    pub problem: OcpProblem,
    pub mesh: Mesh,
    pub element: Arc<Element>,
    pub meta: NlpMeta,
    residual: Points,
    objective_pts: Points,
    ineq: LinearIneq,
    samples: Vec<BoundSample>,
    /// Structural pattern of the boundary Jacobian, `n_b x 2 n_y`.
    boundary_pattern: Vec<bool>,
    /// Structural pattern of the end-point Hessian, `2 n_y x 2 n_y`.
    end_pattern: Vec<bool>,
}

impl fmt::Debug for Nlp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nlp")
            .field("problem", &self.problem.name)
            .field("meta", &self.meta)
            .field("n_x", &self.n_x())
            .field("n_c", &self.n_c())
            .field("n_bnd", &self.ineq.len())
            .finish()
    }
}

/// Collocation: residual and bound rows at the `p` scheme points.
pub fn build_dcm(problem: &OcpProblem, mesh: &Mesh, p: usize, scheme: &RefPointSet) -> Result<Nlp> {
    if scheme.family == Family::CGL || scheme.degree != p || scheme.len() != p {
        return Err(Error::InvalidParameter(format!(
            "collocation scheme {}({}) needs exactly p = {p} points",
            scheme.family, scheme.degree
        )));
    }
    let element = Element::new(p)?;
    let residual = Points::new(&element, scheme, false)?;
    let rule = match &problem.lagrange_rule {
        Some(r) => r.clone(),
        None => scheme.clone(),
    };
    let objective_pts = Points::new(&element, &rule, true)?;
    let bounds = BoundPlacement {
        points: scheme.points.clone(),
        weights: None,
    };
    let meta = NlpMeta {
        mode: Mode::Dcm,
        omega: DCM_OMEGA,
        tau: 0.0,
        p,
        n_intervals: mesh.n_intervals(),
        residual_family: scheme.family,
        residual_points: p,
        bound_points: p,
    };
    Nlp::assemble(problem, mesh, element, meta, residual, objective_pts, bounds)
}

/// Quadrature penalty: `sqrt(alpha) f` rows at `q` Gauss-Legendre points
/// per interval, bounds at the `m + 1` CGL points per interval.
pub fn build_qpm(problem: &OcpProblem, mesh: &Mesh, p: usize, q: usize, m: usize, omega: f64) -> Result<Nlp> {
    if q == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("q = {q} and m = {m} must be positive")));
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    let element = Element::new(p)?;
    let lg = ref_points(Family::LG, q)?;
    let residual = Points::new(&element, &lg, true)?;
    let rule = problem.lagrange_rule.clone().unwrap_or(lg);
    let objective_pts = Points::new(&element, &rule, true)?;
    let bounds = BoundPlacement {
        points: chebyshev_lobatto(m),
        weights: None,
    };
    let meta = NlpMeta {
        mode: Mode::Qpm,
        omega,
        tau: 0.0,
        p,
        n_intervals: mesh.n_intervals(),
        residual_family: Family::LG,
        residual_points: q,
        bound_points: m + 1,
    };
    Nlp::assemble(problem, mesh, element, meta, residual, objective_pts, bounds)
}

/// Penalty-barrier: the QPM residual rows on `q` Gauss-Legendre points and
/// bounds sampled at the same points with the quadrature weights as barrier
/// weights; the solver's barrier parameter plays the role of `tau`.
pub fn build_pbf(problem: &OcpProblem, mesh: &Mesh, p: usize, q: Option<usize>, omega: f64, tau: f64) -> Result<Nlp> {
    if !(tau > 0.0 && tau <= omega && omega < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < tau <= omega < 1, got tau = {tau}, omega = {omega}")));
    }
    let q = q.unwrap_or(2 * p);
    if q == 0 {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    let element = Element::new(p)?;
    let lg = ref_points(Family::LG, q)?;
    let residual = Points::new(&element, &lg, true)?;
    let rule = problem.lagrange_rule.clone().unwrap_or_else(|| lg.clone());
    let objective_pts = Points::new(&element, &rule, true)?;
    let bounds = BoundPlacement {
        points: lg.points.clone(),
        weights: lg.weights.clone(),
    };
    let meta = NlpMeta {
        mode: Mode::Pbf,
        omega,
        tau,
        p,
        n_intervals: mesh.n_intervals(),
        residual_family: Family::LG,
        residual_points: q,
        bound_points: q,
    };
    Nlp::assemble(problem, mesh, element, meta, residual, objective_pts, bounds)
}

struct BoundPlacement {
    points: Vec<f64>,
    /// Reference weights turned into barrier weights `w_k |T_i| / 2`.
    weights: Option<Vec<f64>>,
}

/// Values of `y`, `ydot`, `u` at one tabulated point of interval `i`.
struct Local {
    y: Vec<f64>,
    ydot: Vec<f64>,
    u: Vec<f64>,
}

fn probe_points(n: usize) -> [Vec<f64>; 3] {
    [
        (0..n).map(|i| 0.31 + 0.17 * i as f64).collect(),
        (0..n).map(|i| -0.73 + 0.41 * (i as f64).sin()).collect(),
        (0..n).map(|i| 1.9 - 0.23 * i as f64).collect(),
    ]
}

impl Nlp {
    fn assemble(
        problem: &OcpProblem,
        mesh: &Mesh,
        element: Arc<Element>,
        meta: NlpMeta,
        residual: Points,
        objective_pts: Points,
        bounds: BoundPlacement,
    ) -> Result<Self> {
        let ny = problem.n_y;
        let ne = 2 * ny;
        let mut boundary_pattern = vec![false; problem.n_b * ne];
        let mut end_pattern = vec![false; ne * ne];
        let mut jb = vec![0.0; problem.n_b * ne];
        let mut hb = vec![0.0; ne * ne];
        for e in probe_points(ne) {
            let (y0, yt) = e.split_at(ny);
            problem.boundary_jac(y0, yt, &mut jb);
            for (pat, v) in boundary_pattern.iter_mut().zip(&jb) {
                *pat |= *v != 0.0;
            }
            problem.mayer_hess(y0, yt, &mut hb);
            for (pat, v) in end_pattern.iter_mut().zip(&hb) {
                *pat |= v.abs() > 1e-12;
            }
            let w = vec![1.0; problem.n_b];
            problem.boundary_hess(y0, yt, &w, &mut hb);
            for (pat, v) in end_pattern.iter_mut().zip(&hb) {
                *pat |= v.abs() > 1e-12;
            }
        }
        let mut nlp = Self {
            problem: problem.clone(),
            mesh: mesh.clone(),
            element,
            meta,
            residual,
            objective_pts,
            ineq: LinearIneq::empty(0),
            samples: Vec::new(),
            boundary_pattern,
            end_pattern,
        };
        nlp.build_bounds(&bounds)?;
        Ok(nlp)
    }

    fn build_bounds(&mut self, placement: &BoundPlacement) -> Result<()> {
        let pb = &self.problem;
        let (ny, nu, nz) = (pb.n_y, pb.n_u, pb.n_z());
        let p = self.element.p;
        let table = self.element.table(&placement.points);
        let has_right_end = placement.points.contains(&1.0);
        let mut trip = Triplets::new(0, self.n_x());
        let mut entries = Vec::new();
        let (mut lower, mut upper, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..self.mesh.n_intervals() {
            let off = i * p * nz;
            let len = self.mesh.len(i);
            for k in 0..table.len() {
                let tau = table.tau[k];
                let t = self.mesh.to_time(i, tau);
                let w = placement.weights.as_ref().map_or(1.0, |w| w[k] * 0.5 * len);
                let (yl, yr, ul, ur) = pb.bounds_at(t);
                let skip_y = i > 0 && tau == -1.0 && has_right_end;
                for c in 0..ny {
                    if skip_y || (yl[c] == f64::NEG_INFINITY && yr[c] == f64::INFINITY) {
                        continue;
                    }
                    let row = lower.len();
                    for kk in 0..=p {
                        let v = table.ly[k][kk];
                        if v != 0.0 {
                            entries.push((row, off + kk * nz + c, v));
                        }
                    }
                    lower.push(yl[c]);
                    upper.push(yr[c]);
                    weights.push(w);
                    self.samples.push(BoundSample {
                        interval: i,
                        tau,
                        t,
                        var: BoundVar::State(c),
                    });
                }
                for c in 0..nu {
                    if ul[c] == f64::NEG_INFINITY && ur[c] == f64::INFINITY {
                        continue;
                    }
                    let row = lower.len();
                    for kk in 0..p {
                        let v = table.lu[k][kk];
                        if v != 0.0 {
                            entries.push((row, off + kk * nz + ny + c, v));
                        }
                    }
                    lower.push(ul[c]);
                    upper.push(ur[c]);
                    weights.push(w);
                    self.samples.push(BoundSample {
                        interval: i,
                        tau,
                        t,
                        var: BoundVar::Control(c),
                    });
                }
            }
        }
        trip.nrows = lower.len();
        for (r, c, v) in entries {
            trip.push(r, c, v);
        }
        self.ineq = LinearIneq {
            a: trip.to_csr(),
            lower,
            upper,
            weights,
        };
        self.ineq.validate(self.n_x())
    }

    pub fn n_bnd(&self) -> usize {
        self.ineq.len()
    }

    pub fn bound_samples(&self) -> &[BoundSample] {
        &self.samples
    }

    fn block_len(&self) -> usize {
        self.element.p * self.problem.n_z() + self.problem.n_y
    }

    fn offset(&self, i: usize) -> usize {
        i * self.element.p * self.problem.n_z()
    }

    /// Maps an end-point coordinate (`y0` then `yT`) to its column.
    fn end_col(&self, e: usize) -> usize {
        let ny = self.problem.n_y;
        if e < ny {
            e
        } else {
            self.n_x() - ny + (e - ny)
        }
    }

    fn local(&self, x: &[f64], i: usize, table: &PointTable, k: usize) -> Local {
        let (ny, nu, nz) = (self.problem.n_y, self.problem.n_u, self.problem.n_z());
        let p = self.element.p;
        let off = self.offset(i);
        let scale = 2.0 / self.mesh.len(i);
        let mut s = Local {
            y: vec![0.0; ny],
            ydot: vec![0.0; ny],
            u: vec![0.0; nu],
        };
        for kk in 0..=p {
            let (l, d) = (table.ly[k][kk], table.dly[k][kk] * scale);
            for c in 0..ny {
                let v = x[off + kk * nz + c];
                s.y[c] += l * v;
                s.ydot[c] += d * v;
            }
        }
        for kk in 0..p {
            let l = table.lu[k][kk];
            for c in 0..nu {
                s.u[c] += l * x[off + kk * nz + ny + c];
            }
        }
        s
    }

    /// Coefficient of local variable for component `a` of `z = (y, u)` at a
    /// tabulated point: `(local index, value)` pairs.
    fn z_stencil(&self, table: &PointTable, k: usize, a: usize) -> Vec<(usize, f64)> {
        let (ny, nz) = (self.problem.n_y, self.problem.n_z());
        let p = self.element.p;
        if a < ny {
            (0..=p).map(|kk| (kk * nz + a, table.ly[k][kk])).collect()
        } else {
            (0..p).map(|kk| (kk * nz + a, table.lu[k][kk])).collect()
        }
    }

    fn ends<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let ny = self.problem.n_y;
        (&x[..ny], &x[x.len() - ny..])
    }

    /// Residual row index of point `k` in interval `i`.
    fn residual_row(&self, i: usize, k: usize) -> usize {
        self.problem.n_b + (i * self.residual.len() + k) * self.problem.n_f()
    }

    pub fn trajectory(&self, x: &[f64]) -> Result<Trajectory> {
        unpack(x, &self.mesh, self.element.p, self.problem.n_y, self.problem.n_u)
    }

    /// Interval owning equality row `r`, or `None` for boundary rows.
    pub fn row_interval(&self, r: usize) -> Option<usize> {
        let nb = self.problem.n_b;
        (r >= nb).then(|| (r - nb) / (self.residual.len() * self.problem.n_f()))
    }

    /// Writes the Jacobian pattern as `row,col,block` with block `-1` for
    /// boundary rows and the interval index otherwise.
    pub fn write_sparsity_csv<W: Write>(&self, x: &[f64], mut w: W) -> Result<()> {
        let j = self.jacobian(x)?;
        let io = |e: std::io::Error| Error::InvalidParameter(format!("writing sparsity: {e}"));
        writeln!(w, "row,col,block").map_err(io)?;
        for r in 0..j.nrows {
            let b = self.row_interval(r).map_or(-1, |i| i as i64);
            for (c, _) in j.row(r) {
                writeln!(w, "{r},{c},{b}").map_err(io)?;
            }
        }
        Ok(())
    }

    /// Scale folded into each equality row: one for boundary and
    /// collocation rows, `sqrt(alpha)` for quadrature rows.
    pub fn row_weights(&self) -> Vec<f64> {
        let mut w = vec![1.0; self.n_c()];
        let nf = self.problem.n_f();
        for i in 0..self.mesh.n_intervals() {
            let len = self.mesh.len(i);
            for k in 0..self.residual.len() {
                let row = self.residual_row(i, k);
                w[row..row + nf].iter_mut().for_each(|v| *v = self.residual.row_scale(k, len));
            }
        }
        w
    }

    /// Solver settings matching the penalty and barrier targets of this NLP.
    pub fn ipm_config(&self, tol: f64) -> IpmConfig {
        let mut c = IpmConfig {
            tol,
            omega_target: self.meta.omega,
            ..IpmConfig::default()
        };
        if self.meta.mode == Mode::Pbf {
            c.mu_target = Some(self.meta.tau);
        }
        c
    }
}

impl NlpModel for Nlp {
    fn n_x(&self) -> usize {
        n_x(self.mesh.n_intervals(), self.element.p, self.problem.n_y, self.problem.n_u)
    }

    fn n_c(&self) -> usize {
        self.problem.n_b + self.mesh.n_intervals() * self.residual.len() * self.problem.n_f()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let (y0, yt) = self.ends(x);
        let mut j = (self.problem.mayer)(y0, yt);
        if let Some(l) = &self.problem.lagrange {
            let pts = &self.objective_pts;
            for i in 0..self.mesh.n_intervals() {
                let half = 0.5 * self.mesh.len(i);
                for k in 0..pts.len() {
                    let s = self.local(x, i, &pts.table, k);
                    let t = self.mesh.to_time(i, pts.table.tau[k]);
                    j += pts.weights[k] * half * l(&s.y, &s.u, t);
                }
            }
        }
        j
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let pb = &self.problem;
        let ny = pb.n_y;
        let (y0, yt) = self.ends(x);
        let mut mg = vec![0.0; 2 * ny];
        pb.mayer_grad(y0, yt, &mut mg);
        for (e, v) in mg.iter().enumerate() {
            out[self.end_col(e)] += v;
        }
        if pb.lagrange.is_none() {
            return;
        }
        let pts = &self.objective_pts;
        let mut lg = vec![0.0; pb.n_z()];
        for i in 0..self.mesh.n_intervals() {
            let off = self.offset(i);
            let half = 0.5 * self.mesh.len(i);
            for k in 0..pts.len() {
                let s = self.local(x, i, &pts.table, k);
                let t = self.mesh.to_time(i, pts.table.tau[k]);
                pb.lagrange_grad(&s.y, &s.u, t, &mut lg);
                let a = pts.weights[k] * half;
                for (comp, g) in lg.iter().enumerate() {
                    for (l, v) in self.z_stencil(&pts.table, k, comp) {
                        out[off + l] += a * g * v;
                    }
                }
            }
        }
    }

    fn equality(&self, x: &[f64], out: &mut [f64]) {
        let pb = &self.problem;
        let nf = pb.n_f();
        let (y0, yt) = self.ends(x);
        (pb.boundary)(y0, yt, &mut out[..pb.n_b]);
        let pts = &self.residual;
        for i in 0..self.mesh.n_intervals() {
            let len = self.mesh.len(i);
            for k in 0..pts.len() {
                let s = self.local(x, i, &pts.table, k);
                let t = self.mesh.to_time(i, pts.table.tau[k]);
                let row = self.residual_row(i, k);
                let o = &mut out[row..row + nf];
                pb.residual(&s.y, &s.ydot, &s.u, t, o);
                let sc = pts.row_scale(k, len);
                o.iter_mut().for_each(|v| *v *= sc);
            }
        }
    }

    fn jacobian(&self, x: &[f64]) -> Result<Csr> {
        let pb = &self.problem;
        let (ny, nz, nf) = (pb.n_y, pb.n_z(), pb.n_f());
        let p = self.element.p;
        let ne = 2 * ny;
        let mut t = Triplets::new(self.n_c(), self.n_x());
        let (y0, yt) = self.ends(x);
        let mut jb = vec![0.0; pb.n_b * ne];
        pb.boundary_jac(y0, yt, &mut jb);
        for r in 0..pb.n_b {
            for e in 0..ne {
                if self.boundary_pattern[r * ne + e] || jb[r * ne + e] != 0.0 {
                    let v = jb[r * ne + e];
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("boundary jacobian row {r}")));
                    }
                    t.push(r, self.end_col(e), v);
                }
            }
        }
        let pts = &self.residual;
        let mut f = vec![0.0; nf * nz];
        for i in 0..self.mesh.n_intervals() {
            let off = self.offset(i);
            let len = self.mesh.len(i);
            let scale = 2.0 / len;
            for k in 0..pts.len() {
                let s = self.local(x, i, &pts.table, k);
                let tm = self.mesh.to_time(i, pts.table.tau[k]);
                pb.residual_jac(&s.y, &s.u, tm, &mut f);
                let row0 = self.residual_row(i, k);
                if let Some(bad) = f.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("jacobian in interval {i}, row {}", row0 + bad / nz)));
                }
                let sc = pts.row_scale(k, len);
                for r in 0..nf {
                    for kk in 0..=p {
                        let (l, d) = (pts.table.ly[k][kk], pts.table.dly[k][kk] * scale);
                        for c in 0..ny {
                            let mut v = f[r * nz + c] * l;
                            if r == c {
                                v -= d;
                            }
                            t.push(row0 + r, off + kk * nz + c, sc * v);
                        }
                    }
                    for kk in 0..p {
                        let l = pts.table.lu[k][kk];
                        for c in 0..pb.n_u {
                            t.push(row0 + r, off + kk * nz + ny + c, sc * f[r * nz + ny + c] * l);
                        }
                    }
                }
            }
        }
        Ok(t.to_csr())
    }

    fn hessian(&self, x: &[f64], y: &[f64]) -> Result<Csr> {
        let pb = &self.problem;
        let (ny, nz, nf) = (pb.n_y, pb.n_z(), pb.n_f());
        let ne = 2 * ny;
        let n = self.n_x();
        let mut t = Triplets::new(n, n);
        let (y0, yt) = self.ends(x);
        let mut he = vec![0.0; ne * ne];
        pb.mayer_hess(y0, yt, &mut he);
        if y[..pb.n_b].iter().any(|&v| v != 0.0) {
            let w: Vec<f64> = y[..pb.n_b].iter().map(|v| -v).collect();
            let mut hb = vec![0.0; ne * ne];
            pb.boundary_hess(y0, yt, &w, &mut hb);
            he.iter_mut().zip(&hb).for_each(|(a, b)| *a += b);
        }
        for a in 0..ne {
            for b in 0..ne {
                if self.end_pattern[a * ne + b] {
                    let v = he[a * ne + b];
                    if !v.is_finite() {
                        return Err(Error::NonFinite("end-point hessian".into()));
                    }
                    t.push(self.end_col(a), self.end_col(b), v);
                }
            }
        }
        let bl = self.block_len();
        let mut block = vec![0.0; bl * bl];
        let mut hz = vec![0.0; nz * nz];
        let add_chain = |nlp: &Self, block: &mut [f64], table: &PointTable, k: usize, hz: &[f64], scale: f64| {
            let stencils: Vec<Vec<(usize, f64)>> = (0..nz).map(|a| nlp.z_stencil(table, k, a)).collect();
            for a in 0..nz {
                for b in 0..nz {
                    let h = scale * hz[a * nz + b];
                    if h == 0.0 {
                        continue;
                    }
                    for &(la, va) in &stencils[a] {
                        for &(lb, vb) in &stencils[b] {
                            block[la * bl + lb] += h * va * vb;
                        }
                    }
                }
            }
        };
        let mut w = vec![0.0; nf];
        for i in 0..self.mesh.n_intervals() {
            block.iter_mut().for_each(|v| *v = 0.0);
            let len = self.mesh.len(i);
            let half = 0.5 * len;
            if pb.lagrange.is_some() {
                let pts = &self.objective_pts;
                for k in 0..pts.len() {
                    let s = self.local(x, i, &pts.table, k);
                    let tm = self.mesh.to_time(i, pts.table.tau[k]);
                    pb.lagrange_hess(&s.y, &s.u, tm, &mut hz);
                    add_chain(self, &mut block, &pts.table, k, &hz, pts.weights[k] * half);
                }
            }
            let pts = &self.residual;
            for k in 0..pts.len() {
                let row0 = self.residual_row(i, k);
                let sc = pts.row_scale(k, len);
                let mut any = false;
                for r in 0..nf {
                    w[r] = -y[row0 + r] * sc;
                    any |= w[r] != 0.0;
                }
                if !any {
                    continue;
                }
                let s = self.local(x, i, &pts.table, k);
                let tm = self.mesh.to_time(i, pts.table.tau[k]);
                pb.residual_hess(&s.y, &s.u, tm, &w, &mut hz);
                add_chain(self, &mut block, &pts.table, k, &hz, 1.0);
            }
            if let Some(bad) = block.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("hessian in interval {i}, local row {}", bad / bl)));
            }
            let off = self.offset(i);
            for a in 0..bl {
                for b in 0..bl {
                    t.push(off + a, off + b, 0.5 * (block[a * bl + b] + block[b * bl + a]));
                }
            }
        }
        Ok(t.to_csr())
    }

    fn inequalities(&self) -> &LinearIneq {
        &self.ineq
    }
}

/// Jacobian and Lagrangian Hessian at `(x, y)`.
pub fn assemble_derivatives(nlp: &Nlp, x: &[f64], y: &[f64]) -> Result<(Csr, Csr)> {
    Ok((nlp.jacobian(x)?, nlp.hessian(x, y)?))
}
