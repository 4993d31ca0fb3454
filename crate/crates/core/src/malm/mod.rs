//! Modified augmented Lagrangian method for quadratic penalty programs
//!
//! ```txt
//!   min f(x) + |c(x)|^2 / (2 pval)   s.t.  lower <= A x <= upper
//! ```
//!
//! Each outer iteration minimizes
//! `Psi_k(x) = f(x) - lambda^T c(x) + |c(x) + pval lambda|^2 / (2 (pval + rho))`
//! subject to the affine inequalities with the interior-point solver and
//! updates `lambda <- lambda - (c(x_k) + pval lambda) / (pval + rho)`. With
//! `pval = 0` this is the classical augmented Lagrangian method.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ipm::{self, IpmConfig, SolveReport, SolveStatus};
use crate::nlp::{LinearIneq, NlpModel, ScalarFn, VecFn};
use crate::sparse::{Csr, Triplets};

pub mod instances;

pub use instances::{circle, ocp_disc, OcpDisc};

/// `x -> Hessian(f)` as a full symmetric matrix.
pub type MatFn = Arc<dyn Fn(&[f64]) -> Csr + Send + Sync>;
/// `(x, w) -> sum_i w_i Hessian(c_i)` as a full symmetric matrix.
pub type WeightedMatFn = Arc<dyn Fn(&[f64], &[f64]) -> Csr + Send + Sync>;

/// Quadratic penalty program with affine inequalities.
#[derive(Clone)]
pub struct QppInstance {
    pub n: usize,
    pub m: usize,
    pub f: ScalarFn,
    pub grad_f: VecFn,
    pub hess_f: MatFn,
    pub c: VecFn,
    /// `m x n` Jacobian of `c`.
    pub jac_c: MatFn,
    pub hess_c: WeightedMatFn,
    /// Affine inequalities `g(x) >= 0` as rows `lower <= A x <= upper`.
    pub g: LinearIneq,
    pub pval: f64,
    pub x0: Vec<f64>,
    pub lambda0: Vec<f64>,
}

impl std::fmt::Debug for QppInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QppInstance")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("pval", &self.pval)
            .finish_non_exhaustive()
    }
}

impl QppInstance {
    pub fn validate(&self) -> Result<()> {
        if !(self.pval >= 0.0) || !self.pval.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty weight {} must be finite and >= 0", self.pval)));
        }
        if self.x0.len() != self.n || self.lambda0.len() != self.m {
            return Err(Error::Dimension("initial guesses".into()));
        }
        self.g.validate(self.n)
    }

    pub fn eval_c(&self, x: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.m];
        (self.c)(x, &mut c);
        c
    }

    /// Penalty objective `f + |c|^2 / (2 pval)`.
    pub fn phi(&self, x: &[f64]) -> f64 {
        let c = self.eval_c(x);
        (self.f)(x) + 0.5 / self.pval * c.iter().map(|v| v * v).sum::<f64>()
    }
}

#[derive(Clone, Debug)]
pub struct MalmConfig {
    pub tol: f64,
    pub rho0: f64,
    pub c_rho: f64,
    pub k_max: usize,
    /// Smallest `rho` used by the shrinking schedule.
    pub rho_floor: f64,
    /// Keeps `rho = rho0` in every iteration.
    pub freeze_rho: bool,
    /// Radius of the box `|x - x_{k-1}|_inf <= delta` added to each
    /// subproblem.
    pub trust_box: Option<f64>,
    /// KKT tolerance of the subproblem solves.
    pub inner_tol: f64,
    /// Budget on the summed inner iterations.
    pub max_inner_total: usize,
    /// Initial barrier weight of every subproblem after the first.
    pub warm_mu0: f64,
}

impl Default for MalmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            rho0: 0.1,
            c_rho: 0.1,
            k_max: 100,
            rho_floor: 1e-12,
            freeze_rho: false,
            trust_box: Some(10.0),
            inner_tol: 1e-9,
            max_inner_total: 1000,
            warm_mu0: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MalmStatus {
    Converged,
    /// `k_max` outer iterations without reaching `tol`.
    MaxOuter,
    /// Summed inner iterations exceeded the budget.
    MaxInner,
    InnerFailure,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MalmTraceRow {
    pub k: usize,
    pub rho: f64,
    pub residual: f64,
    pub inner_iters: usize,
}

#[derive(Clone, Debug)]
pub struct MalmReport {
    pub status: MalmStatus,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// `x_0, x_1, ...`.
    pub x_history: Vec<Vec<f64>>,
    /// `lambda_0, lambda_1, ...`.
    pub lambda_history: Vec<Vec<f64>>,
    pub trace: Vec<MalmTraceRow>,
    /// Largest deviation from `c + pval lambda_k = rho/(pval+rho) (c + pval lambda_{k-1})`,
    /// relative to `1 + |c + pval lambda_{k-1}|_inf`.
    pub identity_error: f64,
    /// Inequality multipliers `z_L - z_R` of the last subproblem.
    pub eta: Vec<f64>,
    pub message: Option<String>,
}

impl MalmReport {
    pub fn converged(&self) -> bool {
        self.status == MalmStatus::Converged
    }

    /// Writes `k,rho,residual,inner_iters`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,rho,residual,inner_iters")?;
        for r in &self.trace {
            writeln!(w, "{},{:e},{:e},{}", r.k, r.rho, r.residual, r.inner_iters)?;
        }
        Ok(())
    }
}

/// Single-objective program `f - lambda^T c + |c + shift|^2 / (2 denom)`
/// without equality rows.
struct Subproblem<'a> {
    inst: &'a QppInstance,
    lambda: Vec<f64>,
    shift: Vec<f64>,
    denom: f64,
    ineq: LinearIneq,
}

impl Subproblem<'_> {
    fn shifted(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.inst.eval_c(x);
        let r = c.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        (c, r)
    }
}

impl NlpModel for Subproblem<'_> {
    fn n_x(&self) -> usize {
        self.inst.n
    }

    fn n_c(&self) -> usize {
        0
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let (c, r) = self.shifted(x);
        let lc: f64 = self.lambda.iter().zip(&c).map(|(a, b)| a * b).sum();
        (self.inst.f)(x) - lc + 0.5 / self.denom * r.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let (_, r) = self.shifted(x);
        (self.inst.grad_f)(x, out);
        // grad Psi = grad f + J^T (r / denom - lambda)
        let w: Vec<f64> = r.iter().zip(&self.lambda).map(|(ri, l)| ri / self.denom - l).collect();
        let mut jt = vec![0.0; self.inst.n];
        (self.inst.jac_c)(x).mul_t_vec(&w, &mut jt);
        out.iter_mut().zip(&jt).for_each(|(o, v)| *o += v);
    }

    fn equality(&self, _x: &[f64], _out: &mut [f64]) {}

    fn jacobian(&self, _x: &[f64]) -> Result<Csr> {
        Ok(Csr::zeros(0, self.inst.n))
    }

    fn hessian(&self, x: &[f64], _y: &[f64]) -> Result<Csr> {
        let n = self.inst.n;
        let (_, r) = self.shifted(x);
        let w: Vec<f64> = r.iter().zip(&self.lambda).map(|(ri, l)| ri / self.denom - l).collect();
        let hf = (self.inst.hess_f)(x);
        let hc = (self.inst.hess_c)(x, &w);
        let j = (self.inst.jac_c)(x);
        let mut t = Triplets::new(n, n);
        for m in [&hf, &hc] {
            for row in 0..m.nrows {
                for (col, v) in m.row(row) {
                    t.push(row, col, v);
                }
            }
        }
        for row in 0..j.nrows {
            let entries: Vec<(usize, f64)> = j.row(row).collect();
            for &(a, va) in &entries {
                for &(b, vb) in &entries {
                    t.push(a, b, va * vb / self.denom);
                }
            }
        }
        let h = t.to_csr();
        if let Some((r, c)) = h.find_non_finite() {
            return Err(Error::NonFinite(format!("subproblem hessian entry ({r}, {c})")));
        }
        Ok(h)
    }

    fn inequalities(&self) -> &LinearIneq {
        &self.ineq
    }
}

/// Stall tolerance of the subproblem solves. With `pval + rho` near
/// `1e-8` the roundoff in the gradient of `Psi` exceeds `inner_tol`.
pub const ACCEPTABLE_TOL: f64 = 1e-6;

/// Final barrier weight of a subproblem relative to its KKT tolerance.
/// Active inequalities then sit `mu / eta` off their bounds.
pub const BARRIER_FRACTION: f64 = 1e-2;

fn inner_config(tol: f64) -> IpmConfig {
    IpmConfig {
        tol,
        omega_target: 1.0,
        omega0: 1.0,
        mu_target: Some(BARRIER_FRACTION * tol),
        acceptable_tol: Some(ACCEPTABLE_TOL),
        ..IpmConfig::default()
    }
}

/// Inequalities of a subproblem, optionally intersected with a box around
/// `center`.
fn subproblem_rows(g: &LinearIneq, center: &[f64], trust_box: Option<f64>) -> LinearIneq {
    let Some(delta) = trust_box else {
        return g.clone();
    };
    let n = center.len();
    let mut t = Triplets::new(g.len() + n, n);
    for r in 0..g.len() {
        for (c, v) in g.a.row(r) {
            t.push(r, c, v);
        }
    }
    let mut lower = g.lower.clone();
    let mut upper = g.upper.clone();
    let mut weights = g.weights.clone();
    for (i, &x) in center.iter().enumerate() {
        t.push(g.len() + i, i, 1.0);
        lower.push(x - delta);
        upper.push(x + delta);
        weights.push(1.0);
    }
    LinearIneq {
        a: t.to_csr(),
        lower,
        upper,
        weights,
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn solve_subproblem(sub: &Subproblem, x: &[f64], tol: f64, mu0: f64) -> Result<SolveReport> {
    let rep = ipm::solve(sub, x, &IpmConfig { mu0, ..inner_config(tol) })?;
    if !matches!(rep.status, SolveStatus::Converged | SolveStatus::Acceptable) {
        return Err(Error::Solver(format!(
            "subproblem: {:?} with KKT {:.1e}: {}",
            rep.status,
            rep.kkt_inf,
            rep.message.clone().unwrap_or_default()
        )));
    }
    Ok(rep)
}

struct Outer {
    x: Vec<f64>,
    lambda: Vec<f64>,
    rho: f64,
    report: MalmReport,
}

impl Outer {
    fn new(inst: &QppInstance, config: &MalmConfig) -> Result<Self> {
        inst.validate()?;
        if !(config.tol > 0.0 && config.rho0 > 0.0 && config.c_rho > 0.0 && config.c_rho < 1.0) {
            return Err(Error::InvalidParameter("tol, rho0 and c_rho must be positive, c_rho < 1".into()));
        }
        Ok(Self {
            x: inst.x0.clone(),
            lambda: inst.lambda0.clone(),
            rho: config.rho0,
            report: MalmReport {
                status: MalmStatus::MaxOuter,
                outer_iters: 0,
                inner_iters: 0,
                x_history: vec![inst.x0.clone()],
                lambda_history: vec![inst.lambda0.clone()],
                trace: Vec::new(),
                identity_error: 0.0,
                eta: vec![0.0; inst.g.len()],
                message: None,
            },
        })
    }

    /// Solves one subproblem; `Err` carries the final report.
    fn minimize(&mut self, sub: &Subproblem, config: &MalmConfig) -> std::result::Result<(), MalmStatus> {
        let mu0 = if self.report.outer_iters == 0 { IpmConfig::default().mu0 } else { config.warm_mu0 };
        match solve_subproblem(sub, &self.x, config.inner_tol, mu0) {
            Ok(rep) => {
                self.report.inner_iters += rep.inner_iters;
                self.x = rep.state.x.clone();
                let ng = sub.inst.g.len();
                self.report.eta = (0..ng).map(|r| rep.state.z_l[r] - rep.state.z_r[r]).collect();
                Ok(())
            }
            Err(e) => {
                self.report.message = Some(e.to_string());
                Err(MalmStatus::InnerFailure)
            }
        }
    }

    fn record(&mut self, k: usize, residual: f64, config: &MalmConfig) -> bool {
        self.report.outer_iters = k;
        self.report.x_history.push(self.x.clone());
        self.report.lambda_history.push(self.lambda.clone());
        self.report.trace.push(MalmTraceRow {
            k,
            rho: self.rho,
            residual,
            inner_iters: self.report.inner_iters,
        });
        if self.report.inner_iters > config.max_inner_total {
            self.report.status = MalmStatus::MaxInner;
            self.report.message = Some(format!("{} inner iterations", self.report.inner_iters));
            return true;
        }
        if residual <= config.tol {
            self.report.status = MalmStatus::Converged;
            return true;
        }
        if !config.freeze_rho {
            self.rho = (config.c_rho * self.rho).max(config.rho_floor);
        }
        false
    }

    fn finish(mut self, status: Option<MalmStatus>) -> (Vec<f64>, Vec<f64>, MalmReport) {
        if let Some(s) = status {
            self.report.status = s;
        }
        (self.x, self.lambda, self.report)
    }
}

/// Modified augmented Lagrangian method. Returns the final `x`, `lambda`
/// and the iteration report; non-convergence is reported in the status.
pub fn malm_solve(inst: &QppInstance, config: &MalmConfig) -> Result<(Vec<f64>, Vec<f64>, MalmReport)> {
    let mut o = Outer::new(inst, config)?;
    let pval = inst.pval;
    for k in 1..=config.k_max {
        let shift: Vec<f64> = o.lambda.iter().map(|l| pval * l).collect();
        let denom = pval + o.rho;
        let sub = Subproblem {
            inst,
            lambda: o.lambda.clone(),
            shift,
            denom,
            ineq: subproblem_rows(&inst.g, &o.x, config.trust_box),
        };
        if let Err(s) = o.minimize(&sub, config) {
            return Ok(o.finish(Some(s)));
        }
        let c = inst.eval_c(&o.x);
        let before: Vec<f64> = c.iter().zip(&o.lambda).map(|(ci, l)| ci + pval * l).collect();
        o.lambda = o.lambda.iter().zip(&before).map(|(l, b)| l - b / denom).collect();
        let after: Vec<f64> = c.iter().zip(&o.lambda).map(|(ci, l)| ci + pval * l).collect();
        let ratio = o.rho / denom;
        let dev = after.iter().zip(&before).map(|(a, b)| (a - ratio * b).abs()).fold(0.0, f64::max);
        o.report.identity_error = o.report.identity_error.max(dev / (1.0 + inf_norm(&before)));
        if o.record(k, inf_norm(&after), config) {
            return Ok(o.finish(None));
        }
    }
    Ok(o.finish(None))
}

/// Classical augmented Lagrangian method for `c(x) = 0`, written with its
/// own update `lambda <- lambda - c / rho`. `inst.pval` is ignored.
pub fn alm_solve(inst: &QppInstance, config: &MalmConfig) -> Result<(Vec<f64>, Vec<f64>, MalmReport)> {
    let mut o = Outer::new(inst, config)?;
    for k in 1..=config.k_max {
        let sub = Subproblem {
            inst,
            lambda: o.lambda.clone(),
            shift: vec![0.0; inst.m],
            denom: o.rho,
            ineq: subproblem_rows(&inst.g, &o.x, config.trust_box),
        };
        if let Err(s) = o.minimize(&sub, config) {
            return Ok(o.finish(Some(s)));
        }
        let c = inst.eval_c(&o.x);
        o.lambda = o.lambda.iter().zip(&c).map(|(l, ci)| l - ci / o.rho).collect();
        if o.record(k, inf_norm(&c), config) {
            return Ok(o.finish(None));
        }
    }
    Ok(o.finish(None))
}

/// Result of a direct penalty solve.
#[derive(Clone, Debug)]
pub struct PmReport {
    pub converged: bool,
    pub inner_iters: usize,
    pub solve: SolveReport,
}

/// Direct minimization of `f + |c|^2 / (2 pval)` subject to the
/// inequalities. Requires `pval > 0`.
pub fn pm_solve(inst: &QppInstance, config: &MalmConfig) -> Result<(Vec<f64>, PmReport)> {
    inst.validate()?;
    if !(inst.pval > 0.0) {
        return Err(Error::InvalidParameter("penalty method needs pval > 0 (n.a.)".into()));
    }
    let sub = Subproblem {
        inst,
        lambda: vec![0.0; inst.m],
        shift: vec![0.0; inst.m],
        denom: inst.pval,
        ineq: inst.g.clone(),
    };
    let mut cfg = inner_config(config.inner_tol);
    cfg.max_inner = config.max_inner_total;
    let rep = ipm::solve(&sub, &inst.x0, &cfg)?;
    let converged =
        matches!(rep.status, SolveStatus::Converged | SolveStatus::Acceptable) && rep.inner_iters <= config.max_inner_total;
    Ok((
        rep.state.x.clone(),
        PmReport {
            converged,
            inner_iters: rep.inner_iters,
            solve: rep,
        },
    ))
}

/// Differences below this are treated as exact convergence.
pub const RATE_NOISE: f64 = 1e-14;

/// Per-iteration contraction factor of a multiplier sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Contraction {
    Rate(f64),
    /// Successive differences are at machine noise.
    Exact,
}

impl Contraction {
    /// The rate, with exact convergence read as 0.
    pub fn value(self) -> f64 {
        match self {
            Contraction::Rate(r) => r,
            Contraction::Exact => 0.0,
        }
    }
}

/// Least-squares slope of `log |lambda_k - lambda_{k-1}|_2` over the last
/// five differences above [`RATE_NOISE`], as a factor per iteration.
pub fn contraction_rate(lambda_history: &[Vec<f64>]) -> Result<Contraction> {
    if lambda_history.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "{} iterates, at least 4 needed",
            lambda_history.len()
        )));
    }
    let diffs: Vec<(f64, f64)> = lambda_history
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let d: f64 = w[1].iter().zip(&w[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (k as f64, d)
        })
        .filter(|(_, d)| *d >= RATE_NOISE)
        .collect();
    if diffs.len() < 2 {
        return Ok(Contraction::Exact);
    }
    let tail = &diffs[diffs.len().saturating_sub(5)..];
    let n = tail.len() as f64;
    let mk = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = tail.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let skk: f64 = tail.iter().map(|p| (p.0 - mk).powi(2)).sum();
    let skl: f64 = tail.iter().map(|p| (p.0 - mk) * (p.1.ln() - ml)).sum();
    Ok(Contraction::Rate((skl / skk).exp()))
}
