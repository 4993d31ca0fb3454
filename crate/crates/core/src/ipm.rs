//! Primal-dual penalty-barrier interior-point method with a backtracking
//! line search on the penalty-barrier merit function.
//!
//! For penalty `omega` and barrier `mu` the solver drives the residual
//!
//! ```txt
//!   r1 = grad f - J^T y - A^T (z_L - z_R)
//!   r2 = c + omega y
//!   r3 = z_L (A x - b_L) - mu w
//!   r4 = z_R (b_R - A x) - mu w
//! ```
//!
//! to zero, where `w` are the barrier row weights, while an outer loop
//! shrinks `omega` and `mu` towards their targets.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::banded::{BandLu, BandMatrix, GeneralBand, LdltFactor};
use crate::error::{Error, Result};
use crate::nlp::{LinearIneq, NlpModel};
use crate::sparse::Csr;

#[derive(Clone, Debug)]
pub struct IpmConfig {
    pub tol: f64,
    pub omega_target: f64,
    /// Barrier target; `None` uses `tol`.
    pub mu_target: Option<f64>,
    pub omega0: f64,
    pub mu0: f64,
    pub shrink: f64,
    pub max_outer: usize,
    /// Newton iterations allowed per outer iteration.
    pub max_inner: usize,
    pub kappa: f64,
    /// Relative distance by which the start point is pushed inside.
    pub bound_push: f64,
    /// Keeps `z s / (mu w)` within `[1e-10, 1e10]` after each step.
    pub z_safeguard: bool,
    /// After `acceptable_iter` consecutive iterates with KKT at most this
    /// value, or on the iteration limit or a line-search failure there, an
    /// intermediate stage advances and the final stage stops with
    /// [`SolveStatus::Acceptable`].
    pub acceptable_tol: Option<f64>,
    pub acceptable_iter: usize,
}

impl Default for IpmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            omega_target: 1e-8,
            mu_target: None,
            omega0: 0.1,
            mu0: 0.1,
            shrink: 0.1,
            max_outer: 20,
            max_inner: 200,
            kappa: 0.995,
            bound_push: 1e-2,
            z_safeguard: true,
            acceptable_tol: None,
            acceptable_iter: 15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IpmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z_l: Vec<f64>,
    pub z_r: Vec<f64>,
    pub omega: f64,
    pub mu: f64,
    pub iter: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    /// Stalled at the targets within the acceptable tolerance.
    Acceptable,
    MaxIterations,
    LineSearchFailure,
    FactorizationFailure,
    NonFinite,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub outer: usize,
    pub omega: f64,
    pub mu: f64,
    pub kkt_inf: f64,
    pub merit: f64,
    pub step_size: f64,
    pub shift: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub state: IpmState,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub kkt_inf: f64,
    /// Merit value after every accepted step, paired with its outer iteration.
    pub merit_history: Vec<(usize, f64)>,
    pub trace: Vec<TraceRow>,
    pub wall_time_s: f64,
    pub message: Option<String>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Writes `iter,outer,omega,mu,kkt_inf,merit,step_size,shift`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,outer,omega,mu,kkt_inf,merit,step_size,shift")?;
        for r in &self.trace {
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.iter, r.outer, r.omega, r.mu, r.kkt_inf, r.merit, r.step_size, r.shift
            )?;
        }
        Ok(())
    }
}

/// Search direction of all primal and dual variables.
#[derive(Clone, Debug)]
pub struct Step {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz_l: Vec<f64>,
    pub dz_r: Vec<f64>,
    /// Diagonal shift used to make the reduced matrix positive definite.
    pub shift: f64,
}

/// Max norms of the four residual blocks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KktNorms {
    pub stationarity: f64,
    pub equality: f64,
    pub lower: f64,
    pub upper: f64,
}

impl KktNorms {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.equality).max(self.lower).max(self.upper)
    }
}

/// `A x`, `A x - b_L` and `b_R - A x`; absent sides give infinite slack.
pub fn slacks(ineq: &LinearIneq, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = ineq.len();
    let mut ax = vec![0.0; m];
    ineq.a.mul_vec(x, &mut ax);
    let sl = (0..m).map(|r| ax[r] - ineq.lower[r]).collect();
    let sr = (0..m).map(|r| ineq.upper[r] - ax[r]).collect();
    (ax, sl, sr)
}

fn is_interior(sl: &[f64], sr: &[f64]) -> bool {
    sl.iter().chain(sr).all(|&s| s > 0.0)
}

/// Stacked residual `[r1; r2; r3; r4]` of length `n_x + n_c + 2 n_bnd`.
/// Rows of an absent bound side contribute zero.
pub fn kkt_residuals(nlp: &dyn NlpModel, state: &IpmState) -> Result<Vec<f64>> {
    let (n, m) = (nlp.n_x(), nlp.n_c());
    let ineq = nlp.inequalities();
    let nb = ineq.len();
    let x = &state.x;
    let mut r = vec![0.0; n + m + 2 * nb];
    nlp.gradient(x, &mut r[..n]);
    if m > 0 {
        let j = nlp.jacobian(x)?;
        let mut jty = vec![0.0; n];
        j.mul_t_vec(&state.y, &mut jty);
        let mut c = vec![0.0; m];
        nlp.equality(x, &mut c);
        for i in 0..n {
            r[i] -= jty[i];
        }
        for i in 0..m {
            r[n + i] = c[i] + state.omega * state.y[i];
        }
    }
    if nb > 0 {
        let (_, sl, sr) = slacks(ineq, x);
        let dz: Vec<f64> = (0..nb).map(|k| state.z_l[k] - state.z_r[k]).collect();
        let mut atz = vec![0.0; n];
        ineq.a.mul_t_vec(&dz, &mut atz);
        for i in 0..n {
            r[i] -= atz[i];
        }
        for k in 0..nb {
            let w = ineq.weights[k];
            if sl[k].is_finite() {
                r[n + m + k] = state.z_l[k] * sl[k] - state.mu * w;
            }
            if sr[k].is_finite() {
                r[n + m + nb + k] = state.z_r[k] * sr[k] - state.mu * w;
            }
        }
    }
    let blocks = ["stationarity", "equality", "lower complementarity", "upper complementarity"];
    let bounds = [0, n, n + m, n + m + nb, n + m + 2 * nb];
    for b in 0..4 {
        if let Some(i) = r[bounds[b]..bounds[b + 1]].iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} residual, row {i}", blocks[b])));
        }
    }
    Ok(r)
}

pub fn kkt_norms(nlp: &dyn NlpModel, r: &[f64]) -> KktNorms {
    let (n, m, nb) = (nlp.n_x(), nlp.n_c(), nlp.inequalities().len());
    let inf = |s: &[f64]| s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    KktNorms {
        stationarity: inf(&r[..n]),
        equality: inf(&r[n..n + m]),
        lower: inf(&r[n + m..n + m + nb]),
        upper: inf(&r[n + m + nb..]),
    }
}

/// Penalty-barrier merit `f + |c|^2 / (2 omega) - mu sum w log s`;
/// infinite outside the strict interior.
pub fn merit(nlp: &dyn NlpModel, x: &[f64], omega: f64, mu: f64) -> f64 {
    let ineq = nlp.inequalities();
    let (_, sl, sr) = slacks(ineq, x);
    if !is_interior(&sl, &sr) {
        return f64::INFINITY;
    }
    let mut phi = nlp.objective(x);
    if nlp.n_c() > 0 {
        let mut c = vec![0.0; nlp.n_c()];
        nlp.equality(x, &mut c);
        phi += c.iter().map(|v| v * v).sum::<f64>() / (2.0 * omega);
    }
    for k in 0..ineq.len() {
        let w = ineq.weights[k];
        if sl[k].is_finite() {
            phi -= mu * w * sl[k].ln();
        }
        if sr[k].is_finite() {
            phi -= mu * w * sr[k].ln();
        }
    }
    if phi.is_nan() {
        f64::INFINITY
    } else {
        phi
    }
}

/// Gradient of the merit function.
pub fn merit_gradient(nlp: &dyn NlpModel, x: &[f64], omega: f64, mu: f64) -> Result<Vec<f64>> {
    let n = nlp.n_x();
    let mut g = vec![0.0; n];
    nlp.gradient(x, &mut g);
    if nlp.n_c() > 0 {
        let mut c = vec![0.0; nlp.n_c()];
        nlp.equality(x, &mut c);
        c.iter_mut().for_each(|v| *v /= omega);
        let mut jt = vec![0.0; n];
        nlp.jacobian(x)?.mul_t_vec(&c, &mut jt);
        g.iter_mut().zip(&jt).for_each(|(a, b)| *a += b);
    }
    let ineq = nlp.inequalities();
    if !ineq.is_empty() {
        let (_, sl, sr) = slacks(ineq, x);
        let v: Vec<f64> = (0..ineq.len())
            .map(|k| {
                let w = mu * ineq.weights[k];
                let a = if sl[k].is_finite() { w / sl[k] } else { 0.0 };
                let b = if sr[k].is_finite() { w / sr[k] } else { 0.0 };
                a - b
            })
            .collect();
        let mut at = vec![0.0; n];
        ineq.a.mul_t_vec(&v, &mut at);
        g.iter_mut().zip(&at).for_each(|(a, b)| *a -= b);
    }
    Ok(g)
}

/// Shifts are doubled this many times, then grown tenfold.
const DOUBLINGS: usize = 30;
/// Largest diagonal shift tried.
const MAX_SHIFT: f64 = 1e20;
/// Larger forced shifts tried after a failed line search.
const MAX_RETRIES: usize = 8;
/// Accepted fraction of `s_max` below which larger shifts are tried.
const TINY_STEP: f64 = 1e-3;
/// Accepted fraction of `s_max` below which the next shift starts larger.
const SHORT_STEP: f64 = 0.25;
/// Hint multiplier after a short shifted step; the next first try is
/// `SHIFT_GROWTH / 4` times the last shift.
const SHIFT_GROWTH: f64 = 40.0;
/// Smallest nonzero diagonal shift.
const SHIFT_MIN: f64 = 1e-8;
/// Tolerance of the definiteness test relative to the largest entry of the
/// reduced matrix.
const SHIFT_ROUNDOFF: f64 = 100.0 * f64::EPSILON;
/// Iterative refinement sweeps on the augmented system.
const REFINE_STEPS: usize = 2;
/// Largest relative residual of an accepted augmented solve.
const SOLVE_RESIDUAL: f64 = 1e-8;

/// Newton direction of the primal-dual system, equivalent to the reduced
/// system
/// `(H + J^T J / omega + A^T D A) dx = -(r1 + J^T r2 / omega + A^T (r3 / s_L - r4 / s_R))`
/// followed by the eliminated dual updates. `shift_hint` seeds the first
/// nonzero diagonal shift.
pub fn newton_step(nlp: &dyn NlpModel, state: &IpmState, shift_hint: f64) -> Result<Step> {
    newton_step_shifted(nlp, state, shift_hint, 0.0)
}

/// [`newton_step`] with the diagonal shift at least `min_shift`.
///
/// Definiteness is decided on the reduced matrix. The direction itself is
/// solved from the augmented system `[H + A^T D A + shift, J^T; J, -omega]`
/// with banded LU, which stays accurate when `1 / omega` dwarfs the
/// curvature of `H`.
pub fn newton_step_shifted(nlp: &dyn NlpModel, state: &IpmState, shift_hint: f64, min_shift: f64) -> Result<Step> {
    let (n, m) = (nlp.n_x(), nlp.n_c());
    let ineq = nlp.inequalities();
    let nb = ineq.len();
    let r = kkt_residuals(nlp, state)?;
    let (r1, rest) = r.split_at(n);
    let (r2, rest) = rest.split_at(m);
    let (r3, r4) = rest.split_at(nb);
    let omega = state.omega;
    let h = nlp.hessian(&state.x, &state.y)?;
    if let Some((i, j)) = h.find_non_finite() {
        return Err(Error::NonFinite(format!("hessian entry ({i}, {j})")));
    }
    let jac = if m > 0 { nlp.jacobian(&state.x)? } else { Csr::zeros(0, n) };
    if let Some((i, j)) = jac.find_non_finite() {
        return Err(Error::NonFinite(format!("jacobian entry ({i}, {j})")));
    }
    let (_, sl, sr) = slacks(ineq, &state.x);
    let d: Vec<f64> = (0..nb)
        .map(|k| {
            let a = if sl[k].is_finite() { state.z_l[k] / sl[k] } else { 0.0 };
            let b = if sr[k].is_finite() { state.z_r[k] / sr[k] } else { 0.0 };
            a + b
        })
        .collect();
    let a_rows: Vec<Vec<(usize, f64)>> = (0..nb).map(|k| ineq.a.row(k).collect()).collect();
    let j_rows: Vec<Vec<(usize, f64)>> = (0..m).map(|r| jac.row(r).collect()).collect();

    // reduced matrix for the definiteness test
    let kd = h.bandwidth().max(jac.row_spread()).max(ineq.a.row_spread());
    let mut s = BandMatrix::new(n, kd);
    for i in 0..n {
        for (j, v) in h.row(i) {
            if j <= i {
                s.add(i, j, v);
            }
        }
    }
    let add_outer = |s: &mut BandMatrix, entries: &[(usize, f64)], scale: f64| {
        for (a, &(ca, va)) in entries.iter().enumerate() {
            for &(cb, vb) in &entries[..=a] {
                s.add(ca, cb, scale * va * vb);
            }
        }
    };
    for e in &j_rows {
        add_outer(&mut s, e, 1.0 / omega);
    }
    for (k, e) in a_rows.iter().enumerate() {
        add_outer(&mut s, e, d[k]);
    }
    let tolerance = SHIFT_ROUNDOFF * s.max_abs().max(1.0);
    let definite = |shift: f64| {
        let mut t = s.clone();
        t.add_diag(shift + tolerance);
        LdltFactor::factor(&t).is_positive_definite()
    };
    // augmented system, each multiplier placed after the last column of its row
    let mut by_last: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, e) in j_rows.iter().enumerate() {
        let last = e.last().map_or(n - 1, |&(c, _)| c);
        by_last[last].push(r);
    }
    let mut pos_x = vec![0usize; n];
    let mut pos_v = vec![0usize; m];
    let mut k = 0;
    for c in 0..n {
        pos_x[c] = k;
        k += 1;
        for &r in &by_last[c] {
            pos_v[r] = k;
            k += 1;
        }
    }
    let mut band = 0;
    for i in 0..n {
        for (j, _) in h.row(i) {
            band = band.max(pos_x[i].abs_diff(pos_x[j]));
        }
    }
    for e in &a_rows {
        if let (Some(&(lo, _)), Some(&(hi, _))) = (e.first(), e.last()) {
            band = band.max(pos_x[hi] - pos_x[lo]);
        }
    }
    for (r, e) in j_rows.iter().enumerate() {
        for &(c, _) in e {
            band = band.max(pos_v[r].abs_diff(pos_x[c]));
        }
    }
    let dim = n + m;
    let mut kkt = GeneralBand::new(dim, band, band);
    for i in 0..n {
        for (j, v) in h.row(i) {
            kkt.add(pos_x[i], pos_x[j], v);
        }
    }
    for (k, e) in a_rows.iter().enumerate() {
        for &(ca, va) in e {
            for &(cb, vb) in e {
                kkt.add(pos_x[ca], pos_x[cb], d[k] * va * vb);
            }
        }
    }
    for (r, e) in j_rows.iter().enumerate() {
        for &(c, v) in e {
            kkt.add(pos_v[r], pos_x[c], v);
            kkt.add(pos_x[c], pos_v[r], v);
        }
        kkt.add(pos_v[r], pos_v[r], -omega);
    }
    let mut rhs = vec![0.0; dim];
    for c in 0..n {
        rhs[pos_x[c]] = -r1[c];
    }
    for (k, e) in a_rows.iter().enumerate() {
        let a = if sl[k].is_finite() { r3[k] / sl[k] } else { 0.0 };
        let b = if sr[k].is_finite() { r4[k] / sr[k] } else { 0.0 };
        for &(c, v) in e {
            rhs[pos_x[c]] -= v * (a - b);
        }
    }
    for r in 0..m {
        rhs[pos_v[r]] = -r2[r];
    }
    let solve_shifted = |shift: f64| -> Option<Vec<f64>> {
        let mut k = kkt.clone();
        if shift > 0.0 {
            for &p in &pos_x {
                k.add(p, p, shift);
            }
        }
        // symmetric equilibration keeps pivots comparable across blocks
        let d: Vec<f64> = k.row_max_abs().iter().map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }).collect();
        k.scale_sym(&d);
        let b: Vec<f64> = rhs.iter().zip(&d).map(|(a, s)| a * s).collect();
        let lu = BandLu::factor(&k);
        let mut sol = lu.solve(&b);
        let mut res = vec![0.0; dim];
        for _ in 0..REFINE_STEPS {
            k.mul_vec(&sol, &mut res);
            res.iter_mut().zip(&b).for_each(|(a, b)| *a = b - *a);
            let corr = lu.solve(&res);
            sol.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
        }
        k.mul_vec(&sol, &mut res);
        let err = res.iter().zip(&b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let size = b.iter().chain(&sol).fold(1.0f64, |m, v| m.max(v.abs()));
        if !(err <= SOLVE_RESIDUAL * size) {
            return None;
        }
        Some(sol.iter().zip(&d).map(|(a, s)| a * s).collect())
    };
    let mut shift = min_shift;
    let mut tries = 0;
    // a singular augmented matrix is treated like an indefinite reduced one
    let sol = loop {
        if definite(shift) {
            if let Some(sol) = solve_shifted(shift) {
                break sol;
            }
        }
        if shift > MAX_SHIFT {
            return Err(Error::Solver(format!(
                "reduced matrix not positive definite after {tries} shifts (last {shift:e})"
            )));
        }
        let growth = if tries < DOUBLINGS { 2.0 } else { 10.0 };
        shift = if shift == 0.0 { SHIFT_MIN.max(shift_hint / 4.0) } else { growth * shift };
        tries += 1;
    };
    let dx: Vec<f64> = pos_x.iter().map(|&p| sol[p]).collect();
    let dy: Vec<f64> = pos_v.iter().map(|&p| -sol[p]).collect();
    let mut adx = vec![0.0; nb];
    ineq.a.mul_vec(&dx, &mut adx);
    let mut dz_l = vec![0.0; nb];
    let mut dz_r = vec![0.0; nb];
    for k in 0..nb {
        if sl[k].is_finite() {
            dz_l[k] = -(r3[k] + state.z_l[k] * adx[k]) / sl[k];
        }
        if sr[k].is_finite() {
            dz_r[k] = (-r4[k] + state.z_r[k] * adx[k]) / sr[k];
        }
    }
    Ok(Step {
        dx,
        dy,
        dz_l,
        dz_r,
        shift,
    })
}

/// Largest `s` in `(0, 1]` keeping slacks and duals above the fraction
/// `1 - kappa` of their current values.
pub fn fraction_to_boundary(ineq: &LinearIneq, state: &IpmState, step: &Step, kappa: f64) -> f64 {
    let nb = ineq.len();
    let (_, sl, sr) = slacks(ineq, &state.x);
    let mut adx = vec![0.0; nb];
    ineq.a.mul_vec(&step.dx, &mut adx);
    let mut s_max: f64 = 1.0;
    let mut limit = |value: f64, change: f64| {
        if value.is_finite() && change < 0.0 {
            s_max = s_max.min(-kappa * value / change);
        }
    };
    for k in 0..nb {
        limit(sl[k], adx[k]);
        limit(sr[k], -adx[k]);
        if sl[k].is_finite() {
            limit(state.z_l[k], step.dz_l[k]);
        }
        if sr[k].is_finite() {
            limit(state.z_r[k], step.dz_r[k]);
        }
    }
    s_max.max(0.0)
}

const ARMIJO: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 40;

/// Backtracking from `s_max` on the merit function. Returns `None` when no
/// trial step decreases the merit.
pub fn line_search(nlp: &dyn NlpModel, state: &IpmState, step: &Step, s_max: f64) -> Result<Option<f64>> {
    let (omega, mu) = (state.omega, state.mu);
    let phi0 = merit(nlp, &state.x, omega, mu);
    let g = merit_gradient(nlp, &state.x, omega, mu)?;
    let slope: f64 = g.iter().zip(&step.dx).map(|(a, b)| a * b).sum();
    let noise = 10.0 * f64::EPSILON * phi0.abs().max(1.0);
    let mut s = s_max;
    let mut trial = state.x.clone();
    for k in 0..=MAX_BACKTRACKS {
        for i in 0..trial.len() {
            trial[i] = state.x[i] + s * step.dx[i];
        }
        let phi = merit(nlp, &trial, omega, mu);
        // steps of roundoff size may still round onto a bound
        if slope.abs() <= noise && phi.is_finite() {
            return Ok(Some(s));
        }
        let target = if slope < 0.0 { phi0 + ARMIJO * s * slope } else { phi0 };
        if phi <= target + noise {
            return Ok(Some(s));
        }
        if k == MAX_BACKTRACKS && phi < phi0 {
            return Ok(Some(s));
        }
        s *= BACKTRACK;
    }
    Ok(None)
}

/// Moves `x` strictly inside the inequality rows by cyclic projections onto
/// the half-spaces shrunk by a margin of `push` times the row width (or the
/// bound magnitude for one-sided rows).
pub fn make_interior(ineq: &LinearIneq, x: &[f64], push: f64) -> Result<Vec<f64>> {
    let mut x = x.to_vec();
    let nb = ineq.len();
    if nb == 0 {
        return Ok(x);
    }
    let margin: Vec<f64> = (0..nb)
        .map(|k| {
            let (lo, hi) = (ineq.lower[k], ineq.upper[k]);
            if lo.is_finite() && hi.is_finite() {
                push * (hi - lo)
            } else {
                let b = if lo.is_finite() { lo } else { hi };
                push * b.abs().max(1.0)
            }
        })
        .collect();
    let rows: Vec<Vec<(usize, f64)>> = (0..nb).map(|k| ineq.a.row(k).collect()).collect();
    let norms: Vec<f64> = rows.iter().map(|e| e.iter().map(|(_, v)| v * v).sum()).collect();
    for _ in 0..10_000 {
        let mut moved = false;
        for k in 0..nb {
            if norms[k] == 0.0 {
                continue;
            }
            let ax: f64 = rows[k].iter().map(|&(c, v)| v * x[c]).sum();
            let lo = ineq.lower[k] + margin[k];
            let hi = ineq.upper[k] - margin[k];
            let shift = if ax < lo {
                lo - ax
            } else if ax > hi {
                hi - ax
            } else {
                continue;
            };
            for &(c, v) in &rows[k] {
                x[c] += shift * v / norms[k];
            }
            moved = true;
        }
        if !moved {
            return Ok(x);
        }
    }
    let (_, sl, sr) = slacks(ineq, &x);
    if is_interior(&sl, &sr) {
        Ok(x)
    } else {
        Err(Error::InvalidParameter("no strictly interior start point found".into()))
    }
}

/// `v * factor`, snapped to `target` when within rounding of it.
fn shrink_towards(v: f64, factor: f64, target: f64) -> f64 {
    let next = v * factor;
    if next <= target * (1.0 + 1e-9) {
        target
    } else {
        next
    }
}

/// Runs the outer penalty/barrier homotopy with Newton inner iterations.
pub fn solve(nlp: &dyn NlpModel, x0: &[f64], config: &IpmConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let (n, m) = (nlp.n_x(), nlp.n_c());
    if x0.len() != n {
        return Err(Error::Dimension(format!("start point has {} entries, expected {n}", x0.len())));
    }
    let ineq = nlp.inequalities();
    ineq.validate(n)?;
    let mu_target = config.mu_target.unwrap_or(config.tol);
    if !(config.tol > 0.0 && config.omega_target > 0.0 && mu_target > 0.0) {
        return Err(Error::InvalidParameter("tolerance and targets must be positive".into()));
    }
    if !(config.shrink > 0.0 && config.shrink < 1.0) {
        return Err(Error::InvalidParameter(format!("shrink factor {}", config.shrink)));
    }
    let nb = ineq.len();
    let x = make_interior(ineq, x0, config.bound_push)?;
    let omega = config.omega0.max(config.omega_target);
    let mu = config.mu0.max(mu_target);
    let (_, sl, sr) = slacks(ineq, &x);
    let init_z =
        |s: &[f64]| -> Vec<f64> { (0..nb).map(|k| if s[k].is_finite() { mu * ineq.weights[k] / s[k] } else { 0.0 }).collect() };
    let mut state = IpmState {
        x,
        y: vec![0.0; m],
        z_l: init_z(&sl),
        z_r: init_z(&sr),
        omega,
        mu,
        iter: 0,
    };
    let mut trace = Vec::new();
    let mut merit_history = Vec::new();
    let mut last_shift = 0.0;
    let mut kkt_inf = f64::INFINITY;
    let mut outer = 0;
    let finish = |status, state: IpmState, outer, kkt_inf, merit_history, trace, message: Option<String>| SolveReport {
        status,
        inner_iters: state.iter,
        state,
        outer_iters: outer,
        kkt_inf,
        merit_history,
        trace,
        wall_time_s: start.elapsed().as_secs_f64(),
        message,
    };

    while outer < config.max_outer {
        outer += 1;
        let at_targets = state.omega <= config.omega_target && state.mu <= mu_target;
        // stage tolerance follows the parameters still being decreased
        let moving = |v: f64, target: f64| if v > target { v } else { 0.0 };
        let stage = moving(state.omega, config.omega_target).max(moving(state.mu, mu_target));
        let inner_tol = if at_targets { config.tol } else { config.tol.max(0.1 * stage) };
        let mut inner = 0;
        let mut acceptable_run = 0;
        loop {
            let r = match kkt_residuals(nlp, &state) {
                Ok(r) => r,
                Err(e) => {
                    return Ok(finish(SolveStatus::NonFinite, state, outer, kkt_inf, merit_history, trace, Some(e.to_string())))
                }
            };
            kkt_inf = kkt_norms(nlp, &r).max();
            if kkt_inf <= inner_tol {
                break;
            }
            let acceptable = config.acceptable_tol.is_some_and(|a| kkt_inf <= a);
            acceptable_run = if acceptable { acceptable_run + 1 } else { 0 };
            if acceptable && (acceptable_run >= config.acceptable_iter || inner == config.max_inner) {
                if !at_targets {
                    break;
                }
                return Ok(finish(SolveStatus::Acceptable, state, outer, kkt_inf, merit_history, trace, None));
            }
            if inner == config.max_inner {
                let msg = format!("inner iteration limit at omega={:e}, mu={:e}", state.omega, state.mu);
                return Ok(finish(SolveStatus::MaxIterations, state, outer, kkt_inf, merit_history, trace, Some(msg)));
            }
            let step = match newton_step(nlp, &state, last_shift) {
                Ok(s) => s,
                Err(e) => {
                    let status = match e {
                        Error::NonFinite(_) => SolveStatus::NonFinite,
                        _ => SolveStatus::FactorizationFailure,
                    };
                    return Ok(finish(status, state, outer, kkt_inf, merit_history, trace, Some(e.to_string())));
                }
            };
            // curvature below the definiteness tolerance can give ascent or
            // badly scaled directions; larger forced shifts are tried then
            let mut best: Option<(Step, f64, f64)> = None;
            let mut candidate = step;
            let mut s_max;
            let mut retry = 0;
            loop {
                s_max = fraction_to_boundary(ineq, &state, &candidate, config.kappa);
                let accepted = line_search(nlp, &state, &candidate, s_max)?.filter(|&s| s > 0.0);
                let mut good = false;
                if let Some(s) = accepted {
                    good = s >= TINY_STEP * s_max;
                    let trial: Vec<f64> = state.x.iter().zip(&candidate.dx).map(|(x, d)| x + s * d).collect();
                    let phi = merit(nlp, &trial, state.omega, state.mu);
                    if phi.is_finite() && best.as_ref().is_none_or(|b| phi < b.2) {
                        best = Some((candidate.clone(), s, phi));
                    }
                }
                if good || retry == MAX_RETRIES {
                    break;
                }
                retry += 1;
                let min_shift = candidate.shift.max(SHIFT_MIN) * 10f64.powi(retry as i32);
                candidate = match newton_step_shifted(nlp, &state, last_shift, min_shift) {
                    Ok(s) => s,
                    Err(_) => break,
                };
            }
            let (step, s) = match best {
                Some((step, s, _)) => (step, s),
                None if acceptable && !at_targets => break,
                None if acceptable => {
                    return Ok(finish(SolveStatus::Acceptable, state, outer, kkt_inf, merit_history, trace, None))
                }
                None => {
                    return Ok(finish(
                        SolveStatus::LineSearchFailure,
                        state,
                        outer,
                        kkt_inf,
                        merit_history,
                        trace,
                        Some(format!("no merit decrease (s_max={s_max:e})")),
                    ))
                }
            };
            // a shifted step cut back by the line search asks for more regularization next time
            last_shift = if step.shift > 0.0 && s < SHORT_STEP * s_max {
                SHIFT_GROWTH * step.shift
            } else {
                step.shift
            };
            for i in 0..n {
                state.x[i] += s * step.dx[i];
            }
            for i in 0..m {
                state.y[i] += s * step.dy[i];
            }
            for k in 0..nb {
                state.z_l[k] += s * step.dz_l[k];
                state.z_r[k] += s * step.dz_r[k];
            }
            let (_, sl, sr) = slacks(ineq, &state.x);
            assert!(is_interior(&sl, &sr), "accepted iterate left the interior");
            if config.z_safeguard {
                for k in 0..nb {
                    let w = state.mu * ineq.weights[k];
                    if sl[k].is_finite() {
                        state.z_l[k] = state.z_l[k].clamp(w / (1e10 * sl[k]), 1e10 * w / sl[k]);
                    }
                    if sr[k].is_finite() {
                        state.z_r[k] = state.z_r[k].clamp(w / (1e10 * sr[k]), 1e10 * w / sr[k]);
                    }
                }
            }
            state.iter += 1;
            inner += 1;
            let phi = merit(nlp, &state.x, state.omega, state.mu);
            merit_history.push((outer, phi));
            trace.push(TraceRow {
                iter: state.iter,
                outer,
                omega: state.omega,
                mu: state.mu,
                kkt_inf,
                merit: phi,
                step_size: s,
                shift: step.shift,
            });
        }
        if at_targets {
            return Ok(finish(SolveStatus::Converged, state, outer, kkt_inf, merit_history, trace, None));
        }
        state.omega = shrink_towards(state.omega, config.shrink, config.omega_target);
        state.mu = shrink_towards(state.mu, config.shrink, mu_target);
    }
    Ok(finish(
        SolveStatus::MaxIterations,
        state,
        outer,
        kkt_inf,
        merit_history,
        trace,
        Some("outer iteration limit".into()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::DenseNlp;
    use crate::sparse::Csr;
    use std::sync::Arc;

    fn quadratic(center: Vec<f64>) -> DenseNlp {
        let n = center.len();
        let c2 = center.clone();
        let mut nlp =
            DenseNlp::new(n, Arc::new(move |x| 0.5 * x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>()));
        nlp.grad = Some(Arc::new(move |x, g| {
            for i in 0..x.len() {
                g[i] = x[i] - c2[i];
            }
        }));
        nlp.hess_f = Some(Arc::new(move |_, h| {
            h.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                h[i * n + i] = 1.0;
            }
        }));
        nlp
    }

    fn state(nlp: &dyn NlpModel, x: Vec<f64>, omega: f64, mu: f64) -> IpmState {
        let nb = nlp.inequalities().len();
        IpmState {
            y: vec![0.0; nlp.n_c()],
            z_l: vec![mu; nb],
            z_r: vec![mu; nb],
            x,
            omega,
            mu,
            iter: 0,
        }
    }

    #[test]
    fn gradient_block_zero_at_origin() {
        let nlp = quadratic(vec![0.0, 0.0]);
        let r = kkt_residuals(&nlp, &state(&nlp, vec![0.0, 0.0], 1.0, 0.0)).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn equality_block_vanishes_for_penalty_multiplier() {
        let mut nlp = quadratic(vec![0.0]);
        nlp.n_c = 1;
        nlp.c = Arc::new(|x, o| o[0] = x[0]);
        let x = 0.7;
        let mut st = state(&nlp, vec![x], 0.5, 0.0);
        st.y = vec![-x / 0.5];
        let r = kkt_residuals(&nlp, &st).unwrap();
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn newton_examples() {
        let mut nlp = quadratic(vec![1.0]);
        nlp.ineq = LinearIneq {
            a: Csr::from_dense(1, 1, &[1.0]),
            lower: vec![-1e6],
            upper: vec![1e6],
            weights: vec![1.0],
        };
        let st = state(&nlp, vec![0.0], 1.0, 0.0);
        let step = newton_step(&nlp, &st, 0.0).unwrap();
        assert!((step.dx[0] - 1.0).abs() < 1e-9);
        let nlp = quadratic(vec![3.0, -2.0, 0.5]);
        let st = state(&nlp, vec![0.0; 3], 1.0, 0.0);
        let step = newton_step(&nlp, &st, 0.0).unwrap();
        assert!((step.dx[0] - 3.0).abs() < 1e-14 && (step.dx[1] + 2.0).abs() < 1e-14);
        let s_max = fraction_to_boundary(nlp.inequalities(), &st, &step, 0.995);
        assert_eq!(s_max, 1.0);
        assert_eq!(line_search(&nlp, &st, &step, s_max).unwrap(), Some(1.0));
        let ascent = Step {
            dx: step.dx.iter().map(|v| -v).collect(),
            ..step.clone()
        };
        assert_eq!(line_search(&nlp, &st, &ascent, 1.0).unwrap(), None);
    }

    #[test]
    fn fraction_to_boundary_examples() {
        let mut nlp = quadratic(vec![0.0]);
        nlp.ineq = LinearIneq {
            a: Csr::from_dense(1, 1, &[1.0]),
            lower: vec![-10.0],
            upper: vec![f64::INFINITY],
            weights: vec![1.0],
        };
        let mut st = state(&nlp, vec![0.0], 1.0, 1.0);
        st.z_l = vec![1.0];
        let step = Step {
            dx: vec![0.0],
            dy: vec![],
            dz_l: vec![-2.0],
            dz_r: vec![0.0],
            shift: 0.0,
        };
        assert!((fraction_to_boundary(nlp.inequalities(), &st, &step, 0.995) - 0.4975).abs() < 1e-15);
        let still = Step {
            dz_l: vec![0.0],
            ..step
        };
        assert_eq!(fraction_to_boundary(nlp.inequalities(), &st, &still, 0.995), 1.0);
    }

    #[test]
    fn eliminated_euler_car() {
        let mut nlp = DenseNlp::new(
            2,
            Arc::new(|x| 0.5 * (200.0 + x[0] * x[0] + x[1] * x[1] + (x[1] - x[0]).powi(2))),
        );
        nlp.grad = Some(Arc::new(|x, g| {
            g[0] = x[0] - (x[1] - x[0]);
            g[1] = x[1] + (x[1] - x[0]);
        }));
        let rep = solve(&nlp, &[14.0, 1.0], &IpmConfig::default()).unwrap();
        assert!(rep.converged());
        assert!(rep.state.x.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn infeasible_penalty_target() {
        // c(x) = x^2 + 1 has no root; the penalty minimizer is x = 0
        let mut nlp = DenseNlp::new(1, Arc::new(|_| 0.0));
        nlp.n_c = 1;
        nlp.c = Arc::new(|x, o| o[0] = x[0] * x[0] + 1.0);
        nlp.jac = Some(Arc::new(|x, o| o[0] = 2.0 * x[0]));
        let cfg = IpmConfig {
            omega_target: 1e-4,
            ..Default::default()
        };
        let rep = solve(&nlp, &[0.8], &cfg).unwrap();
        assert!(rep.converged(), "{:?}", rep.status);
        assert!(rep.state.x[0].abs() < 1e-6);
        assert!((rep.state.y[0] + 1.0 / 1e-4).abs() < 1e-3);
    }

    #[test]
    fn interior_projection() {
        let ineq = LinearIneq {
            a: Csr::from_dense(1, 2, &[-1.0, 1.0]),
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
            weights: vec![1.0],
        };
        let x = make_interior(&ineq, &[2.0, 1.0], 1e-2).unwrap();
        assert!(x[1] - x[0] > 0.0);
        assert!((x[0] + x[1] - 3.0).abs() < 1e-12);
    }
}
