//! Test instances: a circle intersection with an adjustable inconsistency,
//! and an integral-penalty discretization of a scalar optimal control
//! problem with linear finite elements.

use std::sync::Arc;

use crate::fem::points::gauss_legendre;
use crate::nlp::LinearIneq;
use crate::sparse::{Csr, Triplets};

use super::QppInstance;

/// `x_A = (0, sqrt 2)`.
pub const CIRCLE_XA: [f64; 2] = [0.0, std::f64::consts::SQRT_2];
/// `x_B = (1, 1)`.
pub const CIRCLE_XB: [f64; 2] = [1.0, 1.0];

/// `min -x1` with `c = [(x1 + eps)^2 + x2^2 - 2, (x1 - eps)^2 + x2^2 - 2]`,
/// `x1 >= 0`, `x2 - x1 >= 0`, from `x0 = (2, 1)`, `lambda0 = 0`.
pub fn circle(eps: f64, pval: f64) -> QppInstance {
    let mut t = Triplets::new(2, 2);
    t.push(0, 0, 1.0);
    t.push(1, 0, -1.0);
    t.push(1, 1, 1.0);
    QppInstance {
        n: 2,
        m: 2,
        f: Arc::new(|x| -x[0]),
        grad_f: Arc::new(|_, o| o.copy_from_slice(&[-1.0, 0.0])),
        hess_f: Arc::new(|_| Csr::zeros(2, 2)),
        c: Arc::new(move |x, o| {
            o[0] = (x[0] + eps).powi(2) + x[1] * x[1] - 2.0;
            o[1] = (x[0] - eps).powi(2) + x[1] * x[1] - 2.0;
        }),
        jac_c: Arc::new(move |x| {
            Csr::from_dense(2, 2, &[2.0 * (x[0] + eps), 2.0 * x[1], 2.0 * (x[0] - eps), 2.0 * x[1]])
        }),
        hess_c: Arc::new(|_, w| {
            let s = 2.0 * (w[0] + w[1]);
            Csr::from_dense(2, 2, &[s, 0.0, 0.0, s])
        }),
        g: LinearIneq {
            a: t.to_csr(),
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
            weights: vec![1.0, 1.0],
        },
        pval,
        x0: vec![2.0, 1.0],
        lambda0: vec![0.0, 0.0],
    }
}

/// Optimal value of `min int_0^5 y^2 + t u dt`, `y(0) = 0.5`,
/// `ydot = y^2/2 + u`, `y, u in [-1, 1]`. The minimizer is singular with
/// `y = 1/(2-t)` on `[0, 1]`, rides `y = 1` with `u = -1/2` up to
/// `t2 = 5 - 2 sqrt(2) asinh(1)`, and ends with `u = -1` reaching `y(5) = -1`.
pub const OCP_DISC_J_STAR: f64 = -7.532286231329963;

/// Integral-penalty discretization on `n_intervals` uniform intervals of
/// `[0, 5]` with continuous piecewise-linear `y` and discontinuous
/// piecewise-linear `u`, `q` Gauss-Legendre points per interval.
///
/// Variables of interval `i` are `[u+(t_i), u-(t_{i+1}), y(t_{i+1})]` at
/// offset `3 i`; `y(0) = 0.5` is fixed.
#[derive(Clone, Debug)]
pub struct OcpDisc {
    pub inst: QppInstance,
    pub n_intervals: usize,
    pub q: usize,
    pub h: f64,
}

pub const OCP_DISC_HORIZON: f64 = 5.0;
const Y0: f64 = 0.5;

#[derive(Clone, Copy)]
struct Node {
    interval: usize,
    s: f64,
    t: f64,
    alpha: f64,
}

/// Values of the local basis at a node: `(y_i, y_{i+1}, u+, u-)` indices
/// and weights; `y_0` has no index.
fn locals(nd: &Node, x: &[f64], h: f64) -> (f64, f64, f64, [Option<usize>; 4], [f64; 2]) {
    let i = nd.interval;
    let yi_idx = if i == 0 { None } else { Some(3 * i - 1) };
    let yi = yi_idx.map_or(Y0, |k| x[k]);
    let yj = x[3 * i + 2];
    let (up, um) = (x[3 * i], x[3 * i + 1]);
    let y = (1.0 - nd.s) * yi + nd.s * yj;
    let ydot = (yj - yi) / h;
    let u = (1.0 - nd.s) * up + nd.s * um;
    (y, ydot, u, [yi_idx, Some(3 * i + 2), Some(3 * i), Some(3 * i + 1)], [1.0 - nd.s, nd.s])
}

pub fn ocp_disc(n_intervals: usize, q: usize, pval: f64) -> OcpDisc {
    let n = 3 * n_intervals;
    let h = OCP_DISC_HORIZON / n_intervals as f64;
    let (gx, gw) = gauss_legendre(q);
    let mut nodes = Vec::with_capacity(n_intervals * q);
    for i in 0..n_intervals {
        for k in 0..q {
            let s = 0.5 * (gx[k] + 1.0);
            nodes.push(Node {
                interval: i,
                s,
                t: (i as f64 + s) * h,
                alpha: 0.5 * h * gw[k],
            });
        }
    }
    let nodes = Arc::new(nodes);
    let m = nodes.len();

    let nd = nodes.clone();
    let f = Arc::new(move |x: &[f64]| {
        nd.iter()
            .map(|p| {
                let (y, _, u, _, _) = locals(p, x, h);
                p.alpha * (y * y + p.t * u)
            })
            .sum()
    });
    let nd = nodes.clone();
    let grad_f = Arc::new(move |x: &[f64], o: &mut [f64]| {
        o.iter_mut().for_each(|v| *v = 0.0);
        for p in nd.iter() {
            let (y, _, _, idx, b) = locals(p, x, h);
            for (k, &bk) in b.iter().enumerate() {
                if let Some(j) = idx[k] {
                    o[j] += p.alpha * 2.0 * y * bk;
                }
                o[idx[k + 2].unwrap()] += p.alpha * p.t * bk;
            }
        }
    });
    let nd = nodes.clone();
    let hess_f = Arc::new(move |x: &[f64]| {
        let mut t = Triplets::new(n, n);
        for p in nd.iter() {
            let (_, _, _, idx, b) = locals(p, x, h);
            push_outer(&mut t, &idx[..2], &b, 2.0 * p.alpha);
        }
        t.to_csr()
    });
    let nd = nodes.clone();
    let c = Arc::new(move |x: &[f64], o: &mut [f64]| {
        for (r, p) in nd.iter().enumerate() {
            let (y, ydot, u, _, _) = locals(p, x, h);
            o[r] = p.alpha.sqrt() * (0.5 * y * y + u - ydot);
        }
    });
    let nd = nodes.clone();
    let jac_c = Arc::new(move |x: &[f64]| {
        let mut t = Triplets::new(m, n);
        for (r, p) in nd.iter().enumerate() {
            let (y, _, _, idx, b) = locals(p, x, h);
            let sa = p.alpha.sqrt();
            let dy = [y * b[0] + 1.0 / h, y * b[1] - 1.0 / h];
            for k in 0..2 {
                if let Some(j) = idx[k] {
                    t.push(r, j, sa * dy[k]);
                }
                t.push(r, idx[k + 2].unwrap(), sa * b[k]);
            }
        }
        t.to_csr()
    });
    let nd = nodes.clone();
    let hess_c = Arc::new(move |x: &[f64], w: &[f64]| {
        let mut t = Triplets::new(n, n);
        for (r, p) in nd.iter().enumerate() {
            let (_, _, _, idx, b) = locals(p, x, h);
            push_outer(&mut t, &idx[..2], &b, w[r] * p.alpha.sqrt());
        }
        t.to_csr()
    });
    let mut a = Triplets::new(n, n);
    (0..n).for_each(|j| a.push(j, j, 1.0));
    let inst = QppInstance {
        n,
        m,
        f,
        grad_f,
        hess_f,
        c,
        jac_c,
        hess_c,
        g: LinearIneq {
            a: a.to_csr(),
            lower: vec![-1.0; n],
            upper: vec![1.0; n],
            weights: vec![1.0; n],
        },
        pval,
        x0: vec![0.0; n],
        lambda0: vec![0.0; m],
    };
    OcpDisc {
        inst,
        n_intervals,
        q,
        h,
    }
}

fn push_outer(t: &mut Triplets, idx: &[Option<usize>], b: &[f64; 2], scale: f64) {
    for (ka, a) in idx.iter().enumerate() {
        for (kb, bb) in idx.iter().enumerate() {
            if let (Some(a), Some(bb)) = (a, bb) {
                t.push(*a, *bb, scale * b[ka] * b[kb]);
            }
        }
    }
}

impl OcpDisc {
    /// `f(x) - J*`.
    pub fn gap(&self, x: &[f64]) -> f64 {
        (self.inst.f)(x) - OCP_DISC_J_STAR
    }

    /// `|c(x)|^2`, the quadrature of the squared path residual.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.inst.eval_c(x).iter().map(|v| v * v).sum()
    }

    /// `(t, y, u)` at the mesh nodes, with left and right control limits.
    pub fn nodes(&self, x: &[f64]) -> Vec<(f64, f64, f64, f64)> {
        let nn = self.n_intervals;
        (0..=nn)
            .map(|i| {
                let y = if i == 0 { Y0 } else { x[3 * i - 1] };
                let left = if i == 0 { f64::NAN } else { x[3 * (i - 1) + 1] };
                let right = if i == nn { f64::NAN } else { x[3 * i] };
                (i as f64 * self.h, y, left, right)
            })
            .collect()
    }
}
