//! Built-in problems addressed by name.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::sync::Arc;

use super::{Bound, Derivatives, OcpProblem, ReferenceKind, ReferenceSolution};
use crate::error::{Error, Result};
use crate::fem::points::gauss_legendre;

const NAMES: [&str; 11] = [
    "car",
    "col_counter",
    "box_counter",
    "vdp",
    "singular_regulator",
    "aly_chan",
    "pendulum_idx1",
    "pendulum_idx2",
    "pendulum_idx3",
    "mining",
    "commute_train",
];

/// Gravity constant of the pendulum problems.
pub const GRAVITY: f64 = 9.81;
/// Sharpness of the softplus smoothing in the commute-train cost.
pub const SOFTPLUS_SHARPNESS: f64 = 1e3;
/// Route length of the commute-train problem.
pub const COMMUTE_LENGTH: f64 = 1e4;

pub fn corpus_names() -> &'static [&'static str] {
    &NAMES
}

/// Looks up a problem and its reference solution, if one is known.
pub fn corpus_get(name: &str) -> Result<(OcpProblem, Option<ReferenceSolution>)> {
    let r = match name {
        "car" => car(),
        "col_counter" => col_counter(),
        "box_counter" => box_counter(),
        "vdp" => (vdp(), None),
        "singular_regulator" => singular_regulator(),
        "aly_chan" => aly_chan(),
        "pendulum_idx1" => (pendulum(1), None),
        "pendulum_idx2" => (pendulum(2), None),
        "pendulum_idx3" => (pendulum(3), None),
        "mining" => mining(),
        "commute_train" => (commute_train(), None),
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                valid: NAMES.join(", "),
            })
        }
    };
    Ok(r)
}

fn base(name: &str, horizon: f64, n_y: usize, n_u: usize, n_alg: usize, n_b: usize) -> OcpProblem {
    OcpProblem {
        name: name.to_string(),
        horizon,
        n_y,
        n_u,
        n_alg,
        n_b,
        mayer: Arc::new(|_, _| 0.0),
        lagrange: None,
        boundary: Arc::new(|_, _, _| {}),
        ode: Arc::new(|_, _, _, _| {}),
        alg: Arc::new(|_, _, _, _| {}),
        y_lower: vec![Bound::Free; n_y],
        y_upper: vec![Bound::Free; n_y],
        u_lower: vec![Bound::Free; n_u],
        u_upper: vec![Bound::Free; n_u],
        derivatives: Derivatives::default(),
        lagrange_rule: None,
        conversion_note: None,
    }
}

/// Composite 16-point Gauss-Legendre integral on 40 panels.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre(16);
    let panels = 40;
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let c = a + (k as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * 0.5 * h * f(c + 0.5 * h * xi);
        }
    }
    s
}

fn car() -> (OcpProblem, Option<ReferenceSolution>) {
    let mut p = base("car", 3.0, 1, 1, 0, 2);
    p.lagrange = Some(Arc::new(|y, u, _| y[0] * y[0] + u[0] * u[0]));
    p.boundary = Arc::new(|y0, yt, o| {
        o[0] = y0[0] - 10.0;
        o[1] = yt[0] - 20.0;
    });
    p.ode = Arc::new(|y, u, _, o| o[0] = u[0] - y[0]);
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.iter_mut().for_each(|v| *v = 0.0))),
        lagrange_grad: Some(Arc::new(|y, u, _, o| {
            o[0] = 2.0 * y[0];
            o[1] = 2.0 * u[0];
        })),
        boundary_jac: Some(Arc::new(|_, _, o| o.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]))),
        ode_jac: Some(Arc::new(|_, _, _, o| o.copy_from_slice(&[-1.0, 1.0]))),
        alg_jac: None,
    };
    let r = 3.0 * SQRT_2;
    let b = (20.0 - 10.0 * r.cosh()) / r.sinh();
    let y = move |t: f64| 10.0 * (SQRT_2 * t).cosh() + b * (SQRT_2 * t).sinh();
    let ydot = move |t: f64| SQRT_2 * (10.0 * (SQRT_2 * t).sinh() + b * (SQRT_2 * t).cosh());
    let u = move |t: f64| ydot(t) + y(t);
    let j = integrate(|t| y(t).powi(2) + u(t).powi(2), 0.0, 3.0);
    let reference = ReferenceSolution {
        kind: ReferenceKind::Analytic,
        y_star: Arc::new(move |t| vec![y(t)]),
        u_star: Arc::new(move |t| vec![u(t)]),
        objective_star: j,
    };
    (p, Some(reference))
}

fn col_counter() -> (OcpProblem, Option<ReferenceSolution>) {
    let mut p = base("col_counter", 1.0, 3, 1, 1, 3);
    p.mayer = Arc::new(|_, yt| yt[2]);
    p.boundary = Arc::new(|y0, _, o| o.copy_from_slice(y0));
    p.ode = Arc::new(|y, u, _, o| {
        o[0] = u[0];
        o[1] = -u[0];
        o[2] = y[0];
    });
    p.alg = Arc::new(|y, _, _, o| o[0] = y[0] * y[0] - y[1]);
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.copy_from_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]))),
        lagrange_grad: None,
        boundary_jac: Some(Arc::new(|_, _, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..3 {
                o[i * 6 + i] = 1.0;
            }
        })),
        ode_jac: Some(Arc::new(|_, _, _, o| {
            #[rustfmt::skip]
            o.copy_from_slice(&[
                0.0, 0.0, 0.0, 1.0,
                0.0, 0.0, 0.0, -1.0,
                1.0, 0.0, 0.0, 0.0,
            ]);
        })),
        alg_jac: Some(Arc::new(|y, _, _, o| o.copy_from_slice(&[2.0 * y[0], -1.0, 0.0, 0.0]))),
    };
    let reference = ReferenceSolution {
        kind: ReferenceKind::Analytic,
        y_star: Arc::new(|_| vec![0.0; 3]),
        u_star: Arc::new(|_| vec![0.0]),
        objective_star: 0.0,
    };
    (p, Some(reference))
}

/// Right-continuous sign of `t - 1`.
fn step_sign(t: f64) -> f64 {
    if t >= 1.0 {
        1.0
    } else {
        -1.0
    }
}

fn box_counter() -> (OcpProblem, Option<ReferenceSolution>) {
    let mut p = base("box_counter", 2.0, 1, 1, 1, 1);
    p.mayer = Arc::new(|_, yt| yt[0]);
    p.boundary = Arc::new(|y0, _, o| o[0] = y0[0] - 1.0);
    p.ode = Arc::new(|_, u, _, o| o[0] = u[0]);
    p.alg = Arc::new(|_, u, t, o| o[0] = u[0] - step_sign(t));
    p.u_lower = vec![Bound::Const(-1.0)];
    p.u_upper = vec![Bound::Const(1.0)];
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.copy_from_slice(&[0.0, 1.0]))),
        lagrange_grad: None,
        boundary_jac: Some(Arc::new(|_, _, o| o.copy_from_slice(&[1.0, 0.0]))),
        ode_jac: Some(Arc::new(|_, _, _, o| o.copy_from_slice(&[0.0, 1.0]))),
        alg_jac: Some(Arc::new(|_, _, _, o| o.copy_from_slice(&[0.0, 1.0]))),
    };
    let reference = ReferenceSolution {
        kind: ReferenceKind::Analytic,
        y_star: Arc::new(|t| vec![(t - 1.0).abs()]),
        u_star: Arc::new(|t| vec![step_sign(t)]),
        objective_star: 1.0,
    };
    (p, Some(reference))
}

fn vdp() -> OcpProblem {
    let mut p = base("vdp", 4.0, 2, 1, 0, 2);
    p.lagrange = Some(Arc::new(|y, _, _| 0.5 * (y[0] * y[0] + y[1] * y[1])));
    p.boundary = Arc::new(|y0, _, o| {
        o[0] = y0[0];
        o[1] = y0[1] - 1.0;
    });
    p.ode = Arc::new(|y, u, _, o| {
        o[0] = y[1];
        o[1] = -y[0] + y[1] * (1.0 - y[0] * y[0]) + u[0];
    });
    p.u_lower = vec![Bound::Const(-1.0)];
    p.u_upper = vec![Bound::Const(1.0)];
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.iter_mut().for_each(|v| *v = 0.0))),
        lagrange_grad: Some(Arc::new(|y, _, _, o| o.copy_from_slice(&[y[0], y[1], 0.0]))),
        boundary_jac: Some(Arc::new(|_, _, o| o.copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]))),
        ode_jac: Some(Arc::new(|y, _, _, o| {
            o.copy_from_slice(&[0.0, 1.0, 0.0, -1.0 - 2.0 * y[0] * y[1], 1.0 - y[0] * y[0], 1.0])
        })),
        alg_jac: None,
    };
    p
}

/// Double integrator `y1' = y2, y2' = u`, `|u| <= 1`, from `y(0) = (0, 1)`
/// with running cost `y2^2 + eta y1^2`.
fn double_integrator(name: &str, horizon: f64, eta: f64) -> OcpProblem {
    let mut p = base(name, horizon, 2, 1, 0, 2);
    p.lagrange = Some(Arc::new(move |y, _, _| y[1] * y[1] + eta * y[0] * y[0]));
    p.boundary = Arc::new(|y0, _, o| {
        o[0] = y0[0];
        o[1] = y0[1] - 1.0;
    });
    p.ode = Arc::new(|y, u, _, o| {
        o[0] = y[1];
        o[1] = u[0];
    });
    p.u_lower = vec![Bound::Const(-1.0)];
    p.u_upper = vec![Bound::Const(1.0)];
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.iter_mut().for_each(|v| *v = 0.0))),
        lagrange_grad: Some(Arc::new(move |y, _, _, o| o.copy_from_slice(&[2.0 * eta * y[0], 2.0 * y[1], 0.0]))),
        boundary_jac: Some(Arc::new(|_, _, o| o.copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]))),
        ode_jac: Some(Arc::new(|_, _, _, o| o.copy_from_slice(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]))),
        alg_jac: None,
    };
    p
}

/// Switching time of the singular regulator on horizon `horizon`: the
/// bang arc `u = -1` meets the singular arc `u = y1` whose state reaches
/// `y2(T) = 0`.
pub fn singular_regulator_switch(horizon: f64) -> f64 {
    let g = |t: f64| (2.0 * t - 0.5 * t * t - 1.0) - (1.0 - 0.5 * t * t) * (2.0 * (horizon - t)).exp();
    let (mut a, mut b) = (1.0, 2.0f64.sqrt());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn singular_regulator() -> (OcpProblem, Option<ReferenceSolution>) {
    let horizon = 5.0;
    let p = double_integrator("singular_regulator", horizon, 1.0);
    let t1 = singular_regulator_switch(horizon);
    let (y1s, y2s) = (t1 - 0.5 * t1 * t1, 1.0 - t1);
    let a = 0.5 * (y1s + y2s) * (-t1).exp();
    let b = 0.5 * (y1s - y2s) * t1.exp();
    let state = move |t: f64| {
        if t < t1 {
            [t - 0.5 * t * t, 1.0 - t]
        } else {
            [a * t.exp() + b * (-t).exp(), a * t.exp() - b * (-t).exp()]
        }
    };
    let control = move |t: f64| if t < t1 { -1.0 } else { state(t)[0] };
    let cost = |t: f64| {
        let s = state(t);
        s[0] * s[0] + s[1] * s[1]
    };
    let j = integrate(cost, 0.0, t1) + integrate(cost, t1, horizon);
    let reference = ReferenceSolution {
        kind: ReferenceKind::Analytic,
        y_star: Arc::new(move |t| state(t).to_vec()),
        u_star: Arc::new(move |t| vec![control(t)]),
        objective_star: j,
    };
    (p, Some(reference))
}

fn aly_chan() -> (OcpProblem, Option<ReferenceSolution>) {
    let p = double_integrator("aly_chan", FRAC_PI_2, -1.0);
    let reference = ReferenceSolution {
        kind: ReferenceKind::Analytic,
        y_star: Arc::new(|t| vec![t.sin(), t.cos()]),
        u_star: Arc::new(|t| vec![-t.sin()]),
        objective_star: 0.0,
    };
    (p, Some(reference))
}

/// Pendulum with states `(chi1, chi2, v1, v2)` and controls `(u, xi)`.
/// `index` selects the algebraic equation: 1 the beam-force equation,
/// 2 the velocity constraint `chi . v = 0`, 3 the length constraint.
fn pendulum(index: u8) -> OcpProblem {
    let name = format!("pendulum_idx{index}");
    let mut p = base(&name, 3.0, 4, 2, 1, 8);
    p.lagrange = Some(Arc::new(|_, u, _| u[0] * u[0]));
    p.boundary = Arc::new(|y0, yt, o| {
        o[0] = y0[0] - 1.0;
        o[1] = y0[1];
        o[2] = y0[2];
        o[3] = y0[3];
        o[4] = yt[0];
        o[5] = yt[1] + 1.0;
        o[6] = yt[2];
        o[7] = yt[3];
    });
    p.ode = Arc::new(|y, u, _, o| {
        o[0] = y[2];
        o[1] = y[3];
        o[2] = -2.0 * y[0] * u[1] - y[1] * u[0];
        o[3] = -GRAVITY - 2.0 * y[1] * u[1] + y[0] * u[0];
    });
    let (alg, alg_jac): (super::PointFn, super::PointFn) = match index {
        1 => (
            Arc::new(|y, u, _, o| o[0] = y[2] * y[2] + y[3] * y[3] - 2.0 * u[1] - GRAVITY * y[1]),
            Arc::new(|y, _, _, o| o.copy_from_slice(&[0.0, -GRAVITY, 2.0 * y[2], 2.0 * y[3], 0.0, -2.0])),
        ),
        2 => (
            Arc::new(|y, _, _, o| o[0] = y[0] * y[2] + y[1] * y[3]),
            Arc::new(|y, _, _, o| o.copy_from_slice(&[y[2], y[3], y[0], y[1], 0.0, 0.0])),
        ),
        _ => (
            Arc::new(|y, _, _, o| o[0] = y[0] * y[0] + y[1] * y[1] - 1.0),
            Arc::new(|y, _, _, o| o.copy_from_slice(&[2.0 * y[0], 2.0 * y[1], 0.0, 0.0, 0.0, 0.0])),
        ),
    };
    p.alg = alg;
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.iter_mut().for_each(|v| *v = 0.0))),
        lagrange_grad: Some(Arc::new(|_, u, _, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            o[4] = 2.0 * u[0];
        })),
        boundary_jac: Some(Arc::new(|_, _, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..8 {
                o[i * 8 + i] = 1.0;
            }
        })),
        ode_jac: Some(Arc::new(|y, u, _, o| {
            #[rustfmt::skip]
            o.copy_from_slice(&[
                0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
                0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
                -2.0 * u[1], -u[0], 0.0, 0.0, -y[1], -2.0 * y[0],
                u[0], -2.0 * u[1], 0.0, 0.0, y[0], -2.0 * y[1],
            ]);
        })),
        alg_jac: Some(alg_jac),
    };
    p.conversion_note = Some(
        "beam force enters the force balance as -2 chi xi so that the index-1 equation \
         |chi'|^2 - 2 xi - g chi2 = 0 is the second derivative of |chi|^2 = 1"
            .into(),
    );
    p
}

fn mining() -> (OcpProblem, Option<ReferenceSolution>) {
    let mut p = base("mining", 10.0, 2, 1, 0, 2);
    p.mayer = Arc::new(|_, yt| -(0.5 * yt[0] + yt[1]));
    p.boundary = Arc::new(|y0, _, o| {
        o[0] = y0[0] - 1.0;
        o[1] = y0[1];
    });
    p.ode = Arc::new(|y, u, _, o| {
        o[0] = 0.1 * y[0] * u[0];
        o[1] = 0.1 * y[0] * (1.0 - u[0]);
    });
    p.u_lower = vec![Bound::Const(0.0)];
    p.u_upper = vec![Bound::Const(1.0)];
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.copy_from_slice(&[0.0, 0.0, -0.5, -1.0]))),
        lagrange_grad: None,
        boundary_jac: Some(Arc::new(|_, _, o| o.copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]))),
        ode_jac: Some(Arc::new(|y, u, _, o| {
            o.copy_from_slice(&[0.1 * u[0], 0.0, 0.1 * y[0], 0.1 * (1.0 - u[0]), 0.0, -0.1 * y[0]])
        })),
        alg_jac: None,
    };
    p.conversion_note = Some("maximization of net worth stored as minimization of its negative".into());
    let e = 0.5f64.exp();
    let reference = ReferenceSolution {
        kind: ReferenceKind::Analytic,
        y_star: Arc::new(move |t| {
            if t < 5.0 {
                vec![(0.1 * t).exp(), 0.0]
            } else {
                vec![e, 0.1 * e * (t - 5.0)]
            }
        }),
        u_star: Arc::new(|t| vec![if t < 5.0 { 1.0 } else { 0.0 }]),
        objective_star: -e,
    };
    (p, Some(reference))
}

/// `ln(1 + exp(k a)) / k` and its derivative, evaluated without overflow.
fn softplus(a: f64) -> (f64, f64) {
    let z = SOFTPLUS_SHARPNESS * a;
    let v = if z > 0.0 { a + (-z).exp().ln_1p() / SOFTPLUS_SHARPNESS } else { z.exp().ln_1p() / SOFTPLUS_SHARPNESS };
    let d = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
    (v, d)
}

fn commute_train() -> OcpProblem {
    let mut p = base("commute_train", 600.0, 3, 1, 0, 5);
    p.mayer = Arc::new(|_, yt| yt[2]);
    p.boundary = Arc::new(|y0, yt, o| {
        o[0] = y0[0];
        o[1] = y0[1];
        o[2] = y0[2];
        o[3] = yt[0] - COMMUTE_LENGTH;
        o[4] = yt[1];
    });
    p.ode = Arc::new(|y, u, _, o| {
        let (s, _) = softplus(u[0]);
        o[0] = y[1];
        o[1] = u[0];
        o[2] = y[1] + 0.01 * y[1] * y[1] + 100.0 * s * s;
    });
    p.y_upper = vec![Bound::Free, Bound::Const(20.0), Bound::Free];
    p.u_lower = vec![Bound::Const(-0.25)];
    p.u_upper = vec![Bound::Const(0.2)];
    p.derivatives = Derivatives {
        mayer_grad: Some(Arc::new(|_, _, o| o.copy_from_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]))),
        lagrange_grad: None,
        boundary_jac: Some(Arc::new(|_, _, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            for (r, c) in [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)] {
                o[r * 6 + c] = 1.0;
            }
        })),
        ode_jac: Some(Arc::new(|y, u, _, o| {
            let (s, d) = softplus(u[0]);
            #[rustfmt::skip]
            o.copy_from_slice(&[
                0.0, 1.0, 0.0, 0.0,
                0.0, 0.0, 0.0, 1.0,
                0.0, 1.0 + 0.02 * y[1], 0.0, 200.0 * s * d,
            ]);
        })),
        alg_jac: None,
    };
    p.conversion_note = Some(format!(
        "max(0,a)^2 replaced by softplus(a)^2 with sharpness {SOFTPLUS_SHARPNESS}; route length {COMMUTE_LENGTH}"
    ));
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::fd;

    #[test]
    fn car_example() {
        let (p, r) = corpus_get("car").unwrap();
        assert_eq!((p.horizon, p.n_y, p.n_u), (3.0, 1, 1));
        let mut b = [0.0; 2];
        (p.boundary)(&[10.0], &[20.0], &mut b);
        assert_eq!(b, [0.0, 0.0]);
        let r = r.unwrap();
        let b_coef = (20.0 - 10.0 * (3.0 * SQRT_2).cosh()) / (3.0 * SQRT_2).sinh();
        assert!((b_coef + 9.429228006196789).abs() < 1e-12);
        assert!(((r.y_star)(3.0)[0] - 20.0).abs() < 1e-10);
        assert!(((r.y_star)(0.0)[0] - 10.0).abs() < 1e-14);
    }

    #[test]
    fn counterexamples() {
        let (p, r) = corpus_get("col_counter").unwrap();
        assert_eq!((p.n_y, p.n_u), (3, 1));
        let r = r.unwrap();
        assert_eq!((r.y_star)(0.4), vec![0.0; 3]);
        assert_eq!(r.objective_star, 0.0);
        let (_, r) = corpus_get("box_counter").unwrap();
        let r = r.unwrap();
        assert_eq!((r.y_star)(0.25), vec![0.75]);
        assert_eq!((r.u_star)(0.25), vec![-1.0]);
        assert_eq!((r.u_star)(1.5), vec![1.0]);
    }

    #[test]
    fn unknown_name_lists_registry() {
        let e = corpus_get("rocket").unwrap_err().to_string();
        for n in NAMES {
            assert!(e.contains(n), "{e}");
        }
    }

    #[test]
    fn singular_regulator_switch_time() {
        let t1 = singular_regulator_switch(5.0);
        assert!((t1 - 1.413_764_087_630_064_1).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        for n in NAMES {
            let (a, _) = corpus_get(n).unwrap();
            let (b, _) = corpus_get(n).unwrap();
            let y: Vec<f64> = (0..a.n_y).map(|i| 0.3 + i as f64).collect();
            let u: Vec<f64> = (0..a.n_u).map(|i| -0.1 * i as f64).collect();
            let mut fa = vec![0.0; a.n_f()];
            let mut fb = vec![0.0; b.n_f()];
            a.residual(&y, &y, &u, 0.4, &mut fa);
            b.residual(&y, &y, &u, 0.4, &mut fb);
            assert_eq!(fa, fb, "{n}");
        }
    }

    /// Analytic Jacobians agree with finite differences of the callbacks.
    #[test]
    fn analytic_jacobians_match_differences() {
        for n in NAMES {
            let (p, _) = corpus_get(n).unwrap();
            let nz = p.n_z();
            let z: Vec<f64> = (0..nz).map(|i| 0.2 + 0.37 * i as f64).collect();
            let (y, u) = z.split_at(p.n_y);
            let mut exact = vec![0.0; p.n_f() * nz];
            p.residual_jac(y, u, 0.3, &mut exact);
            let mut approx = vec![0.0; p.n_f() * nz];
            fd::jacobian(
                |zz, o| {
                    let (a, b) = zz.split_at(p.n_y);
                    let zero = vec![0.0; p.n_y];
                    p.residual(a, &zero, b, 0.3, o)
                },
                &z,
                p.n_f(),
                &mut approx,
            );
            for (a, b) in exact.iter().zip(&approx) {
                assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "{n}: {a} vs {b}");
            }
            let ends: Vec<f64> = (0..2 * p.n_y).map(|i| 0.1 * i as f64 - 0.2).collect();
            let (y0, yt) = ends.split_at(p.n_y);
            let mut bj = vec![0.0; p.n_b * 2 * p.n_y];
            p.boundary_jac(y0, yt, &mut bj);
            let mut bf = vec![0.0; p.n_b * 2 * p.n_y];
            fd::jacobian(
                |e, o| {
                    let (a, b) = e.split_at(p.n_y);
                    (p.boundary)(a, b, o)
                },
                &ends,
                p.n_b,
                &mut bf,
            );
            for (a, b) in bj.iter().zip(&bf) {
                assert!((a - b).abs() < 1e-6, "{n} boundary");
            }
            let mut mg = vec![0.0; 2 * p.n_y];
            p.mayer_grad(y0, yt, &mut mg);
            let mut mf = vec![0.0; 2 * p.n_y];
            fd::jacobian(
                |e, o| {
                    let (a, b) = e.split_at(p.n_y);
                    o[0] = (p.mayer)(a, b)
                },
                &ends,
                1,
                &mut mf,
            );
            for (a, b) in mg.iter().zip(&mf) {
                assert!((a - b).abs() < 1e-6, "{n} mayer");
            }
            if let Some(l) = &p.lagrange {
                let mut lg = vec![0.0; nz];
                p.lagrange_grad(y, u, 0.3, &mut lg);
                let mut lf = vec![0.0; nz];
                fd::jacobian(
                    |zz, o| {
                        let (a, b) = zz.split_at(p.n_y);
                        o[0] = l(a, b, 0.3)
                    },
                    &z,
                    1,
                    &mut lf,
                );
                for (a, b) in lg.iter().zip(&lf) {
                    assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{n} lagrange");
                }
            }
        }
    }

    #[test]
    fn softplus_tracks_positive_part() {
        for a in [-0.25, -0.01, 0.0, 0.01, 0.2] {
            let (s, d) = softplus(a);
            assert!((s - f64::max(a, 0.0)).abs() <= 0.7e-3);
            assert!((0.0..=1.0).contains(&d));
        }
    }
}
