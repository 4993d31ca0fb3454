//! Seeded property checks shared by the proptest suites and the acceptance
//! report. Each check draws its instance from `ChaCha8Rng` and returns the
//! violation as an error message.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajopt_core::fem::mesh::{make_uniform_mesh, Mesh};
use trajopt_core::fem::points::{chebyshev_lobatto, gauss_legendre};
use trajopt_core::fem::quadrature::gauss_legendre_rule;
use trajopt_core::fem::trajectory::Trajectory;
use trajopt_core::ipm::{kkt_residuals, newton_step, IpmState};
use trajopt_core::malm::{alm_solve, malm_solve, MalmConfig, QppInstance};
use trajopt_core::nlp::{DenseNlp, LinearIneq, NlpModel};
use trajopt_core::ocp::corpus_get;
use trajopt_core::sparse::Csr;
use trajopt_core::transcription::build_qpm;

pub type Check = Result<(), String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Mesh of 1 to 12 intervals with lengths varying by up to a factor 5.
fn random_mesh(r: &mut ChaCha8Rng) -> Mesh {
    let n = r.gen_range(1..=12);
    let scale = r.gen_range(0.5..5.0);
    let mut t = 0.0;
    let mut nodes = vec![0.0];
    for _ in 0..n {
        t += scale * r.gen_range(0.2..1.0);
        nodes.push(t);
    }
    Mesh::new(nodes).expect("increasing nodes")
}

fn matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// `M^T M + n I`, row-major.
fn spd(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let m = matrix(r, n, n);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = (0..n).map(|k| m[k * n + i] * m[k * n + j]).sum::<f64>();
        }
        q[i * n + i] += n as f64;
    }
    q
}

fn mul(a: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    (0..rows).map(|i| (0..cols).map(|j| a[i * cols + j] * x[j]).sum()).collect()
}

fn mul_t(a: &[f64], rows: usize, y: &[f64], cols: usize) -> Vec<f64> {
    (0..cols).map(|j| (0..rows).map(|i| a[i * cols + j] * y[i]).sum()).collect()
}

/// Composite Gauss-Legendre with `q` points integrates piecewise
/// polynomials of degree `2q - 1` exactly.
pub fn quadrature_exactness(seed: u64) -> Check {
    let mut r = rng(seed);
    let mesh = random_mesh(&mut r);
    let q = r.gen_range(1..=8);
    let d = r.gen_range(0..2 * q);
    let coeffs: Vec<Vec<f64>> =
        (0..mesh.n_intervals()).map(|_| (0..=d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let exact: f64 = (0..mesh.n_intervals())
        .map(|i| {
            let len = mesh.len(i);
            coeffs[i].iter().enumerate().map(|(k, c)| c * len.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>()
        })
        .sum();
    let rule = gauss_legendre_rule(&mesh, q).map_err(|e| e.to_string())?;
    let approx = rule.integrate(|pt| {
        let s = pt.t - mesh.interval(pt.interval).0;
        coeffs[pt.interval].iter().rev().fold(0.0, |acc, c| acc * s + c)
    });
    let err = (approx - exact).abs();
    if err <= 1e-10 * (1.0 + exact.abs()) {
        Ok(())
    } else {
        Err(format!("q = {q}, degree {d}: error {err:e} on {exact}"))
    }
}

fn random_trajectory(r: &mut ChaCha8Rng) -> Trajectory {
    let mesh = random_mesh(r);
    let p = r.gen_range(1..=6);
    let (n_y, n_u) = (r.gen_range(1..=3), r.gen_range(1..=2));
    let mut traj = Trajectory::zeros(&mesh, p, n_y, n_u).expect("supported degree");
    traj.y.iter_mut().for_each(|v| *v = r.gen_range(-2.0..2.0));
    traj.u.iter_mut().for_each(|v| *v = r.gen_range(-2.0..2.0));
    traj
}

/// `|x_j|_inf <= (p + 1) / sqrt(theta h) |x_j|_L2` for every component.
pub fn norm_equivalence(seed: u64) -> Check {
    let mut r = rng(seed);
    let traj = random_trajectory(&mut r);
    let p = traj.p();
    let mesh = &traj.mesh;
    let factor = (p as f64 + 1.0) / (mesh.theta() * mesh.h()).sqrt();
    let (gx, gw) = gauss_legendre(p + 1);
    let dense = chebyshev_lobatto(10 * (p + 1) - 1);
    let n = traj.n_y + traj.n_u;
    let mut l2 = vec![0.0; n];
    let mut sup = vec![0.0f64; n];
    for i in 0..mesh.n_intervals() {
        let half = 0.5 * mesh.len(i);
        for (&tau, &w) in gx.iter().zip(&gw) {
            let s = traj.eval_in(i, tau);
            for (j, v) in s.y.iter().chain(&s.u).enumerate() {
                l2[j] += w * half * v * v;
            }
        }
        for &tau in &dense {
            let s = traj.eval_in(i, tau);
            for (j, v) in s.y.iter().chain(&s.u).enumerate() {
                sup[j] = sup[j].max(v.abs());
            }
        }
    }
    for j in 0..n {
        let bound = factor * l2[j].sqrt();
        if sup[j] > bound * (1.0 + 1e-12) {
            return Err(format!("component {j}, p = {p}: sup {} > {bound}", sup[j]));
        }
    }
    Ok(())
}

/// Random two-sided rows `lower <= A x <= upper` with `x` strictly inside.
fn rows_around(r: &mut ChaCha8Rng, x: &[f64], nb: usize) -> LinearIneq {
    let n = x.len();
    let a = matrix(r, nb, n);
    let ax = mul(&a, nb, x);
    LinearIneq {
        a: Csr::from_dense(nb, n, &a),
        lower: ax.iter().map(|v| v - r.gen_range(0.1..2.0)).collect(),
        upper: ax.iter().map(|v| v + r.gen_range(0.1..2.0)).collect(),
        weights: (0..nb).map(|_| r.gen_range(0.5..2.0)).collect(),
    }
}

/// Convex NLP `1/2 x^T Q x + g^T x` with `c = B x - d`.
fn quadratic_nlp(n: usize, m: usize, q: Vec<f64>, g: Vec<f64>, b: Vec<f64>, d: Vec<f64>, ineq: LinearIneq) -> DenseNlp {
    let (q, g, b, d) = (Arc::new(q), Arc::new(g), Arc::new(b), Arc::new(d));
    let mut nlp = DenseNlp::new(n, {
        let (q, g) = (q.clone(), g.clone());
        Arc::new(move |x: &[f64]| {
            let qx = mul(&q, n, x);
            (0..n).map(|i| 0.5 * x[i] * qx[i] + g[i] * x[i]).sum()
        })
    });
    nlp.grad = Some({
        let (q, g) = (q.clone(), g.clone());
        Arc::new(move |x: &[f64], o: &mut [f64]| {
            let qx = mul(&q, n, x);
            (0..n).for_each(|i| o[i] = qx[i] + g[i]);
        })
    });
    nlp.hess_f = Some(Arc::new(move |_: &[f64], o: &mut [f64]| o.copy_from_slice(&q)));
    nlp.n_c = m;
    nlp.c = {
        let b = b.clone();
        Arc::new(move |x: &[f64], o: &mut [f64]| {
            let bx = mul(&b, m, x);
            (0..m).for_each(|i| o[i] = bx[i] - d[i]);
        })
    };
    nlp.jac = Some(Arc::new(move |_: &[f64], o: &mut [f64]| o.copy_from_slice(&b)));
    nlp.hess_c = Some(Arc::new(|_: &[f64], _: &[f64], o: &mut [f64]| o.iter_mut().for_each(|v| *v = 0.0)));
    nlp.ineq = ineq;
    nlp
}

struct Instance {
    nlp: DenseNlp,
    state: IpmState,
    q: Vec<f64>,
    b: Vec<f64>,
    a: Vec<f64>,
}

/// Random convex instance and a strictly interior primal-dual state. With
/// `stationary` the data is chosen so that the state solves the KKT system.
fn random_instance(seed: u64, stationary: bool) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(1..=6);
    let m = r.gen_range(0..=n.min(2));
    let nb = r.gen_range(0..=n.min(3));
    let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
    let omega = r.gen_range(0.05..1.0);
    let mu = r.gen_range(1e-3..0.1);
    let ineq = rows_around(&mut r, &x, nb);
    let a = ineq.a.to_dense();
    let ax = mul(&a, nb, &x);
    let (z_l, z_r): (Vec<f64>, Vec<f64>) = if stationary {
        (
            (0..nb).map(|k| mu * ineq.weights[k] / (ax[k] - ineq.lower[k])).collect(),
            (0..nb).map(|k| mu * ineq.weights[k] / (ineq.upper[k] - ax[k])).collect(),
        )
    } else {
        ((0..nb).map(|_| r.gen_range(0.01..2.0)).collect(), (0..nb).map(|_| r.gen_range(0.01..2.0)).collect())
    };
    let q = spd(&mut r, n);
    let b = matrix(&mut r, m, n);
    let (g, d) = if stationary {
        // grad f = J^T y + A^T (z_L - z_R) and c = -omega y at x
        let dz: Vec<f64> = z_l.iter().zip(&z_r).map(|(l, u)| l - u).collect();
        let jty = mul_t(&b, m, &y, n);
        let atz = mul_t(&a, nb, &dz, n);
        let qx = mul(&q, n, &x);
        let g = (0..n).map(|i| jty[i] + atz[i] - qx[i]).collect();
        let bx = mul(&b, m, &x);
        let d = (0..m).map(|i| bx[i] + omega * y[i]).collect();
        (g, d)
    } else {
        ((0..n).map(|_| r.gen_range(-1.0..1.0)).collect(), (0..m).map(|_| r.gen_range(-1.0..1.0)).collect())
    };
    let nlp = quadratic_nlp(n, m, q.clone(), g, b.clone(), d, ineq);
    Instance {
        nlp,
        state: IpmState {
            x,
            y,
            z_l,
            z_r,
            omega,
            mu,
            iter: 0,
        },
        q,
        b,
        a,
    }
}

/// The KKT residual vanishes at a constructed stationary point.
pub fn kkt_zero_at_stationary_point(seed: u64) -> Check {
    let inst = random_instance(seed, true);
    let res = kkt_residuals(&inst.nlp, &inst.state).map_err(|e| e.to_string())?;
    let err = inf(&res);
    if err <= 1e-12 {
        Ok(())
    } else {
        Err(format!("KKT residual {err:e}"))
    }
}

/// The reduced Newton step solves the full linearized KKT system.
pub fn reduced_matches_full_step(seed: u64) -> Check {
    let inst = random_instance(seed, false);
    let (nlp, s) = (&inst.nlp, &inst.state);
    let (n, m, nb) = (nlp.n_x(), nlp.n_c(), nlp.ineq.len());
    let step = newton_step(nlp, s, 0.0).map_err(|e| e.to_string())?;
    if step.shift != 0.0 {
        return Err(format!("convex instance shifted by {}", step.shift));
    }
    let dim = n + m + 2 * nb;
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let ax = mul(&inst.a, nb, &s.x);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = inst.q[i * n + j];
        }
        for r in 0..m {
            k[(i, n + r)] = -inst.b[r * n + i];
            k[(n + r, i)] = inst.b[r * n + i];
        }
        for r in 0..nb {
            let a = inst.a[r * n + i];
            k[(i, n + m + r)] = -a;
            k[(i, n + m + nb + r)] = a;
            k[(n + m + r, i)] = s.z_l[r] * a;
            k[(n + m + nb + r, i)] = -s.z_r[r] * a;
        }
    }
    for r in 0..m {
        k[(n + r, n + r)] = s.omega;
    }
    for r in 0..nb {
        k[(n + m + r, n + m + r)] = ax[r] - nlp.ineq.lower[r];
        k[(n + m + nb + r, n + m + nb + r)] = nlp.ineq.upper[r] - ax[r];
    }
    let rhs = kkt_residuals(nlp, s).map_err(|e| e.to_string())?;
    let full = k.lu().solve(&-DVector::from_vec(rhs)).ok_or("singular full KKT matrix")?;
    let reduced: Vec<f64> =
        step.dx.iter().chain(&step.dy).chain(&step.dz_l).chain(&step.dz_r).copied().collect();
    let dev = reduced.iter().zip(full.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if dev <= 1e-8 * (1.0 + full.amax()) {
        Ok(())
    } else {
        Err(format!("deviation {dev:e} on dim {dim}"))
    }
}

/// Random convex QPP with the box `|x_i| <= 5`.
fn random_qpp(r: &mut ChaCha8Rng, pval: f64) -> QppInstance {
    let n = r.gen_range(2..=5);
    let m = r.gen_range(1..=2);
    let q = Arc::new(spd(r, n));
    let g: Arc<Vec<f64>> = Arc::new((0..n).map(|_| r.gen_range(-1.0..1.0)).collect());
    let b = Arc::new(matrix(r, m, n));
    let d: Arc<Vec<f64>> = Arc::new((0..m).map(|_| r.gen_range(-1.0..1.0)).collect());
    let mut eye = vec![0.0; n * n];
    (0..n).for_each(|i| eye[i * n + i] = 1.0);
    QppInstance {
        n,
        m,
        f: {
            let (q, g) = (q.clone(), g.clone());
            Arc::new(move |x: &[f64]| {
                let qx = mul(&q, n, x);
                (0..n).map(|i| 0.5 * x[i] * qx[i] + g[i] * x[i]).sum()
            })
        },
        grad_f: {
            let q = q.clone();
            Arc::new(move |x: &[f64], o: &mut [f64]| {
                let qx = mul(&q, n, x);
                (0..n).for_each(|i| o[i] = qx[i] + g[i]);
            })
        },
        hess_f: Arc::new(move |_: &[f64]| Csr::from_dense(n, n, &q)),
        c: {
            let b = b.clone();
            Arc::new(move |x: &[f64], o: &mut [f64]| {
                let bx = mul(&b, m, x);
                (0..m).for_each(|i| o[i] = bx[i] - d[i]);
            })
        },
        jac_c: Arc::new(move |_: &[f64]| Csr::from_dense(m, n, &b)),
        hess_c: Arc::new(move |_: &[f64], _: &[f64]| Csr::zeros(n, n)),
        g: LinearIneq {
            a: Csr::from_dense(n, n, &eye),
            lower: vec![-5.0; n],
            upper: vec![5.0; n],
            weights: vec![1.0; n],
        },
        pval,
        x0: vec![0.0; n],
        lambda0: vec![0.0; m],
    }
}

/// MALM with `pval = 0` reproduces the ALM iterates bit for bit.
pub fn malm_alm_bitwise(seed: u64) -> Check {
    let inst = random_qpp(&mut rng(seed), 0.0);
    let cfg = MalmConfig::default();
    let (xm, lm, rm) = malm_solve(&inst, &cfg).map_err(|e| e.to_string())?;
    let (xa, la, ra) = alm_solve(&inst, &cfg).map_err(|e| e.to_string())?;
    let same = xm == xa
        && lm == la
        && rm.x_history == ra.x_history
        && rm.lambda_history == ra.lambda_history
        && rm.inner_iters == ra.inner_iters;
    if same && rm.outer_iters > 0 {
        Ok(())
    } else {
        Err(format!("MALM {:?} after {} outer vs ALM {:?} after {}", rm.status, rm.outer_iters, ra.status, ra.outer_iters))
    }
}

/// `c + pval lambda_k = rho / (pval + rho) (c + pval lambda_{k-1})` at every
/// iteration, and the limit is stationary for the penalty objective.
///
/// Stopping at `|c + pval lambda| <= tol` leaves `-c / pval` off the final
/// multiplier by `tol / pval`, so weights start at 1e-3.
pub fn lambda_identity_and_stationarity(seed: u64) -> Check {
    let mut r = rng(seed);
    let pval = 10f64.powf(r.gen_range(-3.0..0.0));
    let inst = random_qpp(&mut r, pval);
    let (x, _, rep) = malm_solve(&inst, &MalmConfig::default()).map_err(|e| e.to_string())?;
    if !rep.converged() {
        return Err(format!("{:?}: {:?}", rep.status, rep.message));
    }
    if rep.identity_error > 1e-12 {
        return Err(format!("identity error {:e}", rep.identity_error));
    }
    let n = inst.n;
    let mut grad = vec![0.0; n];
    (inst.grad_f)(&x, &mut grad);
    let c: Vec<f64> = inst.eval_c(&x).iter().map(|v| v / pval).collect();
    let mut jtc = vec![0.0; n];
    (inst.jac_c)(&x).mul_t_vec(&c, &mut jtc);
    let mut aeta = vec![0.0; n];
    inst.g.a.mul_t_vec(&rep.eta, &mut aeta);
    let stat: Vec<f64> = (0..n).map(|i| grad[i] + jtc[i] - aeta[i]).collect();
    if inf(&stat) <= 1e-5 {
        Ok(())
    } else {
        Err(format!("stationarity {:e} at pval {pval:e}", inf(&stat)))
    }
}

fn fd(f: &dyn Fn(&[f64], &mut [f64]), x: &[f64], rows: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; rows * n];
    let (mut fp, mut fm) = (vec![0.0; rows], vec![0.0; rows]);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-6 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        f(&xp, &mut fp);
        xp[j] = x[j] - h;
        f(&xp, &mut fm);
        xp[j] = x[j];
        for i in 0..rows {
            out[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

fn compare(what: &str, analytic: &[f64], numeric: &[f64]) -> Check {
    for (k, (a, b)) in analytic.iter().zip(numeric).enumerate() {
        if (a - b).abs() > 1e-5 * (1.0 + a.abs()) {
            return Err(format!("{what} entry {k}: analytic {a} vs difference {b}"));
        }
    }
    Ok(())
}

/// Analytic point, boundary and transcribed Jacobians of `name` agree with
/// central differences.
pub fn jacobian_matches_fd(name: &str, seed: u64) -> Check {
    let mut r = rng(seed);
    let (pb, _) = corpus_get(name).map_err(|e| e.to_string())?;
    let (ny, nu, nf) = (pb.n_y, pb.n_u, pb.n_f());
    let z: Vec<f64> = (0..ny + nu).map(|_| r.gen_range(-1.5..1.5)).collect();
    let t = r.gen_range(0.0..pb.horizon);
    let mut analytic = vec![0.0; nf * (ny + nu)];
    pb.residual_jac(&z[..ny], &z[ny..], t, &mut analytic);
    let ydot = vec![0.0; ny];
    let point = |zz: &[f64], o: &mut [f64]| pb.residual(&zz[..ny], &ydot, &zz[ny..], t, o);
    compare("point", &analytic, &fd(&point, &z, nf))?;

    let ends: Vec<f64> = (0..2 * ny).map(|_| r.gen_range(-1.5..1.5)).collect();
    let mut analytic = vec![0.0; pb.n_b * 2 * ny];
    pb.boundary_jac(&ends[..ny], &ends[ny..], &mut analytic);
    let boundary = |e: &[f64], o: &mut [f64]| (pb.boundary)(&e[..ny], &e[ny..], o);
    compare("boundary", &analytic, &fd(&boundary, &ends, pb.n_b))?;

    let mesh = make_uniform_mesh(pb.horizon, 2).map_err(|e| e.to_string())?;
    let nlp = build_qpm(&pb, &mesh, 3, 4, 4, 1e-2).map_err(|e| e.to_string())?;
    let x: Vec<f64> = (0..nlp.n_x()).map(|_| r.gen_range(-1.5..1.5)).collect();
    let analytic = nlp.jacobian(&x).map_err(|e| e.to_string())?.to_dense();
    let eq = |xx: &[f64], o: &mut [f64]| nlp.equality(xx, o);
    compare("transcribed", &analytic, &fd(&eq, &x, nlp.n_c()))
}

/// Problems of the Jacobian check.
pub const FD_PROBLEMS: [&str; 4] = ["vdp", "pendulum_idx1", "pendulum_idx2", "pendulum_idx3"];
