use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::basis::LagrangeBasis;
use crate::fem::mesh::Mesh;
use crate::fem::points::{chebyshev_lobatto, gauss_legendre, ref_points, Family};

/// Reference element of `X_{h,p}`: states on the `p` LGR points plus the
/// right end point, controls on the `p` LGR points.
#[derive(Clone, Debug)]
pub struct Element {
    pub p: usize,
    pub y_basis: LagrangeBasis,
    pub u_basis: LagrangeBasis,
}

impl Element {
    pub fn new(p: usize) -> Result<Arc<Self>> {
        let lgr = ref_points(Family::LGR, p)?;
        let mut y_nodes = lgr.points.clone();
        y_nodes.push(1.0);
        Ok(Arc::new(Self {
            p,
            y_basis: LagrangeBasis::new(&y_nodes),
            u_basis: LagrangeBasis::new(&lgr.points),
        }))
    }

    pub fn y_nodes(&self) -> &[f64] {
        self.y_basis.nodes()
    }

    pub fn u_nodes(&self) -> &[f64] {
        self.u_basis.nodes()
    }

    /// Basis values at the given reference points.
    pub fn table(&self, taus: &[f64]) -> PointTable {
        let mut ly = Vec::with_capacity(taus.len());
        let mut dly = Vec::with_capacity(taus.len());
        let mut lu = Vec::with_capacity(taus.len());
        for &tau in taus {
            let (v, d) = self.y_basis.eval_vec(tau);
            ly.push(v);
            dly.push(d);
            lu.push(self.u_basis.eval_vec(tau).0);
        }
        PointTable {
            tau: taus.to_vec(),
            ly,
            dly,
            lu,
        }
    }
}

/// Basis values and reference derivatives tabulated at fixed points.
#[derive(Clone, Debug)]
pub struct PointTable {
    pub tau: Vec<f64>,
    pub ly: Vec<Vec<f64>>,
    pub dly: Vec<Vec<f64>>,
    pub lu: Vec<Vec<f64>>,
}

impl PointTable {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// States, their time derivative and controls at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub y: Vec<f64>,
    pub ydot: Vec<f64>,
    pub u: Vec<f64>,
}

/// Member of `X_{h,p}`.
///
/// States are stored at `N p + 1` global nodes: node `i p + k` is LGR point
/// `k` of interval `i`, and node `N p` is `T`. The right end of interval `i`
/// is node `(i + 1) p`, shared with the next interval, which makes `y`
/// continuous. Controls are stored at the `N p` LGR nodes and may jump
/// across mesh nodes.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub element: Arc<Element>,
    pub n_y: usize,
    pub n_u: usize,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(mesh: &Mesh, p: usize, n_y: usize, n_u: usize) -> Result<Self> {
        let element = Element::new(p)?;
        Ok(Self::with_element(mesh, element, n_y, n_u))
    }

    pub fn with_element(mesh: &Mesh, element: Arc<Element>, n_y: usize, n_u: usize) -> Self {
        let n = mesh.n_intervals();
        let p = element.p;
        Self {
            mesh: mesh.clone(),
            element,
            n_y,
            n_u,
            y: vec![0.0; (n * p + 1) * n_y],
            u: vec![0.0; n * p * n_u],
        }
    }

    pub fn p(&self) -> usize {
        self.element.p
    }

    pub fn n_y_nodes(&self) -> usize {
        self.mesh.n_intervals() * self.p() + 1
    }

    pub fn n_u_nodes(&self) -> usize {
        self.mesh.n_intervals() * self.p()
    }

    pub fn y_node(&self, g: usize) -> &[f64] {
        &self.y[g * self.n_y..(g + 1) * self.n_y]
    }

    pub fn y_node_mut(&mut self, g: usize) -> &mut [f64] {
        &mut self.y[g * self.n_y..(g + 1) * self.n_y]
    }

    pub fn u_node(&self, g: usize) -> &[f64] {
        &self.u[g * self.n_u..(g + 1) * self.n_u]
    }

    pub fn u_node_mut(&mut self, g: usize) -> &mut [f64] {
        &mut self.u[g * self.n_u..(g + 1) * self.n_u]
    }

    /// Time of global state node `g`.
    pub fn y_time(&self, g: usize) -> f64 {
        let p = self.p();
        let n = self.mesh.n_intervals();
        if g == n * p {
            return self.mesh.horizon();
        }
        self.mesh.to_time(g / p, self.element.y_nodes()[g % p])
    }

    /// Time of global control node `g`.
    pub fn u_time(&self, g: usize) -> f64 {
        let p = self.p();
        self.mesh.to_time(g / p, self.element.u_nodes()[g % p])
    }

    pub fn y_initial(&self) -> &[f64] {
        self.y_node(0)
    }

    pub fn y_final(&self) -> &[f64] {
        self.y_node(self.n_y_nodes() - 1)
    }

    /// Evaluates inside interval `i` at reference coordinate `tau`. At the
    /// interval ends this yields the one-sided limits of interval `i`.
    pub fn eval_in(&self, i: usize, tau: f64) -> Sample {
        let p = self.p();
        let mut ly = vec![0.0; p + 1];
        let mut dly = vec![0.0; p + 1];
        let mut lu = vec![0.0; p];
        let mut du = vec![0.0; p];
        self.element.y_basis.eval(tau, &mut ly, &mut dly);
        self.element.u_basis.eval(tau, &mut lu, &mut du);
        self.combine(i, &ly, &dly, &lu)
    }

    /// Combines tabulated basis values on interval `i`.
    pub fn combine(&self, i: usize, ly: &[f64], dly: &[f64], lu: &[f64]) -> Sample {
        let p = self.p();
        let scale = 2.0 / self.mesh.len(i);
        let mut y = vec![0.0; self.n_y];
        let mut ydot = vec![0.0; self.n_y];
        for k in 0..=p {
            let node = self.y_node(i * p + k);
            for c in 0..self.n_y {
                y[c] += ly[k] * node[c];
                ydot[c] += dly[k] * node[c] * scale;
            }
        }
        let mut u = vec![0.0; self.n_u];
        for k in 0..p {
            let node = self.u_node(i * p + k);
            for c in 0..self.n_u {
                u[c] += lu[k] * node[c];
            }
        }
        Sample { y, ydot, u }
    }

    /// Evaluates at time `t`; mesh nodes belong to the interval on their
    /// right, except `T`.
    pub fn eval(&self, t: f64) -> Result<Sample> {
        let i = self.mesh.locate(t)?;
        let (a, b) = self.mesh.interval(i);
        let tau = (2.0 * (t - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        Ok(self.eval_in(i, tau))
    }

    fn check_same_space(&self, other: &Trajectory) -> Result<()> {
        if self.mesh != other.mesh || self.p() != other.p() || self.n_y != other.n_y || self.n_u != other.n_u
        {
            return Err(Error::Dimension("trajectories live on different spaces".into()));
        }
        Ok(())
    }

    /// Componentwise difference `self - other`.
    pub fn diff(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_same_space(other)?;
        let mut d = self.clone();
        d.y.iter_mut().zip(&other.y).for_each(|(a, b)| *a -= b);
        d.u.iter_mut().zip(&other.u).for_each(|(a, b)| *a -= b);
        Ok(d)
    }

    /// Writes samples as CSV with header `t,y1..,u1..`. Each interval is
    /// sampled at `per_interval + 1` uniform points, so mesh nodes appear
    /// twice with the left and right values.
    pub fn write_csv<W: Write>(&self, mut w: W, per_interval: usize) -> std::io::Result<()> {
        let per = per_interval.max(1);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_y).map(|c| format!("y{c}")));
        header.extend((1..=self.n_u).map(|c| format!("u{c}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.mesh.n_intervals() {
            for k in 0..=per {
                let tau = -1.0 + 2.0 * k as f64 / per as f64;
                let s = self.eval_in(i, tau);
                let mut row = vec![format!("{}", self.mesh.to_time(i, tau))];
                row.extend(s.y.iter().chain(&s.u).map(|v| format!("{v}")));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

/// Samples `y_fn` at the state nodes and `u_fn` at the control nodes.
pub fn interpolate(
    y_fn: impl Fn(f64) -> Vec<f64>,
    u_fn: impl Fn(f64) -> Vec<f64>,
    mesh: &Mesh,
    p: usize,
    n_y: usize,
    n_u: usize,
) -> Result<Trajectory> {
    let mut tr = Trajectory::zeros(mesh, p, n_y, n_u)?;
    for g in 0..tr.n_y_nodes() {
        let v = y_fn(tr.y_time(g));
        if v.len() != n_y {
            return Err(Error::Dimension(format!("state function returned {} values, expected {n_y}", v.len())));
        }
        tr.y_node_mut(g).copy_from_slice(&v);
    }
    for g in 0..tr.n_u_nodes() {
        let v = u_fn(tr.u_time(g));
        if v.len() != n_u {
            return Err(Error::Dimension(format!("control function returned {} values, expected {n_u}", v.len())));
        }
        tr.u_node_mut(g).copy_from_slice(&v);
    }
    Ok(tr)
}

/// Norm of the difference in X: `||ydot||_{L2}` plus the largest absolute
/// value of the state and control components.
///
/// The L2 part uses `2p` Gauss-Legendre points per interval; the supremum is
/// taken over `4p + 1` CGL points per interval, which under-approximates the
/// essential supremum.
pub fn x_norm(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let d = a.diff(b)?;
    let p = d.p();
    let (gx, gw) = gauss_legendre(2 * p);
    let table = d.element.table(&gx);
    let cgl = d.element.table(&chebyshev_lobatto(4 * p));
    let mut l2 = 0.0;
    let mut sup: f64 = 0.0;
    for i in 0..d.mesh.n_intervals() {
        let half = 0.5 * d.mesh.len(i);
        for j in 0..table.len() {
            let s = d.combine(i, &table.ly[j], &table.dly[j], &table.lu[j]);
            l2 += gw[j] * half * s.ydot.iter().map(|v| v * v).sum::<f64>();
        }
        for j in 0..cgl.len() {
            let s = d.combine(i, &cgl.ly[j], &cgl.dly[j], &cgl.lu[j]);
            for v in s.y.iter().chain(&s.u) {
                sup = sup.max(v.abs());
            }
        }
    }
    Ok(l2.sqrt() + sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::make_uniform_mesh;

    #[test]
    fn linear_example() {
        let mesh = make_uniform_mesh(1.0, 1).unwrap();
        let mut tr = Trajectory::zeros(&mesh, 1, 1, 1).unwrap();
        tr.y = vec![10.0, 11.0];
        let s = tr.eval(0.5).unwrap();
        assert!((s.y[0] - 10.5).abs() < 1e-14);
        assert!((s.ydot[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let mesh = make_uniform_mesh(2.0, 3).unwrap();
        let tr = interpolate(|_| vec![4.2, -1.0], |_| vec![0.5], &mesh, 3, 2, 1).unwrap();
        for &t in &[0.0, 0.3, 0.6667, 1.5, 2.0] {
            let s = tr.eval(t).unwrap();
            assert!(s.ydot.iter().all(|v| v.abs() < 1e-12));
            assert!((s.y[0] - 4.2).abs() < 1e-13);
        }
    }

    #[test]
    fn quadratic_reproduction() {
        let mesh = make_uniform_mesh(1.0, 1).unwrap();
        let tr = interpolate(|t| vec![t * t], |_| vec![0.0], &mesh, 2, 1, 1).unwrap();
        let s = tr.eval(0.3).unwrap();
        assert!((s.y[0] - 0.09).abs() < 1e-14);
        assert!((s.ydot[0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn identity_reproduced() {
        for p in 1..6 {
            let mesh = make_uniform_mesh(2.0, 5).unwrap();
            let tr = interpolate(|t| vec![t], |t| vec![t], &mesh, p, 1, 1).unwrap();
            for k in 0..=50 {
                let t = 2.0 * k as f64 / 50.0;
                let s = tr.eval(t).unwrap();
                assert!((s.y[0] - t).abs() < 1e-12);
                if p > 1 {
                    assert!((s.u[0] - t).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sign_with_node_at_jump() {
        let mesh = make_uniform_mesh(2.0, 2).unwrap();
        let sign = |t: f64| vec![if t < 1.0 { -1.0 } else { 1.0 }];
        let tr = interpolate(|_| vec![0.0], sign, &mesh, 3, 1, 1).unwrap();
        for k in 0..=40 {
            let t = 2.0 * k as f64 / 40.0;
            assert_eq!(tr.eval(t).unwrap().u[0].round(), sign(t)[0]);
            assert!((tr.eval(t).unwrap().u[0] - sign(t)[0]).abs() < 1e-12);
        }
        // left limit at the jump
        assert!((tr.eval_in(0, 1.0).u[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kink_error_bounded_by_lipschitz_h() {
        let mesh = make_uniform_mesh(2.0, 3).unwrap();
        let h = mesh.h();
        let tr = interpolate(|t| vec![(t - 1.0).abs()], |_| vec![0.0], &mesh, 1, 1, 1).unwrap();
        let mut err: f64 = 0.0;
        for k in 0..=4000 {
            let t = 2.0 * k as f64 / 4000.0;
            err = err.max((tr.eval(t).unwrap().y[0] - (t - 1.0).abs()).abs());
        }
        assert!(err <= h + 1e-12, "{err}");
    }

    #[test]
    fn norm_examples() {
        let mesh = make_uniform_mesh(1.0, 1).unwrap();
        let zero = Trajectory::zeros(&mesh, 2, 1, 1).unwrap();
        assert_eq!(x_norm(&zero, &zero).unwrap(), 0.0);
        let one = interpolate(|_| vec![1.0], |_| vec![0.0], &mesh, 2, 1, 1).unwrap();
        assert!((x_norm(&one, &zero).unwrap() - 1.0).abs() < 1e-14);
        let lin = interpolate(|t| vec![t], |_| vec![0.0], &mesh, 2, 1, 1).unwrap();
        assert!((x_norm(&lin, &zero).unwrap() - 2.0).abs() < 1e-13);
        let other = Trajectory::zeros(&make_uniform_mesh(1.0, 2).unwrap(), 2, 1, 1).unwrap();
        assert!(x_norm(&zero, &other).is_err());
    }

    #[test]
    fn csv_duplicates_nodes() {
        let mesh = make_uniform_mesh(2.0, 2).unwrap();
        let tr = interpolate(|t| vec![t], |t| vec![if t < 1.0 { -1.0 } else { 1.0 }], &mesh, 1, 1, 1).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 2).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,y1,u1");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[3], "1,1,-1");
        assert_eq!(lines[4], "1,1,1");
    }
}
