use serde::Serialize;

use crate::banded::{BandMatrix, LdltFactor};
use crate::error::{Error, Result};
use crate::fem::trajectory::interpolate;
use crate::ocp::{OcpProblem, ReferenceSolution};

use super::{pack, Nlp};

/// Starting point of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// Interpolated reference solution.
    Reference,
    /// Linear state between end values solving `b = 0`, zero control.
    Linear,
    Zero,
}

/// Decision vector for `kind`.
pub fn initial_guess(nlp: &Nlp, kind: InitialGuess, reference: Option<&ReferenceSolution>) -> Result<Vec<f64>> {
    let pb = &nlp.problem;
    let (ny, nu, p) = (pb.n_y, pb.n_u, nlp.element.p);
    let traj = match kind {
        InitialGuess::Reference => {
            let r = reference.ok_or(Error::MissingReference)?;
            interpolate(|t| (r.y_star)(t), |t| (r.u_star)(t), &nlp.mesh, p, ny, nu)?
        }
        InitialGuess::Linear => {
            let (y0, yt) = boundary_ends(pb)?;
            let horizon = nlp.mesh.horizon();
            interpolate(
                |t| {
                    let s = t / horizon;
                    y0.iter().zip(&yt).map(|(a, b)| (1.0 - s) * a + s * b).collect()
                },
                |_| vec![0.0; nu],
                &nlp.mesh,
                p,
                ny,
                nu,
            )?
        }
        InitialGuess::Zero => return Ok(vec![0.0; super::NlpModel::n_x(nlp)]),
    };
    Ok(pack(&traj))
}

/// End values closest to zero with `b(y0, yT) = 0`, by Levenberg-Marquardt.
pub fn boundary_ends(pb: &OcpProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = 2 * pb.n_y;
    let nb = pb.n_b;
    let mut e = vec![0.0; n];
    let mut r = vec![0.0; nb];
    let mut j = vec![0.0; nb * n];
    let lambda = 1e-10;
    for _ in 0..50 {
        let (y0, yt) = e.split_at(pb.n_y);
        (pb.boundary)(y0, yt, &mut r);
        let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res <= 1e-12 {
            break;
        }
        pb.boundary_jac(y0, yt, &mut j);
        let mut m = BandMatrix::new(n, n.saturating_sub(1));
        let mut g = vec![0.0; n];
        for a in 0..n {
            for b in 0..=a {
                let v: f64 = (0..nb).map(|k| j[k * n + a] * j[k * n + b]).sum();
                m.add(a, b, v);
            }
            m.add(a, a, lambda);
            g[a] = -(0..nb).map(|k| j[k * n + a] * r[k]).sum::<f64>();
        }
        let d = LdltFactor::factor(&m).solve(&g);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("boundary conditions could not be solved".into()));
        }
        e.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    }
    let yt = e.split_off(pb.n_y);
    Ok((e, yt))
}
