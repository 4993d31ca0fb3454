use crate::error::{Error, Result};
use crate::fem::mesh::Mesh;
use crate::fem::points::{ref_points, Family, RefPointSet};

/// One abscissa of a composite rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPoint {
    pub interval: usize,
    pub tau: f64,
    pub t: f64,
    pub alpha: f64,
}

/// Composite quadrature rule on a mesh, `q` points per interval.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub reference: RefPointSet,
    pub points: Vec<QuadPoint>,
}

impl QuadratureRule {
    /// Points per interval.
    pub fn q(&self) -> usize {
        self.reference.len()
    }

    /// `sum_j alpha_j f(interval_j, tau_j, t_j)`.
    pub fn integrate(&self, mut f: impl FnMut(&QuadPoint) -> f64) -> f64 {
        self.points.iter().map(|p| p.alpha * f(p)).sum()
    }
}

/// Composite rule from a weighted reference rule.
pub fn composite_rule(mesh: &Mesh, reference: &RefPointSet) -> Result<QuadratureRule> {
    let w = reference.weights.as_ref().ok_or_else(|| {
        Error::InvalidParameter(format!("{} points carry no quadrature weights", reference.family))
    })?;
    let mut points = Vec::with_capacity(mesh.n_intervals() * reference.len());
    for i in 0..mesh.n_intervals() {
        let half = 0.5 * mesh.len(i);
        for (&tau, &wk) in reference.points.iter().zip(w) {
            points.push(QuadPoint {
                interval: i,
                tau,
                t: mesh.to_time(i, tau),
                alpha: wk * half,
            });
        }
    }
    Ok(QuadratureRule {
        reference: reference.clone(),
        points,
    })
}

/// Composite rule of the given family (LG or LGR) and degree.
pub fn quadrature_rule(mesh: &Mesh, family: Family, degree_q: usize) -> Result<QuadratureRule> {
    match family {
        Family::LG | Family::LGR => composite_rule(mesh, &ref_points(family, degree_q)?),
        _ => Err(Error::InvalidParameter(format!("{family} is not a quadrature family"))),
    }
}

/// Composite Gauss-Legendre rule with `q` points per interval.
pub fn gauss_legendre_rule(mesh: &Mesh, q: usize) -> Result<QuadratureRule> {
    quadrature_rule(mesh, Family::LG, q)
}
