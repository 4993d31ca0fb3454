//! Finite-dimensional problems in the standard form consumed by the solver:
//!
//! ```txt
//!   min f(x)   s.t.  c(x) = 0 (relaxed by the penalty weight omega),
//!                    b_L <= A x <= b_R
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ocp::fd;
use crate::sparse::{Csr, Triplets};

/// Linear inequality rows `lower <= a x <= upper`; an infinite side is
/// absent. `weights` scale the barrier term of each row.
#[derive(Clone, Debug)]
pub struct LinearIneq {
    pub a: Csr,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LinearIneq {
    pub fn empty(n_x: usize) -> Self {
        Self {
            a: Csr::zeros(0, n_x),
            lower: Vec::new(),
            upper: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Checks dimensions and that every row has a finite side and a
    /// non-empty interior.
    pub fn validate(&self, n_x: usize) -> Result<()> {
        let m = self.len();
        if self.a.ncols != n_x || self.a.nrows != m || self.upper.len() != m || self.weights.len() != m {
            return Err(Error::Dimension("inequality data".into()));
        }
        for r in 0..m {
            let (lo, hi) = (self.lower[r], self.upper[r]);
            if !(lo < hi) || (lo == f64::NEG_INFINITY && hi == f64::INFINITY) {
                return Err(Error::InvalidParameter(format!("inequality row {r} has bounds [{lo}, {hi}]")));
            }
            if !(self.weights[r] > 0.0) {
                return Err(Error::InvalidParameter(format!("inequality row {r} has weight {}", self.weights[r])));
            }
        }
        Ok(())
    }
}

/// A smooth NLP with relaxed equalities and linear inequalities.
pub trait NlpModel {
    fn n_x(&self) -> usize;
    fn n_c(&self) -> usize;
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn equality(&self, x: &[f64], out: &mut [f64]);
    /// `n_c x n_x` Jacobian of the equality rows.
    fn jacobian(&self, x: &[f64]) -> Result<Csr>;
    /// Full symmetric Hessian of the Lagrangian `f - y^T c`.
    fn hessian(&self, x: &[f64], y: &[f64]) -> Result<Csr>;
    fn inequalities(&self) -> &LinearIneq;
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VecFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `(x, w, out)` writing the row-major `n x n` matrix `sum_i w_i Hess(c_i)`.
pub type WeightedHessFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Dense NLP from closures; absent derivatives fall back to finite
/// differences.
#[derive(Clone)]
pub struct DenseNlp {
    pub n_x: usize,
    pub n_c: usize,
    pub f: ScalarFn,
    pub grad: Option<VecFn>,
    /// Row-major `n x n` Hessian of `f`.
    pub hess_f: Option<VecFn>,
    pub c: VecFn,
    /// Row-major `n_c x n_x` Jacobian.
    pub jac: Option<VecFn>,
    pub hess_c: Option<WeightedHessFn>,
    pub ineq: LinearIneq,
}

impl DenseNlp {
    pub fn new(n_x: usize, f: ScalarFn) -> Self {
        Self {
            n_x,
            n_c: 0,
            f,
            grad: None,
            hess_f: None,
            c: Arc::new(|_, _| {}),
            jac: None,
            hess_c: None,
            ineq: LinearIneq::empty(n_x),
        }
    }

    pub fn dense_jacobian(&self, x: &[f64]) -> Vec<f64> {
        let mut j = vec![0.0; self.n_c * self.n_x];
        match &self.jac {
            Some(jf) => jf(x, &mut j),
            None => fd::jacobian(|z, o| (self.c)(z, o), x, self.n_c, &mut j),
        }
        j
    }

    /// Dense Hessian of the Lagrangian `f - y^T c`.
    pub fn dense_hessian(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.n_x;
        let mut h = vec![0.0; n * n];
        match &self.hess_f {
            Some(hf) => hf(x, &mut h),
            None if self.grad.is_some() => fd::hessian_from_gradient(|z, g| self.gradient(z, g), x, &mut h),
            None => fd::hessian_from_values(|z| (self.f)(z), x, &mut h),
        }
        if self.n_c > 0 && y.iter().any(|&v| v != 0.0) {
            let mut hc = vec![0.0; n * n];
            let w: Vec<f64> = y.iter().map(|v| -v).collect();
            match &self.hess_c {
                Some(hcf) => hcf(x, &w, &mut hc),
                None if self.jac.is_some() => fd::hessian_from_gradient(
                    |z, g| {
                        let j = self.dense_jacobian(z);
                        for (col, gv) in g.iter_mut().enumerate() {
                            *gv = (0..self.n_c).map(|r| w[r] * j[r * n + col]).sum();
                        }
                    },
                    x,
                    &mut hc,
                ),
                None => {
                    let mut cv = vec![0.0; self.n_c];
                    fd::hessian_from_values(
                        |z| {
                            (self.c)(z, &mut cv);
                            cv.iter().zip(&w).map(|(a, b)| a * b).sum()
                        },
                        x,
                        &mut hc,
                    )
                }
            }
            h.iter_mut().zip(&hc).for_each(|(a, b)| *a += b);
        }
        h
    }
}

fn dense_to_csr(nrows: usize, ncols: usize, d: &[f64], what: &str) -> Result<Csr> {
    let mut t = Triplets::new(nrows, ncols);
    for r in 0..nrows {
        for c in 0..ncols {
            let v = d[r * ncols + c];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{what} entry ({r}, {c})")));
            }
            if v != 0.0 {
                t.push(r, c, v);
            }
        }
    }
    Ok(t.to_csr())
}

impl NlpModel for DenseNlp {
    fn n_x(&self) -> usize {
        self.n_x
    }

    fn n_c(&self) -> usize {
        self.n_c
    }

    fn objective(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.grad {
            Some(g) => g(x, out),
            None => fd::jacobian(|z, o| o[0] = (self.f)(z), x, 1, out),
        }
    }

    fn equality(&self, x: &[f64], out: &mut [f64]) {
        (self.c)(x, out)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Csr> {
        dense_to_csr(self.n_c, self.n_x, &self.dense_jacobian(x), "jacobian")
    }

    fn hessian(&self, x: &[f64], y: &[f64]) -> Result<Csr> {
        let n = self.n_x;
        let mut h = self.dense_hessian(x, y);
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (h[i * n + j] + h[j * n + i]);
                h[i * n + j] = v;
                h[j * n + i] = v;
            }
        }
        dense_to_csr(n, n, &h, "hessian")
    }

    fn inequalities(&self) -> &LinearIneq {
        &self.ineq
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_difference_fallbacks() {
        let mut nlp = DenseNlp::new(2, Arc::new(|x| x[0].powi(2) * x[1] + x[1].exp()));
        nlp.n_c = 1;
        nlp.c = Arc::new(|x, o| o[0] = x[0] * x[1]);
        let x = [0.5, -0.2];
        let mut g = [0.0; 2];
        nlp.gradient(&x, &mut g);
        assert!((g[0] - 2.0 * 0.5 * -0.2).abs() < 1e-8);
        let h = nlp.hessian(&x, &[2.0]).unwrap().to_dense();
        // Hess f = [[2 x1, 2 x0], [2 x0, e^x1]], Hess c = [[0, 1], [1, 0]]
        let exact = [2.0 * -0.2, 1.0 - 2.0, 1.0 - 2.0, (-0.2f64).exp()];
        for k in 0..4 {
            assert!((h[k] - exact[k]).abs() < 1e-5, "{k}: {}", h[k]);
        }
        let j = nlp.jacobian(&x).unwrap();
        assert!((j.get(0, 0) + 0.2).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        let mut q = LinearIneq::empty(2);
        q.a = Csr::from_dense(1, 2, &[1.0, 0.0]);
        q.lower = vec![1.0];
        q.upper = vec![1.0];
        q.weights = vec![1.0];
        assert!(q.validate(2).is_err());
        q.upper = vec![f64::INFINITY];
        assert!(q.validate(2).is_ok());
    }
}
