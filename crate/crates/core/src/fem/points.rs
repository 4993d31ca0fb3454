use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Families of reference points on [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Explicit Euler: the left end point.
    EE,
    /// Implicit Euler: the right end point.
    IE,
    /// Trapezoidal: both end points.
    TZ,
    /// Gauss-Legendre.
    LG,
    /// Gauss-Legendre-Radau, including the left end point.
    LGR,
    /// Chebyshev-Gauss-Lobatto.
    CGL,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::EE => "EE",
            Family::IE => "IE",
            Family::TZ => "TZ",
            Family::LG => "LG",
            Family::LGR => "LGR",
            Family::CGL => "CGL",
        };
        f.write_str(s)
    }
}

/// Largest LGR degree that is supported.
pub const MAX_LGR_DEGREE: usize = 10;

/// Points on the reference interval [-1, 1], with quadrature weights where
/// the family defines them.
#[derive(Clone, Debug, PartialEq)]
pub struct RefPointSet {
    pub family: Family,
    pub degree: usize,
    pub points: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

impl RefPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reference points of `family` with the given degree.
///
/// For collocation families the degree is the number of points. For CGL the
/// degree `m` yields `m + 1` points.
pub fn ref_points(family: Family, degree: usize) -> Result<RefPointSet> {
    let unsupported = || Error::UnsupportedDegree {
        family: family.to_string(),
        degree,
    };
    if degree == 0 {
        return Err(unsupported());
    }
    let (points, weights) = match family {
        Family::EE if degree == 1 => (vec![-1.0], Some(vec![2.0])),
        Family::IE if degree == 1 => (vec![1.0], Some(vec![2.0])),
        Family::TZ if degree == 2 => (vec![-1.0, 1.0], Some(vec![1.0, 1.0])),
        Family::EE | Family::IE | Family::TZ => return Err(unsupported()),
        Family::LG => {
            let (x, w) = gauss_legendre(degree);
            (x, Some(w))
        }
        Family::LGR => {
            if degree > MAX_LGR_DEGREE {
                return Err(unsupported());
            }
            let (x, w) = gauss_radau(degree);
            (x, Some(w))
        }
        Family::CGL => (chebyshev_lobatto(degree), None),
    };
    Ok(RefPointSet {
        family,
        degree,
        points,
        weights,
    })
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

fn newton_root(mut x: f64, g: impl Fn(f64) -> (f64, f64), known: &[f64]) -> f64 {
    for _ in 0..100 {
        let (v, d) = g(x);
        let defl: f64 = known.iter().map(|r| 1.0 / (x - r)).sum();
        let step = v / (d - v * defl);
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Gauss-Legendre nodes and weights with `q` points.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(q);
    for i in 0..q {
        let guess = -(PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let r = newton_root(guess, |t| legendre(q, t), &[]);
        x.push(r);
    }
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // symmetrize to remove rounding asymmetry
    for i in 0..q / 2 {
        let a = 0.5 * (x[q - 1 - i] - x[i]);
        x[i] = -a;
        x[q - 1 - i] = a;
    }
    if q % 2 == 1 {
        x[q / 2] = 0.0;
    }
    let w = x
        .iter()
        .map(|&t| {
            let (_, d) = legendre(q, t);
            2.0 / ((1.0 - t * t) * d * d)
        })
        .collect();
    (x, w)
}

/// Gauss-Legendre-Radau nodes (including -1) and weights with `p` points.
pub fn gauss_radau(p: usize) -> (Vec<f64>, Vec<f64>) {
    let g = |t: f64| {
        let (a, da) = legendre(p - 1, t);
        let (b, db) = legendre(p, t);
        (a + b, da + db)
    };
    let mut x = vec![-1.0];
    for k in 1..p {
        let guess = -(2.0 * PI * k as f64 / (2.0 * p as f64 - 1.0)).cos();
        let r = newton_root(guess, g, &x);
        x.push(r);
    }
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pf = p as f64;
    let w = x
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i == 0 {
                2.0 / (pf * pf)
            } else {
                let (l, _) = legendre(p - 1, t);
                (1.0 - t) / (pf * pf * l * l)
            }
        })
        .collect();
    (x, w)
}

/// Chebyshev-Gauss-Lobatto points `-cos(k pi / m)`, `k = 0..=m`.
pub fn chebyshev_lobatto(m: usize) -> Vec<f64> {
    // sin form yields exact symmetry and an exact zero at the centre
    (0..=m)
        .map(|k| (PI * (2.0 * k as f64 - m as f64) / (2.0 * m as f64)).sin())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn lg_tables() {
        close(&ref_points(Family::LG, 2).unwrap().points, &[-0.57735, 0.57735], 1e-5);
        close(&ref_points(Family::LG, 3).unwrap().points, &[-0.774597, 0.0, 0.774597], 1e-6);
        let lg4 = ref_points(Family::LG, 4).unwrap();
        close(&lg4.points, &[-0.861136, -0.339981, 0.339981, 0.861136], 1e-6);
        let s: f64 = lg4.weights.unwrap().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lg_high_degree_roots() {
        for q in [1, 5, 12, 30] {
            let (x, w) = gauss_legendre(q);
            for &t in &x {
                assert!(legendre(q, t).0.abs() < 1e-12);
            }
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(w.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn lgr_tables() {
        close(&ref_points(Family::LGR, 1).unwrap().points, &[-1.0], 1e-15);
        close(&ref_points(Family::LGR, 2).unwrap().points, &[-1.0, 1.0 / 3.0], 1e-14);
        close(&ref_points(Family::LGR, 3).unwrap().points, &[-1.0, -0.2899, 0.6899], 1e-4);
        close(
            &ref_points(Family::LGR, 4).unwrap().points,
            &[-1.0, -0.5753, 0.1811, 0.8228],
            1e-4,
        );
    }

    #[test]
    fn lgr_roots_and_weights() {
        for p in 2..=MAX_LGR_DEGREE {
            let s = ref_points(Family::LGR, p).unwrap();
            for &t in &s.points[1..] {
                let v = legendre(p - 1, t).0 + legendre(p, t).0;
                assert!(v.abs() < 1e-12, "p={p}");
            }
            assert!(s.points.windows(2).all(|w| w[0] < w[1]));
            let w = s.weights.unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // Radau rule is exact up to degree 2p-2
            let d = 2 * p - 2;
            let q: f64 = s.points.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            assert!((q - 2.0 / (d as f64 + 1.0)).abs() < 1e-13);
        }
        assert!(ref_points(Family::LGR, MAX_LGR_DEGREE + 1).is_err());
    }

    #[test]
    fn cgl_points() {
        assert_eq!(ref_points(Family::CGL, 2).unwrap().points, vec![-1.0, 0.0, 1.0]);
        for m in 1..20 {
            let x = chebyshev_lobatto(m);
            for (k, v) in x.iter().enumerate() {
                let e = -(k as f64 * PI / m as f64).cos();
                assert!((v - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn simple_families() {
        assert_eq!(ref_points(Family::EE, 1).unwrap().points, vec![-1.0]);
        assert_eq!(ref_points(Family::IE, 1).unwrap().points, vec![1.0]);
        assert_eq!(ref_points(Family::TZ, 2).unwrap().points, vec![-1.0, 1.0]);
        assert!(ref_points(Family::EE, 2).is_err());
        assert!(ref_points(Family::LG, 0).is_err());
    }
}
