use crate::error::{Error, Result};

/// Partition `0 = t_0 < t_1 < ... < t_N = T` of the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("mesh needs at least one interval".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidParameter("mesh must start at 0".into()));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) || nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("mesh nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// Uniform mesh of `n` intervals on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "uniform mesh needs N >= 1 and T > 0, got N={n}, T={horizon}"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * horizon / n as f64).collect();
        nodes[n] = horizon;
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals `N`.
    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn len(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Largest interval length.
    pub fn h(&self) -> f64 {
        (0..self.n_intervals()).map(|i| self.len(i)).fold(0.0, f64::max)
    }

    /// Quasi-uniformity ratio `min |T_i| / max |T_j|`.
    pub fn theta(&self) -> f64 {
        let min = (0..self.n_intervals()).map(|i| self.len(i)).fold(f64::INFINITY, f64::min);
        min / self.h()
    }

    /// Maps reference coordinate `tau` in [-1, 1] on interval `i` to time.
    pub fn to_time(&self, i: usize, tau: f64) -> f64 {
        let (a, b) = self.interval(i);
        a + 0.5 * (tau + 1.0) * (b - a)
    }

    /// Interval containing `t`, left-closed, with `t = T` in the last one.
    pub fn locate(&self, t: f64) -> Result<usize> {
        let n = self.n_intervals();
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        // first node strictly greater than t
        let k = self.nodes.partition_point(|&v| v <= t);
        Ok(k.saturating_sub(1).min(n - 1))
    }
}

/// Uniform mesh of `n` intervals on `[0, horizon]`.
pub fn make_uniform_mesh(horizon: f64, n: usize) -> Result<Mesh> {
    Mesh::uniform(horizon, n)
}
