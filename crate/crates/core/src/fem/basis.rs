/// Lagrange basis on a set of distinct nodes, evaluated in barycentric form.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let mut bary = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    bary[j] /= nodes[j] - nodes[k];
                }
            }
        }
        Self {
            nodes: nodes.to_vec(),
            bary,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values and first derivatives of all basis polynomials at `x`.
    pub fn eval(&self, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        let n = self.nodes.len();
        if let Some(i) = self.nodes.iter().position(|&t| (x - t).abs() <= 1e-14) {
            vals.iter_mut().for_each(|v| *v = 0.0);
            vals[i] = 1.0;
            let mut diag = 0.0;
            for j in 0..n {
                if j != i {
                    let d = self.bary[j] / self.bary[i] / (self.nodes[i] - self.nodes[j]);
                    ders[j] = d;
                    diag -= d;
                }
            }
            ders[i] = diag;
            return;
        }
        let mut s = 0.0;
        for j in 0..n {
            let c = self.bary[j] / (x - self.nodes[j]);
            vals[j] = c;
            s += c;
        }
        vals.iter_mut().for_each(|v| *v /= s);
        // l_j' = l_j * sum_{k != j} 1/(x - x_k), except at the nearest node,
        // whose derivative follows from the derivatives summing to zero
        let near = (0..n)
            .min_by(|&a, &b| (x - self.nodes[a]).abs().total_cmp(&(x - self.nodes[b]).abs()))
            .unwrap_or(0);
        let mut rest = 0.0;
        for j in 0..n {
            if j == near {
                continue;
            }
            let mut r = 0.0;
            for k in 0..n {
                if k != j {
                    r += 1.0 / (x - self.nodes[k]);
                }
            }
            ders[j] = vals[j] * r;
            rest += ders[j];
        }
        if n > 0 {
            ders[near] = -rest;
        }
    }

    /// Allocating variant of [`LagrangeBasis::eval`].
    pub fn eval_vec(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![0.0; self.len()];
        let mut d = vec![0.0; self.len()];
        self.eval(x, &mut v, &mut d);
        (v, d)
    }
}
