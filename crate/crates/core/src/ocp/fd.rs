//! Central finite differences used where analytic derivatives are absent.

/// Step for first derivatives at coordinate value `x`.
pub fn first_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Row-major `m x n` Jacobian of `f: R^n -> R^m` by central differences.
pub fn jacobian(mut f: impl FnMut(&[f64], &mut [f64]), x: &[f64], m: usize, out: &mut [f64]) {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for j in 0..n {
        let h = first_step(x[j]);
        xp[j] = x[j] + h;
        f(&xp, &mut fp);
        xp[j] = x[j] - h;
        f(&xp, &mut fm);
        xp[j] = x[j];
        for r in 0..m {
            out[r * n + j] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
}

/// Symmetric Hessian from a gradient callback by central differences.
pub fn hessian_from_gradient(mut g: impl FnMut(&[f64], &mut [f64]), x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-5 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        g(&xp, &mut gp);
        xp[j] = x[j] - h;
        g(&xp, &mut gm);
        xp[j] = x[j];
        for i in 0..n {
            out[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    symmetrize(out, n);
}

/// Hessian from function values by second-order central differences.
pub fn hessian_from_values(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * (1.0 + v.abs())).collect();
    let mut xp = x.to_vec();
    let f0 = f(x);
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        out[i * n + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64, xp: &mut Vec<f64>| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0, &mut xp) - corner(1.0, -1.0, &mut xp) - corner(-1.0, 1.0, &mut xp)
                + corner(-1.0, -1.0, &mut xp))
                / (4.0 * h[i] * h[j]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
}

fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
}
