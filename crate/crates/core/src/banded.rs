//! Banded symmetric indefinite `L D L^T` factorization.
//!
//! Pivots are 1x1 or 2x2 blocks chosen with the Bunch-Kaufman test, with the
//! 2x2 partner restricted to the next row so that no interchange leaves the
//! band.

/// Symmetric matrix stored as its lower band of half-bandwidth `kd`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kd: usize) -> Self {
        let kd = kd.min(n.saturating_sub(1));
        Self {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kd(&self) -> usize {
        self.kd
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.kd + 1) + (i - j)
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`; the pair must lie in the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.kd, "entry ({i},{j}) outside band {}", self.kd);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.kd {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add_diag(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            out[j] += self.get(j, j) * x[j];
            for i in j + 1..(j + self.kd + 1).min(self.n) {
                let a = self.data[self.idx(i, j)];
                out[i] += a * x[j];
                out[j] += a * x[i];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Numbers of positive, negative and zero eigenvalues of `D`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

/// Factor `P A P^T = L D L^T` with `P = I`.
#[derive(Clone, Debug)]
pub struct LdltFactor {
    n: usize,
    w: usize,
    data: Vec<f64>,
    /// 1 for a 1x1 pivot, 2 at the first row of a 2x2 pivot, 0 at its second row.
    block: Vec<u8>,
    pub inertia: Inertia,
    pub two_by_two: usize,
}

const ALPHA: f64 = 0.640_388_203_202_208_4; // (1 + sqrt(17)) / 8

impl LdltFactor {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.w + 1) + (i - j)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    pub fn factor(a: &BandMatrix) -> Self {
        let n = a.n;
        let kd = a.kd;
        // one extra sub-diagonal holds the multipliers of 2x2 pivots
        let w = (kd + 1).min(n.saturating_sub(1));
        let mut f = Self {
            n,
            w,
            data: vec![0.0; n * (w + 1)],
            block: vec![1; n],
            inertia: Inertia::default(),
            two_by_two: 0,
        };
        for j in 0..n {
            for i in j..(j + kd + 1).min(n) {
                let k = f.idx(i, j);
                f.data[k] = a.get(i, j);
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let tiny = scale * f64::EPSILON;
        let mut k = 0;
        while k < n {
            let last = (k + kd).min(n - 1);
            let akk = f.at(k, k);
            let mut colmax: f64 = 0.0;
            for i in k + 1..=last {
                colmax = colmax.max(f.at(i, k).abs());
            }
            let use_two = k + 1 < n && akk.abs() < ALPHA * colmax && {
                let b = f.at(k + 1, k);
                let c = f.at(k + 1, k + 1);
                (akk * c - b * b).abs() > tiny * tiny.max(colmax)
            };
            if !use_two {
                let d = akk;
                if d.abs() <= tiny {
                    f.inertia.zero += 1;
                    let id = f.idx(k, k);
                    f.data[id] = 0.0;
                } else if d > 0.0 {
                    f.inertia.pos += 1;
                } else {
                    f.inertia.neg += 1;
                }
                let dinv = if d.abs() <= tiny { 0.0 } else { 1.0 / d };
                for j in k + 1..=last {
                    let ajk = f.at(j, k);
                    if ajk == 0.0 {
                        continue;
                    }
                    let lj = ajk * dinv;
                    for i in j..=last {
                        let aik = f.at(i, k);
                        if aik != 0.0 {
                            let id = f.idx(i, j);
                            f.data[id] -= aik * lj;
                        }
                    }
                }
                for i in k + 1..=last {
                    let id = f.idx(i, k);
                    f.data[id] *= dinv;
                }
                f.block[k] = 1;
                k += 1;
            } else {
                let a11 = akk;
                let a21 = f.at(k + 1, k);
                let a22 = f.at(k + 1, k + 1);
                let det = a11 * a22 - a21 * a21;
                if det < 0.0 {
                    f.inertia.pos += 1;
                    f.inertia.neg += 1;
                } else if a11 + a22 > 0.0 {
                    f.inertia.pos += 2;
                } else {
                    f.inertia.neg += 2;
                }
                let (i11, i21, i22) = (a22 / det, -a21 / det, a11 / det);
                let last2 = (k + 1 + kd).min(n - 1);
                let rows: Vec<(usize, f64, f64)> = (k + 2..=last2)
                    .map(|i| {
                        let c0 = if i <= last { f.at(i, k) } else { 0.0 };
                        let c1 = f.at(i, k + 1);
                        (i, c0, c1)
                    })
                    .collect();
                for (jj, &(j, c0j, c1j)) in rows.iter().enumerate() {
                    let l0 = c0j * i11 + c1j * i21;
                    let l1 = c0j * i21 + c1j * i22;
                    if l0 == 0.0 && l1 == 0.0 {
                        continue;
                    }
                    for &(i, c0i, c1i) in &rows[jj..] {
                        let id = f.idx(i, j);
                        f.data[id] -= c0i * l0 + c1i * l1;
                    }
                }
                for &(i, c0, c1) in &rows {
                    let l0 = c0 * i11 + c1 * i21;
                    let l1 = c0 * i21 + c1 * i22;
                    let id0 = f.idx(i, k);
                    f.data[id0] = l0;
                    let id1 = f.idx(i, k + 1);
                    f.data[id1] = l1;
                }
                f.block[k] = 2;
                f.block[k + 1] = 0;
                f.two_by_two += 1;
                k += 2;
            }
        }
        f
    }

    pub fn is_positive_definite(&self) -> bool {
        self.inertia.neg == 0 && self.inertia.zero == 0
    }

    /// Solves `A x = b`; zero pivots contribute zero components.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        // forward substitution with unit L
        let mut k = 0;
        while k < n {
            let cols: &[usize] = if self.block[k] == 2 { &[k, k + 1] } else { &[k] };
            let start = k + cols.len();
            for &c in cols {
                let xc = x[c];
                if xc == 0.0 {
                    continue;
                }
                for i in start..(c + self.w + 1).min(n) {
                    x[i] -= self.at(i, c) * xc;
                }
            }
            k = start;
        }
        // block diagonal
        let mut k = 0;
        while k < n {
            if self.block[k] == 2 {
                let (a11, a21, a22) = (self.at(k, k), self.at(k + 1, k), self.at(k + 1, k + 1));
                let det = a11 * a22 - a21 * a21;
                let (b1, b2) = (x[k], x[k + 1]);
                x[k] = (a22 * b1 - a21 * b2) / det;
                x[k + 1] = (a11 * b2 - a21 * b1) / det;
                k += 2;
            } else {
                let d = self.at(k, k);
                x[k] = if d == 0.0 { 0.0 } else { x[k] / d };
                k += 1;
            }
        }
        // backward substitution with L^T
        let mut k = n;
        while k > 0 {
            let top = k - 1;
            let (first, len) = if self.block[top] == 0 { (top - 1, 2) } else { (top, 1) };
            let start = first + len;
            for c in (first..start).rev() {
                let mut s = 0.0;
                for i in start..(c + self.w + 1).min(n) {
                    s += self.at(i, c) * x[i];
                }
                x[c] -= s;
            }
            k = first;
        }
        x
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored with room
/// for the fill of partial pivoting.
#[derive(Clone, Debug)]
pub struct GeneralBand {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl GeneralBand {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let top = n.saturating_sub(1);
        let (kl, ku) = (kl.min(top), ku.min(top));
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; n * ld],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + (self.kl + self.ku + i - j)
    }

    /// Adds `v` to entry `(i, j)`, which must lie in the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j <= i + self.ku && i <= j + self.kl, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i + self.ku || i > j + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            for i in j.saturating_sub(self.ku)..(j + self.kl + 1).min(self.n) {
                out[i] += self.data[self.idx(i, j)] * x[j];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude in each row.
    pub fn row_max_abs(&self) -> Vec<f64> {
        let mut r = vec![0.0f64; self.n];
        for j in 0..self.n {
            for i in j.saturating_sub(self.ku)..(j + self.kl + 1).min(self.n) {
                r[i] = r[i].max(self.data[self.idx(i, j)].abs());
            }
        }
        r
    }

    /// Replaces `A` by `diag(d) A diag(d)`.
    pub fn scale_sym(&mut self, d: &[f64]) {
        for j in 0..self.n {
            for i in j.saturating_sub(self.ku)..(j + self.kl + 1).min(self.n) {
                let k = self.idx(i, j);
                self.data[k] *= d[i] * d[j];
            }
        }
    }
}

/// `P A = L U` of a [`GeneralBand`] with row partial pivoting.
#[derive(Clone, Debug)]
pub struct BandLu {
    lu: GeneralBand,
    piv: Vec<usize>,
    /// Smallest pivot magnitude.
    pub min_pivot: f64,
}

impl BandLu {
    pub fn factor(a: &GeneralBand) -> Self {
        let mut m = a.clone();
        let (n, kl, kv) = (m.n, m.kl, m.kl + m.ku);
        let mut piv = vec![0; n];
        let mut min_pivot = f64::INFINITY;
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = m.data[m.idx(j, j)].abs();
            for ii in 1..=km {
                let v = m.data[m.idx(j + ii, j)].abs();
                if v > best {
                    best = v;
                    jp = ii;
                }
            }
            piv[j] = j + jp;
            min_pivot = min_pivot.min(best);
            if best == 0.0 {
                continue;
            }
            ju = ju.max((j + m.ku + jp).min(n - 1)).min(j + kv);
            if jp != 0 {
                for c in j..=ju {
                    let (a, b) = (m.idx(j, c), m.idx(j + jp, c));
                    m.data.swap(a, b);
                }
            }
            let d = m.data[m.idx(j, j)];
            for ii in 1..=km {
                let k = m.idx(j + ii, j);
                m.data[k] /= d;
            }
            for c in j + 1..=ju {
                let t = m.data[m.idx(j, c)];
                if t == 0.0 {
                    continue;
                }
                for ii in 1..=km {
                    let l = m.data[m.idx(j + ii, j)];
                    let k = m.idx(j + ii, c);
                    m.data[k] -= l * t;
                }
            }
        }
        Self {
            lu: m,
            piv,
            min_pivot,
        }
    }

    /// Solves `A x = b`; a zero pivot yields non-finite components.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.lu;
        let (n, kl, kv) = (m.n, m.kl, m.kl + m.ku);
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.piv[j]);
            let xj = x[j];
            if xj != 0.0 {
                for ii in 1..=kl.min(n - 1 - j) {
                    x[j + ii] -= m.data[m.idx(j + ii, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= m.data[m.idx(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    x[i] -= m.data[m.idx(i, j)] * xj;
                }
            }
        }
        x
    }
}
