//! Symmetric positive-definite banded matrices and their Cholesky factor.

/// Lower band of a symmetric matrix: row `i` stores columns
/// `i - half_bandwidth ..= i`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    hb: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        Self {
            n,
            hb: half_bandwidth,
            data: vec![0.0; n * (half_bandwidth + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.hb);
        i * (self.hb + 1) + (j + self.hb - i)
    }

    /// Adds `v` at `(i, j)`; only the lower triangle is stored, so callers
    /// add each symmetric pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.hb {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.data[self.idx(i, i)]
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hb);
            let row = &self.data[self.idx(i, lo)..=self.idx(i, i)];
            let mut s = 0.0;
            for (off, a) in row.iter().enumerate() {
                let j = lo + off;
                s += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += s;
        }
        y
    }

    /// Scales to `D A D`.
    pub fn scale_sym(&mut self, d: &[f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hb);
            for j in lo..=i {
                let k = self.idx(i, j);
                self.data[k] *= d[i] * d[j];
            }
        }
    }

    /// In-place Cholesky factorization. Returns the indices whose pivot
    /// fell below `tiny` (those pivots are replaced by one so the scan can
    /// report every deficient row).
    pub fn cholesky(mut self, tiny: f64) -> (BandCholesky, Vec<usize>) {
        let hb = self.hb;
        let w = hb + 1;
        let mut bad = Vec::new();
        for i in 0..self.n {
            let lo = i.saturating_sub(hb);
            for j in lo..=i {
                let kmin = lo.max(j.saturating_sub(hb));
                let mut s = self.data[i * w + (j + hb - i)];
                if kmin < j {
                    let ri = i * w + (kmin + hb - i);
                    let rj = j * w + (kmin + hb - j);
                    let len = j - kmin;
                    let a = &self.data[ri..ri + len];
                    let b = &self.data[rj..rj + len];
                    s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                }
                if i == j {
                    let v = if s > tiny {
                        s.sqrt()
                    } else {
                        bad.push(i);
                        1.0
                    };
                    self.data[i * w + hb] = v;
                } else {
                    self.data[i * w + (j + hb - i)] = s / self.data[j * w + hb];
                }
            }
        }
        (BandCholesky { l: self }, bad)
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let hb = self.l.hb;
        let w = hb + 1;
        let d = &self.l.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(hb);
            let mut s = y[i];
            for j in lo..i {
                s -= d[i * w + (j + hb - i)] * y[j];
            }
            y[i] = s / d[i * w + hb];
        }
        for i in (0..n).rev() {
            let v = y[i] / d[i * w + hb];
            y[i] = v;
            let lo = i.saturating_sub(hb);
            for j in lo..i {
                y[j] -= d[i * w + (j + hb - i)] * v;
            }
        }
        y
    }
}
