//! Small direct solvers: tridiagonal (Thomas) and banded symmetric positive
//! definite (Cholesky in band storage).

/// Solves a tridiagonal system in place.
///
/// `lower[i]` couples row i to i−1 (lower[0] unused), `upper[i]` couples row
/// i to i+1 (last entry unused). Returns `None` on a zero pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Some(());
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return None;
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Some(())
}

/// Symmetric positive definite matrix with half-bandwidth `bw`, stored by
/// rows as `band[i * (bw + 1) + k] = A[i][i - bw + k]` for the lower band.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    band: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, band: vec![0.0; n * (bw + 1)], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to A[i][j] (and by symmetry A[j][i]); |i − j| ≤ bw.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.band[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.band[self.idx(r, c)]
        }
    }

    /// y = A x (before factorization).
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.factored);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.band[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky factorization A = L Lᵀ. Returns the failing row on
    /// a non-positive pivot.
    pub fn factor(&mut self) -> Result<(), usize> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // s = A[i][j] − Σ_k L[i][k] L[j][k], k from max(j0, j − bw) to j − 1
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.band[i * w + (bw + j - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in k0..j {
                    s -= self.band[ri + k] * self.band[rj + k];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(i);
                    }
                    self.band[i * w + bw] = s.sqrt();
                } else {
                    self.band[i * w + (bw + j - i)] = s / self.band[j * w + bw];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves A x = b in place after [`factor`](Self::factor).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored, "factor before solving");
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut s = b[i];
            let ri = i * w + bw - i;
            for j in j0..i {
                s -= self.band[ri + j] * b[j];
            }
            b[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let s = b[i] / self.band[i * w + bw];
            b[i] = s;
            let j0 = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            for j in j0..i {
                b[j] -= self.band[ri + j] * s;
            }
        }
    }
}
