//! Small dense linear algebra: row-major matrices, one-sided Jacobi SVD,
//! Jacobi symmetric eigensolver, Gaussian solves, Newton-Schulz polar
//! orthogonalization.
//!
//! Everything here is deterministic and dependency-free; the dimensions in
//! play are a few thousand at most (dense kernel certification), and mostly
//! tiny (frames, covariances, Lanczos tridiagonals).

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> DenseMat {
        let mut t = DenseMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// ||A^T A - I||_max, the orthogonality defect.
    pub fn orthogonality_defect(&self) -> f64 {
        let gram = self.transpose().matmul(self);
        let mut defect = 0.0f64;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        defect
    }
}

impl core::ops::Index<(usize, usize)> for DenseMat {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for DenseMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Result of a singular value decomposition A = U diag(sigma) V^T.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors as columns (rows x min(rows,cols) meaningful).
    pub u: DenseMat,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: DenseMat,
}

/// One-sided Jacobi SVD.
///
/// Column rotations orthogonalize A in place while V accumulates them;
/// converges quadratically and computes small singular values to high
/// relative accuracy, which is what kernel detection needs.
pub fn jacobi_svd(a: &DenseMat) -> Svd {
    let m = a.rows;
    let n = a.cols;
    // column-major working copy for cache-friendly column ops
    let mut w: Vec<Vec<f64>> = (0..n).map(|c| (0..m).map(|r| a[(r, c)]).collect()).collect();
    let mut v = DenseMat::identity(n);
    let eps = f64::EPSILON;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for r in 0..m {
                    app += w[p][r] * w[p][r];
                    aqq += w[q][r] * w[q][r];
                    apq += w[p][r] * w[q][r];
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let wp = w[p][r];
                    let wq = w[q][r];
                    w[p][r] = c * wp - s * wq;
                    w[q][r] = s * wp + c * wq;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = c * vp - s * vq;
                    v[(r, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = (0..n)
        .map(|c| w[c].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    // sort descending, permuting U and V consistently
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut u = DenseMat::zeros(m, n);
    let mut vs = DenseMat::zeros(n, n);
    let mut sig_sorted = vec![0.0; n];
    for (new, &old) in order.iter().enumerate() {
        sig_sorted[new] = sigma[old];
        let s = sigma[old];
        for r in 0..m {
            u[(r, new)] = if s > 0.0 { w[old][r] / s } else { 0.0 };
        }
        for r in 0..n {
            vs[(r, new)] = v[(r, old)];
        }
    }
    sigma = sig_sorted;
    Svd { u, sigma, v: vs }
}

/// Jacobi eigensolver for a symmetric matrix: returns (eigenvalues
/// ascending, eigenvectors as columns).
pub fn sym_eigen(a: &DenseMat) -> (Vec<f64>, DenseMat) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMat::identity(n);
    let max_sweeps = 80;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= 1e-300 || off <= f64::EPSILON * m.max_abs() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::EPSILON * (m[(p, p)].abs() + m[(q, q)].abs()).max(1e-300) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut evals: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let mut vs = DenseMat::zeros(n, n);
    let mut es = vec![0.0; n];
    for (new, &old) in order.iter().enumerate() {
        es[new] = evals[old];
        for r in 0..n {
            vs[(r, new)] = v[(r, old)];
        }
    }
    evals = es;
    (evals, vs)
}

/// Solve A x = b by Gaussian elimination with partial pivoting (small n).
pub fn solve_dense(a: &DenseMat, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    let mut m = a.clone();
    let mut x: Vec<f64> = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(piv, col)].abs() {
                piv = r;
            }
        }
        if m[(piv, col)].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                let t = m[(col, c)];
                m[(col, c)] = m[(piv, c)];
                m[(piv, c)] = t;
            }
            x.swap(col, piv);
        }
        let d = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                let v = m[(col, c)];
                m[(r, c)] -= f * v;
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in (col + 1)..n {
            s -= m[(col, c)] * x[c];
        }
        x[col] = s / m[(col, col)];
    }
    Some(x)
}

/// Invert a small square matrix.
pub fn invert(a: &DenseMat) -> Option<DenseMat> {
    let n = a.rows;
    let mut out = DenseMat::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve_dense(a, &e)?;
        for r in 0..n {
            out[(r, c)] = col[r];
        }
    }
    Some(out)
}

/// Project a near-orthogonal matrix onto the orthogonal group by
/// Newton-Schulz iteration: X <- X (3I - X^T X) / 2.
///
/// Converges quadratically for ||X^T X - I|| < 1, which path integration
/// guarantees between consecutive projections.
pub fn polar_orthogonalize(a: &DenseMat) -> DenseMat {
    let n = a.cols;
    let mut x = a.clone();
    for _ in 0..40 {
        let gram = x.transpose().matmul(&x);
        let mut defect = 0.0f64;
        let mut corr = DenseMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
                corr[(i, j)] = 1.5 * target - 0.5 * gram[(i, j)];
            }
        }
        if defect < 1e-15 {
            break;
        }
        x = x.matmul(&corr);
    }
    x
}

pub fn determinant(a: &DenseMat) -> f64 {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(piv, col)].abs() {
                piv = r;
            }
        }
        if m[(piv, col)] == 0.0 {
            return 0.0;
        }
        if piv != col {
            det = -det;
            for c in 0..n {
                let t = m[(col, c)];
                m[(col, c)] = m[(piv, c)];
                m[(piv, c)] = t;
            }
        }
        det *= m[(col, col)];
        let d = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / d;
            for c in col..n {
                let v = m[(col, c)];
                m[(r, c)] -= f * v;
            }
        }
    }
    det
}
