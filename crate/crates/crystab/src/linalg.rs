//! Small dense linear algebra toolkit.
//!
//! Only what the discrete certificates need: matrix/vector products, Cholesky
//! factorization, triangular solves, and a cyclic Jacobi eigensolver for
//! symmetric matrices. The generalized problem `Q x = λ M x` with `M` positive
//! definite is reduced via `M = L Lᵀ` to the ordinary symmetric problem for
//! `L⁻¹ Q L⁻ᵀ`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("Jacobi eigensolver failed to converge in {0} sweeps")]
    NoConvergence(usize),
}

/// Dense square matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    dst[j] += aik * src[j];
                }
            }
        }
        out
    }

    /// Removes the given row/column index (used to restrict quadratic forms to
    /// the subspace where a constrained component vanishes).
    pub fn without_index(&self, idx: usize) -> SquareMatrix {
        let keep: Vec<usize> = (0..self.n).filter(|i| *i != idx).collect();
        self.submatrix(&keep)
    }

    /// Principal submatrix on the given (sorted) index set.
    pub fn submatrix(&self, indices: &[usize]) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(indices.len());
        for (ii, &i) in indices.iter().enumerate() {
            for (jj, &j) in indices.iter().enumerate() {
                out.set(ii, jj, self.get(i, j));
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                if self.get(i, j) != self.get(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<SquareMatrix, LinalgError> {
        let n = self.n;
        let mut l = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(LinalgError::NotPositiveDefinite {
                            index: i,
                            pivot: sum,
                        });
                    }
                    l.set(i, j, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Ok(l)
    }

    /// Solves `L X = B` in place of `B` for lower-triangular `L = self`.
    fn solve_lower_matrix(&self, b: &mut SquareMatrix) {
        let n = self.n;
        for col in 0..n {
            for i in 0..n {
                let mut sum = b.get(i, col);
                for k in 0..i {
                    sum -= self.get(i, k) * b.get(k, col);
                }
                b.set(i, col, sum / self.get(i, i));
            }
        }
    }

    fn transpose(&self) -> SquareMatrix {
        let n = self.n;
        let mut t = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(matrix: &SquareMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = matrix.dim();
    let mut a = matrix.clone();
    let max_sweeps = 64;

    let off_norm = |a: &SquareMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += a.get(i, j) * a.get(i, j);
            }
        }
        (2.0 * s).sqrt()
    };
    let total_norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let tol = 1e-14 * total_norm.max(f64::MIN_POSITIVE);

    for _ in 0..max_sweeps {
        if off_norm(&a) <= tol {
            let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(ev);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                // smaller-magnitude root for stability
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    Err(LinalgError::NoConvergence(max_sweeps))
}

/// Smallest generalized eigenvalue of `(Q, M)` with `M` symmetric positive
/// definite, via Cholesky reduction and the Jacobi solver.
pub fn min_generalized_eigenvalue(q: &SquareMatrix, m: &SquareMatrix) -> Result<f64, LinalgError> {
    if q.dim() != m.dim() {
        return Err(LinalgError::DimensionMismatch(q.dim(), m.dim()));
    }
    let l = m.cholesky()?;
    // C = L^{-1} Q L^{-T}
    let mut x = q.clone();
    l.solve_lower_matrix(&mut x); // X = L^{-1} Q
    let mut xt = x.transpose();
    l.solve_lower_matrix(&mut xt); // Xt = L^{-1} Qᵀ L^{-T} (transposed view of C)
    let n = q.dim();
    // symmetrize to scrub roundoff before the Jacobi sweep
    let mut c = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            c.set(i, j, 0.5 * (xt.get(i, j) + xt.get(j, i)));
        }
    }
    Ok(jacobi_eigenvalues(&c)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[f64]]) -> SquareMatrix {
        let n = rows.len();
        let mut m = SquareMatrix::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = from_rows(&[&[4.0, 2.0, 0.4], &[2.0, 5.0, 1.0], &[0.4, 1.0, 3.0]]);
        let l = a.cholesky().unwrap();
        let lt = l.transpose();
        let back = l.matmul(&lt);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            a.cholesky(),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let ev = jacobi_eigenvalues(&a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_handles_larger_symmetric_matrix() {
        // tridiagonal -1,2,-1 has eigenvalues 2 - 2 cos(k π / (n+1))
        let n = 24;
        let mut a = SquareMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
                a.set(i + 1, i, -1.0);
            }
        }
        let ev = jacobi_eigenvalues(&a).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let exact =
                2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-10, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn generalized_eigenvalue_reduces_to_ordinary_for_identity_metric() {
        let q = from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let m = from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let min = min_generalized_eigenvalue(&q, &m).unwrap();
        assert!((min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_eigenvalue_scales_with_metric() {
        // Q x = λ M x with M = 2 I halves the spectrum
        let q = from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let m = from_rows(&[&[2.0, 0.0], &[0.0, 2.0]]);
        let min = min_generalized_eigenvalue(&q, &m).unwrap();
        assert!((min - 0.5).abs() < 1e-12);
    }
}
