//! Minimal dense linear algebra used by the absorbing-chain analysis.

/// LU factorization with partial pivoting of a square matrix.
///
/// Factors `P A = L U`; solves against both `A` and `A^T` reuse the same
/// factors, which is what the chain analysis needs (row sums of the
/// fundamental matrix via `A`, column-weighted sums via `A^T`).
pub(crate) struct LuFactors {
    n: usize,
    /// Combined L (below diagonal, unit diagonal implicit) and U (diagonal and above).
    lu: Vec<f64>,
    /// Row permutation: factored row `i` came from original row `perm[i]`.
    perm: Vec<usize>,
}

/// Raised when a pivot falls below the caller's threshold.
pub(crate) struct Singular;

impl LuFactors {
    /// Factors `a` (row-major `n x n`). Declares the matrix singular when the
    /// best available pivot magnitude drops below `pivot_tol`.
    pub fn factor(mut a: Vec<f64>, n: usize, pivot_tol: f64) -> Result<Self, Singular> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = k;
            let mut best_mag = a[k * n + k].abs();
            for r in (k + 1)..n {
                let mag = a[r * n + k].abs();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag < pivot_tol {
                return Err(Singular);
            }
            if best != k {
                perm.swap(k, best);
                for c in 0..n {
                    a.swap(k * n + c, best * n + c);
                }
            }
            let pivot = a[k * n + k];
            for r in (k + 1)..n {
                let factor = a[r * n + k] / pivot;
                a[r * n + k] = factor;
                if factor != 0.0 {
                    for c in (k + 1)..n {
                        a[r * n + c] -= factor * a[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Forward: L y = P b.
        let mut x: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        // Backward: U x = y.
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^T x = b` using the same factors: `A^T = U^T L^T P`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Forward: U^T z = b (U^T is lower triangular).
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s / self.lu[i * n + i];
        }
        // Backward: L^T w = z (L^T is unit upper triangular).
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i] * z[j];
            }
            z[i] = s;
        }
        // Undo the row permutation: x = P^T w.
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = z[i];
        }
        x
    }
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted descending and
/// eigenvectors as columns of a row-major `n x n` matrix. Used only for
/// principal-axis alignment of embeddings (`n` is 2 or 3).
pub(crate) fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app).atan2(2.0 * apq) + std::f64::consts::FRAC_PI_4;
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].partial_cmp(&m[i * n + i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    (eigenvalues, eigenvectors)
}
