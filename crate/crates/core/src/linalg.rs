//! Dense symmetric positive-definite matrix services.
//!
//! Everything here is sized for correlation matrices of at most a few hundred
//! rows: a row-major Cholesky factor with an explicit pivot floor, triangular
//! solves, log-determinants, quadratic forms, and a cyclic Jacobi eigen-solve
//! for exact 2-norm condition numbers.

use crate::error::{GpError, Result};

/// Relative pivot floor: a pivot at or below `PIVOT_FLOOR * max(diag)` rejects
/// the factorization.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Condition numbers above this value are not trusted in double precision.
pub const DOUBLE_PRECISION_LIMIT: f64 = 1e12;

/// A dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle and
    /// mirroring, so symmetry holds bit for bit.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(GpError::InvalidParameter("matrix dimension must be at least 1".into()));
        }
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds a matrix from rows; fails unless the input is exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(GpError::InvalidParameter("matrix dimension must be at least 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GpError::DimensionMismatch { expected: n, found: row.len() });
            }
            for j in 0..i {
                if row[j] != rows[j][i] {
                    return Err(GpError::InvalidParameter(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, entries: rows.concat() })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_1(&self) -> f64 {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, v.len())?;
        Ok((0..self.n).map(|i| dot(self.row(i), v)).collect())
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    n: usize,
    lower: Vec<f64>,
    pivot_floor: f64,
}

/// Factors `m` as `L Lᵀ`.
///
/// Fails with [`GpError::NotPositiveDefinite`] as soon as a pivot (the
/// Schur-complement diagonal before the square root) is at or below
/// `PIVOT_FLOOR * max(diag(m))`.
pub fn cholesky(m: &SymMatrix) -> Result<CholFactor> {
    let n = m.n;
    let pivot_floor = PIVOT_FLOOR * m.max_diag();
    let mut lower = vec![0.0; n * n];
    for j in 0..n {
        let (done, rest) = lower.split_at_mut(j * n);
        let row_j = &mut rest[..n];
        // row j, columns < j
        for k in 0..j {
            let row_k = &done[k * n..k * n + k];
            let s = m.get(j, k) - dot(&row_j[..k], row_k);
            row_j[k] = s / done[k * n + k];
        }
        let pivot = m.get(j, j) - dot(&row_j[..j], &row_j[..j]);
        if !(pivot > pivot_floor) {
            return Err(GpError::NotPositiveDefinite { pivot: j });
        }
        row_j[j] = pivot.sqrt();
    }
    Ok(CholFactor { n, lower, pivot_floor })
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot the factorization would have accepted.
    pub fn pivot_floor(&self) -> f64 {
        self.pivot_floor
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    /// Dense copy of `L` as rows.
    pub fn lower_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.lower[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, b.len())?;
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            z[i] = (z[i] - dot(row, &z[..i])) / self.lower[i * n + i];
        }
        Ok(z)
    }

    /// Solves `Lᵀ x = z`.
    pub fn backward(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, z.len())?;
        let n = self.n;
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        Ok(x)
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.backward(&self.forward(b)?)
    }

    /// `vᵀ M⁻¹ v`, computed as `‖L⁻¹ v‖²` so the result is never negative.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        let z = self.forward(v)?;
        Ok(dot(&z, &z))
    }

    /// `ln |M| = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.lower(i, i).ln()).sum::<f64>()
    }

    /// Explicit `M⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        // columns of L⁻¹, stored as rows of (L⁻¹)ᵀ
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= self.lower[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = s / self.lower[i * n + i];
            }
        }
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in j..n {
                    s += linv[k * n + i] * linv[k * n + j];
                }
                entries[i * n + j] = s;
                entries[j * n + i] = s;
            }
        }
        SymMatrix { n, entries }
    }
}

/// Quadratic form through a factor; free-function form of [`CholFactor::quad_form`].
pub fn quad_form(f: &CholFactor, v: &[f64]) -> Result<f64> {
    f.quad_form(v)
}

/// Log-determinant of the factored matrix.
pub fn log_det(f: &CholFactor) -> f64 {
    f.log_det()
}

/// 2-norm condition number with a trust flag.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Condition {
    pub value: f64,
    /// Set when `value` exceeds [`DOUBLE_PRECISION_LIMIT`] or the smallest
    /// eigenvalue underflowed.
    pub beyond_double_precision: bool,
}

/// `|λ|max / |λ|min` from a full Jacobi eigen-solve.
pub fn condition_number(m: &SymMatrix) -> Condition {
    let eig = symmetric_eigenvalues(m);
    let hi = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let lo = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if lo < f64::MIN_POSITIVE {
        return Condition { value: f64::INFINITY, beyond_double_precision: true };
    }
    let value = hi / lo;
    Condition { value, beyond_double_precision: value > DOUBLE_PRECISION_LIMIT }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Rotations are skipped when `|a_pq| ≤ ε·sqrt(|a_pp a_qq|)`, which keeps
/// small eigenvalues of positive-definite matrices relatively accurate.
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.n;
    let mut a = m.entries.clone();
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq == 0.0 || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GpError::DimensionMismatch { expected, found });
    }
    Ok(())
}
