//! Small dense linear algebra for d×d problems (d is the sampling
//! dimension, typically ≤ 100).

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lower-triangular matrix stored row-major (full square storage).
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    /// Builds from rows; entries above the diagonal must be zero and the
    /// diagonal strictly positive.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("empty factor".into()));
        }
        let mut data = vec![0.0; dim * dim];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument("non-finite factor entry".into()));
                }
                if j > i && v != 0.0 {
                    return Err(Error::InvalidArgument("factor is not lower triangular".into()));
                }
                data[i * dim + j] = v;
            }
            if row[i] <= 0.0 {
                return Err(Error::InvalidArgument(
                    "factor diagonal must be strictly positive".into(),
                ));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] = (b[i] - s) / self.get(i, i);
        }
        y
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper_transposed(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = 0.0;
            for k in i + 1..n {
                s += self.get(k, i) * x[k];
            }
            x[i] = (b[i] - s) / self.get(i, i);
        }
        x
    }

    /// `L v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..=i).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `Σ = L Lᵀ` as rows.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        out
    }

    /// `Σ⁻¹ v` via two triangular solves.
    pub fn precision_mul(&self, v: &[f64]) -> Vec<f64> {
        self.solve_upper_transposed(&self.solve_lower(v))
    }

    /// `vᵀ Σ⁻¹ v = |L⁻¹ v|²`.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        let y = self.solve_lower(v);
        dot(&y, &y)
    }

    /// `ln det Σ = 2 Σ ln L_ii`.
    pub fn log_det_covariance(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    pub fn trace_covariance(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky(sigma: &[Vec<f64>]) -> Result<LowerTriangular> {
    let n = sigma.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty covariance matrix".into()));
    }
    for row in sigma {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (sigma[i][j], sigma[j][i]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::InvalidArgument("covariance matrix is not symmetric".into()));
            }
        }
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = sigma[i][j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::InvalidArgument(
                        "covariance matrix is not positive definite".into(),
                    ));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(LowerTriangular { dim: n, data: l })
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale: f64 = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
            ev.sort_by(|x, y| x.total_cmp(y));
            return Ok(ev);
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    Err(Error::NoConvergence("Jacobi eigenvalue iteration".into()))
}

/// Solves a small dense system with partial pivoting; `None` if singular.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| {
        let mut row = r.clone();
        row.push(bi);
        row
    }).collect();
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}
