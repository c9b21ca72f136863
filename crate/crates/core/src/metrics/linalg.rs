//! Small dense symmetric-matrix routines: cyclic Jacobi eigendecomposition
//! and the PSD square root built on it.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::dim(
                "square_matrix",
                format!("{n}×{n} needs {} values, got {}", n * n, data.len()),
            ));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> SquareMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..i {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }

    pub fn sub(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Eigenpairs of a symmetric matrix; `vectors` holds eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-8;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `1e-12` (scaled by `max(1, ‖S‖_F)`).
pub fn jacobi_eigen(s: &SquareMatrix) -> Result<SymEigen> {
    let asym = s.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Contract(format!(
            "matrix is not symmetric (max |S_ij − S_ji| = {asym:e})"
        )));
    }
    let n = s.n;
    let mut a = s.symmetrized();
    let mut v = SquareMatrix::identity(n);
    let tol = 1e-12 * a.frobenius().max(1.0);
    let mut sweeps = 0;

    while a.off_diagonal_norm() >= tol && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }

    Ok(SymEigen {
        values: (0..n).map(|i| a.get(i, i)).collect(),
        vectors: v,
        sweeps,
    })
}

/// `Q·sqrt(max(Λ, 0))·Qᵀ` for symmetric `S = QΛQᵀ`.
pub fn matrix_sqrt_psd(s: &SquareMatrix) -> Result<SquareMatrix> {
    let eig = jacobi_eigen(s)?;
    let n = s.n;
    let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let q = &eig.vectors;
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| q.get(i, k) * roots[k] * q.get(j, k)).sum();
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let i3 = SquareMatrix::identity(3);
        assert_eq!(matrix_sqrt_psd(&i3).unwrap(), i3);
        let d = matrix_sqrt_psd(&SquareMatrix::diag(&[4.0, 9.0])).unwrap();
        assert_eq!(d, SquareMatrix::diag(&[2.0, 3.0]));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = SquareMatrix::new(2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(matrix_sqrt_psd(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn clamps_negative_eigenvalues() {
        let m = SquareMatrix::diag(&[-1e-10, 4.0]);
        let r = matrix_sqrt_psd(&m).unwrap();
        assert_eq!(r, SquareMatrix::diag(&[0.0, 2.0]));
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let m = SquareMatrix::new(3, vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 1.0]).unwrap();
        let e = jacobi_eigen(&m).unwrap();
        let q = &e.vectors;
        let back = q.matmul(&SquareMatrix::diag(&e.values)).matmul(&q.transpose());
        assert!(back.sub(&m).frobenius() < 1e-12);
    }
}
