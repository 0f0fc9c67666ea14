//! Small dense symmetric matrices and their eigenvalues.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{kahan, sqrt};

/// Square matrix stored row-major. Callers keep it symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Row-major data of length `dim * dim`.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == dim * dim).then_some(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| kahan(self.row(i).iter().copied())).collect()
    }

    pub fn trace(&self) -> f64 {
        kahan((0..self.dim).map(|i| self.get(i, i)))
    }

    pub fn frobenius(&self) -> f64 {
        sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Largest `|a_ij - b_ij|`; infinite when the shapes differ.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Quadratic form `x' A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        kahan((0..self.dim).flat_map(|i| (0..self.dim).map(move |j| (i, j))).map(|(i, j)| {
            x[i] * self.get(i, j) * x[j]
        }))
    }

    /// Kronecker product `self (x) other`.
    pub fn kronecker(&self, other: &SymMatrix) -> SymMatrix {
        let (a, b) = (self.dim, other.dim);
        SymMatrix::from_fn(a * b, |i, j| self.get(i / b, j / b) * other.get(i % b, j % b))
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    acc += self.get(i, j) * self.get(i, j);
                }
            }
        }
        sqrt(acc)
    }
}

/// Sweeps allowed before the Jacobi iteration gives up on convergence.
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations. Iterates until the off-diagonal Frobenius norm drops below
/// `1e-12` times the norm of the input.
pub fn symmetric_eigenvalues(matrix: &SymMatrix) -> Vec<f64> {
    let n = matrix.dim();
    let mut a = matrix.clone();
    let threshold = 1e-12 * matrix.frobenius();
    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(1.0 + theta * theta));
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set_sym(k, p, c * akp - s * akq);
                    a.set_sym(k, q, s * akp + c * akq);
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                a.set_sym(p, p, app - t * apq);
                a.set_sym(q, q, aqq + t * apq);
                a.set_sym(p, q, 0.0);
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    values.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    values
}
