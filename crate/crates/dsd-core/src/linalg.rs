#![allow(clippy::needless_range_loop)]

//! Small dense linear algebra: row-major matrices and Gaussian elimination
//! with partial pivoting. Systems here are at most 8x8, so there is no call
//! for anything fancier.

use crate::error::{Error, Result};

/// Pivot magnitudes below this are treated as rank deficiency.
pub const PIVOT_TOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (a, b) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(b * self.cols);
        head[a * self.cols..(a + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    /// y = self * x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Reusable LU factorization workspace (`P*A = L*U`, partial pivoting).
///
/// `perm[i]` is the original row index now sitting at position `i`.
#[derive(Debug, Clone)]
pub struct LuSolver {
    lu: Matrix,
    perm: Vec<usize>,
    n: usize,
}

impl LuSolver {
    pub fn new(n: usize) -> Self {
        LuSolver {
            lu: Matrix::zeros(n, n),
            perm: (0..n).collect(),
            n,
        }
    }

    /// Factor `a`, reusing internal storage. Fails with [`Error::SingularMatrix`]
    /// when the best available pivot falls below [`PIVOT_TOL`].
    pub fn factor(&mut self, a: &Matrix) -> Result<()> {
        assert_eq!(a.rows(), self.n);
        assert_eq!(a.cols(), self.n);
        self.lu.data.copy_from_slice(&a.data);
        for (i, p) in self.perm.iter_mut().enumerate() {
            *p = i;
        }
        let n = self.n;
        for col in 0..n {
            // Partial pivot: largest magnitude in the column at or below the diagonal.
            let mut pivot_row = col;
            let mut pivot_mag = self.lu[(col, col)].abs();
            for r in col + 1..n {
                let mag = self.lu[(r, col)].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag < PIVOT_TOL || !pivot_mag.is_finite() {
                return Err(Error::SingularMatrix {
                    column: col,
                    pivot: self.lu[(pivot_row, col)],
                });
            }
            self.lu.swap_rows(col, pivot_row);
            self.perm.swap(col, pivot_row);
            let pivot = self.lu[(col, col)];
            for r in col + 1..n {
                let factor = self.lu[(r, col)] / pivot;
                self.lu[(r, col)] = factor;
                if factor != 0.0 {
                    for c in col + 1..n {
                        self.lu[(r, c)] -= factor * self.lu[(col, c)];
                    }
                }
            }
        }
        Ok(())
    }

    /// Solve `A*x = b` into `x` using the current factorization.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(x.len(), n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // Forward with unit-diagonal L.
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // Back with U.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
    }

    /// Solve the transposed system `A^T * y = b`. With `P*A = L*U` this is
    /// `U^T t = b`, `L^T r = t`, `y = P^T r`.
    pub fn solve_transposed_into(&self, b: &[f64], y: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(y.len(), n);
        assert_eq!(scratch.len(), n);
        // Forward with U^T (non-unit diagonal).
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[(j, i)] * scratch[j];
            }
            scratch[i] = acc / self.lu[(i, i)];
        }
        // Back with L^T (unit diagonal).
        for i in (0..n).rev() {
            let mut acc = scratch[i];
            for j in i + 1..n {
                acc -= self.lu[(j, i)] * scratch[j];
            }
            scratch[i] = acc;
        }
        for i in 0..n {
            y[self.perm[i]] = scratch[i];
        }
    }
}

/// Solve a dense square system by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows(), a.cols(), "matrix must be square");
    assert_eq!(rhs.len(), a.rows(), "rhs length must match");
    let mut solver = LuSolver::new(a.rows());
    solver.factor(a)?;
    let mut x = vec![0.0; rhs.len()];
    solver.solve_into(rhs, &mut x);
    Ok(x)
}
