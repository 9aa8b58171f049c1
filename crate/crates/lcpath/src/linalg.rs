//! Dense real linear algebra: row-major matrices, vector norms, and LU
//! factorization with partial pivoting.
//!
//! Everything here is binary64 and value-semantic. Matrices are immutable
//! after construction; factoring produces a separate [`LuFactors`] object.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is numerically singular: pivot {pivot:.3e} below floor {floor:.3e} at column {col}")]
    SingularMatrix { pivot: f64, floor: f64, col: usize },
    #[error("non-finite entry at index {0}")]
    NonFiniteEntry(usize),
}

/// Dense row-major matrix of f64 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from a row-major slice. Validates shape and that all entries
    /// are finite.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFiniteEntry(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// New matrix with `v` added to every diagonal entry.
    pub fn add_diagonal(&self, v: f64) -> DenseMatrix {
        assert!(self.is_square(), "add_diagonal requires a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] += v;
        }
        out
    }

    /// Standard matrix-vector product.
    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "mat_vec: matrix has {} cols, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect())
    }

    /// Product with the transpose, `A^T x`, without materializing `A^T`.
    pub fn mat_t_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "mat_t_vec: matrix has {} rows, vector has {} entries",
                self.rows,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    /// LU factorization with partial (max-column) pivoting.
    ///
    /// A pivot whose magnitude falls below `1e-14` times its own column's
    /// original scale is treated as singular rather than divided through:
    /// a vanishing pivot at that scale signals a degenerate instance. The
    /// floor is per-column, not relative to the global matrix norm, because
    /// the Newton systems this crate factors mix rows of wildly different
    /// magnitude near convergence while staying comfortably nonsingular.
    pub fn lu_factor(&self) -> Result<LuFactors, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "lu_factor requires square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut col_scale = vec![0.0_f64; n];
        for i in 0..n {
            for (j, v) in self.row(i).iter().enumerate() {
                col_scale[j] = col_scale[j].max(v.abs());
            }
        }
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            // pivot: largest |entry| in this column at or below the diagonal
            let mut p = col;
            let mut pmax = lu[col * n + col].abs();
            for r in col + 1..n {
                let v = lu[r * n + col].abs();
                if v > pmax {
                    pmax = v;
                    p = r;
                }
            }
            let floor = PIVOT_FLOOR_FACTOR * col_scale[col];
            if pmax < floor || pmax == 0.0 {
                return Err(LinalgError::SingularMatrix {
                    pivot: pmax,
                    floor,
                    col,
                });
            }
            if p != col {
                let (a, b) = lu.split_at_mut(p * n);
                a[col * n..col * n + n].swap_with_slice(&mut b[..n]);
                perm.swap(col, p);
            }
            let pivot = lu[col * n + col];
            let inv_pivot = 1.0 / pivot;
            let (pivot_row, rest) = lu.split_at_mut((col + 1) * n);
            let pivot_tail = &pivot_row[col * n + col + 1..];
            for row in rest.chunks_exact_mut(n) {
                let factor = row[col] * inv_pivot;
                row[col] = factor;
                if factor != 0.0 {
                    for (rj, pj) in row[col + 1..].iter_mut().zip(pivot_tail) {
                        *rj -= factor * pj;
                    }
                }
            }
        }

        Ok(LuFactors { n, lu, perm })
    }
}

/// Relative floor below which a pivot is declared singular.
const PIVOT_FLOOR_FACTOR: f64 = 1e-14;

/// Packed L/U factors of `P*A = L*U` plus the row permutation.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    /// Unit-lower-triangular multipliers below the diagonal, U on and above.
    lu: Vec<f64>,
    /// `perm[i]` is the source row of `A` that ended up in position `i`.
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Entry of the packed factor storage (L strictly below diagonal with
    /// implicit unit diagonal, U on and above).
    pub fn packed(&self, i: usize, j: usize) -> f64 {
        self.lu[i * self.n + j]
    }

    /// Solve `A x = b` by permuted forward/back substitution.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "lu_solve: factors are {}x{}, rhs has {} entries",
                n,
                n,
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward: L y = P b
        for i in 1..n {
            let row = &self.lu[i * n..i * n + i];
            let mut s = x[i];
            for (j, &l) in row.iter().enumerate() {
                s -= l * x[j];
            }
            x[i] = s;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        Ok(x)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm. Empty vector gives 0.
pub fn norm_2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Max-magnitude norm. Empty vector gives 0.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn validate_finite(v: &[f64]) -> Result<(), LinalgError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(LinalgError::NonFiniteEntry(i)),
        None => Ok(()),
    }
}
