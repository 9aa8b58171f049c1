//! LCP instances and the NETLIB-style test-problem generator.
//!
//! An instance is the pair `(M, q)` of `y = Mx + q`, `x >= 0`, `y >= 0`,
//! `x_i y_i = 0`. Generated instances embed an LP constraint matrix `A` into
//! the skew-symmetric (hence positive semi-definite) matrix
//! `M = [[0, -A^T], [A, 0]]` and pick `q` so that an alternating 0/1 pair is
//! a solution by construction.

use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::rng::SplitMix64;

/// A linear complementarity problem instance, optionally carrying the
/// solution it was constructed around.
#[derive(Debug, Clone)]
pub struct LcpProblem {
    pub name: String,
    pub m: DenseMatrix,
    pub q: Vec<f64>,
    pub designed_solution: Option<(Vec<f64>, Vec<f64>)>,
    /// Seed recorded by the generator, if any (metadata only).
    pub seed: Option<u64>,
}

impl LcpProblem {
    pub fn new(name: impl Into<String>, m: DenseMatrix, q: Vec<f64>) -> Result<Self, LinalgError> {
        if !m.is_square() || m.rows() != q.len() {
            return Err(LinalgError::DimensionMismatch(format!(
                "LCP needs square M matching q: M is {}x{}, q has {}",
                m.rows(),
                m.cols(),
                q.len()
            )));
        }
        linalg::validate_finite(&q)?;
        Ok(Self {
            name: name.into(),
            m,
            q,
            designed_solution: None,
            seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Parameters for the generator pipeline.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    /// Additive uniform perturbation scale for the dense variants; 0 disables.
    pub perturb_epsilon: f64,
    /// Value added to the first element of all-zero rows/columns of `A`.
    pub zero_fix_epsilon: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            perturb_epsilon: 0.0,
            zero_fix_epsilon: 1e-6,
            seed: 0,
        }
    }
}

/// Add `eps` to the first element of every all-zero row and all-zero column.
pub fn fix_zero_rows_cols(a: &DenseMatrix, eps: f64) -> DenseMatrix {
    assert!(eps > 0.0, "zero-fix epsilon must be positive");
    let (rows, cols) = (a.rows(), a.cols());
    let mut data = a.data().to_vec();
    for i in 0..rows {
        if a.row(i).iter().all(|&v| v == 0.0) {
            data[i * cols] = eps;
        }
    }
    for j in 0..cols {
        if (0..rows).all(|i| data[i * cols + j] == 0.0) {
            data[j] = eps;
        }
    }
    DenseMatrix::from_row_major(rows, cols, data).expect("zero fix preserves shape")
}

/// Skew embedding `M = [[0, -A^T], [A, 0]]` of an `m x n` matrix; the result
/// is `(m+n) x (m+n)` and skew-symmetric, hence positive semi-definite.
pub fn build_skew_embedding(a: &DenseMatrix) -> DenseMatrix {
    let (ma, na) = (a.rows(), a.cols());
    let n = ma + na;
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..ma {
        for j in 0..na {
            let v = a.get(i, j);
            if v != 0.0 {
                m.set(na + i, j, v);
                m.set(j, na + i, -v);
            }
        }
    }
    m
}

/// The alternating complementary pair `x = (1,0,1,0,...)`, `y = (0,1,0,1,...)`,
/// truncated at `n` when `n` is odd.
pub fn designed_solution(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
    (x, y)
}

/// `q = y - M x`, making `(x, y)` feasible and complementary for `(M, q)`.
pub fn build_q(m: &DenseMatrix, x: &[f64], y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let mx = m.mat_vec(x)?;
    if y.len() != mx.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "build_q: y has {} entries, M x has {}",
            y.len(),
            mx.len()
        )));
    }
    Ok(y.iter().zip(&mx).map(|(yi, mi)| yi - mi).collect())
}

/// `A + eps * R` with `R` uniform in [0,1) from a seeded SplitMix64 stream,
/// drawn row-major. `eps = 0` returns the input unchanged.
pub fn perturb_dense(a: &DenseMatrix, eps: f64, seed: u64) -> DenseMatrix {
    assert!(eps >= 0.0, "perturbation scale must be nonnegative");
    if eps == 0.0 {
        return a.clone();
    }
    let mut rng = SplitMix64::new(seed);
    let data: Vec<f64> = a.data().iter().map(|v| v + eps * rng.next_f64()).collect();
    DenseMatrix::from_row_major(a.rows(), a.cols(), data).expect("perturb preserves shape")
}

/// The two termination residuals, both against the problem's own (original,
/// unregularized) matrix: `(‖y - (Mx+q)‖_inf, ‖x∘y‖_inf)`.
pub fn termination_residual(
    p: &LcpProblem,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, f64), LinalgError> {
    let mx = p.m.mat_vec(x)?;
    if y.len() != mx.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "termination_residual: y has {} entries, expected {}",
            y.len(),
            mx.len()
        )));
    }
    let feas = linalg::norm_inf(
        &y.iter()
            .zip(mx.iter().zip(&p.q))
            .map(|(yi, (mi, qi))| yi - (mi + qi))
            .collect::<Vec<_>>(),
    );
    let comp = linalg::norm_inf(&x.iter().zip(y).map(|(a, b)| a * b).collect::<Vec<_>>());
    Ok((feas, comp))
}

/// Full generator pipeline: zero-row/column fix, optional dense perturbation,
/// skew embedding, designed solution, and `q` construction.
pub fn generate(name: impl Into<String>, a: &DenseMatrix, spec: &GeneratorSpec) -> LcpProblem {
    let fixed = fix_zero_rows_cols(a, spec.zero_fix_epsilon);
    let a_eps = perturb_dense(&fixed, spec.perturb_epsilon, spec.seed);
    let m = build_skew_embedding(&a_eps);
    let n = m.rows();
    let (x, y) = designed_solution(n);
    let q = build_q(&m, &x, &y).expect("generator dimensions are consistent");
    LcpProblem {
        name: name.into(),
        m,
        q,
        designed_solution: Some((x, y)),
        seed: Some(spec.seed),
    }
}

/// Random `rows x cols` matrix with entries uniform in [0,1), for synthetic
/// benchmark instances.
pub fn synthetic_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = SplitMix64::new(seed);
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.next_f64()).collect();
    DenseMatrix::from_row_major(rows, cols, data).expect("synthetic shape is valid")
}
