use super::LinearOp;
use crate::error::{Error, Result};
use crate::model::norm;

const POWER_ITERS: usize = 50;
const POWER_INFLATION: f64 = 1.01;

/// Dense row-major matrix.
#[derive(Debug, Clone)]
pub struct MatrixOp {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    norm_bound: f64,
}

impl MatrixOp {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matrix forward: length mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn mul_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matrix adjoint: length mismatch");
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        out
    }

    /// Power iteration on `A^T A` from a fixed generic start vector.
    fn power_estimate(&self) -> f64 {
        let mut x: Vec<f64> = (0..self.cols)
            .map(|j| 1.5 + (1.618 * (j as f64 + 1.0)).sin())
            .collect();
        let mut sigma = 0.0;
        for _ in 0..POWER_ITERS {
            let nx = norm(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let ax = self.mul(&x);
            sigma = norm(&ax);
            x = self.mul_transpose(&ax);
        }
        sigma
    }
}

impl LinearOp for MatrixOp {
    fn domain_dim(&self) -> usize {
        self.cols
    }

    fn codomain_dim(&self) -> usize {
        self.rows
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.mul(x)
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.mul_transpose(y)
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        if self.rows != self.cols {
            return None;
        }
        let off_diagonal_zero =
            (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.entry(i, j) == 0.0));
        off_diagonal_zero.then(|| (0..self.rows).map(|i| self.entry(i, i)).collect())
    }
}

fn from_rows(entries: Vec<Vec<f64>>) -> Result<MatrixOp> {
    let rows = entries.len();
    let cols = entries.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut data = Vec::with_capacity(rows * cols);
    for row in entries {
        if row.len() != cols {
            return Err(Error::DimensionMismatch {
                context: "matrix row",
                expected: cols,
                found: row.len(),
            });
        }
        data.extend(row);
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    Ok(MatrixOp {
        rows,
        cols,
        data,
        norm_bound: 0.0,
    })
}

/// Dense matrix from its rows. The norm certificate is 50 power iterations
/// on `A^T A`, inflated by 1%.
pub fn matrix_op(entries: Vec<Vec<f64>>) -> Result<MatrixOp> {
    let mut m = from_rows(entries)?;
    m.norm_bound = POWER_INFLATION * m.power_estimate();
    Ok(m)
}

/// Square diagonal matrix with the exact certificate `max |d_i|`.
pub fn diagonal_op(diag: &[f64]) -> Result<MatrixOp> {
    let n = diag.len();
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = diag[i];
            row
        })
        .collect();
    let mut m = from_rows(rows)?;
    m.norm_bound = diag.iter().fold(0.0, |acc: f64, d| acc.max(d.abs()));
    Ok(m)
}

pub fn identity_op(n: usize) -> MatrixOp {
    diagonal_op(&vec![1.0; n]).expect("identity of positive size")
}

pub fn zero_op(rows: usize, cols: usize) -> MatrixOp {
    matrix_op(vec![vec![0.0; cols]; rows]).expect("zero matrix of positive size")
}
