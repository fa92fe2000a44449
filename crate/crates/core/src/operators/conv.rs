use std::f64::consts::PI;

use super::LinearOp;
use crate::error::{Error, Result};

/// Circular convolution on length-`n` vectors:
/// `(K x)_i = sum_k kernel_k x_{(i - k) mod n}`.
///
/// Kernel index 0 aligns with output index 0; there is no centering.
#[derive(Debug, Clone)]
pub struct Conv1d {
    kernel: Vec<f64>,
    n: usize,
    norm_bound: f64,
}

impl Conv1d {
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
}

/// The norm of a circulant matrix is the largest modulus of its symbol
/// on the `n`-th roots of unity.
fn symbol_max(kernel: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|m| {
            let (re, im) = kernel
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(re, im), (k, &c)| {
                    let theta = -2.0 * PI * ((k * m) % n) as f64 / n as f64;
                    (re + c * theta.cos(), im + c * theta.sin())
                });
            f64::hypot(re, im)
        })
        .fold(0.0, f64::max)
}

pub fn conv1d_op(kernel: &[f64], n: usize) -> Result<Conv1d> {
    if kernel.is_empty() || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if kernel.len() > n {
        return Err(Error::DimensionMismatch {
            context: "convolution kernel longer than signal",
            expected: n,
            found: kernel.len(),
        });
    }
    if kernel.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("convolution kernel"));
    }
    // symbol evaluation carries rounding of order n * eps
    let norm_bound = symbol_max(kernel, n) * (1.0 + 1e-12);
    Ok(Conv1d {
        kernel: kernel.to_vec(),
        n,
        norm_bound,
    })
}

impl LinearOp for Conv1d {
    fn domain_dim(&self) -> usize {
        self.n
    }

    fn codomain_dim(&self) -> usize {
        self.n
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "conv1d forward: length mismatch");
        let n = self.n;
        (0..n)
            .map(|i| {
                self.kernel
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * x[(i + n - k) % n])
                    .sum()
            })
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "conv1d adjoint: length mismatch");
        let n = self.n;
        (0..n)
            .map(|j| {
                self.kernel
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * y[(j + k) % n])
                    .sum()
            })
            .collect()
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }
}
