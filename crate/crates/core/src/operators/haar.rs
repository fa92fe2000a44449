use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use super::{AdjointOp, LinearOp};
use crate::error::{Error, Result};

/// Orthonormal discrete Haar transform, fully decomposed.
///
/// Output layout: the final approximation coefficient, then detail bands
/// from coarsest to finest.
#[derive(Debug, Clone)]
pub struct HaarAnalysis {
    n: usize,
}

pub fn haar_analysis(n: usize) -> Result<HaarAnalysis> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(HaarAnalysis { n })
}

/// Inverse Haar transform, the adjoint of [`haar_analysis`].
pub fn haar_synthesis(n: usize) -> Result<AdjointOp> {
    Ok(AdjointOp::new(Arc::new(haar_analysis(n)?)))
}

impl LinearOp for HaarAnalysis {
    fn domain_dim(&self) -> usize {
        self.n
    }

    fn codomain_dim(&self) -> usize {
        self.n
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "haar analysis: length mismatch");
        let mut out = x.to_vec();
        let mut scratch = vec![0.0; self.n];
        let mut len = self.n;
        while len > 1 {
            let half = len / 2;
            for i in 0..half {
                let (a, b) = (out[2 * i], out[2 * i + 1]);
                scratch[i] = (a + b) * FRAC_1_SQRT_2;
                scratch[half + i] = (a - b) * FRAC_1_SQRT_2;
            }
            out[..len].copy_from_slice(&scratch[..len]);
            len = half;
        }
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "haar synthesis: length mismatch");
        let mut out = y.to_vec();
        let mut scratch = vec![0.0; self.n];
        let mut len = 1;
        while len < self.n {
            for i in 0..len {
                let (a, d) = (out[i], out[len + i]);
                scratch[2 * i] = (a + d) * FRAC_1_SQRT_2;
                scratch[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
            }
            out[..2 * len].copy_from_slice(&scratch[..2 * len]);
            len *= 2;
        }
        out
    }

    fn norm_bound(&self) -> f64 {
        1.0
    }
}
