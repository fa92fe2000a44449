use std::sync::Arc;

use super::LinearOp;
use crate::error::{Error, Result};

/// The adjoint of an operator, as an operator.
#[derive(Debug, Clone)]
pub struct AdjointOp {
    inner: Arc<dyn LinearOp>,
}

impl AdjointOp {
    pub fn new(inner: Arc<dyn LinearOp>) -> Self {
        Self { inner }
    }
}

impl LinearOp for AdjointOp {
    fn domain_dim(&self) -> usize {
        self.inner.codomain_dim()
    }

    fn codomain_dim(&self) -> usize {
        self.inner.domain_dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.inner.adjoint(x)
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.inner.forward(y)
    }

    fn norm_bound(&self) -> f64 {
        self.inner.norm_bound()
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        self.inner.diagonal()
    }
}

/// `factor * K`.
#[derive(Debug, Clone)]
pub struct ScaledOp {
    inner: Arc<dyn LinearOp>,
    factor: f64,
}

impl ScaledOp {
    pub fn new(inner: Arc<dyn LinearOp>, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl LinearOp for ScaledOp {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }

    fn codomain_dim(&self) -> usize {
        self.inner.codomain_dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.inner.forward(x);
        y.iter_mut().for_each(|v| *v *= self.factor);
        y
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.inner.adjoint(y);
        x.iter_mut().for_each(|v| *v *= self.factor);
        x
    }

    fn norm_bound(&self) -> f64 {
        self.inner.norm_bound() * self.factor.abs()
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        self.inner
            .diagonal()
            .map(|d| d.into_iter().map(|v| v * self.factor).collect())
    }
}

/// `L(u, v) = K(u + v)` on stacked `(u, v)`, with `L*(y) = (K* y, K* y)`.
#[derive(Debug, Clone)]
pub struct SumSpaceOp {
    inner: Arc<dyn LinearOp>,
}

pub fn sum_space_op(inner: Arc<dyn LinearOp>) -> SumSpaceOp {
    SumSpaceOp { inner }
}

impl LinearOp for SumSpaceOp {
    fn domain_dim(&self) -> usize {
        2 * self.inner.domain_dim()
    }

    fn codomain_dim(&self) -> usize {
        self.inner.codomain_dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n = self.inner.domain_dim();
        assert_eq!(x.len(), 2 * n, "sum-space forward: length mismatch");
        let (u, v) = x.split_at(n);
        let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        self.inner.forward(&sum)
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let back = self.inner.adjoint(y);
        let mut out = Vec::with_capacity(2 * back.len());
        out.extend_from_slice(&back);
        out.extend_from_slice(&back);
        out
    }

    fn norm_bound(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.inner.norm_bound()
    }
}

/// `K(v^1, ..., v^n) = sum_i A F_i^*(v^i)` for analysis operators `F_i`,
/// with adjoint `K^*(g) = (F_1 A^* g, ..., F_n A^* g)`.
#[derive(Debug, Clone)]
pub struct MultiFrameOp {
    a: Arc<dyn LinearOp>,
    frames: Vec<Arc<dyn LinearOp>>,
    offsets: Vec<usize>,
}

impl MultiFrameOp {
    /// Frame bounds `B_i = ||F_i||^2` used by the certificate.
    pub fn frame_bounds(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.norm_bound().powi(2)).collect()
    }
}

/// Builds the multi-frame operator. Each `frames[i]` maps signals in the
/// domain of `a` to coefficients; its adjoint is the synthesis operator.
///
/// Certificate: `||A|| sqrt(B_1 + ... + B_n)`.
pub fn multiframe_op(a: Arc<dyn LinearOp>, frames: Vec<Arc<dyn LinearOp>>) -> Result<MultiFrameOp> {
    if frames.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "multiframe frame count",
            expected: 1,
            found: 0,
        });
    }
    let mut offsets = vec![0];
    for f in &frames {
        if f.domain_dim() != a.domain_dim() {
            return Err(Error::DimensionMismatch {
                context: "multiframe synthesis codomain",
                expected: a.domain_dim(),
                found: f.domain_dim(),
            });
        }
        offsets.push(offsets.last().unwrap() + f.codomain_dim());
    }
    Ok(MultiFrameOp { a, frames, offsets })
}

impl LinearOp for MultiFrameOp {
    fn domain_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn codomain_dim(&self) -> usize {
        self.a.codomain_dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.domain_dim(),
            "multiframe forward: length mismatch"
        );
        let mut signal = vec![0.0; self.a.domain_dim()];
        for (f, w) in self.frames.iter().zip(self.offsets.windows(2)) {
            let part = f.adjoint(&x[w[0]..w[1]]);
            signal.iter_mut().zip(part).for_each(|(s, p)| *s += p);
        }
        self.a.forward(&signal)
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let back = self.a.adjoint(y);
        self.frames.iter().flat_map(|f| f.forward(&back)).collect()
    }

    fn norm_bound(&self) -> f64 {
        self.a.norm_bound() * self.frame_bounds().iter().sum::<f64>().sqrt()
    }
}
