//! Linear operators with adjoints and operator-norm certificates.
//!
//! Every operator carries `norm_bound`, an upper bound on `||K||`. The
//! iteration needs `||K|| < 1`; [`renormalize`] rescales a problem so the
//! certificate drops to [`RENORM_TARGET`] without moving its minimizers.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{CoeffVector, Problem};

mod composite;
mod conv;
mod haar;
mod matrix;

pub use composite::{multiframe_op, sum_space_op, AdjointOp, MultiFrameOp, ScaledOp, SumSpaceOp};
pub use conv::{conv1d_op, Conv1d};
pub use haar::{haar_analysis, haar_synthesis, HaarAnalysis};
pub use matrix::{diagonal_op, identity_op, matrix_op, zero_op, MatrixOp};

/// Certified norm after [`renormalize`].
pub const RENORM_TARGET: f64 = 0.999;

/// A bounded linear map between finite coefficient spaces.
///
/// `forward` and `adjoint` panic when handed a slice of the wrong length;
/// the checked entry points live on [`Problem`].
pub trait LinearOp: Send + Sync + fmt::Debug {
    fn domain_dim(&self) -> usize;

    fn codomain_dim(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Vec<f64>;

    fn adjoint(&self, y: &[f64]) -> Vec<f64>;

    /// Upper bound on the operator norm.
    fn norm_bound(&self) -> f64;

    /// Diagonal entries, when the operator is known to be a square diagonal.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl<T: LinearOp + ?Sized> LinearOp for Arc<T> {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }

    fn codomain_dim(&self) -> usize {
        (**self).codomain_dim()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (**self).forward(x)
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (**self).adjoint(y)
    }

    fn norm_bound(&self) -> f64 {
        (**self).norm_bound()
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        (**self).diagonal()
    }
}

/// Dense `codomain x domain` matrix of an operator, built column by column.
pub fn to_dense(op: &dyn LinearOp) -> DMatrix<f64> {
    let (m, n) = (op.codomain_dim(), op.domain_dim());
    let mut dense = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = op.forward(&e);
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            dense[(i, j)] = v;
        }
    }
    dense
}

/// Relative singular-value cutoff separating the nullspace from the range.
pub const RANK_TOL: f64 = 1e-9;

/// Singular values (descending, padded with zeros up to the domain
/// dimension) and the matching right singular vectors.
fn right_singular_pairs(op: &dyn LinearOp) -> Vec<(f64, Vec<f64>)> {
    let dense = to_dense(op);
    let (m, n) = dense.shape();
    let square = if m >= n {
        dense
    } else {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m, n)).copy_from(&dense);
        padded
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut pairs: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, v_t.row(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

/// `N(K) = {0}`, decided from the singular values of the dense matrix.
pub fn is_injective(op: &dyn LinearOp) -> bool {
    if op.codomain_dim() < op.domain_dim() {
        return false;
    }
    let pairs = right_singular_pairs(op);
    let max = pairs.first().map_or(0.0, |p| p.0);
    max > 0.0 && pairs.iter().all(|p| p.0 > RANK_TOL * max)
}

/// Orthonormal basis of `N(K)`.
pub fn nullspace_basis(op: &dyn LinearOp) -> Vec<Vec<f64>> {
    let pairs = right_singular_pairs(op);
    let max = pairs.first().map_or(0.0, |p| p.0);
    pairs
        .into_iter()
        .filter(|p| p.0 <= RANK_TOL * max || max == 0.0)
        .map(|p| p.1)
        .collect()
}

/// Rescales a problem so its operator certificate is below one.
///
/// With `s = norm_bound / RENORM_TARGET`, the operator and data are divided
/// by `s` and every penalty weight by `s^2`. The new objective is the old
/// one divided by `s^2`, so minimizers coincide. Returns `s` (1 when the
/// certificate is already below 1).
pub fn renormalize(prob: &Problem) -> Result<(Problem, f64)> {
    let bound = prob.operator().norm_bound();
    if bound < 1.0 {
        return Ok((prob.clone(), 1.0));
    }
    let s = bound / RENORM_TARGET;
    let op: Arc<dyn LinearOp> = Arc::new(ScaledOp::new(prob.operator().clone(), 1.0 / s));
    let data = CoeffVector::new(prob.data().iter().map(|g| g / s).collect())?;
    let penalty = prob.penalty().scaled(1.0 / (s * s))?;
    Ok((Problem::new(op, data, penalty)?, s))
}
