//! Thresholded Landweber iteration.
//!
//! One step maps `f` to `T(f) = S(f + K*(g - K f))`, the exact minimizer of
//! the surrogate `Phi(x) + ||x - f||^2 - ||K(x - f)||^2`. Iterating `T` from
//! any start decreases `Phi` monotonically and converges to a minimizer.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_len, dist_sq, norm, CoeffVector, PenaltySpec, Problem};
use crate::operators::{sum_space_op, LinearOp};
use crate::shrinkage::shrink_multi;

/// Allowed floating-point rise of the objective between iterations.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    /// Stop once `||f^{n+1} - f^n|| <= step_tol`.
    pub step_tol: f64,
}

impl StopRule {
    pub fn new(max_iters: usize, step_tol: f64) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::InvalidStopRule(
                "max_iters must be at least 1".into(),
            ));
        }
        if step_tol.is_nan() || step_tol < 0.0 {
            return Err(Error::InvalidStopRule(format!(
                "step_tol must be nonnegative, got {step_tol}"
            )));
        }
        Ok(Self {
            max_iters,
            step_tol,
        })
    }
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            step_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepTolerance,
    MaxIterations,
}

/// Values at iteration `n`: `Phi(f^n)`, the surrogate `Phi^S(f^{n+1}; f^n)`,
/// `||f^{n+1} - f^n||` and `||f^n||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub surrogate: f64,
    pub step_norm: f64,
    pub iterate_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub iter: usize,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    records: Vec<IterationRecord>,
    stop: StopReason,
    iterations: usize,
    final_step: f64,
    worst_increase: (usize, f64),
    iterate_bound: f64,
}

impl SolveTrace {
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn final_step_norm(&self) -> f64 {
        self.final_step
    }

    /// Largest one-step rise of the objective over every iteration, whether
    /// recorded or not.
    pub fn worst_increase(&self) -> f64 {
        self.worst_increase.1
    }

    /// `sqrt(dim) * max(B / c_min, sqrt(B / c_min))` with `B = Phi(f^0)`.
    ///
    /// While the objective does not increase, every iterate satisfies
    /// `c_min |f_i|^p <= Phi(f^0)`, hence this bound on `||f^n||`.
    pub fn iterate_bound(&self) -> f64 {
        self.iterate_bound
    }

    pub fn check_monotone(&self, slack: f64) -> Result<(), MonotonicityViolation> {
        let (iter, increase) = self.worst_increase;
        if increase > slack {
            Err(MonotonicityViolation { iter, increase })
        } else {
            Ok(())
        }
    }

    /// CSV with header `iter,objective,surrogate,step_norm,iterate_norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,objective,surrogate,step_norm,iterate_norm\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iter, r.objective, r.surrogate, r.step_norm, r.iterate_norm
            );
        }
        out
    }
}

fn require_renormalized(prob: &Problem) -> Result<()> {
    if prob.is_renormalized() {
        Ok(())
    } else {
        Err(Error::NotRenormalized(prob.operator().norm_bound()))
    }
}

/// Per-coordinate shrinkage with the term list at that coordinate.
pub fn threshold(h: &[f64], penalty: &PenaltySpec) -> Vec<f64> {
    h.iter()
        .zip(penalty.terms())
        .map(|(&b, terms)| shrink_multi(b, terms))
        .collect()
}

/// `f + K*(g - K f)` given `kf = K f`.
fn landweber(f: &[f64], kf: &[f64], prob: &Problem) -> Vec<f64> {
    let residual: Vec<f64> = prob.data().iter().zip(kf).map(|(g, k)| g - k).collect();
    let back = prob.operator().adjoint(&residual);
    f.iter().zip(back).map(|(a, b)| a + b).collect()
}

/// One iteration `T(f) = S(f + K*(g - K f))`.
pub fn step(f: &[f64], prob: &Problem) -> Result<CoeffVector> {
    check_len("step", prob.dim(), f.len())?;
    require_renormalized(prob)?;
    let h = landweber(f, &prob.operator().forward(f), prob);
    Ok(CoeffVector::from_vec(threshold(&h, prob.penalty())))
}

/// `||T(f) - f||`; zero exactly at minimizers.
pub fn fixed_point_residual(f: &[f64], prob: &Problem) -> Result<f64> {
    Ok(step(f, prob)?.distance(f))
}

/// Iterates [`step`] from `f0` until the stop rule fires, recording every
/// iteration.
pub fn solve(f0: &[f64], prob: &Problem, stop: StopRule) -> Result<(CoeffVector, SolveTrace)> {
    solve_with_stride(f0, prob, stop, 1)
}

/// As [`solve`], but records only every `stride`-th iteration (and the
/// last one). Monotonicity is still checked on every iteration.
pub fn solve_with_stride(
    f0: &[f64],
    prob: &Problem,
    stop: StopRule,
    stride: usize,
) -> Result<(CoeffVector, SolveTrace)> {
    check_len("solve initial point", prob.dim(), f0.len())?;
    require_renormalized(prob)?;
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial point"));
    }
    let stride = stride.max(1);
    let op = prob.operator();

    let mut f = f0.to_vec();
    let mut kf = op.forward(&f);
    let mut obj = prob.objective_from_image(&f, &kf);
    let budget = obj / prob.penalty().c_min();
    let iterate_bound = (prob.dim() as f64).sqrt() * budget.max(budget.sqrt());

    let mut records = Vec::new();
    let mut worst_increase = (0, f64::NEG_INFINITY);
    let mut reason = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut final_step = f64::INFINITY;

    for n in 0..stop.max_iters {
        let next = threshold(&landweber(&f, &kf, prob), prob.penalty());
        let k_next = op.forward(&next);
        let step_sq = dist_sq(&next, &f);
        let step_norm = step_sq.sqrt();
        let obj_next = prob.objective_from_image(&next, &k_next);
        let surrogate = obj_next + step_sq - dist_sq(&k_next, &kf);

        let increase = obj_next - obj;
        if increase > worst_increase.1 {
            worst_increase = (n, increase);
        }
        let done = step_norm <= stop.step_tol;
        let last = done || n + 1 == stop.max_iters;
        if n % stride == 0 || last {
            records.push(IterationRecord {
                iter: n,
                objective: obj,
                surrogate,
                step_norm,
                iterate_norm: norm(&f),
            });
        }

        f = next;
        kf = k_next;
        obj = obj_next;
        iterations = n + 1;
        final_step = step_norm;
        if done {
            reason = StopReason::StepTolerance;
            break;
        }
    }

    Ok((
        CoeffVector::from_vec(f),
        SolveTrace {
            records,
            stop: reason,
            iterations,
            final_step,
            worst_increase,
            iterate_bound,
        },
    ))
}

/// Result of [`solve_decomposition`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u: CoeffVector,
    pub v: CoeffVector,
    pub trace: SolveTrace,
}

impl Decomposition {
    pub fn sum(&self) -> CoeffVector {
        CoeffVector::from_vec(
            self.u
                .iter()
                .zip(self.v.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// The stacked problem `min ||K(u + v) - g||^2 + P_u(u) + P_v(v)` on the
/// sum space, as solved by [`solve_decomposition`].
pub fn decomposition_problem(
    k: Arc<dyn LinearOp>,
    g: CoeffVector,
    spec_u: &PenaltySpec,
    spec_v: &PenaltySpec,
) -> Result<Problem> {
    check_len("decomposition penalty u", k.domain_dim(), spec_u.len())?;
    check_len("decomposition penalty v", k.domain_dim(), spec_v.len())?;
    Problem::new(Arc::new(sum_space_op(k)), g, spec_u.concat(spec_v)?)
}

/// Minimizes `||K(u + v) - g||^2 + P_u(u) + P_v(v)`.
///
/// Each iteration shrinks the same back-projected residual
/// `K*(g - K(u + v))` added to `u` with `P_u`'s terms and to `v` with `P_v`'s.
#[allow(clippy::too_many_arguments)]
pub fn solve_decomposition(
    u0: &[f64],
    v0: &[f64],
    k: Arc<dyn LinearOp>,
    g: CoeffVector,
    spec_u: &PenaltySpec,
    spec_v: &PenaltySpec,
    stop: StopRule,
) -> Result<Decomposition> {
    let n = k.domain_dim();
    check_len("decomposition u0", n, u0.len())?;
    check_len("decomposition v0", n, v0.len())?;
    let prob = decomposition_problem(k, g, spec_u, spec_v)?;
    let f0 = [u0, v0].concat();
    let (f, trace) = solve(&f0, &prob, stop)?;
    let (u, v) = f.split_at(n);
    Ok(Decomposition {
        u: CoeffVector::from_vec(u.to_vec()),
        v: CoeffVector::from_vec(v.to_vec()),
        trace,
    })
}
