//! Regularization schedules and noise-level experiments.
//!
//! As the noise level `eps` goes to zero with multipliers `alpha_i(eps)`
//! satisfying `alpha_i -> 0`, `eps^2 / alpha_i -> 0` and
//! `alpha_i / alpha_j -> 1`, minimizers for data within `eps` of `K f0`
//! converge to `f†`, the penalty-minimal element of `{f : K f = K f0}`.
//! [`run_regpath`] checks this on a finite decreasing sequence of levels.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_len, dist, norm, CoeffVector, ProblemShape};
use crate::operators::{is_injective, nullspace_basis, renormalize, RANK_TOL};
use crate::oracle::{minimize_box, GridSpec};
use crate::solver::{solve_with_stride, StopRule};

/// Injected noise has norm `NOISE_FRACTION * eps`, strictly inside the ball.
pub const NOISE_FRACTION: f64 = 0.9;

/// Relative slack allowed on the last three levels of the error trend.
pub const TREND_SLACK: f64 = 0.10;

/// Noise levels with per-group multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    levels: Vec<f64>,
    alphas: Vec<Vec<f64>>,
}

impl Schedule {
    /// Validates the discrete versions of the three limit conditions.
    pub fn new(levels: Vec<f64>, alphas: Vec<Vec<f64>>) -> Result<Self> {
        let schedule = Self { levels, alphas };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn groups(&self) -> usize {
        self.alphas.first().map_or(0, Vec::len)
    }

    /// `max_{i,j} |alpha_i / alpha_j - 1|` at level `t`.
    pub fn ratio_spread(&self, t: usize) -> f64 {
        let a = &self.alphas[t];
        a.iter()
            .flat_map(|x| a.iter().map(move |y| (x / y - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        if self.levels.is_empty() {
            return bad("no levels".into());
        }
        check_len("schedule alphas", self.levels.len(), self.alphas.len())?;
        let groups = self.groups();
        if groups == 0 {
            return bad("no groups".into());
        }
        for (t, (&eps, a)) in self.levels.iter().zip(&self.alphas).enumerate() {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(format!("eps must be positive at level {t}, got {eps}"));
            }
            check_len("schedule alpha groups", groups, a.len())?;
            if a.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return bad(format!("alpha must be positive at level {t}"));
            }
        }
        for t in 1..self.levels.len() {
            let (e0, e1) = (self.levels[t - 1], self.levels[t]);
            if e1 >= e0 {
                return bad(format!(
                    "eps must strictly decrease (level {t}: {e0} -> {e1})"
                ));
            }
            for i in 0..groups {
                let (a0, a1) = (self.alphas[t - 1][i], self.alphas[t][i]);
                if a1 >= a0 {
                    return bad(format!(
                        "alpha_{i}(eps) must decrease toward 0 (level {t}: {a0} -> {a1})"
                    ));
                }
                let (q0, q1) = (e0 * e0 / a0, e1 * e1 / a1);
                if q1 >= q0 {
                    return bad(format!(
                        "eps^2/alpha_{i}(eps) must decrease toward 0 (level {t}: {q0} -> {q1})"
                    ));
                }
            }
            if self.ratio_spread(t) > self.ratio_spread(t - 1) {
                return bad(format!(
                    "alpha_i/alpha_j must approach 1 (spread grows at level {t})"
                ));
            }
        }
        Ok(())
    }
}

/// `eps_t = eps0 * ratio^t` for `t = 0..count`, `alpha_i(eps) = eps^exponent`
/// for every group.
///
/// Needs `0 < exponent < 2`: at `exponent >= 2`, `eps^2 / alpha` no longer
/// vanishes.
pub fn make_schedule(
    eps0: f64,
    ratio: f64,
    count: usize,
    exponent: f64,
    groups: usize,
) -> Result<Schedule> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::InvalidSchedule(format!(
            "eps0 must be positive, got {eps0}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidSchedule(format!(
            "ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if count == 0 || groups == 0 {
        return Err(Error::InvalidSchedule(
            "count and groups must be at least 1".into(),
        ));
    }
    if !(exponent > 0.0 && exponent < 2.0) {
        return Err(Error::InvalidSchedule(format!(
            "exponent {exponent} outside (0, 2): eps^2/alpha(eps) = eps^(2 - exponent) must vanish and alpha(eps) must vanish"
        )));
    }
    let levels: Vec<f64> = (0..count).map(|t| eps0 * ratio.powi(t as i32)).collect();
    let alphas = levels
        .iter()
        .map(|eps| vec![eps.powf(exponent); groups])
        .collect();
    Schedule::new(levels, alphas)
}

/// Penalty-minimal element of `{f : K f = K f0}`.
///
/// Injective operators return `f0`. Otherwise a basis of `N(K)` (at most 3
/// vectors) must be supplied; the penalty is minimized over
/// `f0 + span(basis)` by grid search in the basis coordinates.
pub fn minimal_element(
    shape: &ProblemShape,
    f0: &[f64],
    nullspace: Option<&[Vec<f64>]>,
) -> Result<CoeffVector> {
    let op = shape.operator.as_ref();
    check_len("minimal element f0", op.domain_dim(), f0.len())?;
    if is_injective(op) {
        return CoeffVector::new(f0.to_vec());
    }
    let supplied = nullspace.ok_or(Error::NonInjectiveWithoutBasis)?;
    let basis = orthonormalize(supplied, op.domain_dim())?;
    if basis.len() > 3 {
        return Err(Error::NullspaceTooLarge(basis.len()));
    }
    let scale = op.norm_bound().max(1.0);
    for b in &basis {
        if norm(&op.forward(b)) > 1e-9 * scale {
            return Err(Error::InvalidNullspace(
                "basis vector is not annihilated by K".into(),
            ));
        }
    }

    let point = |t: &[f64]| -> Vec<f64> {
        let mut f = f0.to_vec();
        for (b, &c) in basis.iter().zip(t) {
            f.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        f
    };
    let penalty = |t: &[f64]| shape.penalty.value_unchecked(&point(t));

    // penalty(f†) <= penalty(f0) bounds every |f_i|, and with an orthonormal
    // basis ||t|| = ||f - f0||
    let budget = penalty(&vec![0.0; basis.len()]) / shape.penalty.c_min();
    let radius = (f0.len() as f64).sqrt() * budget.max(budget.sqrt()) + norm(f0) + 1.0;
    let points = if basis.len() == 3 { 101 } else { 201 };
    let grid = GridSpec::new(-radius, radius, points, 10)?;
    let t = minimize_box(&penalty, basis.len(), &grid);
    CoeffVector::new(point(&t))
}

/// `minimal_element` with the nullspace computed from the singular value
/// decomposition of `K`.
pub fn minimal_element_auto(shape: &ProblemShape, f0: &[f64]) -> Result<CoeffVector> {
    let basis = nullspace_basis(shape.operator.as_ref());
    minimal_element(shape, f0, Some(&basis))
}

fn orthonormalize(vectors: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        check_len("nullspace basis vector", dim, v.len())?;
        let mut w = v.clone();
        for q in &out {
            let c: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let n = norm(&w);
        if n > RANK_TOL * norm(v).max(1.0) {
            out.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegRecord {
    pub level: usize,
    pub eps: f64,
    pub alpha: f64,
    pub noise_norm: f64,
    pub error: f64,
    pub iters: usize,
    /// Largest per-iteration objective increase of this level's solve.
    #[serde(skip)]
    pub worst_increase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegReport {
    pub records: Vec<RegRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendVerdict {
    pub first_error: f64,
    pub final_error: f64,
    pub target: f64,
    pub final_below_first: bool,
    pub final_below_target: bool,
    /// Last three errors nonincreasing within [`TREND_SLACK`]. Reported,
    /// not part of `passed`: in one dimension the noise sign alone can
    /// break it.
    pub tail_nonincreasing: bool,
    /// Final error at most the first and at most the target.
    pub passed: bool,
}

impl RegReport {
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }

    pub fn verdict(&self, target: f64) -> TrendVerdict {
        let errors = self.errors();
        let first_error = errors.first().copied().unwrap_or(f64::NAN);
        let final_error = errors.last().copied().unwrap_or(f64::NAN);
        let tail = &errors[errors.len().saturating_sub(3)..];
        let tail_nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + TREND_SLACK));
        let final_below_first = final_error <= first_error;
        let final_below_target = final_error <= target;
        TrendVerdict {
            first_error,
            final_error,
            target,
            final_below_first,
            final_below_target,
            tail_nonincreasing,
            passed: final_below_first && final_below_target,
        }
    }

    /// CSV with header `level,eps,alpha,noise_norm,error,iters`; `alpha` is
    /// the multiplier of the first group.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,eps,alpha,noise_norm,error,iters\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.level, r.eps, r.alpha, r.noise_norm, r.error, r.iters
            );
        }
        out
    }
}

/// Deterministic Gaussian noise for level `t`, rescaled to norm `radius`.
pub fn level_noise(seed: u64, level: usize, len: usize, radius: f64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(level as u64);
    let mut e: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = norm(&e);
    e.iter_mut().for_each(|x| *x *= radius / n);
    e
}

/// For each level, perturbs `K f0` by noise of norm `0.9 eps`, solves with
/// multipliers `alpha(eps)` from zero and records the distance to `f†`.
pub fn run_regpath(
    f0: &[f64],
    shape: &ProblemShape,
    schedule: &Schedule,
    noise_seed: u64,
    stop: StopRule,
    nullspace: Option<&[Vec<f64>]>,
) -> Result<RegReport> {
    let op = shape.operator.clone();
    check_len("regpath f0", op.domain_dim(), f0.len())?;
    check_len(
        "schedule groups",
        shape.penalty.group_count(),
        schedule.groups(),
    )?;
    if !shape.penalty.strictly_convex_everywhere() && !is_injective(op.as_ref()) {
        return Err(Error::NotUnique(
            "need an exponent above 1 at every coefficient or an injective operator".into(),
        ));
    }
    let dagger = minimal_element(shape, f0, nullspace)?;
    let clean = op.forward(f0);

    let mut records = Vec::with_capacity(schedule.len());
    for (t, (&eps, alphas)) in schedule.levels.iter().zip(&schedule.alphas).enumerate() {
        let noise = level_noise(noise_seed, t, clean.len(), NOISE_FRACTION * eps);
        let g: Vec<f64> = clean.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let prob = ProblemShape::new(op.clone(), shape.penalty.with_multipliers(alphas)?)?
            .with_data(CoeffVector::new(g.clone())?)?;
        let (prob, _) = renormalize(&prob)?;
        let (f, trace) = solve_with_stride(&vec![0.0; f0.len()], &prob, stop, usize::MAX)?;
        records.push(RegRecord {
            level: t,
            eps,
            alpha: alphas[0],
            noise_norm: dist(&g, &clean),
            error: f.distance(&dagger),
            iters: trace.iterations(),
            worst_increase: trace.worst_increase(),
        });
    }
    Ok(RegReport { records })
}
