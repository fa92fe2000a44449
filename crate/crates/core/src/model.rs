//! Coefficient-space problem model.
//!
//! A problem is `min_f ||K f - g||^2 + P(f)` where `P` sums weighted
//! `|f_i|^p` terms per coefficient. Partitioned penalties carry one term per
//! coefficient, stacked penalties several; both share [`PenaltySpec`].

use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{self, LinearOp};
use crate::shrinkage::PenaltyTerm;

/// Finite real coefficient sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoeffVector(Vec<f64>);

impl CoeffVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient vector"));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &[f64]) -> f64 {
        dist(&self.0, other)
    }
}

impl Deref for CoeffVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for CoeffVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// A term as configured: base weight, multiplier and the group it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawTerm {
    pub weight: f64,
    pub exponent: f64,
    pub multiplier: f64,
    pub group: usize,
}

/// Exponent and multiplier shared by one group of terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupPenalty {
    pub exponent: f64,
    pub multiplier: f64,
}

impl GroupPenalty {
    pub fn new(exponent: f64, multiplier: f64) -> Self {
        Self {
            exponent,
            multiplier,
        }
    }
}

/// Per-coefficient lists of penalty terms with multipliers folded into the
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    raw: Vec<Vec<RawTerm>>,
    terms: Vec<Vec<PenaltyTerm>>,
    labels: Option<Vec<usize>>,
    groups: usize,
    c_min: f64,
}

impl PenaltySpec {
    /// Builds a spec from configured terms; every list must be nonempty.
    pub fn from_raw(raw: Vec<Vec<RawTerm>>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidPenalty("no coefficients".into()));
        }
        let mut terms = Vec::with_capacity(raw.len());
        let mut c_min = f64::INFINITY;
        let mut groups = 0;
        for (i, list) in raw.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidPenalty(format!(
                    "coefficient {i} carries no penalty term"
                )));
            }
            let mut folded = Vec::with_capacity(list.len());
            for r in list {
                if !r.multiplier.is_finite() || r.multiplier <= 0.0 {
                    return Err(Error::InvalidPenalty(format!(
                        "multiplier at coefficient {i} must be positive, got {}",
                        r.multiplier
                    )));
                }
                let term = PenaltyTerm::new(r.weight * r.multiplier, r.exponent)
                    .map_err(|e| Error::InvalidPenalty(format!("coefficient {i}: {e}")))?;
                c_min = c_min.min(term.weight());
                groups = groups.max(r.group + 1);
                folded.push(term);
            }
            terms.push(folded);
        }
        let labels = raw
            .iter()
            .all(|l| l.len() == 1)
            .then(|| raw.iter().map(|l| l[0].group).collect());
        Ok(Self {
            raw,
            terms,
            labels,
            groups,
            c_min,
        })
    }

    /// Partitioned penalty: coefficient `i` belongs to group `labels[i]` and
    /// carries the single term `groups[labels[i]].multiplier * weights[i] |f_i|^p`.
    pub fn partitioned(labels: &[usize], weights: &[f64], groups: &[GroupPenalty]) -> Result<Self> {
        check_len("partitioned penalty weights", labels.len(), weights.len())?;
        let raw = labels
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(i, (&label, &weight))| {
                let g = groups.get(label).ok_or_else(|| {
                    Error::InvalidPenalty(format!(
                        "coefficient {i} labelled with unknown group {label}"
                    ))
                })?;
                Ok(vec![RawTerm {
                    weight,
                    exponent: g.exponent,
                    multiplier: g.multiplier,
                    group: label,
                }])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_raw(raw)
    }

    /// Stacked penalty: every coefficient carries one term per group;
    /// `weights[k][i]` is the base weight of group `k` at coefficient `i`.
    pub fn stacked(weights: &[Vec<f64>], groups: &[GroupPenalty]) -> Result<Self> {
        check_len("stacked penalty groups", groups.len(), weights.len())?;
        let n = weights
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidPenalty("no groups".into()))?;
        for w in weights {
            check_len("stacked penalty weights", n, w.len())?;
        }
        let raw = (0..n)
            .map(|i| {
                groups
                    .iter()
                    .zip(weights)
                    .enumerate()
                    .map(|(k, (g, w))| RawTerm {
                        weight: w[i],
                        exponent: g.exponent,
                        multiplier: g.multiplier,
                        group: k,
                    })
                    .collect()
            })
            .collect();
        Self::from_raw(raw)
    }

    /// One group, the same `weight |f_i|^exponent` at every coefficient.
    pub fn uniform(len: usize, weight: f64, exponent: f64) -> Result<Self> {
        Self::partitioned(
            &vec![0; len],
            &vec![weight; len],
            &[GroupPenalty::new(exponent, 1.0)],
        )
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Vec<PenaltyTerm>] {
        &self.terms
    }

    pub fn terms_at(&self, index: usize) -> &[PenaltyTerm] {
        &self.terms[index]
    }

    pub fn raw(&self) -> &[Vec<RawTerm>] {
        &self.raw
    }

    /// Group labels when every coefficient carries exactly one term.
    pub fn partition_labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn is_partitioned(&self) -> bool {
        self.labels.is_some()
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }

    /// Smallest folded weight; every weight is at least this.
    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    /// `(p_min, p_max)` over all terms.
    pub fn exponent_range(&self) -> (f64, f64) {
        self.terms
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                (lo.min(t.exponent()), hi.max(t.exponent()))
            })
    }

    /// Every coefficient carries a term with `p > 1`, which makes the
    /// penalty strictly convex.
    pub fn strictly_convex_everywhere(&self) -> bool {
        self.terms.iter().all(|l| l.iter().any(|t| !t.is_l1()))
    }

    /// Replaces the multiplier of group `k` by `multipliers[k]`.
    pub fn with_multipliers(&self, multipliers: &[f64]) -> Result<Self> {
        check_len("group multipliers", self.groups, multipliers.len())?;
        let raw = self
            .raw
            .iter()
            .map(|l| {
                l.iter()
                    .map(|r| RawTerm {
                        multiplier: multipliers[r.group],
                        ..*r
                    })
                    .collect()
            })
            .collect();
        Self::from_raw(raw)
    }

    /// Multiplies every base weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let raw = self
            .raw
            .iter()
            .map(|l| {
                l.iter()
                    .map(|r| RawTerm {
                        weight: r.weight * factor,
                        ..*r
                    })
                    .collect()
            })
            .collect();
        Self::from_raw(raw)
    }

    /// Coefficients of `self` followed by those of `other`; the groups of
    /// `other` are renumbered after those of `self`.
    pub fn concat(&self, other: &PenaltySpec) -> Result<Self> {
        let offset = self.groups;
        let raw = self
            .raw
            .iter()
            .cloned()
            .chain(other.raw.iter().map(|l| {
                l.iter()
                    .map(|r| RawTerm {
                        group: r.group + offset,
                        ..*r
                    })
                    .collect()
            }))
            .collect();
        Self::from_raw(raw)
    }

    pub(crate) fn value_unchecked(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.terms)
            .map(|(&x, l)| l.iter().map(|t| t.value(x)).sum::<f64>())
            .sum()
    }
}

/// `sum_i sum_{terms at i} c |f_i|^p`.
pub fn penalty_value(f: &[f64], spec: &PenaltySpec) -> Result<f64> {
    check_len("penalty_value", spec.len(), f.len())?;
    Ok(spec.value_unchecked(f))
}

/// Operator plus penalty, awaiting data.
#[derive(Debug, Clone)]
pub struct ProblemShape {
    pub operator: Arc<dyn LinearOp>,
    pub penalty: PenaltySpec,
}

impl ProblemShape {
    pub fn new(operator: Arc<dyn LinearOp>, penalty: PenaltySpec) -> Result<Self> {
        check_len("penalty length", operator.domain_dim(), penalty.len())?;
        Ok(Self { operator, penalty })
    }

    pub fn with_data(&self, data: CoeffVector) -> Result<Problem> {
        Problem::new(self.operator.clone(), data, self.penalty.clone())
    }
}

/// `min_f ||K f - g||^2 + P(f)`.
#[derive(Debug, Clone)]
pub struct Problem {
    operator: Arc<dyn LinearOp>,
    data: CoeffVector,
    penalty: PenaltySpec,
}

impl Problem {
    pub fn new(
        operator: Arc<dyn LinearOp>,
        data: CoeffVector,
        penalty: PenaltySpec,
    ) -> Result<Self> {
        check_len("penalty length", operator.domain_dim(), penalty.len())?;
        check_len("data length", operator.codomain_dim(), data.len())?;
        Ok(Self {
            operator,
            data,
            penalty,
        })
    }

    pub fn operator(&self) -> &Arc<dyn LinearOp> {
        &self.operator
    }

    pub fn data(&self) -> &CoeffVector {
        &self.data
    }

    pub fn penalty(&self) -> &PenaltySpec {
        &self.penalty
    }

    pub fn dim(&self) -> usize {
        self.penalty.len()
    }

    pub fn shape(&self) -> ProblemShape {
        ProblemShape {
            operator: self.operator.clone(),
            penalty: self.penalty.clone(),
        }
    }

    pub fn is_renormalized(&self) -> bool {
        self.operator.norm_bound() < 1.0
    }

    /// Minimizer uniqueness: strictly convex penalty at every coefficient,
    /// or an injective operator.
    pub fn uniqueness_holds(&self) -> bool {
        self.penalty.strictly_convex_everywhere() || operators::is_injective(self.operator.as_ref())
    }

    pub fn objective(&self, f: &[f64]) -> Result<f64> {
        objective(f, self)
    }

    /// `||K f - g||`.
    pub fn residual_norm(&self, f: &[f64]) -> Result<f64> {
        check_len("residual", self.dim(), f.len())?;
        Ok(dist(&self.operator.forward(f), &self.data))
    }

    pub(crate) fn objective_from_image(&self, f: &[f64], kf: &[f64]) -> f64 {
        dist_sq(kf, &self.data) + self.penalty.value_unchecked(f)
    }
}

/// `Phi(f) = ||K f - g||^2 + P(f)`.
pub fn objective(f: &[f64], prob: &Problem) -> Result<f64> {
    check_len("objective", prob.dim(), f.len())?;
    Ok(prob.objective_from_image(f, &prob.operator.forward(f)))
}

/// `Phi(f) + ||f - a||^2 - ||K (f - a)||^2`.
pub fn surrogate(f: &[f64], a: &[f64], prob: &Problem) -> Result<f64> {
    check_len("surrogate", prob.dim(), f.len())?;
    check_len("surrogate anchor", prob.dim(), a.len())?;
    let diff: Vec<f64> = f.iter().zip(a).map(|(x, y)| x - y).collect();
    Ok(objective(f, prob)? + norm_sq(&diff) - norm_sq(&prob.operator.forward(&diff)))
}
