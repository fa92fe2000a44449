//! Scalar thresholding maps.
//!
//! For a list of terms `(c_i, p_i)` the shrinkage of `b` is the global
//! minimizer of
//!
//! ```text
//! M(x) = x^2 - 2 b x + sum_i c_i |x|^{p_i}
//! ```
//!
//! Terms with `p = 1` contribute a dead zone `[-tau, tau]`, `tau = sum c_i / 2`,
//! that is mapped to zero. Outside the dead zone the minimizer is the unique
//! root of a strictly increasing function, found by safeguarded Newton
//! iteration inside a bracket. Every map here is odd in `b`: the work is done
//! on `|b|` and the sign is reapplied at the end.

use crate::error::{Error, Result};

/// Absolute tolerance on roots returned by the inversion routines.
pub const ROOT_TOL: f64 = 1e-12;

const MAX_ROOT_ITERS: usize = 400;

/// One `c |x|^p` term of a penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTerm {
    weight: f64,
    exponent: f64,
}

impl PenaltyTerm {
    /// Requires `weight > 0` and `1 <= exponent <= 2`.
    pub fn new(weight: f64, exponent: f64) -> Result<Self> {
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::InvalidTerm(format!(
                "weight must be positive and finite, got {weight}"
            )));
        }
        if !(1.0..=2.0).contains(&exponent) {
            return Err(Error::InvalidTerm(format!(
                "exponent must lie in [1, 2], got {exponent}"
            )));
        }
        Ok(Self { weight, exponent })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `p == 1` by exact comparison.
    pub fn is_l1(&self) -> bool {
        self.exponent == 1.0
    }

    /// Same exponent, weight multiplied by `factor` (which must be positive).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.weight * factor, self.exponent)
    }

    /// `c |x|^p`.
    pub fn value(&self, x: f64) -> f64 {
        self.weight * abs_pow(x, self.exponent)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|x|^e`, with the integer exponents evaluated exactly.
pub(crate) fn abs_pow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else {
        a.powf(e)
    }
}

/// `F_{c,p}(x) = x + (c p / 2) sign(x) |x|^{p-1}`.
pub fn eval_f(x: f64, term: &PenaltyTerm) -> f64 {
    let (c, p) = (term.weight, term.exponent);
    x + 0.5 * c * p * sign(x) * abs_pow(x, p - 1.0)
}

/// Minimizer of `x^2 - 2 b x + c |x|^p` for a single term.
///
/// Soft thresholding for `p = 1`, the inverse of [`eval_f`] otherwise.
pub fn shrink_scalar(b: f64, term: &PenaltyTerm) -> f64 {
    let magnitude = if term.is_l1() {
        positive_branch(b.abs(), 0.5 * term.weight, &[])
    } else {
        positive_branch(b.abs(), 0.0, std::slice::from_ref(term))
    };
    apply_sign(b, magnitude)
}

/// Minimizer of `x^2 - 2 b x + sum_i c_i |x|^{p_i}`.
///
/// With a single term this is bit-identical to [`shrink_scalar`]. An empty
/// term list is the unpenalized case and returns `b`.
pub fn shrink_multi(b: f64, terms: &[PenaltyTerm]) -> f64 {
    if let [single] = terms {
        return shrink_scalar(b, single);
    }
    let dead = dead_zone(terms);
    let smooth: Vec<PenaltyTerm> = terms.iter().copied().filter(|t| !t.is_l1()).collect();
    apply_sign(b, positive_branch(b.abs(), dead, &smooth))
}

/// Half-width of the dead zone, `sum_{p_i = 1} c_i / 2`.
pub fn dead_zone(terms: &[PenaltyTerm]) -> f64 {
    0.5 * terms
        .iter()
        .filter(|t| t.is_l1())
        .map(|t| t.weight)
        .sum::<f64>()
}

/// Positive-axis branch of the multi-term inverse:
/// `x + tau + sum_{p_i > 1} p_i c_i x^{p_i - 1} / 2` for `x > 0`.
///
/// This is `F_1` when the dead zone is nonempty and `F` restricted to
/// `x > 0` otherwise.
pub fn eval_f_positive(x: f64, terms: &[PenaltyTerm]) -> f64 {
    x + dead_zone(terms) + smooth_part(x, terms.iter().filter(|t| !t.is_l1()))
}

/// Negative-axis branch, `F_2(x) = -F_1(-x)` for `x < 0`.
pub fn eval_f_negative(x: f64, terms: &[PenaltyTerm]) -> f64 {
    -eval_f_positive(-x, terms)
}

/// `(|S(b) - b|, (c p / 2) |b|^{p-1})`; the first never exceeds the second.
pub fn residual_bound(b: f64, term: &PenaltyTerm) -> (f64, f64) {
    let residual = (shrink_scalar(b, term) - b).abs();
    let bound = if b == 0.0 {
        // 0^0 would give c/2 at p = 1; S(0) = 0 so the residual is 0 anyway
        0.0
    } else {
        0.5 * term.weight * term.exponent * abs_pow(b, term.exponent - 1.0)
    };
    (residual, bound)
}

fn apply_sign(b: f64, magnitude: f64) -> f64 {
    if b < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

fn smooth_part<'a>(x: f64, smooth: impl Iterator<Item = &'a PenaltyTerm>) -> f64 {
    smooth
        .map(|t| 0.5 * t.exponent * t.weight * abs_pow(x, t.exponent - 1.0))
        .sum()
}

fn smooth_slope(x: f64, smooth: &[PenaltyTerm]) -> f64 {
    1.0 + smooth
        .iter()
        .map(|t| {
            let p = t.exponent;
            if p == 2.0 {
                t.weight
            } else {
                0.5 * p * (p - 1.0) * t.weight * x.powf(p - 2.0)
            }
        })
        .sum::<f64>()
}

/// Solves `x + sum_smooth p c x^{p-1} / 2 = b_abs - dead` for `x >= 0`.
///
/// The left side is strictly increasing, vanishes at `0+` and dominates `x`,
/// so the root lies in `[0, b_abs - dead]`.
fn positive_branch(b_abs: f64, dead: f64, smooth: &[PenaltyTerm]) -> f64 {
    if b_abs <= dead {
        return 0.0;
    }
    let target = b_abs - dead;
    if smooth.is_empty() {
        return target;
    }
    let g = |x: f64| x + smooth_part(x, smooth.iter()) - target;

    let (mut lo, mut hi) = (0.0_f64, target);
    let mut x = hi;
    for _ in 0..MAX_ROOT_ITERS {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let tol = ROOT_TOL.max(4.0 * f64::EPSILON * hi);
        if hi - lo <= tol {
            break;
        }
        let slope = smooth_slope(x, smooth);
        let newton = x - gx / slope;
        let next = if slope.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 0.5 * tol {
            x = next;
            break;
        }
        x = next;
    }
    x
}
