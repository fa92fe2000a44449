//! Brute-force minimizers used to validate the solver.
//!
//! Nothing here calls into the shrinkage maps or the iteration: the oracles
//! evaluate objectives directly on grids, zoom in around the best point and
//! polish with golden-section search. `M` and `Phi` are convex, so the best
//! grid point is within one cell of a minimizer and the zoom window (ten
//! times smaller than the previous window) always contains it.

use crate::error::{Error, Result};
use crate::model::{CoeffVector, Problem};
use crate::shrinkage::PenaltyTerm;

const GOLDEN_TOL: f64 = 1e-13;
const POLISH_SWEEPS: usize = 500;

/// Uniform scan of `[lo, hi]` followed by `refine_rounds` ten-fold zooms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    lo: f64,
    hi: f64,
    points: usize,
    refine_rounds: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize, refine_rounds: usize) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need lo < hi, got [{lo}, {hi}]"
            )));
        }
        if points < 101 {
            return Err(Error::InvalidGrid(format!(
                "need at least 101 points, got {points}"
            )));
        }
        if refine_rounds < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 refine rounds, got {refine_rounds}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            points,
            refine_rounds,
        })
    }

    /// `[-(|b| + 1), |b| + 1]`, which contains `S(b)` because
    /// `|S(b)| <= |b|` (nonexpansive with `S(0) = 0`).
    pub fn bracketing(b: f64) -> Self {
        let r = b.abs() + 1.0;
        Self::new(-r, r, 201, 10).expect("valid bracket")
    }

    /// Symmetric box containing every minimizer of `prob`.
    ///
    /// `Phi(f*) <= Phi(0) = ||g||^2` bounds `c |f_i|^p` for every term, so
    /// `|f_i| <= max(B / c_min, sqrt(B / c_min))`.
    pub fn for_problem(prob: &Problem) -> Self {
        let budget = crate::model::norm_sq(prob.data()) / prob.penalty().c_min();
        let r = budget.max(budget.sqrt()) + 1.0;
        Self::new(-r, r, 101, 10).expect("valid bracket")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Resolution after all zoom rounds.
    pub fn resolution(&self) -> f64 {
        (self.hi - self.lo) * 10f64.powi(-(self.refine_rounds as i32)) / self.points as f64
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(move |i| lo + step * i as f64)
}

fn argmin_on(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let mut best = (f64::INFINITY, lo);
    for x in linspace(lo, hi, points) {
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}

/// Golden-section search for a unimodal function on `[a, b]`.
fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // keep an exact zero when it beats the bracket midpoint; kinks sit at 0
    if a <= 0.0 && 0.0 <= b && f(0.0) <= f(mid) {
        0.0
    } else {
        mid
    }
}

fn minimize_1d(f: &impl Fn(f64) -> f64, grid: &GridSpec) -> f64 {
    let (mut lo, mut hi) = (grid.lo, grid.hi);
    let mut best = argmin_on(f, lo, hi, grid.points);
    for _ in 0..grid.refine_rounds {
        let half = (hi - lo) / 20.0;
        lo = best - half;
        hi = best + half;
        best = argmin_on(f, lo, hi, grid.points);
    }
    let cell = (hi - lo) / (grid.points - 1) as f64;
    golden(f, best - cell, best + cell)
}

/// Minimizer of `M(x) = x^2 - 2 b x + sum_i c_i |x|^{p_i}`, by grid search.
pub fn minimize_m(b: f64, terms: &[PenaltyTerm], grid: &GridSpec) -> Result<f64> {
    if !b.is_finite() {
        return Err(Error::NonFinite("oracle input"));
    }
    // (x - b)^2 differs from M by the constant b^2 and loses less precision
    let m = |x: f64| (x - b) * (x - b) + terms.iter().map(|t| t.value(x)).sum::<f64>();
    Ok(minimize_1d(&m, grid))
}

/// Coordinate-wise minimizer of `Phi` for a diagonal operator.
///
/// `(k f - g)^2 + sum c |f|^p = k^2 [(f - g/k)^2 + sum (c / k^2) |f|^p]`,
/// so each coordinate is a [`minimize_m`] problem with `b = g / k`.
pub fn minimize_separable(prob: &Problem) -> Result<CoeffVector> {
    let diag = prob.operator().diagonal().ok_or(Error::NotDiagonal)?;
    let out = diag
        .iter()
        .zip(prob.data().iter())
        .zip(prob.penalty().terms())
        .map(|((&k, &g), terms)| {
            if k == 0.0 {
                return Ok(0.0);
            }
            let b = g / k;
            let scaled = terms
                .iter()
                .map(|t| t.scaled(1.0 / (k * k)))
                .collect::<Result<Vec<_>>>()?;
            minimize_m(b, &scaled, &GridSpec::bracketing(b))
        })
        .collect::<Result<Vec<_>>>()?;
    CoeffVector::new(out)
}

/// Tensor-grid minimizer of `Phi` for problems of dimension at most 2.
pub fn minimize_grid(prob: &Problem, grid: &GridSpec) -> Result<CoeffVector> {
    let dim = prob.dim();
    if dim > 2 {
        return Err(Error::TooManyDimensions(dim));
    }
    let phi = |x: &[f64]| prob.objective(x).expect("dimension checked");
    CoeffVector::new(minimize_box(&phi, dim, grid))
}

/// Minimizes a convex function over `[lo, hi]^dim` by tensor-grid scans with
/// ten-fold zooms, then polishes with cyclic golden-section coordinate
/// descent (convergent for a smooth part plus a separable nonsmooth part).
///
/// The scan costs `points^dim` evaluations per round, so keep `dim` small.
pub fn minimize_box(f: &dyn Fn(&[f64]) -> f64, dim: usize, grid: &GridSpec) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    if dim == 1 {
        return vec![minimize_1d(&|t| f(&[t]), grid)];
    }
    let scan = |lo: &[f64], hi: &[f64]| {
        let axes: Vec<Vec<f64>> = (0..dim)
            .map(|a| linspace(lo[a], hi[a], grid.points).collect())
            .collect();
        let mut idx = vec![0usize; dim];
        let mut point: Vec<f64> = axes.iter().map(|ax| ax[0]).collect();
        let mut best = (f64::INFINITY, point.clone());
        loop {
            let v = f(&point);
            if v < best.0 {
                best = (v, point.clone());
            }
            // odometer increment over the tensor grid
            let mut a = 0;
            loop {
                if a == dim {
                    return best.1;
                }
                idx[a] += 1;
                if idx[a] < grid.points {
                    point[a] = axes[a][idx[a]];
                    break;
                }
                idx[a] = 0;
                point[a] = axes[a][0];
                a += 1;
            }
        }
    };
    let mut lo = vec![grid.lo; dim];
    let mut hi = vec![grid.hi; dim];
    let mut best = scan(&lo, &hi);
    for _ in 0..grid.refine_rounds {
        for a in 0..dim {
            let half = (hi[a] - lo[a]) / 20.0;
            lo[a] = best[a] - half;
            hi[a] = best[a] + half;
        }
        best = scan(&lo, &hi);
    }

    let mut x = best;
    for _ in 0..POLISH_SWEEPS {
        let before = x.clone();
        for a in 0..dim {
            let line = |t: f64| {
                let mut probe = x.clone();
                probe[a] = t;
                f(&probe)
            };
            let t = golden(&line, grid.lo.min(x[a] - 1.0), grid.hi.max(x[a] + 1.0));
            let current = x[a];
            if line(t) <= line(current) {
                x[a] = t;
            }
        }
        let moved: f64 = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).sum();
        if moved < 1e-14 {
            break;
        }
    }
    x
}
