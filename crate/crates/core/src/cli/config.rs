//! TOML experiment configs.
//!
//! ```toml
//! seed = 7
//!
//! [operator]
//! kind = "multiframe"
//! a = { kind = "conv1d", kernel = [0.2, 0.6, 0.2], n = 64 }
//! frames = [{ kind = "haar-analysis", n = 64 }]
//!
//! [signal.generator]
//! length = 64
//! spikes = 4
//!
//! [signal]
//! noise = 0.01
//! observe = { kind = "conv1d", kernel = [0.2, 0.6, 0.2], n = 64 }
//!
//! [[penalty.groups]]
//! exponent = 1.0
//! weight = 0.02
//!
//! [solver]
//! step_tol = 1e-10
//! ```
//!
//! Unknown keys are rejected. Semantic errors name the offending field.

use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use super::CliError;
use crate::model::{norm, CoeffVector, GroupPenalty, PenaltySpec};
use crate::operators::{
    conv1d_op, diagonal_op, haar_analysis, haar_synthesis, identity_op, matrix_op, multiframe_op,
    sum_space_op, LinearOp,
};
use crate::shrinkage::PenaltyTerm;
use crate::solver::StopRule;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub operator: Option<OperatorConfig>,
    pub signal: Option<SignalConfig>,
    pub penalty: Option<PenaltyConfig>,
    pub penalty_u: Option<PenaltyConfig>,
    pub penalty_v: Option<PenaltyConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub regpath: Option<RegpathConfig>,
    pub shrink_table: Option<ShrinkTableConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    Matrix {
        rows: Vec<Vec<f64>>,
    },
    Diagonal {
        entries: Vec<f64>,
    },
    Identity {
        n: usize,
    },
    Conv1d {
        kernel: Vec<f64>,
        n: usize,
    },
    HaarAnalysis {
        n: usize,
    },
    HaarSynthesis {
        n: usize,
    },
    Multiframe {
        a: Box<OperatorConfig>,
        frames: Vec<OperatorConfig>,
    },
    SumSpace {
        inner: Box<OperatorConfig>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    /// Observed data `g`, used as is.
    pub data: Option<Vec<f64>>,
    /// Coefficients `f0`; `g = K f0 + noise`.
    pub truth: Option<Vec<f64>>,
    /// Synthetic signal `x`; `g = observe(x) + noise`.
    pub generator: Option<GeneratorConfig>,
    /// Norm of the Gaussian noise added to `g`.
    #[serde(default)]
    pub noise: f64,
    /// Forward model applied to a generated signal; defaults to the problem
    /// operator.
    pub observe: Option<OperatorConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub length: usize,
    #[serde(default)]
    pub spikes: usize,
    #[serde(default = "one")]
    pub spike_amplitude: f64,
    #[serde(default)]
    pub smooth_amplitude: f64,
    #[serde(default = "one")]
    pub smooth_periods: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMode {
    #[default]
    Partitioned,
    Stacked,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    #[serde(default)]
    pub mode: PenaltyMode,
    pub groups: Vec<GroupConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub exponent: f64,
    /// Same base weight at every coefficient of the group.
    pub weight: Option<f64>,
    /// Per-coefficient base weights, one per index the group covers.
    pub weights: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub multiplier: f64,
    /// Partitioned mode: explicit indices of the block.
    pub indices: Option<Vec<usize>>,
    /// Partitioned mode: half-open index range `[start, end)`.
    pub range: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    /// Starting point; zero when absent.
    pub f0: Option<Vec<f64>>,
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            step_tol: default_step_tol(),
            f0: None,
            trace_stride: default_stride(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegpathConfig {
    pub truth: Vec<f64>,
    pub eps0: f64,
    pub ratio: f64,
    pub levels: usize,
    /// `alpha(eps) = eps^exponent`.
    #[serde(default = "one")]
    pub exponent: f64,
    pub error_target: f64,
    /// Basis of the nullspace of a non-injective operator.
    pub nullspace: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShrinkTableConfig {
    /// `(weight, exponent)` pairs.
    pub terms: Vec<(f64, f64)>,
    pub b_min: f64,
    pub b_max: f64,
    pub points: usize,
}

fn one() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    StopRule::default().max_iters
}

fn default_step_tol() -> f64 {
    StopRule::default().step_tol
}

fn default_stride() -> usize {
    1
}

fn invalid(field: impl std::fmt::Display, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
}

impl ExperimentConfig {
    pub fn operator(&self) -> Result<Arc<dyn LinearOp>, CliError> {
        self.operator
            .as_ref()
            .ok_or_else(|| invalid("operator", "missing section"))?
            .build("operator")
    }

    pub fn penalty_section(&self, name: &'static str) -> Result<&PenaltyConfig, CliError> {
        match name {
            "penalty" => self.penalty.as_ref(),
            "penalty_u" => self.penalty_u.as_ref(),
            "penalty_v" => self.penalty_v.as_ref(),
            _ => None,
        }
        .ok_or_else(|| invalid(name, "missing section"))
    }

    pub fn stop_rule(&self) -> Result<StopRule, CliError> {
        StopRule::new(self.solver.max_iters, self.solver.step_tol).map_err(|e| invalid("solver", e))
    }

    pub fn initial_point(&self, dim: usize) -> Result<Vec<f64>, CliError> {
        match &self.solver.f0 {
            None => Ok(vec![0.0; dim]),
            Some(f0) if f0.len() != dim => Err(invalid(
                "solver.f0",
                format!("expected {dim} entries, found {}", f0.len()),
            )),
            Some(f0) if f0.iter().any(|v| !v.is_finite()) => {
                Err(invalid("solver.f0", "non-finite entry"))
            }
            Some(f0) => Ok(f0.clone()),
        }
    }

    /// The observed data for `op`, drawn with `seed` when synthetic.
    pub fn data(&self, op: &dyn LinearOp, seed: u64) -> Result<CoeffVector, CliError> {
        self.signal
            .as_ref()
            .ok_or_else(|| invalid("signal", "missing section"))?
            .build(op, seed)
    }
}

impl OperatorConfig {
    pub fn build(&self, field: &str) -> Result<Arc<dyn LinearOp>, CliError> {
        let wrap = |e: crate::Error| invalid(field, e);
        let positive = |n: usize, key: &str| {
            if n == 0 {
                Err(invalid(format!("{field}.{key}"), "must be at least 1"))
            } else {
                Ok(n)
            }
        };
        Ok(match self {
            Self::Matrix { rows } => Arc::new(matrix_op(rows.clone()).map_err(wrap)?),
            Self::Diagonal { entries } => {
                if entries.is_empty() {
                    return Err(invalid(format!("{field}.entries"), "must not be empty"));
                }
                Arc::new(diagonal_op(entries).map_err(wrap)?)
            }
            Self::Identity { n } => Arc::new(identity_op(positive(*n, "n")?)),
            Self::Conv1d { kernel, n } => {
                if kernel.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(format!("{field}.kernel"), "non-finite entry"));
                }
                Arc::new(conv1d_op(kernel, positive(*n, "n")?).map_err(wrap)?)
            }
            Self::HaarAnalysis { n } => Arc::new(haar_analysis(*n).map_err(wrap)?),
            Self::HaarSynthesis { n } => Arc::new(haar_synthesis(*n).map_err(wrap)?),
            Self::Multiframe { a, frames } => {
                let a = a.build(&format!("{field}.a"))?;
                let frames = frames
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.build(&format!("{field}.frames[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Arc::new(multiframe_op(a, frames).map_err(wrap)?)
            }
            Self::SumSpace { inner } => {
                Arc::new(sum_space_op(inner.build(&format!("{field}.inner"))?))
            }
        })
    }
}

impl SignalConfig {
    fn build(&self, op: &dyn LinearOp, seed: u64) -> Result<CoeffVector, CliError> {
        let sources = [
            self.data.is_some(),
            self.truth.is_some(),
            self.generator.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(invalid(
                "signal",
                "set exactly one of data, truth, generator",
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid(
                "signal.noise",
                format!("must be a nonnegative norm, got {}", self.noise),
            ));
        }
        if self.observe.is_some() && self.generator.is_none() {
            return Err(invalid(
                "signal.observe",
                "only applies to a generated signal",
            ));
        }
        let m = op.codomain_dim();
        let g = if let Some(data) = &self.data {
            expect_len("signal.data", m, data.len())?;
            data.clone()
        } else if let Some(truth) = &self.truth {
            expect_len("signal.truth", op.domain_dim(), truth.len())?;
            finite("signal.truth", truth)?;
            op.forward(truth)
        } else {
            let x = self
                .generator
                .as_ref()
                .expect("one source is set")
                .generate(seed)?;
            match &self.observe {
                Some(o) => {
                    let observe = o.build("signal.observe")?;
                    expect_len("signal.generator.length", observe.domain_dim(), x.len())?;
                    expect_len("signal.observe", m, observe.codomain_dim())?;
                    observe.forward(&x)
                }
                None => {
                    expect_len("signal.generator.length", op.domain_dim(), x.len())?;
                    op.forward(&x)
                }
            }
        };
        finite("signal.data", &g)?;
        self.finish(g, seed, m)
    }

    fn finish(&self, mut g: Vec<f64>, seed: u64, m: usize) -> Result<CoeffVector, CliError> {
        if self.noise > 0.0 {
            let noise = gaussian(seed, 1, m, self.noise);
            g.iter_mut().zip(noise).for_each(|(a, b)| *a += b);
        }
        CoeffVector::new(g).map_err(|e| invalid("signal", e))
    }
}

impl GeneratorConfig {
    /// Random spikes plus a sinusoid, from stream 0 of `seed`.
    pub fn generate(&self, seed: u64) -> Result<Vec<f64>, CliError> {
        let n = self.length;
        if n == 0 {
            return Err(invalid("signal.generator.length", "must be at least 1"));
        }
        if self.spikes > n {
            return Err(invalid(
                "signal.generator.spikes",
                format!("{} spikes do not fit in length {n}", self.spikes),
            ));
        }
        for (key, v) in [
            ("spike_amplitude", self.spike_amplitude),
            ("smooth_amplitude", self.smooth_amplitude),
            ("smooth_periods", self.smooth_periods),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("signal.generator.{key}"), "must be finite"));
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let mut x: Vec<f64> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * self.smooth_periods * i as f64 / n as f64;
                self.smooth_amplitude * (t + phase).sin()
            })
            .collect();
        for i in sample(&mut rng, n, self.spikes) {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x[i] += sign * self.spike_amplitude * rng.random_range(0.5..=1.0);
        }
        Ok(x)
    }
}

/// Gaussian vector rescaled to norm `radius`, from `stream` of `seed`.
pub fn gaussian(seed: u64, stream: u64, len: usize, radius: f64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut e: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = norm(&e);
    e.iter_mut().for_each(|v| *v *= radius / n);
    e
}

impl PenaltyConfig {
    pub fn build(&self, n: usize, field: &str) -> Result<PenaltySpec, CliError> {
        if self.groups.is_empty() {
            return Err(invalid(
                format!("{field}.groups"),
                "at least one group is required",
            ));
        }
        let mut groups = Vec::with_capacity(self.groups.len());
        for (k, g) in self.groups.iter().enumerate() {
            let at = format!("{field}.groups[{k}]");
            if !(1.0..=2.0).contains(&g.exponent) {
                return Err(invalid(
                    format!("{at}.exponent"),
                    format!("must lie in [1, 2], got {}", g.exponent),
                ));
            }
            if !(g.multiplier > 0.0 && g.multiplier.is_finite()) {
                return Err(invalid(
                    format!("{at}.multiplier"),
                    format!("must be positive, got {}", g.multiplier),
                ));
            }
            groups.push(GroupPenalty::new(g.exponent, g.multiplier));
        }

        let spec = match self.mode {
            PenaltyMode::Stacked => {
                let weights = self
                    .groups
                    .iter()
                    .enumerate()
                    .map(|(k, g)| {
                        let at = format!("{field}.groups[{k}]");
                        if g.indices.is_some() || g.range.is_some() {
                            return Err(invalid(
                                &at,
                                "stacked groups cover every index; drop indices/range",
                            ));
                        }
                        g.weights_for(n, &at)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                PenaltySpec::stacked(&weights, &groups)
            }
            PenaltyMode::Partitioned => {
                let mut labels = vec![None; n];
                let mut weights = vec![0.0; n];
                let implicit = self.groups.len() == 1;
                for (k, g) in self.groups.iter().enumerate() {
                    let at = format!("{field}.groups[{k}]");
                    let members = g.members(n, implicit, &at)?;
                    let w = g.weights_for(members.len(), &at)?;
                    for (&i, wi) in members.iter().zip(w) {
                        if let Some(prev) = labels[i] {
                            return Err(invalid(
                                &at,
                                format!("index {i} already belongs to group {prev}"),
                            ));
                        }
                        labels[i] = Some(k);
                        weights[i] = wi;
                    }
                }
                let labels = labels
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| {
                        l.ok_or_else(|| {
                            invalid(
                                format!("{field}.groups"),
                                format!("index {i} belongs to no group"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                PenaltySpec::partitioned(&labels, &weights, &groups)
            }
        };
        spec.map_err(|e| invalid(field, e))
    }
}

impl GroupConfig {
    fn members(&self, n: usize, implicit: bool, at: &str) -> Result<Vec<usize>, CliError> {
        let members = match (&self.indices, &self.range) {
            (Some(_), Some(_)) => return Err(invalid(at, "set indices or range, not both")),
            (Some(idx), None) => idx.clone(),
            (None, Some([a, b])) => {
                if a >= b {
                    return Err(invalid(
                        format!("{at}.range"),
                        format!("empty range [{a}, {b})"),
                    ));
                }
                (*a..*b).collect()
            }
            (None, None) if implicit => (0..n).collect(),
            (None, None) => {
                return Err(invalid(
                    at,
                    "indices or range required when there are several groups",
                ))
            }
        };
        if let Some(&bad) = members.iter().find(|&&i| i >= n) {
            return Err(invalid(
                at,
                format!("index {bad} out of range for dimension {n}"),
            ));
        }
        Ok(members)
    }

    fn weights_for(&self, count: usize, at: &str) -> Result<Vec<f64>, CliError> {
        let w = match (&self.weight, &self.weights) {
            (Some(w), None) => vec![*w; count],
            (None, Some(ws)) => {
                expect_len(&format!("{at}.weights"), count, ws.len())?;
                ws.clone()
            }
            _ => return Err(invalid(at, "set exactly one of weight, weights")),
        };
        if let Some(bad) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(invalid(
                format!("{at}.weight"),
                format!("must be positive, got {bad}"),
            ));
        }
        Ok(w)
    }
}

impl ShrinkTableConfig {
    pub fn terms(&self) -> Result<Vec<PenaltyTerm>, CliError> {
        if self.terms.is_empty() {
            return Err(invalid(
                "shrink_table.terms",
                "at least one term is required",
            ));
        }
        self.terms
            .iter()
            .enumerate()
            .map(|(i, &(w, p))| {
                PenaltyTerm::new(w, p).map_err(|e| invalid(format!("shrink_table.terms[{i}]"), e))
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if !(self.b_min.is_finite() && self.b_max.is_finite() && self.b_min < self.b_max) {
            return Err(invalid("shrink_table", "need finite b_min < b_max"));
        }
        if self.points < 2 {
            return Err(invalid("shrink_table.points", "must be at least 2"));
        }
        let h = (self.b_max - self.b_min) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.b_max
                } else {
                    self.b_min + i as f64 * h
                }
            })
            .collect())
    }
}

pub(crate) fn expect_len(field: &str, expected: usize, found: usize) -> Result<(), CliError> {
    if expected == found {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("expected length {expected}, found {found}"),
        ))
    }
}

fn finite(field: &str, v: &[f64]) -> Result<(), CliError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "non-finite entry"))
    }
}
