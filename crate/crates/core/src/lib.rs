//! Iterative thresholding for linear inverse problems whose penalty is a sum
//! of weighted `ℓ^p` terms.
//!
//! The penalty can be *partitioned* (every coefficient carries one term, the
//! exponent depending on which block of the index set it belongs to) or
//! *stacked* (every coefficient carries several terms at once). Both are
//! minimized by the same thresholded Landweber iteration
//!
//! ```text
//! f^{n+1} = S(f^n + K*(g - K f^n))
//! ```
//!
//! where `S` applies a scalar shrinkage map per coefficient.
//!
//! Modules:
//! - [`shrinkage`]: the scalar thresholding maps and their inverse functions.
//! - [`model`]: coefficient vectors, penalty specifications, objective and surrogate.
//! - [`operators`]: linear operators with adjoints and norm certificates.
//! - [`solver`]: single step, fixed-point iteration, the `(u, v)` decomposition driver.
//! - [`regpath`]: regularization schedules and noise-level experiments.
//! - [`oracle`]: brute-force minimizers used to validate everything above.
//! - [`cli`]: the config-driven experiment runner behind the `mixthresh` binary.

pub mod cli;
pub mod error;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod regpath;
pub mod shrinkage;
pub mod solver;

pub use error::{Error, Result};
pub use model::{CoeffVector, PenaltySpec, Problem, ProblemShape};
pub use operators::LinearOp;
pub use shrinkage::PenaltyTerm;
pub use solver::{SolveTrace, StopRule};
