//! Fully inexact generalized (WLM-)ADMM with convergence certification.
//!
//! The crate implements the weighted, proximally perturbed ADMM scheme whose
//! subproblems reduce to proximal evaluations, lets controlled computational
//! errors (noise injection, loop perforation, early inner termination) flow
//! into those evaluations, measures the induced prox suboptimalities, and
//! evaluates deterministic and probabilistic per-iteration convergence
//! bounds against a high-accuracy reference solution.
//!
//! Module map:
//! - [`numerics`]: dense linear algebra, seeded sampling, Hoeffding tail
//! - [`prox`]: exact and approximate proximal operators and ε measurement
//! - [`perturb`]: computational-error models and ε₀ bookkeeping
//! - [`engine`]: the three-step iteration, shadow pass, stopping criteria
//! - [`certify`]: bound series, empirical probability, verification reports

pub mod certify;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod perturb;
pub mod problem;
pub mod prox;

pub use certify::{BoundMode, BoundSeries, ReferenceSolution, VerificationReport};
pub use engine::{AdmmConfig, IterationRecord, PrecomputedOperators, RunMode, Trace};
pub use error::{Error, Result};
pub use numerics::{DenseMatrix, DenseVector, SeededRng};
pub use perturb::{ErrorModelSpec, ErrorVariant};
pub use problem::ProblemSpec;
pub use prox::{ProxResult, ProxTerm, ProxTermKind};
