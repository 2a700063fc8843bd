//! Iterated update rules on credal sets: finitely generated convex sets of
//! discrete probability distributions.
//!
//! The crate provides the ground metrics on the simplex, hull reduction and
//! Hausdorff distances for finitely generated credal sets, the credal Bayesian
//! update and its pessimistic variant, interval update rules with their
//! envelopes, contraction diagnostics, orbit iteration with fixed-point and
//! rate checks, and a closed-form conjugate Gaussian illustration.
//!
//! On a finite outcome space the finitely additive and countably additive
//! settings coincide, so everything here applies to both.
//!
//! ```
//! use credal_core::fixpoint::{orbit, IterateConfig};
//! use credal_core::rules::Cbdl;
//! use credal_core::{CredalSet, Dist, Likelihood};
//!
//! # fn main() -> credal_core::Result<()> {
//! let rule = Cbdl::new(vec![Likelihood::new(vec![1.0, 2.0, 3.0])?])?;
//! let start = CredalSet::from_points(vec![
//!     Dist::new(vec![0.8, 0.1, 0.1])?,
//!     Dist::new(vec![0.1, 0.8, 0.1])?,
//! ])?;
//! let run = orbit(&rule, &start, &IterateConfig::default(), None)?;
//! assert!(run.trace.converged);
//! # Ok(())
//! # }
//! ```

// Checks are written `!(x > 0.0)` so that NaN is rejected along with
// nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contraction;
pub mod credal;
pub mod dist;
pub mod error;
pub mod fixpoint;
pub mod gaussian;
pub mod lp;
pub mod rules;
pub mod sampling;

pub use credal::{CredalSet, CredalSpace, IntervalCredal, SetMetric, SetSummary};
pub use dist::{Dist, Likelihood, PositiveDist};
pub use error::{CredalError, Result};
