//! Weak Gurov–Reshetnyak theory on finite metric measure spaces.
//!
//! The crate evaluates the oscillation and level-set conditions that
//! characterize weak Muckenhoupt-type weights (`weights`), builds discrete
//! Calderón–Zygmund decompositions over a restricted ball family
//! (`czdecomp`), and checks the resulting inequality chain numerically
//! (`theorems`): the superlevel/sublevel equivalences, the John–Nirenberg
//! type decay estimate, and the reverse Hölder consequences.
//!
//! All spaces are finite: points carry strictly positive masses and every
//! integral is a mass-weighted sum taken in ascending point-index order, so
//! results do not depend on the number of worker threads.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balls;
pub mod czdecomp;
mod error;
pub mod instances;
pub mod numeric;
pub mod rng;
pub mod space;
pub mod special;
pub mod theorems;
pub mod weights;

pub use balls::{Ball, BallFamily, RadiusPolicy};
pub use czdecomp::{CzDecomposition, JnConstants};
pub use error::{Error, Result};
pub use space::{DoublingProfile, MetricKind, Space};
pub use theorems::CheckReport;
pub use weights::{ConditionReport, Weight};
