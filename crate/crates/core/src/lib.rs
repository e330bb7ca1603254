//! Interactive evolutionary multi-objective optimization driven by a
//! pairwise learning-to-rank preference model.

// `!(x > 0.0)` rejects NaN as well; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithms;
pub mod elicitation;
pub mod error;
pub mod evo;
pub mod harness;
pub mod ltr;
pub mod metrics;
pub mod oracle;
pub mod problems;
pub mod seeding;

pub use error::{Error, Result};
