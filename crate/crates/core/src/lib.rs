//! Temporal reference resolution for scheduling dialogs.
//!
//! Resolves deictic ("tomorrow"), elliptical ("at 2"), and anaphoric
//! ("the same day") time expressions into fully specified calendar
//! intervals. The resolver keeps a recency-ordered focus list of every
//! time mentioned so far, applies a small set of certainty-scored
//! resolution rules to each new expression, merges the compatible rule
//! results (maximal cliques of the compatibility graph), and picks the
//! interpretation with the highest summed certainty after plausibility
//! critics have run.
//!
//! The crate also ships the matching evaluation machinery: field-level
//! scoring of system output against a gold key (accuracy / precision),
//! a rules-disabled lower bound, and chance-corrected inter-annotator
//! agreement (kappa).

pub mod calendar;
pub mod engine;
pub mod error;
pub mod eval;
pub mod format;
pub mod normalize;
pub mod rules;
pub mod tu;

pub use error::{Error, Result};
