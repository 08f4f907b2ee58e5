//! Tree search for tactic-level theorem proving, with pluggable policies,
//! critics and proof environments, plus the expert-iteration loop that turns
//! search results into training data.

pub mod critic;
pub mod datagen;
pub mod env;
pub mod escape;
pub mod model;
pub mod policy;
pub mod search;
