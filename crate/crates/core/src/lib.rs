//! Counterfactual explanations of model confidence.
//!
//! A binary logistic classifier is trained on mixed categorical/continuous
//! tabular data. Given an instance `x`, a confidence threshold `T` and a
//! direction, [`cfsearch::solve`] finds the cheapest change `x'` (weighted
//! l1 distance with inverse-MAD weights, plus `|U(x') - T|`) whose confidence
//! crosses `T` while the predicted class stays the same. Results are rendered
//! as sentences, example tables and ICE-for-confidence profiles.

pub mod cfsearch;
pub mod data;
pub mod error;
pub mod explain;
pub mod ice;
pub mod model;
pub mod study;

pub use error::{Error, Result};
