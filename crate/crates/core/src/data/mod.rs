//! Dataset schema, CSV ingestion, MAD distance weights and feature ranking.

mod dataset;
mod importance;
mod mad;
mod schema;

pub use dataset::{load_dataset, read_dataset, write_dataset, Labeled};
pub use importance::{permutation_importance, rank_features, PERMUTATION_REPEATS};
pub use mad::{
    compute_mad_weights, mad, median, FeatureWeight, MadWeights, WeightBasis,
    CATEGORICAL_CHANGE_COST, STD_CONSISTENCY,
};
pub use schema::{format_number, DatasetSchema, FeatureKind, FeatureSchema, Instance, Value};
