//! Two-stage relation-path reasoning over sparse knowledge graphs.
//!
//! Stage one mines a relation-path reasoning schema from the training
//! triples: walks are sampled per entity, grouped by entity type, scored by
//! precision, lifted into a cross-type group when a relation is shared by
//! several types, and decayed by hop count. Stage two answers `(h, r, ?)`
//! queries by grounding the best paths for `r` from `h`, summing the scores of
//! the paths that reach each candidate and rescaling by answer similarity.
//!
//! `examples/reason.rs` walks through both stages on a dataset directory.

pub mod config;
pub mod error;
pub mod eval;
pub mod ids;
pub mod kg;
pub mod reasoner;
pub mod sampler;
pub mod schema;
pub mod score;

pub use error::{Error, Result};
pub use ids::{EdgeLabel, EntityId, RelationId, RelationPath, TypeId};
