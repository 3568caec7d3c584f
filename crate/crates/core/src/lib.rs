//! Mining tweet corpora for pandemic-era education discussion: lexicon
//! filtering, gazetteer geotagging, attention-pooled sentiment voting and
//! weekly per-country trends correlated with case counts.

pub mod corpus;
pub mod error;
pub mod geo;
pub mod lexicon;
pub mod par;
pub mod pipeline;
pub mod sentiment;
pub mod synth;
pub mod trend;

pub use error::{Error, RecordError, Result};
pub use par::Execution;
