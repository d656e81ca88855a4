//! Enrichment-driven link prediction over property knowledge graphs.
//!
//! A query `(H, r, ?T)` is answered in three stages: look up the known
//! answers adjacent to `H`, find graph neighbours and node properties those
//! answers share more often than a hypergeometric null predicts, then
//! propose every other node of type `T` that shares one of those features.
//! Each proposal carries the p-value of its best supporting feature and the
//! full list of features that support it.

pub mod config;
pub mod curie;
pub mod error;
pub mod message;
pub mod ontology;
pub mod pipeline;
pub mod query;
pub mod resolver;
pub mod stats;
pub mod store;
pub mod synth;

pub use config::PipelineConfig;
pub use curie::Curie;
pub use error::{Error, Result, Stage};
pub use message::{answer, format_p, ResultMessage};
pub use ontology::{Ontology, OntologyKind};
pub use pipeline::{
    enrich, infer, lookup, run_pipeline, Enrichment, EnrichmentRule, InferredCandidate,
    LookupResult, PipelineOutput, RuleTarget, StageTimings,
};
pub use query::{parse_query, parse_request, QueryGraph, QueryOptions, QueryRequest, Template};
pub use resolver::{LocalResolver, MatchKind, NameMatch, NameResolver};
pub use stats::{EnrichmentCounts, Method, MethodChoice, PValue, StatsConfig};
pub use store::{Direction, EdgeRecord, NodeRecord, Store, StoreStats};
