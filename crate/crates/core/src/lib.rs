//! Building cross-document event coreference corpora from MediaWiki dumps,
//! and clustering/scoring coreference over them.
//!
//! * [`wikitext`] streams export dumps and turns wikitext into paragraphs and
//!   internal links.
//! * [`pipeline`] collects event pages and the anchor texts pointing at them,
//!   filters mentions and produces train/dev/test splits.
//! * [`stats`] computes corpus statistics (ambiguity, diversity).
//! * [`metrics`] implements MUC, B³, CEAF-e and the CoNLL average.
//! * [`resolver`] produces system clusterings (head-lemma baseline and
//!   average-link agglomerative clustering over pairwise scores).
//! * [`validation`] stores manual validation judgments for dev/test mentions.

pub mod error;
pub mod exec;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod resolver;
pub mod stats;
pub mod validation;
pub mod wikitext;

pub use error::{Error, Result};
pub use exec::Exec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
