//! Dataset construction: pivots, mention gathering, filtering, diversity
//! control and split creation.

mod diversity;
mod extract;
mod filters;
mod mentions;
mod pivots;
mod splits;
mod tokenize;
mod types;

pub use diversity::{control_diversity, normalize_surface, DEFAULT_MAX_IDENTICAL};
pub use extract::{extract, write_extraction, write_splits, ExtractConfig, Extraction, StageCounts};
pub use filters::{
    default_blocked_labels, filter_by_ner, ContextFilter, NerAnnotations, NerRecord, DEFAULT_BLOCKED_LABELS,
    DEFAULT_BOILERPLATE_PATTERNS, DEFAULT_MIN_CONTEXT_TOKENS,
};
pub use mentions::{
    assign_ids, collect_mentions, page_mentions, sort_corpus_order, CollectCounts, CollectOptions, LocatedMention,
};
pub use pivots::{collect_pivots, registry_from_types, Allowlist};
pub use splits::{make_splits, purge_train_leakage, Splits};
pub use tokenize::{detokenize, tokenize, tokens_covering, Token};
pub use types::{
    ClusterId, CoreferenceChain, DatasetSplit, EventRegistry, Mention, MentionId, MentionMetadata, PivotInfo,
    PivotRecord, SplitName,
};
