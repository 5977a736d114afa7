use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub type MentionId = u64;
pub type ClusterId = u64;

/// Link metadata. Kept for provenance only; resolution algorithms never read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionMetadata {
    pub source_url: String,
    pub target_url: String,
    pub infobox_type: String,
}

/// An anchor-text event mention with its tokenized context paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: MentionId,
    pub tokens: Vec<String>,
    /// Inclusive token range of the anchor inside `tokens`.
    pub span: (usize, usize),
    pub mention_text: String,
    pub source_title: String,
    pub target_title: String,
    pub cluster_id: ClusterId,
    pub metadata: MentionMetadata,
}

impl Mention {
    pub fn span_tokens(&self) -> &[String] {
        &self.tokens[self.span.0..=self.span.1]
    }

    /// Checks the span bounds and that `mention_text` matches the span.
    pub fn is_consistent(&self) -> bool {
        self.span.0 <= self.span.1
            && self.span.1 < self.tokens.len()
            && self.mention_text == super::tokenize::detokenize(self.span_tokens())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreferenceChain {
    pub cluster_id: ClusterId,
    pub pivot_title: String,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split `{other}` (expected train, dev or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub chains: Vec<CoreferenceChain>,
}

impl DatasetSplit {
    pub fn mention_count(&self) -> usize {
        self.chains.iter().map(|c| c.mentions.len()).sum()
    }

    pub fn mentions(&self) -> impl Iterator<Item = &Mention> {
        self.chains.iter().flat_map(|c| c.mentions.iter())
    }

    /// Regroups flat mention records into chains, ordered by cluster id and
    /// mention id.
    pub fn from_mentions(name: SplitName, mentions: Vec<Mention>) -> Self {
        let mut by_cluster: BTreeMap<ClusterId, Vec<Mention>> = BTreeMap::new();
        for m in mentions {
            by_cluster.entry(m.cluster_id).or_default().push(m);
        }
        let chains = by_cluster
            .into_iter()
            .map(|(cluster_id, mut mentions)| {
                mentions.sort_by_key(|m| m.mention_id);
                CoreferenceChain {
                    cluster_id,
                    pivot_title: mentions[0].target_title.clone(),
                    mentions,
                }
            })
            .collect();
        DatasetSplit { name, chains }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotInfo {
    pub cluster_id: ClusterId,
    pub infobox_type: String,
}

/// Event pivot pages keyed by normalized title.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRegistry {
    pub pivots: BTreeMap<String, PivotInfo>,
}

impl EventRegistry {
    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn get(&self, title: &str) -> Option<&PivotInfo> {
        self.pivots.get(title)
    }
}

/// One pivot page as written to `pivots.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotRecord {
    pub cluster_id: ClusterId,
    pub title: String,
    pub infobox_type: String,
    pub summary: Option<String>,
}
