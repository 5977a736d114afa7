//! Dataset statistics: counts, head-lemma ambiguity and diversity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{normalize_surface, DatasetSplit, Mention};

/// Surface form to lemma table. Lookups are case-folded; unknown tokens map
/// to their case-folded form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaResource {
    table: HashMap<String, String>,
}

impl LemmaResource {
    /// Two tab-separated columns per line, `surface<TAB>lemma`. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((surface, lemma)) = line.split_once('\t') else {
                return Err(Error::parse(name, i + 1, "expected `surface<TAB>lemma`"));
            };
            let (surface, lemma) = (surface.trim(), lemma.trim());
            if surface.is_empty() || lemma.is_empty() {
                return Err(Error::parse(name, i + 1, "empty surface or lemma"));
            }
            table.insert(surface.to_lowercase(), lemma.to_lowercase());
        }
        Ok(LemmaResource { table })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        LemmaResource {
            table: pairs
                .into_iter()
                .map(|(a, b)| (a.as_ref().to_lowercase(), b.as_ref().to_lowercase()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn lemma(&self, token: &str) -> String {
        let folded = token.to_lowercase();
        match self.table.get(&folded) {
            Some(l) => l.clone(),
            None => folded,
        }
    }
}

/// Picks the head token of a mention span.
pub trait HeadFinder: Sync {
    /// Index into `span` of the head token. `span` is never empty.
    fn head(&self, span: &[String]) -> usize;
}

const STOP_WORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "from", "by", "with", "and", "or", "but", "as", "into",
    "onto", "upon", "about", "over", "under", "after", "before", "during", "between", "against", "its", "his", "her",
    "their", "our", "my", "your", "this", "that", "these", "those", "is", "was", "were", "be", "been", "are", "'s",
    "s", "de", "du", "la", "le", "del",
];

/// Rightmost span token that is not a stop word, punctuation or a number;
/// the rightmost token if none qualifies.
#[derive(Debug, Clone, Copy, Default)]
pub struct RightmostContentHead;

fn is_number(tok: &str) -> bool {
    tok.chars().any(|c| c.is_numeric()) && tok.chars().all(|c| c.is_numeric() || matches!(c, '.' | ',' | '-'))
}

fn is_punct(tok: &str) -> bool {
    !tok.chars().any(char::is_alphanumeric)
}

impl HeadFinder for RightmostContentHead {
    fn head(&self, span: &[String]) -> usize {
        span.iter()
            .rposition(|t| {
                let lower = t.to_lowercase();
                !is_punct(t) && !is_number(t) && !STOP_WORDS.contains(&lower.as_str())
            })
            .unwrap_or(span.len() - 1)
    }
}

/// Head lemma under the default head rule.
pub fn head_lemma(mention: &Mention, lemmas: &LemmaResource) -> String {
    head_lemma_with(mention, lemmas, &RightmostContentHead)
}

pub fn head_lemma_with(mention: &Mention, lemmas: &LemmaResource, heads: &dyn HeadFinder) -> String {
    let span = mention.span_tokens();
    lemmas.lemma(&span[heads.head(span)])
}

/// Corpus statistics of one split. Ratios are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub mentions: u64,
    pub clusters: u64,
    pub non_singleton_clusters: u64,
    /// Mean number of distinct clusters a head lemma occurs in.
    pub ambiguity: Option<f64>,
    /// Mean number of distinct head lemmas per non-singleton cluster.
    pub diversity: Option<f64>,
    /// Mean over clusters of mentions per distinct normalized surface string.
    pub same_string: Option<f64>,
}

pub fn compute_stats(split: &DatasetSplit, lemmas: &LemmaResource) -> StatsReport {
    compute_stats_with(split, lemmas, &RightmostContentHead)
}

pub fn compute_stats_with(split: &DatasetSplit, lemmas: &LemmaResource, heads: &dyn HeadFinder) -> StatsReport {
    // clusters keyed by id so that chains split across records still merge
    let mut clusters: BTreeMap<u64, Vec<&Mention>> = BTreeMap::new();
    for m in split.mentions() {
        clusters.entry(m.cluster_id).or_default().push(m);
    }
    let mut lemma_clusters: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
    let mut diversity_sum = 0u64;
    let mut non_singleton = 0u64;
    let mut same_string_sum = 0.0;
    for (&id, ms) in &clusters {
        let cluster_lemmas: BTreeSet<String> = ms.iter().map(|m| head_lemma_with(m, lemmas, heads)).collect();
        if ms.len() > 1 {
            non_singleton += 1;
            diversity_sum += cluster_lemmas.len() as u64;
        }
        for l in cluster_lemmas {
            lemma_clusters.entry(l).or_default().insert(id);
        }
        let strings: BTreeSet<String> = ms.iter().map(|m| normalize_surface(&m.mention_text)).collect();
        same_string_sum += ms.len() as f64 / strings.len() as f64;
    }
    let ratio = |num: f64, den: usize| (den > 0).then(|| num / den as f64);
    let ambiguity_sum: usize = lemma_clusters.values().map(BTreeSet::len).sum();
    StatsReport {
        mentions: split.mention_count() as u64,
        clusters: clusters.len() as u64,
        non_singleton_clusters: non_singleton,
        ambiguity: ratio(ambiguity_sum as f64, lemma_clusters.len()),
        diversity: ratio(diversity_sum as f64, non_singleton as usize),
        same_string: ratio(same_string_sum, clusters.len()),
    }
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

/// Plain-text table with one row per named report.
pub fn stats_table(rows: &[(String, StatsReport)]) -> String {
    let header = [
        "",
        "Mentions",
        "Clusters",
        "Non-Singleton Clusters",
        "Ambiguity",
        "Diversity",
        "Same-String",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|(name, r)| {
            [
                name.clone(),
                r.mentions.to_string(),
                r.clusters.to_string(),
                r.non_singleton_clusters.to_string(),
                fmt_ratio(r.ambiguity),
                fmt_ratio(r.diversity),
                fmt_ratio(r.same_string),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header);
    for r in &body {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}
