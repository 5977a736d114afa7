//! Mention-level filters. Each returns `(kept, removed)` and never adds
//! mentions.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::mentions::LocatedMention;
use crate::error::{Error, Result};
use crate::wikitext::normalize_title;

pub const DEFAULT_MIN_CONTEXT_TOKENS: usize = 5;

/// Tag pairs such as `<div>..</div>` and brace-quoted key/value runs such as
/// `{"key": ...` left in the plain text.
pub const DEFAULT_BOILERPLATE_PATTERNS: &[&str] = &[
    r"<[A-Za-z][A-Za-z0-9]*(\s[^<>]*)?>[^<]*</[A-Za-z][A-Za-z0-9]*\s*>",
    r#"\{\s*"[^"]*"\s*:"#,
];

/// Named-entity labels whose mentions denote event arguments rather than the
/// event itself.
pub const DEFAULT_BLOCKED_LABELS: &[&str] = &["PERSON", "GPE", "LOC", "DATE", "NORP"];

#[derive(Debug, Clone)]
pub struct ContextFilter {
    pub min_context_tokens: usize,
    pub boilerplate_patterns: Vec<Regex>,
}

impl Default for ContextFilter {
    fn default() -> Self {
        ContextFilter::new(DEFAULT_MIN_CONTEXT_TOKENS, DEFAULT_BOILERPLATE_PATTERNS).unwrap()
    }
}

impl ContextFilter {
    pub fn new<S: AsRef<str>>(min_context_tokens: usize, patterns: &[S]) -> Result<Self> {
        let boilerplate_patterns = patterns
            .iter()
            .map(|p| Regex::new(p.as_ref()).map_err(|e| Error::Config(format!("bad boilerplate pattern: {e}"))))
            .collect::<Result<_>>()?;
        Ok(ContextFilter {
            min_context_tokens,
            boilerplate_patterns,
        })
    }

    pub fn lacks_context(&self, m: &LocatedMention) -> bool {
        let span_len = m.mention.span.1 - m.mention.span.0 + 1;
        m.mention.tokens.len() - span_len < self.min_context_tokens
    }

    pub fn has_boilerplate_code(&self, m: &LocatedMention) -> bool {
        self.boilerplate_patterns.iter().any(|re| re.is_match(&m.context))
    }

    pub fn apply(&self, mentions: Vec<LocatedMention>) -> (Vec<LocatedMention>, Vec<LocatedMention>) {
        mentions
            .into_iter()
            .partition(|m| !self.lacks_context(m) && !self.has_boilerplate_code(m))
    }
}

/// One standoff named-entity record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerRecord {
    pub source_title: String,
    pub paragraph_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NerSpan {
    start: usize,
    end: usize,
    label: String,
}

/// Named-entity annotations keyed by (source title, paragraph index).
#[derive(Debug, Clone, Default)]
pub struct NerAnnotations {
    spans: HashMap<(String, usize), Vec<NerSpan>>,
}

impl NerAnnotations {
    pub fn from_records<I: IntoIterator<Item = NerRecord>>(records: I) -> Self {
        let mut spans: HashMap<(String, usize), Vec<NerSpan>> = HashMap::new();
        for r in records {
            let Some(title) = normalize_title(&r.source_title) else {
                continue;
            };
            if r.char_end <= r.char_start {
                continue;
            }
            spans.entry((title, r.paragraph_index)).or_default().push(NerSpan {
                start: r.char_start,
                end: r.char_end,
                label: r.label,
            });
        }
        NerAnnotations { spans }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_records(crate::io::read_jsonl::<NerRecord>(path)?))
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Source titles annotated but absent from `known`; logged and ignored.
    pub fn unknown_documents(&self, known: &BTreeSet<String>) -> BTreeSet<String> {
        let unknown: BTreeSet<String> = self
            .spans
            .keys()
            .filter(|(t, _)| !known.contains(t))
            .map(|(t, _)| t.clone())
            .collect();
        if !unknown.is_empty() {
            warn!(
                count = unknown.len(),
                "NE annotations reference unknown documents; ignored"
            );
        }
        unknown
    }

    /// Label of a blocked annotation covering at least half of `span`.
    pub fn blocking_label(
        &self,
        source_title: &str,
        paragraph_index: usize,
        span: (usize, usize),
        blocked: &BTreeSet<String>,
    ) -> Option<&str> {
        let len = span.1.saturating_sub(span.0);
        if len == 0 {
            return None;
        }
        self.spans
            .get(&(source_title.to_string(), paragraph_index))?
            .iter()
            .filter(|s| blocked.contains(&s.label))
            .find(|s| {
                let overlap = s.end.min(span.1).saturating_sub(s.start.max(span.0));
                2 * overlap >= len
            })
            .map(|s| s.label.as_str())
    }
}

pub fn default_blocked_labels() -> BTreeSet<String> {
    DEFAULT_BLOCKED_LABELS.iter().map(|s| s.to_string()).collect()
}

/// Removes mentions at least half covered by a blocked-label annotation.
pub fn filter_by_ner(
    mentions: Vec<LocatedMention>,
    ner: &NerAnnotations,
    blocked: &BTreeSet<String>,
) -> (Vec<LocatedMention>, Vec<LocatedMention>) {
    mentions.into_iter().partition(|m| {
        ner.blocking_label(&m.mention.source_title, m.paragraph_index, m.char_span, blocked)
            .is_none()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::tokenize::{detokenize, tokenize, tokens_covering};
    use crate::pipeline::types::{Mention, MentionMetadata};

    /// Mention over the first occurrence of `anchor` in `context`.
    fn located(source: &str, para: usize, context: &str, anchor: &str) -> LocatedMention {
        let toks = tokenize(context);
        let byte = context.find(anchor).unwrap();
        let start = context[..byte].chars().count();
        let end = start + anchor.chars().count();
        let (f, l) = tokens_covering(&toks, start, end).unwrap();
        let words: Vec<String> = toks.iter().map(|t| t.text.clone()).collect();
        LocatedMention {
            mention: Mention {
                mention_id: 0,
                mention_text: detokenize(&words[f..=l]),
                tokens: words,
                span: (f, l),
                source_title: source.into(),
                target_title: "P".into(),
                cluster_id: 0,
                metadata: MentionMetadata {
                    source_url: String::new(),
                    target_url: String::new(),
                    infobox_type: "x".into(),
                },
            },
            paragraph_index: para,
            char_span: (toks[f].start, toks[l].end),
            anchor_start: start,
            context: context.into(),
        }
    }

    fn rec(source: &str, para: usize, start: usize, end: usize, label: &str) -> NerRecord {
        NerRecord {
            source_title: source.into(),
            paragraph_index: para,
            char_start: start,
            char_end: end,
            label: label.into(),
        }
    }

    #[test]
    fn date_mention_removed() {
        let ctx = "He was kidnapped during the raid in July 1755 by warriors.";
        let m = located("S", 0, ctx, "July 1755");
        let ner = NerAnnotations::from_records([rec("S", 0, m.char_span.0, m.char_span.1, "DATE")]);
        let (kept, removed) = filter_by_ner(vec![m], &ner, &default_blocked_labels());
        assert!(kept.is_empty());
        assert_eq!(removed.len(), 1);
    }

    #[test]
    fn untagged_kept() {
        let ctx = "He was on board in 1967 when a fatal fire broke out on deck.";
        let m = located("S", 0, ctx, "fatal fire");
        let ner = NerAnnotations::from_records([rec("S", 0, 19, 23, "DATE")]);
        let (kept, _) = filter_by_ner(vec![m], &ner, &default_blocked_labels());
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn coverage_threshold_is_half() {
        let ctx = "the abcd efgh event was widely reported by many people";
        let m = located("S", 0, ctx, "abcd efgh");
        // mention span = chars 4..13 (9 chars)
        assert_eq!(m.char_span, (4, 13));
        let blocked = default_blocked_labels();
        let four = NerAnnotations::from_records([rec("S", 0, 4, 8, "GPE")]);
        assert!(four.blocking_label("S", 0, m.char_span, &blocked).is_none());
        let five = NerAnnotations::from_records([rec("S", 0, 4, 9, "GPE")]);
        assert_eq!(five.blocking_label("S", 0, m.char_span, &blocked), Some("GPE"));
        // non-blocked label never removes
        let org = NerAnnotations::from_records([rec("S", 0, 0, 40, "ORG")]);
        assert!(org.blocking_label("S", 0, m.char_span, &blocked).is_none());
        // other paragraph does not apply
        assert!(five.blocking_label("S", 1, m.char_span, &blocked).is_none());
    }

    #[test]
    fn ten_mentions_three_blocked() {
        let ctx = "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima";
        let words: Vec<&str> = ctx.split(' ').collect();
        let mentions: Vec<LocatedMention> = (0..10).map(|i| located("Doc", i, ctx, words[i])).collect();
        let records: Vec<NerRecord> = [1usize, 4, 7]
            .iter()
            .zip(["PERSON", "LOC", "NORP"])
            .map(|(&i, label)| {
                let m = &mentions[i];
                rec("Doc", i, m.char_span.0, m.char_span.1, label)
            })
            .chain([rec("Doc", 2, 0, 5, "ORG"), rec("Unknown doc", 0, 0, 5, "DATE")])
            .collect();
        let ner = NerAnnotations::from_records(records);
        let known = BTreeSet::from(["Doc".to_string()]);
        assert_eq!(ner.unknown_documents(&known).len(), 1);
        let (kept, removed) = filter_by_ner(mentions, &ner, &default_blocked_labels());
        assert_eq!(kept.len(), 7);
        assert_eq!(removed.len(), 3);
    }

    #[test]
    fn context_filter() {
        let f = ContextFilter::default();
        let short = located("S", 0, "the big quake struck", "big quake");
        assert!(f.lacks_context(&short));
        let ok = located(
            "S",
            0,
            "in 2010 the big quake struck the capital city hard",
            "big quake",
        );
        assert!(!f.lacks_context(&ok));
        let html = located(
            "S",
            0,
            "the quake <div class=\"x\">struck</div> the capital city hard today",
            "quake",
        );
        assert!(f.has_boilerplate_code(&html));
        let json = located(
            "S",
            0,
            "the quake {\"type\": \"event\"} struck the capital city hard",
            "quake",
        );
        assert!(f.has_boilerplate_code(&json));
        let (kept, removed) = f.apply(vec![short, ok, html, json]);
        assert_eq!((kept.len(), removed.len()), (1, 3));
    }
}
