use std::collections::BTreeMap;

use tracing::debug;

use super::tokenize::{detokenize, tokenize, tokens_covering};
use super::types::{EventRegistry, Mention, MentionMetadata};
use crate::exec::Exec;
use crate::wikitext::{title_to_url_path, ParsedPage};

/// A mention still attached to where it was found. The location is needed
/// by the context and NE filters and is dropped when the dataset is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatedMention {
    pub mention: Mention,
    pub paragraph_index: usize,
    /// Char range of the mention's tokens in the paragraph text.
    pub char_span: (usize, usize),
    /// Char offset of the anchor itself, for ordering.
    pub anchor_start: usize,
    /// The paragraph text the tokens came from.
    pub context: String,
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    /// Page URL prefix, e.g. `https://en.wikipedia.org/wiki/`.
    pub url_base: String,
    pub follow_redirects: bool,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            url_base: "https://en.wikipedia.org/wiki/".into(),
            follow_redirects: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CollectCounts {
    pub links_seen: u64,
    pub boilerplate_links: u64,
    pub self_links: u64,
    pub bad_offsets: u64,
}

impl CollectCounts {
    fn add(&mut self, o: &CollectCounts) {
        self.links_seen += o.links_seen;
        self.boilerplate_links += o.boilerplate_links;
        self.self_links += o.self_links;
        self.bad_offsets += o.bad_offsets;
    }
}

/// Mentions on one page, with `mention_id` left at 0.
pub fn page_mentions(
    page: &ParsedPage,
    registry: &EventRegistry,
    redirects: &BTreeMap<String, String>,
    opts: &CollectOptions,
) -> (Vec<LocatedMention>, CollectCounts) {
    let mut out = Vec::new();
    let mut counts = CollectCounts::default();
    let mut token_cache: BTreeMap<usize, Vec<super::tokenize::Token>> = BTreeMap::new();

    for link in &page.links {
        counts.links_seen += 1;
        let target = if opts.follow_redirects {
            redirects.get(&link.target_title).unwrap_or(&link.target_title)
        } else {
            &link.target_title
        };
        let Some(pivot) = registry.get(target) else {
            continue;
        };
        let Some(paragraph) = page.paragraphs.get(link.paragraph_index) else {
            counts.bad_offsets += 1;
            debug!(page = %page.title, "link references a missing paragraph");
            continue;
        };
        if paragraph.is_boilerplate {
            counts.boilerplate_links += 1;
            continue;
        }
        if *target == page.title {
            counts.self_links += 1;
            continue;
        }
        let tokens = token_cache
            .entry(link.paragraph_index)
            .or_insert_with(|| tokenize(&paragraph.text));
        let (a_start, a_end) = link.anchor_char_span;
        let Some((first, last)) = tokens_covering(tokens, a_start, a_end) else {
            counts.bad_offsets += 1;
            debug!(page = %page.title, anchor = %link.anchor_text, "anchor span outside paragraph tokens");
            continue;
        };
        let words: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
        let mention_text = detokenize(&words[first..=last]);
        out.push(LocatedMention {
            mention: Mention {
                mention_id: 0,
                tokens: words,
                span: (first, last),
                mention_text,
                source_title: page.title.clone(),
                target_title: target.clone(),
                cluster_id: pivot.cluster_id,
                metadata: MentionMetadata {
                    source_url: format!("{}{}", opts.url_base, title_to_url_path(&page.title)),
                    target_url: format!("{}{}", opts.url_base, title_to_url_path(target)),
                    infobox_type: pivot.infobox_type.clone(),
                },
            },
            paragraph_index: link.paragraph_index,
            char_span: (tokens[first].start, tokens[last].end),
            anchor_start: a_start,
            context: paragraph.text.clone(),
        });
    }
    (out, counts)
}

/// Collects mentions across pages in parallel, then sorts them into corpus
/// order (source title, paragraph, anchor offset). `mention_id`s are not
/// assigned here; see [`assign_ids`].
pub fn collect_mentions(
    exec: Exec,
    pages: &[ParsedPage],
    registry: &EventRegistry,
    redirects: &BTreeMap<String, String>,
    opts: &CollectOptions,
) -> (Vec<LocatedMention>, CollectCounts) {
    let per_page = exec.map(pages, |p| page_mentions(p, registry, redirects, opts));
    let mut all = Vec::new();
    let mut counts = CollectCounts::default();
    for (ms, c) in per_page {
        all.extend(ms);
        counts.add(&c);
    }
    sort_corpus_order(&mut all);
    (all, counts)
}

pub fn sort_corpus_order(mentions: &mut [LocatedMention]) {
    mentions.sort_by(|a, b| {
        (
            &a.mention.source_title,
            a.paragraph_index,
            a.anchor_start,
            &a.mention.target_title,
        )
            .cmp(&(
                &b.mention.source_title,
                b.paragraph_index,
                b.anchor_start,
                &b.mention.target_title,
            ))
    });
}

/// Dense ids in the current order, starting at 0.
pub fn assign_ids(mentions: &mut [LocatedMention]) {
    for (i, m) in mentions.iter_mut().enumerate() {
        m.mention.mention_id = i as u64;
    }
}
