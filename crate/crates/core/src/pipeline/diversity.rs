use std::collections::HashMap;

use super::types::CoreferenceChain;

pub const DEFAULT_MAX_IDENTICAL: usize = 4;

/// Case-folded, whitespace-collapsed surface string.
pub fn normalize_surface(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Caps the number of mentions sharing one normalized surface string inside
/// each chain. Survivors are the first `max_identical` in mention order
/// (corpus order). Chains keep their order; none are dropped.
pub fn control_diversity(chains: Vec<CoreferenceChain>, max_identical: usize) -> Vec<CoreferenceChain> {
    assert!(max_identical >= 1, "max_identical must be at least 1");
    chains
        .into_iter()
        .map(|mut chain| {
            chain.mentions.sort_by_key(|m| m.mention_id);
            let mut seen: HashMap<String, usize> = HashMap::new();
            chain.mentions.retain(|m| {
                let n = seen.entry(normalize_surface(&m.mention_text)).or_insert(0);
                *n += 1;
                *n <= max_identical
            });
            chain
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::types::{Mention, MentionMetadata};

    pub(crate) fn chain_of(texts: &[&str]) -> CoreferenceChain {
        CoreferenceChain {
            cluster_id: 0,
            pivot_title: "P".into(),
            mentions: texts
                .iter()
                .enumerate()
                .map(|(i, t)| Mention {
                    mention_id: i as u64,
                    tokens: t.split(' ').map(String::from).collect(),
                    span: (0, t.split(' ').count() - 1),
                    mention_text: t.to_string(),
                    source_title: format!("S{i}"),
                    target_title: "P".into(),
                    cluster_id: 0,
                    metadata: MentionMetadata {
                        source_url: String::new(),
                        target_url: String::new(),
                        infobox_type: "awards".into(),
                    },
                })
                .collect(),
        }
    }

    fn texts(c: &CoreferenceChain) -> Vec<&str> {
        c.mentions.iter().map(|m| m.mention_text.as_str()).collect()
    }

    #[test]
    fn six_identical_keep_four() {
        let out = control_diversity(vec![chain_of(&["the Oscars"; 6])], 4);
        assert_eq!(out[0].mentions.len(), 4);
        let ids: Vec<u64> = out[0].mentions.iter().map(|m| m.mention_id).collect();
        assert_eq!(ids, [0, 1, 2, 3]);
    }

    #[test]
    fn exactly_four_unchanged() {
        let c = chain_of(&["the Oscars"; 4]);
        assert_eq!(control_diversity(vec![c.clone()], 4), vec![c]);
    }

    #[test]
    fn per_string_cap() {
        let out = control_diversity(vec![chain_of(&["a", "a", "a", "a", "a", "b", "b"])], 4);
        assert_eq!(texts(&out[0]), ["a", "a", "a", "a", "b", "b"]);
    }

    #[test]
    fn normalization_folds_case_and_space() {
        let out = control_diversity(vec![chain_of(&["The Oscars", "the  oscars", "THE OSCARS"])], 2);
        assert_eq!(out[0].mentions.len(), 2);
    }
}
