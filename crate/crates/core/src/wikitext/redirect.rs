use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use tracing::warn;

use super::title::normalize_title;

pub const MAX_REDIRECT_DEPTH: usize = 8;

fn redirect_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*#redirect\s*:?\s*\[\[([^\]|]*)").unwrap())
}

/// Target of a `#REDIRECT [[...]]` directive at the start of the wikitext.
pub fn redirect_directive_target(wikitext: &str) -> Option<String> {
    let caps = redirect_re().captures(wikitext)?;
    normalize_title(&caps[1])
}

/// Final-target map for every redirect title.
///
/// Chains are followed up to [`MAX_REDIRECT_DEPTH`] hops. Titles caught in a
/// cycle, or whose chain is longer than the cap, are left out of the map.
pub fn resolve_redirects<'a, I>(redirects: I) -> BTreeMap<String, String>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let edges: BTreeMap<&str, &str> = redirects.into_iter().collect();
    let mut resolved = BTreeMap::new();
    let mut unresolvable = BTreeSet::new();

    for &start in edges.keys() {
        let mut current = start;
        let mut seen = vec![start];
        let mut ok = false;
        for _ in 0..MAX_REDIRECT_DEPTH {
            let next = edges[current];
            if !edges.contains_key(next) {
                current = next;
                ok = true;
                break;
            }
            if seen.contains(&next) {
                break;
            }
            seen.push(next);
            current = next;
        }
        if ok {
            resolved.insert(start.to_string(), current.to_string());
        } else {
            unresolvable.insert(start);
        }
    }
    if !unresolvable.is_empty() {
        warn!(count = unresolvable.len(), titles = ?unresolvable, "redirects excluded (cycle or chain deeper than cap)");
    }
    resolved
}
