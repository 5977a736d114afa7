use std::collections::BTreeSet;
use std::path::Path;

use super::types::{EventRegistry, PivotInfo};
use crate::error::{Error, Result};
use crate::wikitext::{normalize_infobox_type, ParsedPage};

/// Infobox types whose pages denote events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allowlist(BTreeSet<String>);

impl Allowlist {
    /// One type per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let types: BTreeSet<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .map(normalize_infobox_type)
            .filter(|t| !t.is_empty())
            .collect();
        if types.is_empty() {
            return Err(Error::Config("infobox allowlist is empty".into()));
        }
        Ok(Allowlist(types))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_types<I, S>(types: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: Vec<String> = types.into_iter().map(|s| s.as_ref().to_string()).collect();
        Self::parse(&joined.join("\n"))
    }

    pub fn contains(&self, infobox_type: &str) -> bool {
        self.0.contains(infobox_type)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// Registry of pages whose infobox type is allowlisted. Cluster ids are
/// assigned densely in title order.
pub fn collect_pivots<'a, I>(pages: I, allowlist: &Allowlist) -> EventRegistry
where
    I: IntoIterator<Item = &'a ParsedPage>,
{
    registry_from_types(
        pages
            .into_iter()
            .filter_map(|p| p.infobox_type.as_deref().map(|t| (p.title.as_str(), t))),
        allowlist,
    )
}

/// Same as [`collect_pivots`] but from `(title, infobox_type)` pairs.
pub fn registry_from_types<'a, I>(pages: I, allowlist: &Allowlist) -> EventRegistry
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut chosen: Vec<(&str, &str)> = pages.into_iter().filter(|(_, t)| allowlist.contains(t)).collect();
    chosen.sort();
    chosen.dedup_by(|a, b| a.0 == b.0);
    let pivots = chosen
        .into_iter()
        .enumerate()
        .map(|(i, (title, t))| {
            (
                title.to_string(),
                PivotInfo {
                    cluster_id: i as u64,
                    infobox_type: t.to_string(),
                },
            )
        })
        .collect();
    EventRegistry { pivots }
}
