//! The CoNLL-2012 column format read by the reference coreference scorer.
//!
//! Only the document markers, the token position and the last column
//! (coreference brackets such as `(3`, `3)`, `(3)|(5`) are interpreted.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{ClusterRecord, Partition};
use crate::error::{Error, Result};
use crate::pipeline::MentionId;

/// A mention as an inclusive range of token lines inside its document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConllMention {
    pub start: usize,
    pub end: usize,
    pub cluster: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllDocument {
    pub name: String,
    pub part: String,
    /// Token column of every token line, in order.
    pub tokens: Vec<String>,
    pub mentions: Vec<ConllMention>,
}

impl ConllDocument {
    /// One token line per mention; the token column carries the mention id
    /// so the file can be read back to ids.
    pub fn from_partition(name: &str, partition: &Partition) -> Self {
        let mut entries: Vec<(MentionId, u64)> = partition
            .clusters()
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&m| (m, i as u64)))
            .collect();
        entries.sort_unstable();
        ConllDocument {
            name: name.to_string(),
            part: "000".into(),
            tokens: entries.iter().map(|(m, _)| m.to_string()).collect(),
            mentions: entries
                .iter()
                .enumerate()
                .map(|(i, &(_, c))| ConllMention {
                    start: i,
                    end: i,
                    cluster: c,
                })
                .collect(),
        }
    }

    /// Single-token mentions whose token is a mention id, as written by
    /// [`ConllDocument::from_partition`].
    pub fn id_records(&self) -> Option<Vec<ClusterRecord>> {
        self.mentions
            .iter()
            .map(|m| {
                if m.start != m.end {
                    return None;
                }
                let id = self.tokens.get(m.start)?.parse().ok()?;
                Some(ClusterRecord {
                    mention_id: id,
                    cluster_id: m.cluster,
                })
            })
            .collect()
    }
}

fn parse_coref(
    field: &str,
    line_no: usize,
    pos: usize,
    open: &mut HashMap<u64, Vec<usize>>,
    out: &mut Vec<ConllMention>,
) -> Result<()> {
    if field == "-" || field == "_" {
        return Ok(());
    }
    for part in field.split('|') {
        let bad = || Error::parse("conll", line_no, format!("bad coreference field `{field}`"));
        let opens = part.starts_with('(');
        let closes = part.ends_with(')');
        let digits = part.trim_start_matches('(').trim_end_matches(')');
        let cluster: u64 = digits.parse().map_err(|_| bad())?;
        match (opens, closes) {
            (true, true) => out.push(ConllMention {
                start: pos,
                end: pos,
                cluster,
            }),
            (true, false) => open.entry(cluster).or_default().push(pos),
            (false, true) => {
                let start = open.get_mut(&cluster).and_then(Vec::pop).ok_or_else(|| {
                    Error::parse(
                        "conll",
                        line_no,
                        format!("closing bracket for {cluster} without an opening one"),
                    )
                })?;
                out.push(ConllMention {
                    start,
                    end: pos,
                    cluster,
                });
            }
            (false, false) => return Err(bad()),
        }
    }
    Ok(())
}

pub fn read_conll(text: &str) -> Result<Vec<ConllDocument>> {
    let mut docs = Vec::new();
    let mut current: Option<(ConllDocument, HashMap<u64, Vec<usize>>)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        if let Some(rest) = line.strip_prefix("#begin document") {
            if current.is_some() {
                return Err(Error::parse("conll", line_no, "nested #begin document"));
            }
            let rest = rest.trim();
            let (name, part) = match rest.split_once(';') {
                Some((n, p)) => (n, p.trim().trim_start_matches("part").trim()),
                None => (rest, ""),
            };
            let name = name.trim().trim_start_matches('(').trim_end_matches(')').to_string();
            current = Some((
                ConllDocument {
                    name,
                    part: part.to_string(),
                    tokens: Vec::new(),
                    mentions: Vec::new(),
                },
                HashMap::new(),
            ));
            continue;
        }
        if line.starts_with("#end document") {
            let (mut doc, open) = current
                .take()
                .ok_or_else(|| Error::parse("conll", line_no, "#end document without #begin"))?;
            if open.values().any(|v| !v.is_empty()) {
                return Err(Error::parse("conll", line_no, "unclosed mention at end of document"));
            }
            doc.mentions.sort_unstable();
            docs.push(doc);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((doc, open)) = current.as_mut() else {
            return Err(Error::parse("conll", line_no, "token line outside a document"));
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        let pos = doc.tokens.len();
        doc.tokens.push(cols.get(3).copied().unwrap_or("-").to_string());
        let coref = cols.last().copied().unwrap_or("-");
        if cols.len() >= 2 {
            parse_coref(coref, line_no, pos, open, &mut doc.mentions)?;
        }
    }
    if current.is_some() {
        return Err(Error::parse("conll", text.lines().count(), "missing #end document"));
    }
    Ok(docs)
}

pub fn write_conll(docs: &[ConllDocument]) -> String {
    let mut out = String::new();
    for doc in docs {
        let _ = writeln!(out, "#begin document ({}); part {}", doc.name, doc.part);
        let mut fields: Vec<Vec<String>> = vec![Vec::new(); doc.tokens.len()];
        // opening brackets of longer mentions come first, closing ones last
        let mut ms = doc.mentions.clone();
        ms.sort_by_key(|m| (m.start, std::cmp::Reverse(m.end), m.cluster));
        for m in &ms {
            if m.start == m.end {
                fields[m.start].push(format!("({})", m.cluster));
            } else {
                fields[m.start].push(format!("({}", m.cluster));
            }
        }
        ms.sort_by_key(|m| (m.end, std::cmp::Reverse(m.start), m.cluster));
        for m in &ms {
            if m.start != m.end {
                fields[m.end].push(format!("{})", m.cluster));
            }
        }
        for (i, tok) in doc.tokens.iter().enumerate() {
            let coref = if fields[i].is_empty() {
                "-".to_string()
            } else {
                fields[i].join("|")
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                doc.name,
                doc.part.parse::<u64>().unwrap_or(0),
                i,
                tok,
                coref
            );
        }
        out.push('\n');
        let _ = writeln!(out, "#end document");
    }
    out
}

/// Partitions from a key file and a response file over the same token
/// layout. Mentions are identified by (document, part, start, end); ids are
/// dense in that order over the union of both files.
pub fn conll_partitions(key: &[ConllDocument], response: &[ConllDocument]) -> Result<(Partition, Partition)> {
    type Span = (String, String, usize, usize);
    let spans = |docs: &[ConllDocument]| -> Vec<(Span, (String, String, u64))> {
        docs.iter()
            .flat_map(|d| {
                d.mentions.iter().map(move |m| {
                    (
                        (d.name.clone(), d.part.clone(), m.start, m.end),
                        (d.name.clone(), d.part.clone(), m.cluster),
                    )
                })
            })
            .collect()
    };
    let (ks, rs) = (spans(key), spans(response));
    let mut ids: BTreeMap<&Span, MentionId> = BTreeMap::new();
    for (s, _) in ks.iter().chain(rs.iter()) {
        ids.insert(s, 0);
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i as MentionId;
    }
    let build = |list: &[(Span, (String, String, u64))]| {
        Partition::from_assignments(list.iter().map(|(s, c)| (ids[s], c.clone())))
    };
    Ok((build(&ks)?, build(&rs)?))
}
