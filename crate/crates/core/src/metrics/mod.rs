//! Coreference evaluation: MUC, B³, CEAF-e and their CoNLL average over
//! gold mentions.

mod assignment;
mod conll_format;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use assignment::{max_weight_assignment, Assignment};
pub use conll_format::{conll_partitions, read_conll, write_conll, ConllDocument, ConllMention};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pipeline::MentionId;

/// Disjoint, non-empty clusters of mention ids. Stored canonically: members
/// sorted, clusters ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<MentionId>>", into = "Vec<Vec<MentionId>>")]
pub struct Partition {
    clusters: Vec<Vec<MentionId>>,
}

impl TryFrom<Vec<Vec<MentionId>>> for Partition {
    type Error = Error;

    fn try_from(clusters: Vec<Vec<MentionId>>) -> Result<Self> {
        Partition::new(clusters)
    }
}

impl From<Partition> for Vec<Vec<MentionId>> {
    fn from(p: Partition) -> Self {
        p.clusters
    }
}

impl Partition {
    pub fn new(clusters: Vec<Vec<MentionId>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(clusters.len());
        for mut c in clusters {
            if c.is_empty() {
                return Err(Error::InvalidPartition("empty cluster".into()));
            }
            c.sort_unstable();
            for &m in &c {
                if !seen.insert(m) {
                    return Err(Error::InvalidPartition(format!("mention {m} appears twice")));
                }
            }
            out.push(c);
        }
        out.sort_unstable_by_key(|c| c[0]);
        Ok(Partition { clusters: out })
    }

    /// Groups mentions by their cluster label.
    pub fn from_assignments<I, K>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MentionId, K)>,
        K: Ord,
    {
        let mut groups: BTreeMap<K, Vec<MentionId>> = BTreeMap::new();
        for (m, k) in pairs {
            groups.entry(k).or_default().push(m);
        }
        Partition::new(groups.into_values().collect())
    }

    pub fn singletons<I: IntoIterator<Item = MentionId>>(ids: I) -> Result<Self> {
        Partition::new(ids.into_iter().map(|m| vec![m]).collect())
    }

    pub fn clusters(&self) -> &[Vec<MentionId>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn mention_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn universe(&self) -> BTreeSet<MentionId> {
        self.clusters.iter().flatten().copied().collect()
    }

    /// Mention id to cluster index.
    pub fn index(&self) -> HashMap<MentionId, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&m| (m, i)))
            .collect()
    }

    /// True if every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let idx = coarser.index();
        self.clusters.iter().all(|c| {
            let first = idx.get(&c[0]);
            first.is_some() && c.iter().all(|m| idx.get(m) == first)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFlag {
    /// The recall denominator was zero; recall reported as 0.
    RecallUndefined,
    /// The precision denominator was zero; precision reported as 0.
    PrecisionUndefined,
}

impl ScoreFlag {
    fn swapped(self) -> Self {
        match self {
            ScoreFlag::RecallUndefined => ScoreFlag::PrecisionUndefined,
            ScoreFlag::PrecisionUndefined => ScoreFlag::RecallUndefined,
        }
    }
}

/// Recall, precision and F1 as fractions in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<ScoreFlag>,
}

impl MetricScore {
    fn from_ratios(r_num: f64, r_den: f64, p_num: f64, p_den: f64) -> Self {
        let mut flags = Vec::new();
        let recall = if r_den > 0.0 {
            r_num / r_den
        } else {
            flags.push(ScoreFlag::RecallUndefined);
            0.0
        };
        let precision = if p_den > 0.0 {
            p_num / p_den
        } else {
            flags.push(ScoreFlag::PrecisionUndefined);
            0.0
        };
        MetricScore {
            recall,
            precision,
            f1: f1(recall, precision),
            flags,
        }
    }

    /// The same score with the roles of key and response exchanged.
    pub fn swapped(&self) -> Self {
        let mut flags: Vec<ScoreFlag> = self.flags.iter().map(|f| f.swapped()).collect();
        flags.sort_by_key(|f| *f as u8);
        MetricScore {
            recall: self.precision,
            precision: self.recall,
            f1: self.f1,
            flags,
        }
    }
}

pub fn f1(recall: f64, precision: f64) -> f64 {
    if recall + precision > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Number of pieces `cluster` is cut into by `other`; mentions absent from
/// `other` count as their own piece.
fn pieces(cluster: &[MentionId], other: &HashMap<MentionId, usize>) -> usize {
    let mut seen = BTreeSet::new();
    let mut missing = 0;
    for m in cluster {
        match other.get(m) {
            Some(&i) => {
                seen.insert(i);
            }
            None => missing += 1,
        }
    }
    seen.len() + missing
}

fn muc_side(a: &Partition, b_index: &HashMap<MentionId, usize>) -> (f64, f64) {
    let mut num = 0usize;
    let mut den = 0usize;
    for c in a.clusters() {
        num += c.len() - pieces(c, b_index);
        den += c.len() - 1;
    }
    (num as f64, den as f64)
}

/// Link-based MUC.
pub fn muc(key: &Partition, response: &Partition) -> MetricScore {
    let (rn, rd) = muc_side(key, &response.index());
    let (pn, pd) = muc_side(response, &key.index());
    MetricScore::from_ratios(rn, rd, pn, pd)
}

fn b_cubed_side(a: &Partition, b: &Partition) -> (f64, f64) {
    let b_index = b.index();
    let mut num = 0.0;
    let mut total = 0usize;
    for c in a.clusters() {
        // overlap counts with each cluster of b
        let mut overlap: BTreeMap<usize, usize> = BTreeMap::new();
        for m in c {
            if let Some(&i) = b_index.get(m) {
                *overlap.entry(i).or_default() += 1;
            }
        }
        // each mention in the intersection contributes |c ∩ b|/|c|
        let sq: usize = overlap.values().map(|&k| k * k).sum();
        num += sq as f64 / c.len() as f64;
        total += c.len();
    }
    (num, total as f64)
}

/// Mention-based B³.
pub fn b_cubed(key: &Partition, response: &Partition) -> MetricScore {
    let (rn, rd) = b_cubed_side(key, response);
    let (pn, pd) = b_cubed_side(response, key);
    MetricScore::from_ratios(rn, rd, pn, pd)
}

/// φ4 similarity between two clusters given their overlap.
fn phi4(overlap: usize, a: usize, b: usize) -> f64 {
    2.0 * overlap as f64 / (a + b) as f64
}

/// Total φ4 of the optimal one-to-one alignment between key and response
/// clusters. The overlap graph is split into connected components, each
/// solved on its own.
pub fn ceaf_e_similarity(key: &Partition, response: &Partition) -> f64 {
    let r_index = response.index();
    let nk = key.len();
    // union-find over key clusters (0..nk) and response clusters (nk..)
    let mut parent: Vec<usize> = (0..nk + response.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut overlaps: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (ki, c) in key.clusters().iter().enumerate() {
        for m in c {
            if let Some(&ri) = r_index.get(m) {
                *overlaps.entry((ki, ri)).or_default() += 1;
                let (a, b) = (find(&mut parent, ki), find(&mut parent, nk + ri));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut components: BTreeMap<usize, (BTreeSet<usize>, BTreeSet<usize>)> = BTreeMap::new();
    for &(ki, ri) in overlaps.keys() {
        let root = find(&mut parent, ki);
        let comp = components.entry(root).or_default();
        comp.0.insert(ki);
        comp.1.insert(ri);
    }
    let mut total = 0.0;
    for (ks, rs) in components.values() {
        let weights: Vec<Vec<f64>> = ks
            .iter()
            .map(|&ki| {
                rs.iter()
                    .map(|&ri| {
                        let o = overlaps.get(&(ki, ri)).copied().unwrap_or(0);
                        phi4(o, key.clusters()[ki].len(), response.clusters()[ri].len())
                    })
                    .collect()
            })
            .collect();
        total += max_weight_assignment(&weights).total;
    }
    total
}

/// Entity-based CEAF with φ4.
pub fn ceaf_e(key: &Partition, response: &Partition) -> MetricScore {
    let sim = ceaf_e_similarity(key, response);
    MetricScore::from_ratios(sim, key.len() as f64, sim, response.len() as f64)
}

/// All three metrics plus their mean F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub muc: MetricScore,
    pub b_cubed: MetricScore,
    pub ceaf_e: MetricScore,
    pub conll_f1: f64,
}

pub fn conll(muc: MetricScore, b_cubed: MetricScore, ceaf_e: MetricScore) -> EvalReport {
    let conll_f1 = (muc.f1 + b_cubed.f1 + ceaf_e.f1) / 3.0;
    EvalReport {
        muc,
        b_cubed,
        ceaf_e,
        conll_f1,
    }
}

/// CoNLL F1 from three F1 values given as percentages, rounded to one
/// decimal as in published tables.
pub fn conll_from_percentages(muc_f1: f64, b_cubed_f1: f64, ceaf_e_f1: f64) -> f64 {
    round1((muc_f1 + b_cubed_f1 + ceaf_e_f1) / 3.0)
}

/// Rounds half away from zero at one decimal, tolerating binary noise.
pub fn round1(x: f64) -> f64 {
    let scaled = x * 10.0;
    let nudged = scaled + scaled.signum() * 1e-9;
    nudged.round() / 10.0
}

fn describe_ids(ids: &BTreeSet<MentionId>) -> String {
    let shown: Vec<String> = ids.iter().take(10).map(|m| m.to_string()).collect();
    let more = if ids.len() > 10 {
        format!(" and {} more", ids.len() - 10)
    } else {
        String::new()
    };
    format!("{}{more}", shown.join(", "))
}

/// Scores `response` against `key`. Both must cover the same mentions.
pub fn evaluate(key: &Partition, response: &Partition) -> Result<EvalReport> {
    let (ku, ru) = (key.universe(), response.universe());
    if ku != ru {
        let missing: BTreeSet<MentionId> = ku.difference(&ru).copied().collect();
        let extra: BTreeSet<MentionId> = ru.difference(&ku).copied().collect();
        let mut msg = String::new();
        if !missing.is_empty() {
            let _ = write!(msg, "missing from response: {}", describe_ids(&missing));
        }
        if !extra.is_empty() {
            if !msg.is_empty() {
                msg.push_str("; ");
            }
            let _ = write!(msg, "not in key: {}", describe_ids(&extra));
        }
        return Err(Error::UniverseMismatch(msg));
    }
    Ok(conll(muc(key, response), b_cubed(key, response), ceaf_e(key, response)))
}

/// Evaluates many `(key, response)` pairs; output order follows input.
pub fn evaluate_many(exec: Exec, pairs: &[(Partition, Partition)]) -> Vec<Result<EvalReport>> {
    exec.map(pairs, |(k, r)| evaluate(k, r))
}

fn pct(x: f64) -> String {
    format!("{:.1}", round1(x * 100.0))
}

/// Table with R, P and F1 per metric and the CoNLL F1, in percent.
pub fn report_table(rows: &[(String, EvalReport)]) -> String {
    let mut body = vec![vec![
        String::new(),
        "MUC R".into(),
        "MUC P".into(),
        "MUC F1".into(),
        "B3 R".into(),
        "B3 P".into(),
        "B3 F1".into(),
        "CEAF-e R".into(),
        "CEAF-e P".into(),
        "CEAF-e F1".into(),
        "CoNLL F1".into(),
    ]];
    for (name, r) in rows {
        let mut row = vec![name.clone()];
        for s in [&r.muc, &r.b_cubed, &r.ceaf_e] {
            row.extend([pct(s.recall), pct(s.precision), pct(s.f1)]);
        }
        row.push(pct(r.conll_f1));
        body.push(row);
    }
    let widths: Vec<usize> = (0..body[0].len())
        .map(|c| body.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &body {
        let cells: Vec<String> = row
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
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// One line of a native clustering file. Dataset mention records also
/// parse as this (extra fields are ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub mention_id: MentionId,
    pub cluster_id: u64,
}

pub fn partition_from_records<I: IntoIterator<Item = ClusterRecord>>(records: I) -> Result<Partition> {
    Partition::from_assignments(records.into_iter().map(|r| (r.mention_id, r.cluster_id)))
}

/// Records with cluster ids numbered 0.. in canonical cluster order.
pub fn partition_to_records(p: &Partition) -> Vec<ClusterRecord> {
    let mut out: Vec<ClusterRecord> = p
        .clusters()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            c.iter().map(move |&m| ClusterRecord {
                mention_id: m,
                cluster_id: i as u64,
            })
        })
        .collect();
    out.sort_by_key(|r| r.mention_id);
    out
}

pub fn read_partition_records(path: &Path) -> Result<Partition> {
    partition_from_records(crate::io::read_jsonl::<ClusterRecord>(path)?)
}
