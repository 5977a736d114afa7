//! System clusterings: same-head-lemma grouping and average-link
//! agglomerative clustering over pairwise scores.

mod agglomerative;
mod scores;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use agglomerative::{clusters_after, cut_len, merge_sequence, quantize, Link, Merge};
pub use scores::{ScoreMatrix, SYMMETRY_TOLERANCE};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metrics::{evaluate, Partition};
use crate::pipeline::{Mention, MentionId};
use crate::stats::{head_lemma_with, HeadFinder, LemmaResource, RightmostContentHead};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Default tuning grid: 0.00, 0.05, ..., 1.00.
pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    /// Merging stops once the best average link is below this.
    pub threshold: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores_digest: Option<String>,
    /// Score assumed for pairs missing from a sparse score file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_score: Option<f64>,
    /// Number of groups clustering was restricted to, when restricted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub partition: Partition,
    pub provenance: Provenance,
}

/// Groups mentions with equal head lemmas.
pub fn lemma_baseline(mentions: &[Mention], lemmas: &LemmaResource) -> Result<Clustering> {
    lemma_baseline_with(mentions, lemmas, &RightmostContentHead)
}

pub fn lemma_baseline_with(mentions: &[Mention], lemmas: &LemmaResource, heads: &dyn HeadFinder) -> Result<Clustering> {
    let partition = Partition::from_assignments(
        mentions
            .iter()
            .map(|m| (m.mention_id, head_lemma_with(m, lemmas, heads))),
    )?;
    Ok(Clustering {
        partition,
        provenance: Provenance {
            method: "lemma-baseline".into(),
            threshold: None,
            scores_digest: None,
            default_score: None,
            groups: None,
        },
    })
}

fn partition_of(scores: &ScoreMatrix, merges: &[Merge]) -> Partition {
    let ids = scores.ids();
    let clusters = clusters_after(scores.len(), merges)
        .into_iter()
        .map(|c| c.into_iter().map(|i| ids[i]).collect())
        .collect();
    Partition::new(clusters).expect("clusters from a merge sequence are disjoint")
}

/// Average-link agglomerative clustering stopped at `cfg.threshold`.
pub fn agglomerate(scores: &ScoreMatrix, cfg: &ClusteringConfig, exec: Exec) -> Clustering {
    let merges = merge_sequence(scores, Some(cfg.threshold), exec);
    Clustering {
        partition: partition_of(scores, &merges),
        provenance: Provenance {
            method: "average-link".into(),
            threshold: Some(cfg.threshold),
            scores_digest: scores.digest.clone(),
            default_score: scores.default_score,
            groups: None,
        },
    }
}

/// Full merge sequence, cut at any threshold with [`cut_len`].
#[derive(Debug, Clone)]
pub struct Dendrogram<'a> {
    pub scores: &'a ScoreMatrix,
    pub merges: Vec<Merge>,
}

impl<'a> Dendrogram<'a> {
    pub fn build(scores: &'a ScoreMatrix, exec: Exec) -> Self {
        Dendrogram {
            scores,
            merges: merge_sequence(scores, None, exec),
        }
    }

    pub fn cut(&self, threshold: f64) -> Partition {
        partition_of(self.scores, &self.merges[..cut_len(&self.merges, threshold)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub threshold: f64,
    pub conll_f1: f64,
    /// `(threshold, CoNLL F1)` for every grid value, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Grid value maximizing CoNLL F1 of the clustering against `dev_key`;
/// ties go to the smallest threshold.
pub fn tune_threshold(dev_key: &Partition, dev_scores: &ScoreMatrix, grid: &[f64], exec: Exec) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::Config("threshold grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("threshold grid has a non-finite value".into()));
    }
    let tree = Dendrogram::build(dev_scores, exec);
    let results: Vec<Result<f64>> = exec.map(grid, |&t| Ok(evaluate(dev_key, &tree.cut(t))?.conll_f1));
    let curve: Vec<(f64, f64)> = grid
        .iter()
        .copied()
        .zip(results.into_iter().collect::<Result<Vec<_>>>()?)
        .collect();
    let mut best = curve[0];
    for &(t, f) in &curve[1..] {
        if f > best.1 || (f == best.1 && t < best.0) {
            best = (t, f);
        }
    }
    Ok(TuneResult {
        threshold: best.0,
        conll_f1: best.1,
        curve,
    })
}

/// Runs [`agglomerate`] separately inside each group; no cluster spans two
/// groups. `groups` maps every mention id to its group label.
pub fn partition_restricted_clustering(
    scores: &ScoreMatrix,
    cfg: &ClusteringConfig,
    groups: &BTreeMap<MentionId, String>,
    exec: Exec,
) -> Result<Clustering> {
    let mut members: BTreeMap<&str, Vec<MentionId>> = BTreeMap::new();
    for &id in scores.ids() {
        let g = groups
            .get(&id)
            .ok_or_else(|| Error::Config(format!("mention {id} is not assigned to a document group")))?;
        members.entry(g.as_str()).or_default().push(id);
    }
    let mut clusters = Vec::new();
    for ids in members.values() {
        let sub = scores.restrict(ids)?;
        let c = agglomerate(&sub, cfg, exec);
        clusters.extend(c.partition.clusters().iter().cloned());
    }
    Ok(Clustering {
        partition: Partition::new(clusters)?,
        provenance: Provenance {
            method: "average-link".into(),
            threshold: Some(cfg.threshold),
            scores_digest: scores.digest.clone(),
            default_score: scores.default_score,
            groups: Some(members.len()),
        },
    })
}

/// Maps mentions to groups through their source document.
pub fn groups_from_documents(
    mentions: &[Mention],
    doc_groups: &BTreeMap<String, String>,
) -> Result<BTreeMap<MentionId, String>> {
    let mut missing = BTreeSet::new();
    let mut out = BTreeMap::new();
    for m in mentions {
        match doc_groups.get(&m.source_title) {
            Some(g) => {
                out.insert(m.mention_id, g.clone());
            }
            None => {
                missing.insert(m.source_title.as_str());
            }
        }
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).copied().collect();
        return Err(Error::Config(format!(
            "{} documents missing from the document partition, e.g. {}",
            missing.len(),
            shown.join(", ")
        )));
    }
    Ok(out)
}
