//! Manual validation of candidate dev/test mentions: task queueing,
//! durable judgments, validated-split export and agreement reporting.

mod agreement;
mod store;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use agreement::{agreement, AgreementReport};
pub use store::{Ack, ExportReport, Progress, SplitProgress, Store, StoreOptions, TaskFilter, DEFAULT_CONSOLIDATOR};

use crate::error::{Error, Result};
use crate::pipeline::{Mention, PivotRecord, SplitName, Splits};

pub type TaskId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// The paragraph does not suffice to tell what the mention refers to.
    InsufficientContext,
    /// The linked span does not contain the event trigger.
    BoundaryNotTrigger,
    /// The link sits on the event's time expression.
    EventTime,
    /// The link sits on the event's location.
    EventLocation,
    /// The mention refers to a part of the pivot event.
    Subevent,
    Other,
}

impl RejectReason {
    pub const ALL: [RejectReason; 6] = [
        RejectReason::InsufficientContext,
        RejectReason::BoundaryNotTrigger,
        RejectReason::EventTime,
        RejectReason::EventLocation,
        RejectReason::Subevent,
        RejectReason::Other,
    ];
}

impl FromStr for RejectReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown reject reason `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Judged,
}

/// One candidate evaluation mention as loaded by the service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub split: SplitName,
    pub mention: Mention,
    /// First paragraph of the pivot article.
    #[serde(default)]
    pub pivot_summary: Option<String>,
    /// Practice tasks are judged like the others but never exported.
    #[serde(default)]
    pub practice: bool,
}

/// Candidates for every dev and test mention, with pivot summaries taken
/// from the pivot records.
pub fn candidates_from_splits(splits: &Splits, pivots: &[PivotRecord]) -> Vec<Candidate> {
    let summaries: BTreeMap<&str, &Option<String>> = pivots.iter().map(|p| (p.title.as_str(), &p.summary)).collect();
    [SplitName::Dev, SplitName::Test]
        .into_iter()
        .flat_map(|s| splits.get(s).mentions().map(move |m| (s, m)))
        .map(|(split, m)| Candidate {
            split,
            mention: m.clone(),
            pivot_summary: summaries.get(m.target_title.as_str()).and_then(|s| (*s).clone()),
            practice: false,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationTask {
    pub task_id: TaskId,
    pub split: SplitName,
    pub mention: Mention,
    pub pivot_title: String,
    pub pivot_summary: Option<String>,
    pub practice: bool,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub task_id: TaskId,
    pub annotator_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject_reason: Option<RejectReason>,
    /// Milliseconds since the Unix epoch; filled in by the store when 0.
    #[serde(default)]
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Judgment {
    pub fn valid(task_id: TaskId, annotator: &str) -> Self {
        Judgment {
            task_id,
            annotator_id: annotator.to_string(),
            verdict: Verdict::Valid,
            reject_reason: None,
            timestamp: 0,
            note: None,
        }
    }

    pub fn rejected(task_id: TaskId, annotator: &str, reason: RejectReason) -> Self {
        Judgment {
            verdict: Verdict::Rejected,
            reject_reason: Some(reason),
            ..Judgment::valid(task_id, annotator)
        }
    }

    /// A reason is required for a rejection and forbidden otherwise.
    pub fn check(&self) -> Result<()> {
        if self.annotator_id.trim().is_empty() {
            return Err(Error::InvalidJudgment("annotator id is empty".into()));
        }
        match (self.verdict, self.reject_reason) {
            (Verdict::Rejected, None) => Err(Error::InvalidJudgment(
                "a rejected verdict needs a reject reason".into(),
            )),
            (Verdict::Valid, Some(r)) => Err(Error::InvalidJudgment(format!(
                "a valid verdict cannot carry reject reason {}",
                serde_json::to_string(&r).unwrap_or_default()
            ))),
            _ => Ok(()),
        }
    }
}
