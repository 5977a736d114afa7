//! Judgment store: an append-only log in the store directory, fsync'd
//! before every acknowledgment, compacted into a snapshot of the live
//! judgments from time to time.
//!
//! Files:
//! - `snapshot.json`: candidate digest, last sequence number folded in, and
//!   the live judgments at that point.
//! - `judgments.log`: one JSON entry per submission since the snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{
    agreement, AgreementReport, Candidate, Judgment, RejectReason, TaskId, TaskStatus, ValidationTask, Verdict,
};
use crate::error::{Error, Result};
use crate::io::bytes_digest;
use crate::pipeline::{purge_train_leakage, DatasetSplit, SplitName};

pub const DEFAULT_CONSOLIDATOR: &str = "consolidator";
const LOG_FILE: &str = "judgments.log";
const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// Annotator id whose judgments are final and serve as agreement gold.
    pub consolidator: String,
    /// Compact once this many entries are in the log.
    pub compact_after: usize,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            consolidator: DEFAULT_CONSOLIDATOR.into(),
            compact_after: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFilter {
    #[serde(default)]
    pub split: Option<SplitName>,
    /// `Some(true)` serves practice tasks only, `Some(false)` skips them.
    #[serde(default)]
    pub practice: Option<bool>,
}

impl TaskFilter {
    fn accepts(&self, c: &Candidate) -> bool {
        self.split.is_none_or(|s| s == c.split) && self.practice.is_none_or(|p| p == c.practice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: u64,
    pub task_id: TaskId,
    pub status: TaskStatus,
    /// The same annotator had already judged this task.
    pub superseded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitProgress {
    pub total: u64,
    pub judged: u64,
    pub valid: u64,
    pub rejected: u64,
    pub practice: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: u64,
    pub judged: u64,
    pub pending: u64,
    pub by_split: BTreeMap<SplitName, SplitProgress>,
    /// Live judgments per annotator.
    pub by_annotator: BTreeMap<String, u64>,
    /// Effective rejections per reason.
    pub rejections: BTreeMap<RejectReason, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportReport {
    pub split: DatasetSplit,
    pub candidates: u64,
    pub valid: u64,
    pub rejected: u64,
    pub practice_excluded: u64,
    /// Unjudged tasks left out of a partial export.
    pub unjudged: Vec<TaskId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    seq: u64,
    #[serde(flatten)]
    judgment: Judgment,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    candidates_digest: String,
    seq: u64,
    judgments: Vec<Entry>,
}

struct State {
    live: BTreeMap<(TaskId, String), Entry>,
    seq: u64,
    in_log: usize,
    log: File,
}

pub struct Store {
    dir: PathBuf,
    opts: StoreOptions,
    digest: String,
    /// Sorted by split, cluster and mention, so one cluster's tasks are
    /// served consecutively. The task id is the index.
    tasks: Vec<Candidate>,
    state: RwLock<State>,
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!("{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    File::open(dir)?.sync_all()?;
    Ok(())
}

/// Parses the log; a torn final line (a crash mid-append, before any
/// acknowledgment) is cut off.
fn replay_log(path: &Path, tasks: usize) -> Result<Vec<Entry>> {
    let Ok(bytes) = fs::read(path) else {
        return Ok(Vec::new());
    };
    let name = path.display().to_string();
    let mut out = Vec::new();
    let mut offset = 0;
    for (i, line) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        let complete = line.ends_with(b"\n");
        match serde_json::from_slice::<Entry>(line) {
            Ok(e) if complete => out.push(e),
            Err(e) if complete => {
                if line.iter().all(u8::is_ascii_whitespace) {
                    offset += line.len();
                    continue;
                }
                return Err(Error::parse(&name, i + 1, e.to_string()));
            }
            _ => {
                tracing::warn!(path = %name, bytes = line.len(), "dropping torn final log entry");
                OpenOptions::new().write(true).open(path)?.set_len(offset as u64)?;
                break;
            }
        }
        offset += line.len();
    }
    if let Some(e) = out.iter().find(|e| e.judgment.task_id as usize >= tasks) {
        return Err(Error::UnknownTask(e.judgment.task_id));
    }
    Ok(out)
}

impl Store {
    /// Opens (or creates) the store in `dir` for the given candidates. A
    /// store is bound to the candidate set it was created with.
    pub fn open(dir: &Path, mut candidates: Vec<Candidate>, opts: StoreOptions) -> Result<Store> {
        fs::create_dir_all(dir)?;
        candidates.sort_by_key(|c| (c.split, c.mention.cluster_id, c.mention.mention_id));
        let mut seen = BTreeSet::new();
        if let Some(c) = candidates.iter().find(|c| !seen.insert(c.mention.mention_id)) {
            return Err(Error::Config(format!(
                "mention {} appears twice among the candidates",
                c.mention.mention_id
            )));
        }
        let digest = bytes_digest(&serde_json::to_vec(&candidates)?);

        let snap_path = dir.join(SNAPSHOT_FILE);
        let snapshot: Snapshot = if snap_path.exists() {
            serde_json::from_slice(&fs::read(&snap_path)?)?
        } else {
            let s = Snapshot {
                candidates_digest: digest.clone(),
                seq: 0,
                judgments: Vec::new(),
            };
            write_atomic(dir, SNAPSHOT_FILE, &serde_json::to_vec(&s)?)?;
            s
        };
        if snapshot.candidates_digest != digest {
            return Err(Error::Config(format!(
                "store {} was created for a different candidate set",
                dir.display()
            )));
        }

        let log_path = dir.join(LOG_FILE);
        let logged = replay_log(&log_path, candidates.len())?;
        let mut live = BTreeMap::new();
        let mut seq = snapshot.seq;
        let mut in_log = 0;
        for e in snapshot.judgments {
            live.insert((e.judgment.task_id, e.judgment.annotator_id.clone()), e);
        }
        for e in logged {
            in_log += 1;
            // entries already folded into the snapshot by an interrupted compaction
            if e.seq <= snapshot.seq {
                continue;
            }
            seq = seq.max(e.seq);
            live.insert((e.judgment.task_id, e.judgment.annotator_id.clone()), e);
        }
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        Ok(Store {
            dir: dir.to_path_buf(),
            opts,
            digest,
            tasks: candidates,
            state: RwLock::new(State { live, seq, in_log, log }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn consolidator(&self) -> &str {
        &self.opts.consolidator
    }

    pub fn candidates_digest(&self) -> &str {
        &self.digest
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Effective judgment of a task: the consolidator's if present, else the
    /// latest live one.
    fn effective<'s>(&self, st: &'s State, task: TaskId) -> Option<&'s Entry> {
        let mut latest: Option<&Entry> = None;
        for ((_, who), e) in st.live.range((task, String::new())..(task + 1, String::new())) {
            if *who == self.opts.consolidator {
                return Some(e);
            }
            if latest.is_none_or(|l| e.seq > l.seq) {
                latest = Some(e);
            }
        }
        latest
    }

    fn view(&self, st: &State, task: TaskId) -> ValidationTask {
        let c = &self.tasks[task as usize];
        ValidationTask {
            task_id: task,
            split: c.split,
            mention: c.mention.clone(),
            pivot_title: c.mention.target_title.clone(),
            pivot_summary: c.pivot_summary.clone(),
            practice: c.practice,
            status: if self.effective(st, task).is_some() {
                TaskStatus::Judged
            } else {
                TaskStatus::Pending
            },
        }
    }

    pub fn task(&self, task: TaskId) -> Option<ValidationTask> {
        ((task as usize) < self.tasks.len()).then(|| self.view(&self.read(), task))
    }

    /// Lowest-id task accepted by `filter` that `annotator` has not judged.
    pub fn next_task(&self, annotator: &str, filter: &TaskFilter) -> Option<ValidationTask> {
        let st = self.read();
        (0..self.tasks.len() as TaskId)
            .filter(|&t| filter.accepts(&self.tasks[t as usize]))
            .find(|&t| !st.live.contains_key(&(t, annotator.to_string())))
            .map(|t| self.view(&st, t))
    }

    /// Persists the judgment before returning. A later submission by the
    /// same annotator for the same task supersedes this one.
    pub fn submit(&self, mut judgment: Judgment) -> Result<Ack> {
        judgment.check()?;
        if judgment.task_id as usize >= self.tasks.len() {
            return Err(Error::UnknownTask(judgment.task_id));
        }
        if judgment.timestamp == 0 {
            judgment.timestamp = now_millis();
        }
        let mut st = self.state.write().unwrap_or_else(|e| e.into_inner());
        let entry = Entry {
            seq: st.seq + 1,
            judgment,
        };
        let mut line = serde_json::to_vec(&entry)?;
        line.push(b'\n');
        st.log.write_all(&line)?;
        st.log.sync_data()?;
        st.seq = entry.seq;
        st.in_log += 1;
        let task_id = entry.judgment.task_id;
        let seq = entry.seq;
        let superseded = st
            .live
            .insert((task_id, entry.judgment.annotator_id.clone()), entry)
            .is_some();
        if st.in_log >= self.opts.compact_after.max(1) {
            self.compact_locked(&mut st)?;
        }
        Ok(Ack {
            seq,
            task_id,
            status: TaskStatus::Judged,
            superseded,
        })
    }

    fn compact_locked(&self, st: &mut State) -> Result<()> {
        let mut judgments: Vec<Entry> = st.live.values().cloned().collect();
        judgments.sort_by_key(|e| e.seq);
        let snap = Snapshot {
            candidates_digest: self.digest.clone(),
            seq: st.seq,
            judgments,
        };
        write_atomic(&self.dir, SNAPSHOT_FILE, &serde_json::to_vec(&snap)?)?;
        st.log.set_len(0)?;
        st.log.sync_all()?;
        st.in_log = 0;
        Ok(())
    }

    /// Folds the log into the snapshot; superseded judgments are dropped.
    pub fn compact(&self) -> Result<()> {
        let mut st = self.state.write().unwrap_or_else(|e| e.into_inner());
        self.compact_locked(&mut st)
    }

    /// Live judgments in submission order.
    pub fn judgments(&self) -> Vec<Judgment> {
        let st = self.read();
        let mut es: Vec<&Entry> = st.live.values().collect();
        es.sort_by_key(|e| e.seq);
        es.into_iter().map(|e| e.judgment.clone()).collect()
    }

    pub fn judgments_of(&self, annotator: &str) -> Vec<Judgment> {
        self.judgments()
            .into_iter()
            .filter(|j| j.annotator_id == annotator)
            .collect()
    }

    pub fn progress(&self) -> Progress {
        let st = self.read();
        let mut p = Progress::default();
        for (i, c) in self.tasks.iter().enumerate() {
            let sp = p.by_split.entry(c.split).or_default();
            sp.total += 1;
            sp.practice += c.practice as u64;
            p.total += 1;
            match self.effective(&st, i as TaskId) {
                None => p.pending += 1,
                Some(e) => {
                    p.judged += 1;
                    sp.judged += 1;
                    match e.judgment.verdict {
                        Verdict::Valid => sp.valid += 1,
                        Verdict::Rejected => {
                            sp.rejected += 1;
                            if let Some(r) = e.judgment.reject_reason {
                                *p.rejections.entry(r).or_default() += 1;
                            }
                        }
                    }
                }
            }
        }
        for (_, who) in st.live.keys() {
            *p.by_annotator.entry(who.clone()).or_default() += 1;
        }
        p
    }

    /// Mentions of `split` whose effective verdict is valid, regrouped into
    /// chains; chains emptied by rejections disappear. Practice tasks are
    /// never exported. Unjudged tasks are an error unless `partial`.
    pub fn export_validated(&self, split: SplitName, partial: bool) -> Result<ExportReport> {
        let st = self.read();
        let mut report = ExportReport {
            split: DatasetSplit {
                name: split,
                chains: Vec::new(),
            },
            candidates: 0,
            valid: 0,
            rejected: 0,
            practice_excluded: 0,
            unjudged: Vec::new(),
        };
        let mut keep = Vec::new();
        for (i, c) in self.tasks.iter().enumerate().filter(|(_, c)| c.split == split) {
            if c.practice {
                report.practice_excluded += 1;
                continue;
            }
            report.candidates += 1;
            match self.effective(&st, i as TaskId).map(|e| e.judgment.verdict) {
                Some(Verdict::Valid) => {
                    report.valid += 1;
                    keep.push(c.mention.clone());
                }
                Some(Verdict::Rejected) => report.rejected += 1,
                None => report.unjudged.push(i as TaskId),
            }
        }
        if !partial && !report.unjudged.is_empty() {
            let count = report.unjudged.len();
            let mut ids = std::mem::take(&mut report.unjudged);
            ids.truncate(20);
            return Err(Error::Unjudged {
                split: split.to_string(),
                count,
                ids,
            });
        }
        report.split = DatasetSplit::from_mentions(split, keep);
        Ok(report)
    }

    /// Removes train mentions sharing a source article with any evaluation
    /// mention that is not rejected. Unjudged mentions count, so a later
    /// acceptance cannot reintroduce leakage.
    pub fn purge_train(&self, train: &DatasetSplit) -> (DatasetSplit, usize) {
        let st = self.read();
        let eval = self.tasks.iter().enumerate().filter(|(i, c)| {
            !c.practice
                && c.split != SplitName::Train
                && self
                    .effective(&st, *i as TaskId)
                    .is_none_or(|e| e.judgment.verdict == Verdict::Valid)
        });
        purge_train_leakage(train, eval.map(|(_, c)| &c.mention))
    }

    /// Agreement of `annotator` with the consolidator over the tasks both
    /// have judged.
    pub fn agreement(&self, annotator: &str) -> Result<AgreementReport> {
        if annotator == self.opts.consolidator {
            return Err(Error::Config("agreement of the consolidator with itself".into()));
        }
        let gold: BTreeMap<TaskId, Judgment> = self
            .judgments_of(&self.opts.consolidator)
            .into_iter()
            .map(|j| (j.task_id, j))
            .collect();
        let mine: Vec<Judgment> = self
            .judgments_of(annotator)
            .into_iter()
            .filter(|j| gold.contains_key(&j.task_id))
            .collect();
        let gold: Vec<Judgment> = mine.iter().map(|j| gold[&j.task_id].clone()).collect();
        agreement(&mine, &gold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{Mention, MentionMetadata};

    pub(crate) fn cand(id: u64, cluster: u64, split: SplitName, source: &str) -> Candidate {
        Candidate {
            split,
            mention: Mention {
                mention_id: id,
                tokens: vec!["the".into(), "flood".into()],
                span: (1, 1),
                mention_text: "flood".into(),
                source_title: source.into(),
                target_title: format!("Pivot {cluster}"),
                cluster_id: cluster,
                metadata: MentionMetadata {
                    source_url: String::new(),
                    target_url: String::new(),
                    infobox_type: "flood".into(),
                },
            },
            pivot_summary: Some("A flood.".into()),
            practice: false,
        }
    }

    fn three() -> Vec<Candidate> {
        vec![
            cand(10, 2, SplitName::Dev, "A"),
            cand(11, 1, SplitName::Dev, "B"),
            cand(12, 1, SplitName::Test, "C"),
        ]
    }

    #[test]
    fn empty_store() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path(), vec![], StoreOptions::default()).unwrap();
        assert!(s.next_task("a", &TaskFilter::default()).is_none());
    }

    #[test]
    fn ordering_and_progress() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
        // dev cluster 1, dev cluster 2, test cluster 1
        assert_eq!(s.task(0).unwrap().mention.mention_id, 11);
        assert_eq!(s.task(1).unwrap().mention.mention_id, 10);
        s.submit(Judgment::valid(0, "a")).unwrap();
        assert_eq!(s.next_task("a", &TaskFilter::default()).unwrap().task_id, 1);
        assert_eq!(s.next_task("b", &TaskFilter::default()).unwrap().task_id, 0);
        let f = TaskFilter {
            split: Some(SplitName::Test),
            practice: None,
        };
        assert_eq!(s.next_task("a", &f).unwrap().task_id, 2);
        let p = s.progress();
        assert_eq!((p.total, p.judged, p.pending), (3, 1, 2));
    }

    #[test]
    fn submit_errors() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
        assert!(matches!(s.submit(Judgment::valid(9, "a")), Err(Error::UnknownTask(9))));
        let mut j = Judgment::valid(0, "a");
        j.verdict = Verdict::Rejected;
        assert!(matches!(s.submit(j), Err(Error::InvalidJudgment(_))));
        assert_eq!(s.progress().judged, 0);
    }

    #[test]
    fn supersede_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
            assert!(!s.submit(Judgment::valid(0, "a")).unwrap().superseded);
            let ack = s.submit(Judgment::rejected(0, "a", RejectReason::Subevent)).unwrap();
            assert!(ack.superseded);
        }
        let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
        let js = s.judgments();
        assert_eq!(js.len(), 1);
        assert_eq!(js[0].reject_reason, Some(RejectReason::Subevent));
        assert!(Store::open(dir.path(), three()[..2].to_vec(), StoreOptions::default()).is_err());
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        {
            let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
            s.submit(Judgment::valid(0, "a")).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(dir.path().join(LOG_FILE)).unwrap();
        f.write_all(b"{\"seq\":2,\"task_id\":1,\"annot").unwrap();
        drop(f);
        let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
        assert_eq!(s.judgments().len(), 1);
        s.submit(Judgment::valid(1, "a")).unwrap();
        let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
        assert_eq!(s.judgments().len(), 2);
    }

    #[test]
    fn compaction_keeps_live_judgments() {
        let dir = tempfile::tempdir().unwrap();
        let opts = StoreOptions {
            compact_after: 2,
            ..StoreOptions::default()
        };
        {
            let s = Store::open(dir.path(), three(), opts.clone()).unwrap();
            s.submit(Judgment::valid(0, "a")).unwrap();
            s.submit(Judgment::valid(0, "a")).unwrap();
            s.submit(Judgment::valid(1, "a")).unwrap();
            assert_eq!(
                fs::read_to_string(dir.path().join(LOG_FILE)).unwrap().lines().count(),
                1
            );
        }
        let s = Store::open(dir.path(), three(), opts).unwrap();
        assert_eq!(s.judgments().len(), 2);
        assert_eq!(s.submit(Judgment::valid(2, "a")).unwrap().seq, 4);
    }

    #[test]
    fn consolidator_wins() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path(), three(), StoreOptions::default()).unwrap();
        s.submit(Judgment::rejected(0, DEFAULT_CONSOLIDATOR, RejectReason::EventTime))
            .unwrap();
        s.submit(Judgment::valid(0, "a")).unwrap();
        let r = s.export_validated(SplitName::Dev, true).unwrap();
        assert_eq!((r.valid, r.rejected, r.unjudged.len()), (0, 1, 1));
        let a = s.agreement("a").unwrap();
        assert_eq!((a.tasks, a.false_positive), (1, 1));
        assert!(s.agreement(DEFAULT_CONSOLIDATOR).is_err());
    }

    #[test]
    fn export_requires_all_judged() {
        let dir = tempfile::tempdir().unwrap();
        let mut cands = three();
        cands[2].practice = true;
        let s = Store::open(dir.path(), cands, StoreOptions::default()).unwrap();
        s.submit(Judgment::valid(0, "a")).unwrap();
        match s.export_validated(SplitName::Dev, false) {
            Err(Error::Unjudged { count, ids, .. }) => assert_eq!((count, ids), (1, vec![1])),
            other => panic!("{other:?}"),
        }
        s.submit(Judgment::rejected(1, "a", RejectReason::InsufficientContext))
            .unwrap();
        let r = s.export_validated(SplitName::Dev, false).unwrap();
        assert_eq!(r.split.chains.len(), 1);
        assert_eq!(r.split.chains[0].cluster_id, 1);
        let t = s.export_validated(SplitName::Test, false).unwrap();
        assert_eq!((t.practice_excluded, t.split.mention_count()), (1, 0));
    }
}
