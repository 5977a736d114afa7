use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use linkcoref::io::read_jsonl;
use linkcoref::pipeline::{DatasetSplit, Mention, SplitName};
use linkcoref::validation::{
    agreement, Candidate, Judgment, RejectReason, Store, StoreOptions, TaskFilter, TaskId, Verdict,
};
use proptest::prelude::*;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/validation")
        .join(rel)
}

fn candidates() -> Vec<Candidate> {
    read_jsonl(&fixture("candidates.jsonl")).unwrap()
}

fn train() -> DatasetSplit {
    DatasetSplit::from_mentions(
        SplitName::Train,
        read_jsonl::<Mention>(&fixture("train.jsonl")).unwrap(),
    )
}

fn open(dir: &std::path::Path, cands: Vec<Candidate>) -> Store {
    Store::open(dir, cands, StoreOptions::default()).unwrap()
}

fn judge(task: TaskId, who: &str, valid: bool) -> Judgment {
    if valid {
        Judgment::valid(task, who)
    } else {
        Judgment::rejected(task, who, RejectReason::EventTime)
    }
}

#[test]
fn two_rejections_leave_eight_exported_mentions() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path(), candidates());
    let rejected: BTreeSet<TaskId> = [1, 7].into();
    for t in 0..store.len() as TaskId {
        store.submit(judge(t, "consolidator", !rejected.contains(&t))).unwrap();
    }
    let dev = store.export_validated(SplitName::Dev, false).unwrap();
    let test = store.export_validated(SplitName::Test, false).unwrap();
    assert_eq!((dev.candidates, dev.valid, dev.rejected), (6, 5, 1));
    assert_eq!((test.candidates, test.valid, test.rejected), (4, 3, 1));
    assert_eq!(dev.split.mention_count() + test.split.mention_count(), 8);
    let exported: BTreeSet<u64> = dev
        .split
        .mentions()
        .chain(test.split.mentions())
        .map(|m| m.mention_id)
        .collect();
    for t in rejected {
        assert!(!exported.contains(&store.task(t).unwrap().mention.mention_id));
    }
}

#[test]
fn purged_train_shares_no_source_with_kept_eval_mentions() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path(), candidates());
    for t in 0..store.len() as TaskId {
        // a rejected candidate must not purge train mentions from its source
        store.submit(judge(t, "consolidator", t != 0)).unwrap();
    }
    let train = train();
    let (purged, removed) = store.purge_train(&train);
    let kept_eval: BTreeSet<String> = (0..store.len() as TaskId)
        .filter(|&t| t != 0)
        .map(|t| store.task(t).unwrap().mention.source_title)
        .collect();
    assert!(purged.mentions().all(|m| !kept_eval.contains(&m.source_title)));
    let want_removed = train.mentions().filter(|m| kept_eval.contains(&m.source_title)).count();
    assert_eq!(removed, want_removed);
    assert_eq!(purged.mention_count() + removed, train.mention_count());
    assert!(removed > 0);
    assert!(purged.mentions().any(|m| m.source_title == "Zeeland"));
}

#[test]
fn concurrent_annotators_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(open(dir.path(), candidates()));
    let n = store.len() as TaskId;
    let handles: Vec<_> = ["ann1", "ann2", "ann3"]
        .into_iter()
        .map(|who| {
            let store = Arc::clone(&store);
            std::thread::spawn(move || {
                while let Some(task) = store.next_task(who, &TaskFilter::default()) {
                    store.submit(judge(task.task_id, who, task.task_id % 2 == 0)).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    drop(store);

    let store = open(dir.path(), candidates());
    let all = store.judgments();
    assert_eq!(all.len() as u64, 3 * n);
    for who in ["ann1", "ann2", "ann3"] {
        let mine: BTreeSet<TaskId> = store.judgments_of(who).iter().map(|j| j.task_id).collect();
        assert_eq!(mine, (0..n).collect());
        assert!(store.next_task(who, &TaskFilter::default()).is_none());
    }
    let p = store.progress();
    assert_eq!((p.total, p.judged, p.pending), (n, n, 0));
}

#[test]
fn practice_tasks_are_judged_but_never_exported() {
    let mut cands = candidates();
    cands[0].practice = true;
    let practice_id = cands[0].mention.mention_id;
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path(), cands);
    for t in 0..store.len() as TaskId {
        store.submit(judge(t, "consolidator", true)).unwrap();
    }
    let dev = store.export_validated(SplitName::Dev, false).unwrap();
    assert_eq!(dev.practice_excluded, 1);
    assert!(dev.split.mentions().all(|m| m.mention_id != practice_id));
}

fn table(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<Judgment>, Vec<Judgment>) {
    let mut a = Vec::new();
    let mut g = Vec::new();
    let mut t = 0;
    for (count, va, vg) in [
        (tp, true, true),
        (fp, true, false),
        (fn_, false, true),
        (tn, false, false),
    ] {
        for _ in 0..count {
            a.push(judge(t, "ann", va));
            g.push(judge(t, "gold", vg));
            t += 1;
        }
    }
    (a, g)
}

/// Cohen's kappa from proportions, written out term by term.
fn kappa_reference(a: &[bool], g: &[bool]) -> f64 {
    let n = a.len() as f64;
    let po = a.iter().zip(g).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pg = g.iter().filter(|&&x| x).count() as f64 / n;
    let pe = pa * pg + (1.0 - pa) * (1.0 - pg);
    (po - pe) / (1.0 - pe)
}

#[test]
fn agreement_on_the_reference_table() {
    let (a, g) = table(40, 5, 5, 50);
    let r = agreement(&a, &g).unwrap();
    let flags = |js: &[Judgment]| js.iter().map(|j| j.verdict == Verdict::Valid).collect::<Vec<_>>();
    assert!((r.precision - 40.0 / 45.0).abs() < 1e-12);
    assert!((r.recall - 40.0 / 45.0).abs() < 1e-12);
    assert!((r.observed_agreement - 0.9).abs() < 1e-12);
    assert!((r.expected_agreement - 0.505).abs() < 1e-12);
    assert!((r.cohen_kappa - kappa_reference(&flags(&a), &flags(&g))).abs() < 1e-12);
    assert!((r.cohen_kappa - 0.395 / 0.495).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kappa_is_symmetric(verdicts in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let a: Vec<Judgment> = verdicts.iter().enumerate().map(|(t, &(x, _))| judge(t as u64, "a", x)).collect();
        let g: Vec<Judgment> = verdicts.iter().enumerate().map(|(t, &(_, y))| judge(t as u64, "g", y)).collect();
        let ab = agreement(&a, &g).unwrap();
        let ba = agreement(&g, &a).unwrap();
        prop_assert!((ab.cohen_kappa - ba.cohen_kappa).abs() < 1e-12);
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        prop_assert!((ab.recall - ba.precision).abs() < 1e-12);
        prop_assert!(ab.cohen_kappa <= 1.0 + 1e-12);
    }

    #[test]
    fn kappa_matches_the_reference(verdicts in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let xs: Vec<bool> = verdicts.iter().map(|v| v.0).collect();
        let ys: Vec<bool> = verdicts.iter().map(|v| v.1).collect();
        let a: Vec<Judgment> = xs.iter().enumerate().map(|(t, &x)| judge(t as u64, "a", x)).collect();
        let g: Vec<Judgment> = ys.iter().enumerate().map(|(t, &y)| judge(t as u64, "g", y)).collect();
        let r = agreement(&a, &g).unwrap();
        let want = kappa_reference(&xs, &ys);
        // chance agreement of 1 leaves kappa undefined; reported as 1
        if want.is_finite() {
            prop_assert!((r.cohen_kappa - want).abs() < 1e-9, "{} vs {}", r.cohen_kappa, want);
        } else {
            prop_assert_eq!(r.cohen_kappa, 1.0);
        }
    }
}
