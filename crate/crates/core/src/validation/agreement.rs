//! Agreement between an annotator's verdicts and consolidated verdicts,
//! with "valid" as the positive class and the consolidated side as gold.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Judgment, TaskId, Verdict};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub tasks: u64,
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
    /// 1 when the annotator accepted nothing.
    pub precision: f64,
    /// 1 when gold accepts nothing.
    pub recall: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// 1 when both sides use a single, identical verdict throughout.
    pub cohen_kappa: f64,
}

impl AgreementReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let n = (tp + fp + fn_ + tn) as i128;
        let (tp_, fp_, fn__, tn_) = (tp as i128, fp as i128, fn_ as i128, tn as i128);
        let ratio = |num: i128, den: i128| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        // p_e * n^2, kept as an integer so kappa is one exact division
        let chance = (tp_ + fp_) * (tp_ + fn__) + (fn__ + tn_) * (fp_ + tn_);
        let (num, den) = (n * (tp_ + tn_) - chance, n * n - chance);
        AgreementReport {
            tasks: n as u64,
            true_positive: tp,
            false_positive: fp,
            false_negative: fn_,
            true_negative: tn,
            precision: ratio(tp_, tp_ + fp_),
            recall: ratio(tp_, tp_ + fn__),
            observed_agreement: ratio(tp_ + tn_, n),
            expected_agreement: ratio(chance, n * n),
            cohen_kappa: ratio(num, den),
        }
    }
}

fn verdicts(js: &[Judgment]) -> BTreeMap<TaskId, Verdict> {
    // later entries supersede earlier ones for the same task
    js.iter().map(|j| (j.task_id, j.verdict)).collect()
}

/// Compares `annotator` against `gold`. Both must cover the same tasks.
pub fn agreement(annotator: &[Judgment], gold: &[Judgment]) -> Result<AgreementReport> {
    let a = verdicts(annotator);
    let g = verdicts(gold);
    let ka: BTreeSet<TaskId> = a.keys().copied().collect();
    let kg: BTreeSet<TaskId> = g.keys().copied().collect();
    if ka != kg {
        let only_a: Vec<_> = ka.difference(&kg).take(10).collect();
        let only_g: Vec<_> = kg.difference(&ka).take(10).collect();
        return Err(Error::TaskMismatch(format!(
            "only in the annotator set: {only_a:?}; only in the gold set: {only_g:?}"
        )));
    }
    if ka.is_empty() {
        return Err(Error::TaskMismatch("no judged tasks to compare".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (t, va) in &a {
        match (va, g[t]) {
            (Verdict::Valid, Verdict::Valid) => tp += 1,
            (Verdict::Valid, Verdict::Rejected) => fp += 1,
            (Verdict::Rejected, Verdict::Valid) => fn_ += 1,
            (Verdict::Rejected, Verdict::Rejected) => tn += 1,
        }
    }
    Ok(AgreementReport::from_counts(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::RejectReason;

    fn j(task: TaskId, valid: bool) -> Judgment {
        if valid {
            Judgment::valid(task, "a")
        } else {
            Judgment::rejected(task, "a", RejectReason::Other)
        }
    }

    #[test]
    fn identical_sets() {
        let js: Vec<_> = (0..10).map(|t| j(t, t % 3 != 0)).collect();
        let r = agreement(&js, &js).unwrap();
        assert_eq!((r.precision, r.recall, r.cohen_kappa), (1.0, 1.0, 1.0));
        let all_valid: Vec<_> = (0..4).map(|t| j(t, true)).collect();
        assert_eq!(agreement(&all_valid, &all_valid).unwrap().cohen_kappa, 1.0);
    }

    #[test]
    fn chance_level() {
        let a: Vec<_> = (0..10).map(|t| j(t, true)).collect();
        let g: Vec<_> = (0..10).map(|t| j(t, t < 5)).collect();
        let r = agreement(&a, &g).unwrap();
        assert_eq!(r.cohen_kappa, 0.0);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 0.5);
    }

    #[test]
    fn mismatch_and_empty() {
        assert!(matches!(
            agreement(&[j(1, true)], &[j(2, true)]),
            Err(Error::TaskMismatch(_))
        ));
        assert!(agreement(&[], &[]).is_err());
    }

    #[test]
    fn later_entries_supersede() {
        let a = [j(1, false), j(1, true)];
        let r = agreement(&a, &[j(1, true)]).unwrap();
        assert_eq!(r.true_positive, 1);
    }
}
