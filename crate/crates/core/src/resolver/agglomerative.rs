//! Average-link agglomerative clustering.
//!
//! Scores are quantized to integers on a 2^-60 grid so that cluster-pair
//! sums are exact and averages compare by cross-multiplication. Scores that
//! are already multiples of 2^-60 (every dyadic value with a short mantissa)
//! therefore cluster exactly as with real-number arithmetic.

use super::scores::ScoreMatrix;
use crate::exec::Exec;

const SCALE: f64 = (1u64 << 60) as f64;

pub fn quantize(x: f64) -> i128 {
    (x * SCALE).round() as i128
}

/// Average link between two clusters as `sum / pairs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub sum: i128,
    pub pairs: i128,
}

impl Link {
    pub fn score(&self) -> f64 {
        self.sum as f64 / SCALE / self.pairs as f64
    }

    fn below(&self, threshold_q: i128) -> bool {
        self.sum < threshold_q * self.pairs
    }
}

/// Candidate merge between clusters whose smallest positions are `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    link: Link,
    a: usize,
    b: usize,
}

/// Higher average wins; equal averages go to the smaller `(a, b)`.
fn better(x: &Candidate, y: &Candidate) -> bool {
    let lhs = x.link.sum * y.link.pairs;
    let rhs = y.link.sum * x.link.pairs;
    lhs > rhs || (lhs == rhs && (x.a, x.b) < (y.a, y.b))
}

fn pick(x: Candidate, y: Candidate) -> Candidate {
    if better(&y, &x) {
        y
    } else {
        x
    }
}

/// One merge: the clusters represented by matrix positions `a < b` (each the
/// smallest position in its cluster) were joined at average score `link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub link: Link,
}

struct State {
    n: usize,
    active: Vec<bool>,
    size: Vec<i128>,
    /// Pairwise cluster sums, indexed by representative positions.
    sums: Vec<i128>,
    best: Vec<Option<Candidate>>,
}

impl State {
    fn new(scores: &ScoreMatrix, exec: Exec) -> Self {
        let n = scores.len();
        let sums: Vec<i128> = exec
            .map_range(n, |i| {
                (0..n)
                    .map(|j| if i == j { 0 } else { quantize(scores.at(i, j)) })
                    .collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect();
        let mut st = State {
            n,
            active: vec![true; n],
            size: vec![1; n],
            sums,
            best: vec![None; n],
        };
        let best = exec.map_range(n, |a| st.scan(a));
        st.best = best;
        st
    }

    fn link(&self, a: usize, b: usize) -> Link {
        Link {
            sum: self.sums[a * self.n + b],
            pairs: self.size[a] * self.size[b],
        }
    }

    fn candidate(&self, a: usize, b: usize) -> Candidate {
        Candidate {
            link: self.link(a, b),
            a: a.min(b),
            b: a.max(b),
        }
    }

    /// Best partner of `a` over all active clusters.
    fn scan(&self, a: usize) -> Option<Candidate> {
        (0..self.n)
            .filter(|&c| c != a && self.active[c])
            .map(|c| self.candidate(a, c))
            .reduce(pick)
    }

    fn global_best(&self, exec: Exec) -> Option<Candidate> {
        exec.reduce_range(self.n, |a| if self.active[a] { self.best[a] } else { None }, pick)
    }

    fn merge(&mut self, cand: Candidate, exec: Exec) {
        let (r, d) = (cand.a, cand.b);
        let n = self.n;
        for c in 0..n {
            if self.active[c] && c != r && c != d {
                let s = self.sums[r * n + c] + self.sums[d * n + c];
                self.sums[r * n + c] = s;
                self.sums[c * n + r] = s;
            }
        }
        self.size[r] += self.size[d];
        self.active[d] = false;
        self.best[d] = None;

        let mut best = std::mem::take(&mut self.best);
        {
            let this = &*self;
            exec.for_each_mut(&mut best, |c, slot| {
                if !this.active[c] {
                    return;
                }
                if c == r {
                    *slot = this.scan(c);
                    return;
                }
                match *slot {
                    Some(prev) if prev.a == r || prev.b == r || prev.a == d || prev.b == d => *slot = this.scan(c),
                    Some(prev) => {
                        let cand = this.candidate(c, r);
                        if better(&cand, &prev) {
                            *slot = Some(cand);
                        }
                    }
                    None => *slot = this.scan(c),
                }
            });
        }
        self.best = best;
    }
}

/// Merges greedily until one cluster remains or the best average link
/// falls below `threshold`.
pub fn merge_sequence(scores: &ScoreMatrix, threshold: Option<f64>, exec: Exec) -> Vec<Merge> {
    let mut st = State::new(scores, exec);
    let stop = threshold.map(quantize);
    let mut merges = Vec::with_capacity(scores.len().saturating_sub(1));
    while let Some(best) = st.global_best(exec) {
        if let Some(t) = stop {
            if best.link.below(t) {
                break;
            }
        }
        merges.push(Merge {
            a: best.a,
            b: best.b,
            link: best.link,
        });
        st.merge(best, exec);
    }
    merges
}

/// Length of the prefix of `merges` that a run stopped at `threshold`
/// would perform.
pub fn cut_len(merges: &[Merge], threshold: f64) -> usize {
    let t = quantize(threshold);
    merges.iter().position(|m| m.link.below(t)).unwrap_or(merges.len())
}

/// Clusters (as lists of matrix positions) after applying `merges`.
pub fn clusters_after(n: usize, merges: &[Merge]) -> Vec<Vec<usize>> {
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for m in merges {
        let moved = std::mem::take(&mut members[m.b]);
        members[m.a].extend(moved);
    }
    members.into_iter().filter(|c| !c.is_empty()).collect()
}
