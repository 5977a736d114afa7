//! Reference implementations written without the library's code paths:
//! pair-graph MUC, per-mention B³, exhaustive/bitmask CEAF-e and a naive
//! cubic average-link clustering on integer scores.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

pub type Clusters = Vec<Vec<u64>>;

/// (recall, precision, f1) with 0/0 read as 0.
pub type Prf = (f64, f64, f64);

fn prf(rn: f64, rd: f64, pn: f64, pd: f64) -> Prf {
    let r = if rd == 0.0 { 0.0 } else { rn / rd };
    let p = if pd == 0.0 { 0.0 } else { pn / pd };
    let f = if r + p == 0.0 { 0.0 } else { 2.0 * r * p / (r + p) };
    (r, p, f)
}

fn cluster_of(c: &Clusters) -> BTreeMap<u64, usize> {
    c.iter()
        .enumerate()
        .flat_map(|(i, xs)| xs.iter().map(move |&x| (x, i)))
        .collect()
}

/// Connected components of `members` in the graph joining every pair that
/// shares a cluster of `other`.
fn components(members: &[u64], other: &BTreeMap<u64, usize>) -> usize {
    let n = members.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let linked = match (other.get(&members[i]), other.get(&members[j])) {
                    (Some(a), Some(b)) => a == b,
                    _ => false,
                };
                if !seen[j] && linked {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

fn muc_side(a: &Clusters, b: &Clusters) -> (f64, f64) {
    let bi = cluster_of(b);
    let mut num = 0;
    let mut den = 0;
    for c in a {
        num += c.len() - components(c, &bi);
        den += c.len() - 1;
    }
    (num as f64, den as f64)
}

pub fn muc(key: &Clusters, resp: &Clusters) -> Prf {
    let (rn, rd) = muc_side(key, resp);
    let (pn, pd) = muc_side(resp, key);
    prf(rn, rd, pn, pd)
}

pub fn b_cubed(key: &Clusters, resp: &Clusters) -> Prf {
    let ki = cluster_of(key);
    let ri = cluster_of(resp);
    let side = |a: &Clusters, ai: &BTreeMap<u64, usize>, bi: &BTreeMap<u64, usize>| {
        let mut total = 0.0;
        let mut n = 0;
        for (&m, &ca) in ai {
            n += 1;
            let Some(&cb) = bi.get(&m) else { continue };
            let inter = a[ca].iter().filter(|x| bi.get(x) == Some(&cb)).count();
            total += inter as f64 / a[ca].len() as f64;
        }
        (total, n as f64)
    };
    let (rn, rd) = side(key, &ki, &ri);
    let (pn, pd) = side(resp, &ri, &ki);
    prf(rn, rd, pn, pd)
}

fn phi4(a: &[u64], b: &[u64]) -> f64 {
    let sb: BTreeSet<u64> = b.iter().copied().collect();
    let inter = a.iter().filter(|x| sb.contains(x)).count();
    2.0 * inter as f64 / (a.len() + b.len()) as f64
}

/// Best total similarity over injective maps from the smaller side.
fn best_alignment(sim: &[Vec<f64>]) -> f64 {
    let rows = sim.len();
    let cols = sim.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| sim[i][j]).collect()).collect();
        return best_alignment(&t);
    }
    if rows <= 6 && cols <= 8 {
        fn go(i: usize, used: &mut Vec<bool>, sim: &[Vec<f64>]) -> f64 {
            if i == sim.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(sim[i][j] + go(i + 1, used, sim));
                    used[j] = false;
                }
            }
            best
        }
        return go(0, &mut vec![false; cols], sim);
    }
    // rows <= cols <= 12: DP over subsets of used columns
    let mut dp = vec![f64::NEG_INFINITY; 1 << cols];
    dp[0] = 0.0;
    for mask in 0..(1usize << cols) {
        let i = mask.count_ones() as usize;
        if i >= rows || dp[mask] == f64::NEG_INFINITY {
            continue;
        }
        for j in 0..cols {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                dp[next] = dp[next].max(dp[mask] + sim[i][j]);
            }
        }
    }
    (0..(1usize << cols))
        .filter(|m| m.count_ones() as usize == rows)
        .map(|m| dp[m])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn ceaf_e(key: &Clusters, resp: &Clusters) -> Prf {
    let sim: Vec<Vec<f64>> = key.iter().map(|k| resp.iter().map(|r| phi4(k, r)).collect()).collect();
    let total = best_alignment(&sim);
    prf(total, key.len() as f64, total, resp.len() as f64)
}

pub fn conll(key: &Clusters, resp: &Clusters) -> f64 {
    (muc(key, resp).2 + b_cubed(key, resp).2 + ceaf_e(key, resp).2) / 3.0
}

pub fn random_clusters<R: Rng>(rng: &mut R, ids: &[u64]) -> Clusters {
    let k = rng.gen_range(1..=ids.len().max(1));
    let mut by: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for &id in ids {
        by.entry(rng.gen_range(0..k)).or_default().push(id);
    }
    by.into_values().collect()
}

/// Symmetric matrix of integer scores `0..=1024` (score = k / 1024).
pub fn random_int_matrix<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<i64>> {
    // a few distinct levels so exact ties happen
    let coarse = rng.gen_bool(0.5);
    let mut m = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = if coarse {
                rng.gen_range(0..=8) * 128
            } else {
                rng.gen_range(0..=1024)
            };
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Naive average-link clustering over positions `0..n`: every step
/// recomputes every cluster-pair average, merges the best pair (ties to the
/// smallest pair of minimum members) and stops when the best average is
/// below `threshold_k / 1024`. Returns clusters of positions.
pub fn naive_average_link(m: &[Vec<i64>], threshold_k: Option<i64>) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(i64, i64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut sum = 0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        sum += m[i][j];
                    }
                }
                let pairs = (clusters[a].len() * clusters[b].len()) as i64;
                let better = match best {
                    None => true,
                    Some((bs, bp, ba, bb)) => {
                        let (l, r) = (sum * bp, bs * pairs);
                        let key = (clusters[a][0].min(clusters[b][0]), clusters[a][0].max(clusters[b][0]));
                        let bkey = (
                            clusters[ba][0].min(clusters[bb][0]),
                            clusters[ba][0].max(clusters[bb][0]),
                        );
                        l > r || (l == r && key < bkey)
                    }
                };
                if better {
                    best = Some((sum, pairs, a, b));
                }
            }
        }
        let Some((sum, pairs, a, b)) = best else { break };
        if let Some(t) = threshold_k {
            if sum < t * pairs {
                break;
            }
        }
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters[a].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
    }
    clusters
}

pub fn canonical(mut c: Vec<Vec<u64>>) -> Vec<Vec<u64>> {
    for x in &mut c {
        x.sort_unstable();
    }
    c.retain(|x| !x.is_empty());
    c.sort();
    c
}
