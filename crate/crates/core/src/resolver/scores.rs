use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::bytes_digest;
use crate::pipeline::MentionId;

/// Entries of a loaded score file that disagree by more than this are
/// rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Dense symmetric pairwise scores in [0, 1] over a sorted list of mention
/// ids. The diagonal is unused and stored as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    ids: Vec<MentionId>,
    data: Vec<f64>,
    /// SHA-256 of the file the matrix was read from, when there was one.
    pub digest: Option<String>,
    /// Score used for pairs absent from a sparse input.
    pub default_score: Option<f64>,
}

fn check_score(s: f64, a: MentionId, b: MentionId) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::InvalidScores(format!("score for ({a}, {b}) is not finite")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidScores(format!("score {s} for ({a}, {b}) outside [0, 1]")));
    }
    Ok(())
}

impl ScoreMatrix {
    /// `rows[i][j]` is the score between `ids[i]` and `ids[j]`. Rows are
    /// reordered so ids ascend.
    pub fn from_dense(ids: Vec<MentionId>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidScores(format!("matrix is not {n}x{n}")));
        }
        let unique: BTreeSet<MentionId> = ids.iter().copied().collect();
        if unique.len() != n {
            return Err(Error::InvalidScores("duplicate mention id".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| ids[i]);
        let mut data = vec![0.0; n * n];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                if i == j {
                    continue;
                }
                let (s, t) = (rows[i][j], rows[j][i]);
                check_score(s, ids[i], ids[j])?;
                if s != t {
                    return Err(Error::InvalidScores(format!(
                        "asymmetric scores for ({}, {}): {s} vs {t}",
                        ids[i], ids[j]
                    )));
                }
                data[a * n + b] = s;
            }
        }
        Ok(ScoreMatrix {
            ids: order.iter().map(|&i| ids[i]).collect(),
            data,
            digest: None,
            default_score: None,
        })
    }

    /// Builds a matrix from `(a, b, score)` triples; unlisted pairs get
    /// `default`. Pairs listed in both orders must agree within
    /// [`SYMMETRY_TOLERANCE`].
    pub fn from_pairs<I>(ids: impl IntoIterator<Item = MentionId>, pairs: I, default: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (MentionId, MentionId, f64)>,
    {
        let ids: Vec<MentionId> = ids.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        check_score(default, 0, 0)
            .map_err(|_| Error::InvalidScores(format!("default score {default} outside [0, 1]")))?;
        let pos: BTreeMap<MentionId, usize> = ids.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let n = ids.len();
        let mut data = vec![default; n * n];
        let mut set = vec![false; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        for (a, b, s) in pairs {
            let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) else {
                return Err(Error::InvalidScores(format!(
                    "pair ({a}, {b}) uses an id outside the mention list"
                )));
            };
            if i == j {
                continue;
            }
            check_score(s, a, b)?;
            if set[i * n + j] {
                let prev = data[i * n + j];
                if (prev - s).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidScores(format!(
                        "contradicting scores for ({a}, {b}): {prev} vs {s}"
                    )));
                }
                continue;
            }
            data[i * n + j] = s;
            data[j * n + i] = s;
            set[i * n + j] = true;
            set[j * n + i] = true;
        }
        Ok(ScoreMatrix {
            ids,
            data,
            digest: None,
            default_score: Some(default),
        })
    }

    /// Parses the text score format: `#mentions id id ...` header lines
    /// listing the universe, then `id_a id_b score` lines. Other `#` lines
    /// are comments.
    pub fn parse(text: &str, name: &str, default: f64) -> Result<Self> {
        let mut ids = Vec::new();
        let mut pairs = Vec::new();
        let mut saw_header = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("#mentions") {
                saw_header = true;
                for tok in rest.split_whitespace() {
                    ids.push(
                        tok.parse()
                            .map_err(|_| Error::parse(name, i + 1, format!("bad mention id `{tok}`")))?,
                    );
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(name, i + 1, "expected `id_a id_b score`"));
            }
            let a = f[0].parse().map_err(|_| Error::parse(name, i + 1, "bad mention id"))?;
            let b = f[1].parse().map_err(|_| Error::parse(name, i + 1, "bad mention id"))?;
            let s: f64 = f[2].parse().map_err(|_| Error::parse(name, i + 1, "bad score"))?;
            pairs.push((a, b, s));
        }
        if !saw_header {
            return Err(Error::parse(name, 1, "missing `#mentions` header"));
        }
        let mut m = Self::from_pairs(ids, pairs, default)?;
        m.digest = Some(bytes_digest(text.as_bytes()));
        Ok(m)
    }

    pub fn load(path: &Path, default: f64) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string(), default)
    }

    /// Text form accepted by [`ScoreMatrix::parse`], one line per unordered pair.
    pub fn to_text(&self) -> String {
        let mut out = String::from("#mentions");
        for id in &self.ids {
            out.push(' ');
            out.push_str(&id.to_string());
        }
        out.push('\n');
        let n = self.len();
        for i in 0..n {
            for j in i + 1..n {
                out.push_str(&format!("{} {} {}\n", self.ids[i], self.ids[j], self.data[i * n + j]));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Mention ids in ascending order; index `i` of the matrix is `ids()[i]`.
    pub fn ids(&self) -> &[MentionId] {
        &self.ids
    }

    /// Score between matrix positions `i` and `j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ids.len() + j]
    }

    pub fn position(&self, id: MentionId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Score between two mention ids.
    pub fn get(&self, a: MentionId, b: MentionId) -> Option<f64> {
        Some(self.at(self.position(a)?, self.position(b)?))
    }

    /// Restriction to the given mention ids.
    pub fn restrict(&self, ids: &[MentionId]) -> Result<Self> {
        let pos: Vec<usize> = ids
            .iter()
            .map(|&m| {
                self.position(m)
                    .ok_or_else(|| Error::InvalidScores(format!("mention {m} has no scores")))
            })
            .collect::<Result<_>>()?;
        let rows = pos
            .iter()
            .map(|&i| pos.iter().map(|&j| if i == j { 0.0 } else { self.at(i, j) }).collect())
            .collect();
        let mut m = Self::from_dense(ids.to_vec(), rows)?;
        m.digest = self.digest.clone();
        m.default_score = self.default_score;
        Ok(m)
    }

    /// Applies `f` to every off-diagonal score.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = self.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { f(self.at(i, j)) }).collect())
            .collect();
        Self::from_dense(self.ids.clone(), rows)
    }
}
