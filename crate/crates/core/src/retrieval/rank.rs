use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Sparse vector: `(index, weight)` pairs sorted by index, no duplicates.
pub type SparseVector = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "values", rename_all = "snake_case")]
pub enum Vector {
    Sparse(SparseVector),
    Dense(Vec<f64>),
}

impl Vector {
    pub fn norm(&self) -> f64 {
        match self {
            Vector::Sparse(v) => v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt(),
            Vector::Dense(v) => v.iter().map(|w| w * w).sum::<f64>().sqrt(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Vector::Sparse(v) => v.iter().all(|(_, w)| *w == 0.0),
            Vector::Dense(v) => v.iter().all(|w| *w == 0.0),
        }
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        match (self, other) {
            (Vector::Sparse(a), Vector::Sparse(b)) => sparse_dot(a, b),
            (Vector::Dense(a), Vector::Dense(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Vector::Sparse(s), Vector::Dense(d)) | (Vector::Dense(d), Vector::Sparse(s)) => {
                s.iter().filter_map(|&(i, w)| d.get(i as usize).map(|x| w * x)).sum()
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        match self {
            Vector::Sparse(v) => Vector::Sparse(v.iter().map(|&(i, w)| (i, w * factor)).collect()),
            Vector::Dense(v) => Vector::Dense(v.iter().map(|w| w * factor).collect()),
        }
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(&self) -> Vector {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / n)
        }
    }
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut sum) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

/// Scores closer than this are ties, broken by id.
pub const SCORE_RESOLUTION: f64 = 1e-12;

/// Rounds a score to [`SCORE_RESOLUTION`] so values that differ only by
/// floating-point noise compare equal.
pub fn snap_score(score: f64) -> f64 {
    (score / SCORE_RESOLUTION).round() * SCORE_RESOLUTION
}

/// Cosine similarity, 0 when either vector has zero norm.
pub fn cosine(a: &Vector, b: &Vector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

/// Descending score, then ascending id.
pub fn compare_scored(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    /// Candidates by descending score, ties by ascending id.
    pub ranking: Vec<(String, f64)>,
}

impl RankedList {
    /// Sorts scored candidates, dropping the query itself. Scores are
    /// snapped before comparison.
    pub fn from_scores(query_id: &str, scores: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut ranking: Vec<(String, f64)> = scores
            .into_iter()
            .filter(|(id, _)| id != query_id)
            .map(|(id, s)| (id, snap_score(s)))
            .collect();
        ranking.sort_by(|a, b| compare_scored((&a.0, a.1), (&b.0, b.1)));
        ranking.dedup_by(|a, b| a.0 == b.0);
        RankedList {
            query_id: query_id.to_string(),
            ranking,
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ranking.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }
}

/// Ranks `candidates` against `query` by cosine similarity.
pub fn rank_vectors<'a>(
    query_id: &str,
    query: &Vector,
    candidates: impl IntoIterator<Item = (&'a str, &'a Vector)>,
) -> RankedList {
    RankedList::from_scores(
        query_id,
        candidates.into_iter().map(|(id, v)| (id.to_string(), cosine(query, v))),
    )
}
