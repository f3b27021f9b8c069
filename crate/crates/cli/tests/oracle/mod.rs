//! Brute-force reference implementations, written without reusing the
//! library's retrieval, graph or evaluation code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use premsel_core::{Corpus, Entry};

/// Same grid as the engine's score snapping, so ties agree.
pub fn snap(score: f64) -> f64 {
    (score / 1e-12).round() * 1e-12
}

/// Direct premises of an entry, read straight off the entry fields.
pub fn direct_premises(entry: &Entry) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = entry.supporting_definitions.iter().cloned().collect();
    for p in &entry.proofs {
        out.extend(p.supporting_propositions.iter().cloned());
    }
    out.remove(&entry.id);
    out
}

/// Nodes reachable from `start` by a walk of 1..=k edges, excluding `start`,
/// via boolean matrix powers.
pub fn k_hop(adj: &[Vec<bool>], start: usize, k: usize) -> BTreeSet<usize> {
    let n = adj.len();
    let mut walk = vec![false; n];
    walk[start] = true;
    let mut reached = vec![false; n];
    for _ in 0..k {
        let mut next = vec![false; n];
        for u in 0..n {
            if walk[u] {
                for v in 0..n {
                    if adj[u][v] {
                        next[v] = true;
                    }
                }
            }
        }
        for v in 0..n {
            reached[v] |= next[v];
        }
        walk = next;
    }
    (0..n).filter(|&v| v != start && reached[v]).collect()
}

/// Gold sets at `k` hops for every entry, by id.
pub fn gold_sets(corpus: &Corpus, k: usize) -> BTreeMap<String, BTreeSet<String>> {
    let ids: Vec<&str> = corpus.entries().iter().map(|e| e.id.as_str()).collect();
    let pos: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let n = ids.len();
    let mut adj = vec![vec![false; n]; n];
    for e in corpus.entries() {
        for p in direct_premises(e) {
            if let Some(&j) = pos.get(p.as_str()) {
                adj[pos[e.id.as_str()]][j] = true;
            }
        }
    }
    ids.iter()
        .enumerate()
        .map(|(i, id)| {
            (
                id.to_string(),
                k_hop(&adj, i, k).into_iter().map(|j| ids[j].to_string()).collect(),
            )
        })
        .collect()
}

/// Raw-count TF-IDF with `ln((1+N)/(1+df)) + 1` idf, unnormalized.
pub struct OracleTfIdf {
    vectors: HashMap<String, HashMap<String, f64>>,
}

impl OracleTfIdf {
    pub fn fit(docs: &[(String, Vec<String>)]) -> Self {
        let n = docs.len() as f64;
        let mut df: HashMap<&str, f64> = HashMap::new();
        for (_, toks) in docs {
            let distinct: BTreeSet<&str> = toks.iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1.0;
            }
        }
        let vectors = docs
            .iter()
            .map(|(id, toks)| {
                let mut v: HashMap<String, f64> = HashMap::new();
                for t in toks {
                    *v.entry(t.clone()).or_default() += 1.0;
                }
                for (t, w) in v.iter_mut() {
                    *w *= ((1.0 + n) / (1.0 + df[t.as_str()])).ln() + 1.0;
                }
                (id.clone(), v)
            })
            .collect();
        OracleTfIdf { vectors }
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let (va, vb) = (&self.vectors[a], &self.vectors[b]);
        let dot: f64 = va.iter().map(|(t, w)| w * vb.get(t).copied().unwrap_or(0.0)).sum();
        let na = va.values().map(|w| w * w).sum::<f64>().sqrt();
        let nb = vb.values().map(|w| w * w).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}

/// AveP by walking a fully sorted ranking.
pub fn average_precision(ranking: &[String], gold: &BTreeSet<String>) -> f64 {
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (i, id) in ranking.iter().enumerate() {
        if gold.contains(id) {
            hits += 1.0;
            sum += hits / (i as f64 + 1.0);
        }
    }
    sum / gold.len() as f64
}

/// Sorts candidates by snapped score descending, then id ascending.
pub fn rank(mut scored: Vec<(String, f64)>) -> Vec<String> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().map(|(id, _)| id).collect()
}

/// MAP over propositions with nonempty gold, every other entry a candidate.
/// `None` when no query qualifies.
pub fn map_all_entries(
    corpus: &Corpus,
    k: usize,
    score: impl Fn(&str, &str) -> f64,
) -> Option<(f64, BTreeMap<String, f64>)> {
    let gold = gold_sets(corpus, k);
    let mut per_query = BTreeMap::new();
    for q in corpus.entries().iter().filter(|e| e.kind.is_proposition()) {
        let g = &gold[&q.id];
        if g.is_empty() {
            continue;
        }
        let scored = corpus
            .entries()
            .iter()
            .filter(|c| c.id != q.id)
            .map(|c| (c.id.clone(), snap(score(&q.id, &c.id))))
            .collect();
        per_query.insert(q.id.clone(), average_precision(&rank(scored), g));
    }
    if per_query.is_empty() {
        return None;
    }
    let map = per_query.values().sum::<f64>() / per_query.len() as f64;
    Some((map, per_query))
}
