use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rank::{SparseVector, Vector};
use crate::error::{Error, Result};
use crate::tokenize::{Strategy, TokenStream};

/// TF-IDF with raw term counts, smoothed idf `ln((1+N)/(1+df)) + 1` and
/// L2-normalized document vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub strategy: Strategy,
    /// Tokens in lexicographic order; a token's index is its position.
    pub vocabulary: Vec<String>,
    pub document_frequencies: Vec<u64>,
    pub corpus_size: usize,
    /// Document ids in ascending order.
    pub doc_ids: Vec<String>,
    pub document_vectors: Vec<SparseVector>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    #[serde(skip)]
    doc_index: HashMap<String, usize>,
}

fn check_streams(streams: &[TokenStream]) -> Result<Strategy> {
    let Some(first) = streams.first() else {
        return Err(Error::Config("cannot fit a model on an empty corpus".into()));
    };
    if streams.iter().all(|s| s.tokens.is_empty()) {
        return Err(Error::Config("every token stream is empty".into()));
    }
    if let Some(other) = streams.iter().find(|s| s.strategy != first.strategy) {
        return Err(Error::StrategyMismatch {
            model: first.strategy.to_string(),
            requested: other.strategy.to_string(),
        });
    }
    let mut seen = BTreeSet::new();
    for s in streams {
        if !seen.insert(s.source_id.as_str()) {
            return Err(Error::Contract(format!("duplicate document id {}", s.source_id)));
        }
    }
    Ok(first.strategy)
}

impl TfIdfModel {
    pub fn fit(streams: &[TokenStream]) -> Result<Self> {
        let strategy = check_streams(streams)?;
        let mut sorted: Vec<&TokenStream> = streams.iter().collect();
        sorted.sort_by(|a, b| a.source_id.cmp(&b.source_id));

        let mut df: BTreeMap<&str, u64> = BTreeMap::new();
        for s in &sorted {
            let distinct: BTreeSet<&str> = s.tokens.iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        let vocabulary: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let document_frequencies: Vec<u64> = df.values().copied().collect();
        let mut model = TfIdfModel {
            strategy,
            vocabulary,
            document_frequencies,
            corpus_size: sorted.len(),
            doc_ids: sorted.iter().map(|s| s.source_id.clone()).collect(),
            document_vectors: Vec::new(),
            index: HashMap::new(),
            doc_index: HashMap::new(),
        };
        model.rebuild_index();
        model.document_vectors = sorted.par_iter().map(|s| model.transform(&s.tokens)).collect();
        Ok(model)
    }

    /// Restores lookup tables after deserialization.
    pub(crate) fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        self.doc_index = self.doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
    }

    fn idf_at(&self, index: u32) -> f64 {
        let n = self.corpus_size as f64;
        let df = self.document_frequencies[index as usize] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.idf_at(i))
    }

    /// L2-normalized TF-IDF vector of a token sequence. Unknown tokens are
    /// ignored; with none known the result is empty (the zero vector).
    pub fn transform(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for t in tokens {
            if let Some(&i) = self.index.get(t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut v: SparseVector = counts
            .into_iter()
            .map(|(i, tf)| (i, tf as f64 * self.idf_at(i)))
            .collect();
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut v {
                *w /= norm;
            }
        }
        v
    }

    pub fn doc_vector(&self, id: &str) -> Option<Vector> {
        self.doc_index
            .get(id)
            .map(|&i| Vector::Sparse(self.document_vectors[i].clone()))
    }

    pub fn doc_vector_ref(&self, id: &str) -> Option<&SparseVector> {
        self.doc_index.get(id).map(|&i| &self.document_vectors[i])
    }
}
