//! TF-IDF and PV-DBOW document vectors and cosine ranking.
//!
//! Model files are text: a `premsel-model <version>` line, one line of JSON
//! with the method, tokenization strategy and full hyperparameter record,
//! then the model body as JSON. Floats round-trip exactly.

mod pvdbow;
mod rank;
mod tfidf;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use pvdbow::{ns_loss_and_grad, PvDbowModel, PvDbowParams};
pub use rank::{compare_scored, cosine, rank_vectors, snap_score, RankedList, SparseVector, Vector, SCORE_RESOLUTION};
pub use tfidf::TfIdfModel;

use crate::error::{Error, Result};
use crate::tokenize::{Strategy, Tokenizer};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "premsel-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelMethod {
    Tfidf,
    Pvdbow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub method: ModelMethod,
    pub strategy: Strategy,
    pub documents: usize,
    pub vocabulary_size: usize,
    /// PV-DBOW hyperparameters; absent for TF-IDF, which has none.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pvdbow: Option<PvDbowParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RetrievalModel {
    Tfidf(TfIdfModel),
    Pvdbow(PvDbowModel),
}

/// A ranking query: an indexed document or free text.
#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    Id(&'a str),
    Text(&'a str),
}

impl RetrievalModel {
    pub fn strategy(&self) -> Strategy {
        match self {
            RetrievalModel::Tfidf(m) => m.strategy,
            RetrievalModel::Pvdbow(m) => m.strategy,
        }
    }

    pub fn method(&self) -> ModelMethod {
        match self {
            RetrievalModel::Tfidf(_) => ModelMethod::Tfidf,
            RetrievalModel::Pvdbow(_) => ModelMethod::Pvdbow,
        }
    }

    pub fn doc_ids(&self) -> &[String] {
        match self {
            RetrievalModel::Tfidf(m) => &m.doc_ids,
            RetrievalModel::Pvdbow(m) => &m.doc_ids,
        }
    }

    pub fn header(&self) -> ModelHeader {
        match self {
            RetrievalModel::Tfidf(m) => ModelHeader {
                method: ModelMethod::Tfidf,
                strategy: m.strategy,
                documents: m.doc_ids.len(),
                vocabulary_size: m.vocabulary.len(),
                pvdbow: None,
            },
            RetrievalModel::Pvdbow(m) => ModelHeader {
                method: ModelMethod::Pvdbow,
                strategy: m.strategy,
                documents: m.doc_ids.len(),
                vocabulary_size: m.vocabulary.len(),
                pvdbow: Some(m.params.clone()),
            },
        }
    }

    pub fn doc_vector(&self, id: &str) -> Option<Vector> {
        match self {
            RetrievalModel::Tfidf(m) => m.doc_vector(id),
            RetrievalModel::Pvdbow(m) => m.doc_vector(id),
        }
    }

    /// Vector for text not in the model: TF-IDF transform, or PV-DBOW inference.
    pub fn embed_text(&self, text: &str) -> Vector {
        let tokens = Tokenizer::new(self.strategy()).tokens(text);
        match self {
            RetrievalModel::Tfidf(m) => Vector::Sparse(m.transform(&tokens)),
            RetrievalModel::Pvdbow(m) => Vector::Dense(m.infer(&tokens)),
        }
    }

    fn lookup(&self, id: &str) -> Result<Vector> {
        self.doc_vector(id)
            .ok_or_else(|| Error::Lookup(format!("no document {id:?} in the model")))
    }

    /// Ranks `candidates` by cosine similarity to the query.
    pub fn rank(&self, query: Query<'_>, candidates: &[&str]) -> Result<RankedList> {
        if candidates.is_empty() {
            return Err(Error::Contract("candidate list is empty".into()));
        }
        let (qid, qv) = match query {
            Query::Id(id) => (id.to_string(), self.lookup(id)?),
            Query::Text(text) => (String::new(), self.embed_text(text)),
        };
        let vectors = candidates.iter().map(|c| self.lookup(c)).collect::<Result<Vec<_>>>()?;
        Ok(rank_vectors(&qid, &qv, candidates.iter().copied().zip(vectors.iter())))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{MAGIC} {MODEL_FORMAT_VERSION}")?;
        serde_json::to_writer(&mut *w, &self.header())?;
        writeln!(w)?;
        match self {
            RetrievalModel::Tfidf(m) => serde_json::to_writer(&mut *w, m)?,
            RetrievalModel::Pvdbow(m) => serde_json::to_writer(&mut *w, m)?,
        }
        writeln!(w)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()
                .map_err(|e| Error::ModelFormat(format!("reading {what}: {e}")))?
                .ok_or_else(|| Error::ModelFormat(format!("missing {what}")))
        };
        let magic = next("format line")?;
        let version = magic
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| Error::ModelFormat(format!("not a model file (first line {magic:?})")))?;
        if version != MODEL_FORMAT_VERSION.to_string() {
            return Err(Error::ModelFormat(format!(
                "unsupported model format version {version}, expected {MODEL_FORMAT_VERSION}"
            )));
        }
        let header: ModelHeader =
            serde_json::from_str(&next("header")?).map_err(|e| Error::ModelFormat(format!("header: {e}")))?;
        let body = next("body")?;
        let model = match header.method {
            ModelMethod::Tfidf => {
                let mut m: TfIdfModel =
                    serde_json::from_str(&body).map_err(|e| Error::ModelFormat(format!("body: {e}")))?;
                m.rebuild_index();
                RetrievalModel::Tfidf(m)
            }
            ModelMethod::Pvdbow => {
                let mut m: PvDbowModel =
                    serde_json::from_str(&body).map_err(|e| Error::ModelFormat(format!("body: {e}")))?;
                m.rebuild_index();
                RetrievalModel::Pvdbow(m)
            }
        };
        if model.header() != header {
            return Err(Error::ModelFormat("header does not match model body".into()));
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
