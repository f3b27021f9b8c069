//! Python bindings: corpus loading and building, tokenization, retrieval
//! models, k-hop premises and MAP evaluation.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

use premsel_core::retrieval::Query;
use premsel_core::wiki::{build_corpus, load_pages, BuildConfig};
use premsel_core::{
    compute_stats, CandidatePool, Error, EvaluationConfig, Method, PremiseGraph, PvDbowModel, PvDbowParams,
    RetrievalModel, ScoreTable, Scorer, Strategy, TfIdfModel, Tokenizer,
};

create_exception!(premsel, PremselError, PyException);

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Lookup(_) => PyKeyError::new_err(e.to_string()),
        Error::Config(_) | Error::StrategyMismatch { .. } | Error::ProofIndex { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PremselError::new_err(e.to_string()),
    }
}

fn parse_strategy(s: &str) -> PyResult<Strategy> {
    s.parse().map_err(to_py_err)
}

/// Serializes through JSON into plain Python objects.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PremselError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Tokens of `text` under `strategy` ("expr-word", "tokenised" or "char").
#[pyfunction]
#[pyo3(signature = (text, strategy = "tokenised", keep_delimiters = true))]
fn tokenize(text: &str, strategy: &str, keep_delimiters: bool) -> PyResult<Vec<String>> {
    Ok(Tokenizer::new(parse_strategy(strategy)?)
        .with_delimiters(keep_delimiters)
        .tokens(text))
}

#[pyfunction]
fn entry_id(title: &str) -> String {
    premsel_core::entry_id(title)
}

#[pyfunction]
fn average_precision(ranking: Vec<String>, gold: Vec<String>) -> PyResult<f64> {
    let gold = gold.into_iter().collect();
    premsel_core::average_precision(ranking.iter().map(String::as_str), &gold).map_err(to_py_err)
}

#[pyclass(name = "Corpus", module = "premsel", frozen)]
struct PyCorpus {
    inner: premsel_core::Corpus,
    graph: PremiseGraph,
}

impl PyCorpus {
    fn wrap(inner: premsel_core::Corpus) -> Self {
        let graph = PremiseGraph::build(&inner);
        PyCorpus { inner, graph }
    }
}

#[pymethods]
impl PyCorpus {
    /// Reads the per-kind JSON files from a directory.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        premsel_core::Corpus::read_dir(&dir).map(Self::wrap).map_err(to_py_err)
    }

    /// Builds from a MediaWiki XML export or a directory of `.wiki` pages.
    /// Returns `(corpus, report)`.
    #[staticmethod]
    #[pyo3(signature = (source, min_count = 100))]
    fn build(py: Python<'_>, source: PathBuf, min_count: usize) -> PyResult<(Self, Py<PyAny>)> {
        let (corpus, report) = py
            .detach(|| {
                let pages = load_pages(&source)?;
                build_corpus(
                    &pages,
                    &BuildConfig {
                        min_count,
                        ..Default::default()
                    },
                )
            })
            .map_err(to_py_err)?;
        Ok((Self::wrap(corpus), to_py(py, &report)?))
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.write_dir(&dir).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: &str) -> bool {
        self.inner.get(id).is_some()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({} entries)", self.inner.len())
    }

    fn ids(&self) -> Vec<String> {
        self.inner.entries().iter().map(|e| e.id.clone()).collect()
    }

    /// The entry as a dict.
    fn get(&self, py: Python<'_>, id: &str) -> PyResult<Py<PyAny>> {
        match self.inner.get(id) {
            Some(e) => to_py(py, e),
            None => Err(PyKeyError::new_err(id.to_string())),
        }
    }

    /// Validation issues as strings; empty when the corpus is valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().issues.iter().map(|i| i.to_string()).collect()
    }

    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &compute_stats(&self.inner, &self.graph))
    }

    /// Premises reachable in 1 to `k` steps, sorted.
    #[pyo3(signature = (id, k = 1))]
    fn k_hop(&self, id: &str, k: usize) -> PyResult<Vec<String>> {
        Ok(self
            .graph
            .k_hop_premises(id, k)
            .map_err(to_py_err)?
            .into_iter()
            .collect())
    }
}

#[pyclass(name = "Model", module = "premsel", frozen)]
struct PyModel {
    inner: RetrievalModel,
}

fn streams(corpus: &PyCorpus, strategy: Strategy) -> Vec<premsel_core::TokenStream> {
    let tok = Tokenizer::new(strategy);
    corpus
        .inner
        .entries()
        .iter()
        .map(|e| tok.stream(&e.id, &e.statement_text))
        .collect()
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (corpus, strategy = "tokenised"))]
    fn tfidf(py: Python<'_>, corpus: &PyCorpus, strategy: &str) -> PyResult<Self> {
        let s = streams(corpus, parse_strategy(strategy)?);
        let m = py.detach(|| TfIdfModel::fit(&s)).map_err(to_py_err)?;
        Ok(PyModel {
            inner: RetrievalModel::Tfidf(m),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (corpus, strategy = "tokenised", dim = 100, epochs = 20, negative = 5, min_count = 2, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn pvdbow(
        py: Python<'_>,
        corpus: &PyCorpus,
        strategy: &str,
        dim: usize,
        epochs: usize,
        negative: usize,
        min_count: u64,
        seed: u64,
    ) -> PyResult<Self> {
        let s = streams(corpus, parse_strategy(strategy)?);
        let params = PvDbowParams {
            dim,
            epochs,
            negative,
            min_count,
            seed,
            ..Default::default()
        };
        let m = py.detach(|| PvDbowModel::train(&s, &params)).map_err(to_py_err)?;
        Ok(PyModel {
            inner: RetrievalModel::Pvdbow(m),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        RetrievalModel::load(&path)
            .map(|inner| PyModel { inner })
            .map_err(to_py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    #[getter]
    fn strategy(&self) -> String {
        self.inner.strategy().to_string()
    }

    #[getter]
    fn method(&self) -> String {
        match self.inner.method() {
            premsel_core::retrieval::ModelMethod::Tfidf => "tfidf".into(),
            premsel_core::retrieval::ModelMethod::Pvdbow => "pvdbow".into(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Model({}, {}, {} documents)",
            self.method(),
            self.strategy(),
            self.inner.doc_ids().len()
        )
    }

    /// Ranks `candidates` (all documents when omitted) against a document id
    /// or, with `text=True`, free text. Returns `(id, score)` pairs.
    #[pyo3(signature = (query, candidates = None, text = false, top = None))]
    fn rank(
        &self,
        query: &str,
        candidates: Option<Vec<String>>,
        text: bool,
        top: Option<usize>,
    ) -> PyResult<Vec<(String, f64)>> {
        let pool: Vec<&str> = match &candidates {
            Some(c) => c.iter().map(String::as_str).collect(),
            None => self
                .inner
                .doc_ids()
                .iter()
                .map(String::as_str)
                .filter(|id| text || *id != query)
                .collect(),
        };
        let q = if text { Query::Text(query) } else { Query::Id(query) };
        let mut ranked = self.inner.rank(q, &pool).map_err(to_py_err)?.ranking;
        if let Some(n) = top {
            ranked.truncate(n);
        }
        Ok(ranked)
    }
}

/// Ranks every query's candidate pool and returns the report as a dict.
/// Give a `model`, or a `scores` path for external scores.
#[pyfunction]
#[pyo3(signature = (corpus, model = None, scores = None, hops = 1, category = None, restrict_pool = true, strategy = None))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    corpus: &PyCorpus,
    model: Option<&PyModel>,
    scores: Option<PathBuf>,
    hops: usize,
    category: Option<String>,
    restrict_pool: bool,
    strategy: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let pool = if restrict_pool {
        CandidatePool::CategoryRestricted
    } else {
        CandidatePool::AllEntries
    };
    let report = match (model, scores) {
        (Some(m), None) => {
            let config = EvaluationConfig {
                strategy: match strategy {
                    Some(s) => parse_strategy(s)?,
                    None => m.inner.strategy(),
                },
                method: match m.inner.method() {
                    premsel_core::retrieval::ModelMethod::Tfidf => Method::Tfidf,
                    premsel_core::retrieval::ModelMethod::Pvdbow => Method::Pvdbow,
                },
                hop_k: hops,
                category_filter: category,
                candidate_pool: pool,
                seed: 0,
            };
            py.detach(|| premsel_core::evaluate(&corpus.inner, &corpus.graph, Scorer::Model(&m.inner), &config))
        }
        (None, Some(path)) => {
            let table = ScoreTable::load(&path).map_err(to_py_err)?;
            let config = EvaluationConfig {
                method: Method::ExternalScores,
                hop_k: hops,
                category_filter: category,
                candidate_pool: pool,
                ..Default::default()
            };
            py.detach(|| premsel_core::evaluate(&corpus.inner, &corpus.graph, Scorer::External(&table), &config))
        }
        _ => return Err(PyValueError::new_err("give exactly one of model or scores")),
    }
    .map_err(to_py_err)?;
    to_py(py, &report)
}

#[pymodule]
fn premsel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PremselError", m.py().get_type::<PremselError>())?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(entry_id, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
