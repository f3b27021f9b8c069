//! Natural-language premise selection: corpus model, wiki parsing,
//! tokenization, premise graphs, retrieval baselines and evaluation.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod graph;
pub mod pairs;
pub mod retrieval;
pub mod tokenize;
pub mod wiki;

pub use corpus::{
    entry_id, validate_corpus, Corpus, Entry, EntryKind, Issue, PremiseSet, Proof, ProofScope, ValidationReport,
};
pub use error::{Error, Result};
pub use eval::{
    average_precision, evaluate, make_queries, CandidatePool, EvaluationConfig, EvaluationReport, Method, Scorer,
};
pub use graph::{compute_stats, GraphStats, PremiseGraph};
pub use pairs::{export_pairs, PairConfig, PairExample, ScoreTable};
pub use retrieval::{PvDbowModel, PvDbowParams, RankedList, RetrievalModel, TfIdfModel};
pub use tokenize::{tokenize, Strategy, TokenStream, Tokenizer};
