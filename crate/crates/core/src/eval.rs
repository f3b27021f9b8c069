//! Queries, gold sets, average precision and MAP.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::PremiseGraph;
use crate::pairs::ScoreTable;
use crate::retrieval::{snap_score, RetrievalModel, Vector};
use crate::tokenize::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Tfidf,
    Pvdbow,
    ExternalScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidatePool {
    #[default]
    AllEntries,
    CategoryRestricted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub strategy: Strategy,
    pub method: Method,
    pub hop_k: usize,
    pub category_filter: Option<String>,
    pub candidate_pool: CandidatePool,
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            strategy: Strategy::TokenisedExpression,
            method: Method::Tfidf,
            hop_k: 1,
            category_filter: None,
            candidate_pool: CandidatePool::AllEntries,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub id: String,
    /// Statement text only.
    pub text: String,
    pub gold: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySet {
    pub queries: Vec<EvalQuery>,
    /// Candidate pool shared by all queries, in id order; each query is
    /// ranked against the pool minus itself.
    pub pool: Vec<String>,
    /// Propositions left out because their gold set is empty.
    pub skipped: Vec<String>,
}

/// Builds queries and the candidate pool.
///
/// Queries are the theorems, lemmas and corollaries whose hop-k premise set
/// is nonempty. A category filter keeps only queries in that category; with
/// [`CandidatePool::CategoryRestricted`] the pool and the gold sets are
/// restricted to it as well, and queries whose gold set becomes empty are
/// skipped.
pub fn make_queries(corpus: &Corpus, graph: &PremiseGraph, config: &EvaluationConfig) -> Result<QuerySet> {
    if config.hop_k == 0 {
        return Err(Error::Config("hop count must be at least 1".into()));
    }
    if let Some(cat) = &config.category_filter {
        if !corpus.entries().iter().any(|e| e.categories.contains(cat)) {
            return Err(Error::Config(format!("no entry carries category {cat:?}")));
        }
    }
    let in_filter = |cats: &BTreeSet<String>| config.category_filter.as_ref().is_none_or(|c| cats.contains(c));
    let restricted = config.category_filter.is_some() && config.candidate_pool == CandidatePool::CategoryRestricted;
    let pool: Vec<String> = corpus
        .entries()
        .iter()
        .filter(|e| !restricted || in_filter(&e.categories))
        .map(|e| e.id.clone())
        .collect();
    let pool_set: BTreeSet<&str> = pool.iter().map(String::as_str).collect();

    let mut queries = Vec::new();
    let mut skipped = Vec::new();
    for entry in corpus.entries() {
        if !entry.kind.is_proposition() || !in_filter(&entry.categories) {
            continue;
        }
        let mut gold = graph.k_hop_premises(&entry.id, config.hop_k)?;
        if restricted {
            gold.retain(|g| pool_set.contains(g.as_str()));
        }
        if gold.is_empty() {
            skipped.push(entry.id.clone());
        } else {
            queries.push(EvalQuery {
                id: entry.id.clone(),
                text: entry.statement_text.clone(),
                gold,
            });
        }
    }
    if queries.is_empty() {
        return Err(Error::Config("no queries with a nonempty gold set".into()));
    }
    Ok(QuerySet { queries, pool, skipped })
}

/// Average precision of a ranking: the mean over gold items of precision at
/// each gold item's rank, gold items absent from the ranking counting 0.
pub fn average_precision<'a>(ranking: impl IntoIterator<Item = &'a str>, gold: &BTreeSet<String>) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Contract("average precision needs a nonempty gold set".into()));
    }
    let (mut hits, mut sum) = (0usize, 0.0);
    let mut seen = BTreeSet::new();
    for (i, id) in ranking.into_iter().enumerate() {
        if gold.contains(id) && seen.insert(id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / gold.len() as f64)
}

/// Average precision from the 1-based ranks of the gold items found.
fn average_precision_from_ranks(mut ranks: Vec<usize>, gold_len: usize) -> f64 {
    ranks.sort_unstable();
    ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| (i + 1) as f64 / r as f64)
        .sum::<f64>()
        / gold_len as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: EvaluationConfig,
    pub map_score: f64,
    pub num_queries: usize,
    pub candidate_pool_size: usize,
    pub per_query: BTreeMap<String, f64>,
    /// Propositions without gold premises, left out of the mean.
    pub skipped_queries: Vec<String>,
    /// Queries whose vector is zero; their candidates all score 0.
    pub zero_vector_queries: Vec<String>,
    /// External scores only: queries the score file does not cover.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unscored_queries: Vec<String>,
    /// External scores only: pool pairs missing from the score file; they
    /// rank below every scored candidate.
    #[serde(default)]
    pub missing_pair_scores: usize,
    pub timing: Timing,
}

/// Where candidate scores come from.
pub enum Scorer<'a> {
    Model(&'a RetrievalModel),
    External(&'a ScoreTable),
}

struct QueryResult {
    ap: f64,
    zero: bool,
    missing: usize,
}

/// Rank of each gold item among `scores` (descending score, ascending id),
/// found by counting rather than sorting.
fn gold_ranks(
    pool: &[String],
    scores: &[f64],
    skip: usize,
    gold: &BTreeSet<String>,
    index: &HashMap<&str, usize>,
) -> Vec<usize> {
    gold.iter()
        .filter_map(|g| index.get(g.as_str()).copied())
        .filter(|&p| p != skip)
        .map(|p| {
            let (sp, ip) = (scores[p], &pool[p]);
            1 + scores
                .iter()
                .zip(pool)
                .enumerate()
                .filter(|&(j, (&s, id))| j != skip && j != p && (s > sp || (s == sp && id < ip)))
                .count()
        })
        .collect()
}

/// Runs every query against the pool and averages AveP into MAP.
pub fn evaluate(
    corpus: &Corpus,
    graph: &PremiseGraph,
    scorer: Scorer<'_>,
    config: &EvaluationConfig,
) -> Result<EvaluationReport> {
    let start = Instant::now();
    match (&scorer, config.method) {
        (Scorer::Model(m), Method::Tfidf | Method::Pvdbow) => {
            if m.strategy() != config.strategy {
                return Err(Error::StrategyMismatch {
                    model: m.strategy().to_string(),
                    requested: config.strategy.to_string(),
                });
            }
            let expected = match config.method {
                Method::Tfidf => crate::retrieval::ModelMethod::Tfidf,
                _ => crate::retrieval::ModelMethod::Pvdbow,
            };
            if m.method() != expected {
                return Err(Error::Config(format!(
                    "model is {:?} but method {:?} was requested",
                    m.method(),
                    config.method
                )));
            }
        }
        (Scorer::External(_), Method::ExternalScores) => {}
        _ => return Err(Error::Config("scorer does not match the configured method".into())),
    }

    let QuerySet {
        mut queries,
        pool,
        skipped,
    } = make_queries(corpus, graph, config)?;
    let index: HashMap<&str, usize> = pool.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let mut unscored = Vec::new();
    if let Scorer::External(table) = &scorer {
        table.check_ids(corpus)?;
        queries.retain(|q| {
            let keep = table.has_query(&q.id);
            if !keep {
                unscored.push(q.id.clone());
            }
            keep
        });
        if queries.is_empty() {
            return Err(Error::Config("the score file covers none of the queries".into()));
        }
    }

    // unit vectors for the pool, so cosine is a dot product
    let pool_vectors: Vec<Vector> = match &scorer {
        Scorer::Model(m) => pool
            .par_iter()
            .map(|id| {
                m.doc_vector(id)
                    .map(|v| v.normalized())
                    .ok_or_else(|| Error::Lookup(format!("no document {id:?} in the model")))
            })
            .collect::<Result<_>>()?,
        Scorer::External(_) => Vec::new(),
    };

    let results: Vec<QueryResult> = queries
        .par_iter()
        .map(|q| -> Result<QueryResult> {
            let skip = index.get(q.id.as_str()).copied().unwrap_or(usize::MAX);
            let (scores, zero, missing) = match &scorer {
                Scorer::Model(m) => {
                    let qv = match index.get(q.id.as_str()) {
                        Some(&i) => pool_vectors[i].clone(),
                        None => m
                            .doc_vector(&q.id)
                            .ok_or_else(|| Error::Lookup(format!("no document {:?} in the model", q.id)))?
                            .normalized(),
                    };
                    let zero = qv.is_zero();
                    let scores: Vec<f64> = pool_vectors.iter().map(|v| snap_score(qv.dot(v))).collect();
                    (scores, zero, 0)
                }
                Scorer::External(table) => {
                    let mut missing = 0;
                    let scores = pool
                        .iter()
                        .enumerate()
                        .map(|(j, c)| match table.get(&q.id, c) {
                            Some(s) => snap_score(s),
                            None => {
                                if j != skip {
                                    missing += 1;
                                }
                                f64::NEG_INFINITY
                            }
                        })
                        .collect();
                    (scores, false, missing)
                }
            };
            let ranks = gold_ranks(&pool, &scores, skip, &q.gold, &index);
            Ok(QueryResult {
                ap: average_precision_from_ranks(ranks, q.gold.len()),
                zero,
                missing,
            })
        })
        .collect::<Result<_>>()?;

    let per_query: BTreeMap<String, f64> = queries
        .iter()
        .zip(&results)
        .map(|(q, r)| (q.id.clone(), r.ap))
        .collect();
    let map_score = results.iter().map(|r| r.ap).sum::<f64>() / results.len() as f64;
    Ok(EvaluationReport {
        config: config.clone(),
        map_score,
        num_queries: results.len(),
        candidate_pool_size: pool.len(),
        per_query,
        skipped_queries: skipped,
        zero_vector_queries: queries
            .iter()
            .zip(&results)
            .filter(|(_, r)| r.zero)
            .map(|(q, _)| q.id.clone())
            .collect(),
        unscored_queries: unscored,
        missing_pair_scores: results.iter().map(|r| r.missing).sum(),
        timing: Timing {
            seconds: start.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::{entry, proof, set};
    use crate::corpus::{Entry, EntryKind};
    use crate::retrieval::TfIdfModel;
    use crate::tokenize::Strategy;
    use crate::tokenize::Tokenizer;
    use proptest::prelude::*;

    fn gold(ids: &[&str]) -> BTreeSet<String> {
        set(ids)
    }

    #[test]
    fn average_precision_by_hand() {
        let ap = average_precision(["g1", "x", "g2"], &gold(&["g1", "g2"])).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(["g1", "g2", "x"], &gold(&["g1", "g2"])).unwrap(), 1.0);
        assert_eq!(average_precision(["x", "y"], &gold(&["g1"])).unwrap(), 0.0);
        assert!(matches!(
            average_precision(["x"], &BTreeSet::new()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ranks_and_lists_agree() {
        // ranking [g1, x, g2] → gold ranks 1 and 3
        assert_eq!(average_precision_from_ranks(vec![3, 1], 2), (1.0 + 2.0 / 3.0) / 2.0);
    }

    fn chain_corpus() -> Corpus {
        let d1 = entry("d1", EntryKind::Definition);
        let mut t2 = entry("t2", EntryKind::Theorem);
        t2.supporting_definitions = set(&["d1"]);
        let mut t1 = entry("t1", EntryKind::Theorem);
        t1.proofs = vec![proof(&["t2"])];
        let mut l = entry("l", EntryKind::Lemma);
        l.supporting_definitions = set(&["d1"]);
        l.proofs = vec![proof(&["t2"])];
        Corpus::new(vec![d1, t1, t2, l]).unwrap()
    }

    #[test]
    fn queries_and_gold_sets() {
        let corpus = chain_corpus();
        let graph = PremiseGraph::build(&corpus);
        let q1 = make_queries(&corpus, &graph, &EvaluationConfig::default()).unwrap();
        let ids: Vec<_> = q1.queries.iter().map(|q| q.id.as_str()).collect();
        assert_eq!(ids, ["l", "t1", "t2"]);
        assert_eq!(q1.queries[0].gold, gold(&["d1", "t2"]));
        assert!(q1.queries.iter().all(|q| q.id != "d1"));
        let q2 = make_queries(
            &corpus,
            &graph,
            &EvaluationConfig {
                hop_k: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(q2.queries[1].gold, gold(&["t2", "d1"]));
        assert!(matches!(
            make_queries(
                &corpus,
                &graph,
                &EvaluationConfig {
                    hop_k: 0,
                    ..Default::default()
                }
            ),
            Err(Error::Config(_))
        ));
    }

    fn with_text(mut e: Entry, text: &str) -> Entry {
        e.statement_text = text.into();
        e
    }

    fn text_corpus() -> Corpus {
        let c = chain_corpus();
        let texts = [
            ("d1", "a real number is an element of $\\R$"),
            ("l", "every real number $x$ has a square $x^2 \\ge 0$"),
            ("t1", "the sum $x + y$ of squares is a real number"),
            ("t2", "the square $x^2$ of a real number is nonnegative"),
        ];
        Corpus::new(
            c.entries()
                .iter()
                .map(|e| with_text(e.clone(), texts.iter().find(|(id, _)| *id == e.id).unwrap().1))
                .collect(),
        )
        .unwrap()
    }

    fn tfidf(corpus: &Corpus, strategy: Strategy) -> RetrievalModel {
        let t = Tokenizer::new(strategy);
        let streams: Vec<_> = corpus
            .entries()
            .iter()
            .map(|e| t.stream(&e.id, &e.statement_text))
            .collect();
        RetrievalModel::Tfidf(TfIdfModel::fit(&streams).unwrap())
    }

    #[test]
    fn evaluate_matches_ranking_by_sort() {
        let corpus = text_corpus();
        let graph = PremiseGraph::build(&corpus);
        let model = tfidf(&corpus, Strategy::TokenisedExpression);
        let config = EvaluationConfig::default();
        let report = evaluate(&corpus, &graph, Scorer::Model(&model), &config).unwrap();
        let qs = make_queries(&corpus, &graph, &config).unwrap();
        let mut total = 0.0;
        for q in &qs.queries {
            let cands: Vec<&str> = qs.pool.iter().map(String::as_str).filter(|c| *c != q.id).collect();
            let ranked = model.rank(crate::retrieval::Query::Id(&q.id), &cands).unwrap();
            let ap = average_precision(ranked.ids(), &q.gold).unwrap();
            assert!((report.per_query[&q.id] - ap).abs() < 1e-12);
            total += ap;
        }
        assert!((report.map_score - total / qs.queries.len() as f64).abs() < 1e-12);
        assert_eq!(report.num_queries, 3);
    }

    #[test]
    fn strategy_mismatch_names_both() {
        let corpus = text_corpus();
        let graph = PremiseGraph::build(&corpus);
        let model = tfidf(&corpus, Strategy::CharLevel);
        let err = evaluate(&corpus, &graph, Scorer::Model(&model), &EvaluationConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("char") && msg.contains("tokenised"), "{msg}");
    }

    #[test]
    fn category_restriction() {
        let mut entries: Vec<Entry> = text_corpus().entries().to_vec();
        for e in &mut entries {
            if e.id != "l" {
                e.categories = set(&["Algebra"]);
            }
        }
        let corpus = Corpus::new(entries).unwrap();
        let graph = PremiseGraph::build(&corpus);
        let config = EvaluationConfig {
            category_filter: Some("Algebra".into()),
            candidate_pool: CandidatePool::CategoryRestricted,
            ..Default::default()
        };
        let qs = make_queries(&corpus, &graph, &config).unwrap();
        assert_eq!(qs.pool, ["d1", "t1", "t2"]);
        assert_eq!(
            qs.queries.iter().map(|q| q.id.as_str()).collect::<Vec<_>>(),
            ["t1", "t2"]
        );
        let bad = EvaluationConfig {
            category_filter: Some("Topology".into()),
            ..Default::default()
        };
        assert!(matches!(make_queries(&corpus, &graph, &bad), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn appending_irrelevant_candidates_keeps_ap(
            n_gold in 1usize..5,
            prefix_noise in proptest::collection::vec(any::<bool>(), 0..8),
            tail in 0usize..10,
        ) {
            let gold_ids: Vec<String> = (0..n_gold).map(|i| format!("g{i}")).collect();
            let gold: BTreeSet<String> = gold_ids.iter().cloned().collect();
            let mut ranking: Vec<String> = Vec::new();
            let mut gi = 0;
            for (i, noise) in prefix_noise.iter().enumerate() {
                if *noise { ranking.push(format!("x{i}")); } else if gi < n_gold { ranking.push(gold_ids[gi].clone()); gi += 1; }
            }
            ranking.extend(gold_ids[gi..].iter().cloned());
            let before = average_precision(ranking.iter().map(String::as_str), &gold).unwrap();
            ranking.extend((0..tail).map(|i| format!("z{i}")));
            let after = average_precision(ranking.iter().map(String::as_str), &gold).unwrap();
            prop_assert_eq!(before, after);
            prop_assert!((0.0..=1.0).contains(&before));
        }
    }
}
