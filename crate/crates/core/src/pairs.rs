//! Pair files for pairwise relevance training and score files coming back
//! from an external scorer.
//!
//! Both are UTF-8, one record per line, tab-separated, no header. Text
//! fields escape `\` as `\\`, tab as `\t`, newline as `\n` and carriage
//! return as `\r`.
//!
//! - pairs: `query_id  candidate_id  label(1|0)  text_a  text_b`
//! - scores: `query_id  candidate_id  score`

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::QuerySet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExample {
    pub query_id: String,
    pub candidate_id: String,
    pub label: bool,
    pub text_a: String,
    pub text_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    /// Negatives sampled per positive.
    pub negative_ratio: usize,
    /// Share of queries sent to the dev split.
    pub dev_fraction: f64,
    pub seed: u64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            negative_ratio: 4,
            dev_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSplit {
    pub train: Vec<PairExample>,
    pub dev: Vec<PairExample>,
}

/// Positive pairs for every gold premise and `negative_ratio` sampled
/// non-premises per positive, split by query into train and dev.
///
/// Negatives come from the pool minus the query and its gold set, drawn
/// without replacement; a query whose pool is too small gets all of it.
/// Texts are the raw statements, math included.
pub fn export_pairs(corpus: &Corpus, queries: &QuerySet, config: &PairConfig) -> Result<PairSplit> {
    if config.negative_ratio < 1 {
        return Err(Error::Config("negative ratio must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.dev_fraction) {
        return Err(Error::Config(format!(
            "dev fraction {} is outside [0, 1]",
            config.dev_fraction
        )));
    }
    let text = |id: &str| -> Result<String> {
        corpus
            .get(id)
            .map(|e| e.statement_text.clone())
            .ok_or_else(|| Error::Lookup(format!("no entry {id:?}")))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<&str> = queries.queries.iter().map(|q| q.id.as_str()).collect();
    order.shuffle(&mut rng);
    let n_dev = (config.dev_fraction * order.len() as f64).round() as usize;
    let dev: HashSet<&str> = order[..n_dev.min(order.len())].iter().copied().collect();

    let mut split = PairSplit::default();
    for q in &queries.queries {
        let text_a = text(&q.id)?;
        let mut pairs = Vec::new();
        for g in &q.gold {
            pairs.push(PairExample {
                query_id: q.id.clone(),
                candidate_id: g.clone(),
                label: true,
                text_a: text_a.clone(),
                text_b: text(g)?,
            });
        }
        let negatives: Vec<&String> = queries
            .pool
            .iter()
            .filter(|c| **c != q.id && !q.gold.contains(*c))
            .collect();
        let want = (q.gold.len() * config.negative_ratio).min(negatives.len());
        let mut picked: Vec<usize> = sample(&mut rng, negatives.len(), want).into_vec();
        picked.sort_unstable();
        for i in picked {
            pairs.push(PairExample {
                query_id: q.id.clone(),
                candidate_id: negatives[i].clone(),
                label: false,
                text_a: text_a.clone(),
                text_b: text(negatives[i])?,
            });
        }
        if dev.contains(q.id.as_str()) {
            split.dev.extend(pairs);
        } else {
            split.train.extend(pairs);
        }
    }
    Ok(split)
}

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn write_pairs(w: &mut impl Write, pairs: &[PairExample]) -> std::io::Result<()> {
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            escape_field(&p.query_id),
            escape_field(&p.candidate_id),
            u8::from(p.label),
            escape_field(&p.text_a),
            escape_field(&p.text_b)
        )?;
    }
    Ok(())
}

pub fn read_pairs(r: impl BufRead) -> Result<Vec<PairExample>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::ModelFormat(format!("pair file line {}: {e}", n + 1)))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::ModelFormat(format!(
                "pair file line {}: expected 5 fields, found {}",
                n + 1,
                f.len()
            )));
        }
        let label = match f[2] {
            "1" => true,
            "0" => false,
            other => return Err(Error::ModelFormat(format!("pair file line {}: label {other:?}", n + 1))),
        };
        out.push(PairExample {
            query_id: unescape_field(f[0]),
            candidate_id: unescape_field(f[1]),
            label,
            text_a: unescape_field(f[3]),
            text_b: unescape_field(f[4]),
        });
    }
    Ok(out)
}

/// Relevance scores keyed by `(query_id, candidate_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    scores: HashMap<String, HashMap<String, f64>>,
}

impl ScoreTable {
    pub fn insert(&mut self, query: &str, candidate: &str, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::Contract(format!(
                "score for ({query}, {candidate}) is not finite"
            )));
        }
        let prev = self
            .scores
            .entry(query.to_string())
            .or_default()
            .insert(candidate.to_string(), score);
        if prev.is_some() {
            return Err(Error::Contract(format!("duplicate score for ({query}, {candidate})")));
        }
        Ok(())
    }

    pub fn get(&self, query: &str, candidate: &str) -> Option<f64> {
        self.scores.get(query)?.get(candidate).copied()
    }

    pub fn has_query(&self, query: &str) -> bool {
        self.scores.contains_key(query)
    }

    pub fn len(&self) -> usize {
        self.scores.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fails on any id the corpus does not contain.
    pub fn check_ids(&self, corpus: &Corpus) -> Result<()> {
        let mut unknown = BTreeSet::new();
        for (q, cands) in &self.scores {
            if corpus.get(q).is_none() {
                unknown.insert(q.as_str());
            }
            unknown.extend(cands.keys().map(String::as_str).filter(|c| corpus.get(c).is_none()));
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            let list: Vec<&str> = unknown.into_iter().take(5).collect();
            Err(Error::Lookup(format!(
                "score file names ids not in the corpus: {}",
                list.join(", ")
            )))
        }
    }

    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut table = ScoreTable::default();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::ModelFormat(format!("score file line {}: {e}", n + 1)))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::ModelFormat(format!(
                    "score file line {}: expected 3 fields, found {}",
                    n + 1,
                    f.len()
                )));
            }
            let score: f64 = f[2]
                .trim()
                .parse()
                .map_err(|_| Error::ModelFormat(format!("score file line {}: bad score {:?}", n + 1, f[2])))?;
            table
                .insert(&unescape_field(f[0]), &unescape_field(f[1]), score)
                .map_err(|e| Error::ModelFormat(format!("score file line {}: {e}", n + 1)))?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(file))
    }

    /// Writes records sorted by query then candidate.
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut queries: Vec<&String> = self.scores.keys().collect();
        queries.sort();
        for q in queries {
            let mut cands: Vec<(&String, &f64)> = self.scores[q].iter().collect();
            cands.sort_by(|a, b| a.0.cmp(b.0));
            for (c, s) in cands {
                writeln!(w, "{}\t{}\t{}", escape_field(q), escape_field(c), s)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::{entry, proof, set};
    use crate::corpus::EntryKind;
    use crate::eval::{make_queries, EvaluationConfig};
    use crate::graph::PremiseGraph;
    use proptest::prelude::*;

    fn corpus() -> Corpus {
        let mut entries = Vec::new();
        for i in 0..8 {
            let mut d = entry(&format!("d{i}"), EntryKind::Definition);
            d.statement_text = format!("Definition {i}\twith a tab\nand a newline $x_{i}$");
            entries.push(d);
        }
        let mut t = entry("t", EntryKind::Theorem);
        t.supporting_definitions = set(&["d0", "d1"]);
        t.proofs = vec![proof(&["u"])];
        let mut u = entry("u", EntryKind::Theorem);
        u.supporting_definitions = set(&["d2"]);
        entries.push(t);
        entries.push(u);
        Corpus::new(entries).unwrap()
    }

    fn split(ratio: usize, seed: u64) -> PairSplit {
        let c = corpus();
        let g = PremiseGraph::build(&c);
        let qs = make_queries(&c, &g, &EvaluationConfig::default()).unwrap();
        export_pairs(
            &c,
            &qs,
            &PairConfig {
                negative_ratio: ratio,
                dev_fraction: 0.5,
                seed,
            },
        )
        .unwrap()
    }

    #[test]
    fn counts_per_ratio() {
        let s = split(1, 0);
        let all: Vec<_> = s.train.iter().chain(&s.dev).collect();
        let t: Vec<_> = all.iter().filter(|p| p.query_id == "t").collect();
        assert_eq!(t.iter().filter(|p| p.label).count(), 3);
        assert_eq!(t.iter().filter(|p| !p.label).count(), 3);
    }

    #[test]
    fn negatives_are_never_gold() {
        let c = corpus();
        let g = PremiseGraph::build(&c);
        let s = split(2, 9);
        for p in s.train.iter().chain(&s.dev) {
            let gold = g.k_hop_premises(&p.query_id, 1).unwrap();
            assert_eq!(p.label, gold.contains(&p.candidate_id), "{p:?}");
            assert_ne!(p.query_id, p.candidate_id);
        }
    }

    #[test]
    fn no_query_in_both_splits() {
        let s = split(2, 3);
        let train: BTreeSet<_> = s.train.iter().map(|p| &p.query_id).collect();
        let dev: BTreeSet<_> = s.dev.iter().map(|p| &p.query_id).collect();
        assert!(train.is_disjoint(&dev));
        assert_eq!(train.len() + dev.len(), 2);
    }

    #[test]
    fn seeded_runs_are_identical() {
        assert_eq!(split(2, 42), split(2, 42));
    }

    #[test]
    fn zero_ratio_is_config_error() {
        let c = corpus();
        let g = PremiseGraph::build(&c);
        let qs = make_queries(&c, &g, &EvaluationConfig::default()).unwrap();
        let cfg = PairConfig {
            negative_ratio: 0,
            ..Default::default()
        };
        assert!(matches!(export_pairs(&c, &qs, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn pair_files_round_trip() {
        let s = split(2, 1);
        let mut buf = Vec::new();
        write_pairs(&mut buf, &s.train).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), s.train.len());
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), s.train);
    }

    #[test]
    fn score_file_parsing() {
        let table = ScoreTable::read("# comment\nt\td0\t0.9\nt\tu\t0.25\n\nu\td2\t1e-3\n".as_bytes()).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.get("t", "u"), Some(0.25));
        assert!(table.check_ids(&corpus()).is_ok());
        assert!(ScoreTable::read("t\td0\tNaN\n".as_bytes()).is_err());
        assert!(ScoreTable::read("t\td0\n".as_bytes()).is_err());
        assert!(ScoreTable::read("t\td0\t1\nt\td0\t2\n".as_bytes()).is_err());
        let stray = ScoreTable::read("t\tzzz\t1\n".as_bytes()).unwrap();
        assert!(matches!(stray.check_ids(&corpus()), Err(Error::Lookup(_))));
    }

    proptest! {
        #[test]
        fn escaping_round_trips(s in "[a-z\\\\\t\n\r ]{0,20}") {
            let e = escape_field(&s);
            prop_assert!(!e.contains('\t') && !e.contains('\n'));
            prop_assert_eq!(unescape_field(&e), s);
        }
    }
}
