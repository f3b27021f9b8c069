//! Premise dependency graph, corpus statistics and k-hop premise sets.
//!
//! Edges point from an entry to each of its premises. Entries without any
//! incident edge are not graph nodes, though they still count as known ids
//! for [`PremiseGraph::k_hop_premises`].
//!
//! `k_hop_premises(e, k)` is the union of entries reachable through paths of
//! length 1 to `k`, not the entries at exactly `k` hops.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntryKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PremiseGraph {
    /// Every corpus id, sorted; graph-local indices refer to this list.
    ids: Vec<String>,
    index: HashMap<String, usize>,
    /// Sorted, deduplicated premise indices per entry.
    premises: Vec<Vec<usize>>,
    dependants: Vec<Vec<usize>>,
}

impl PremiseGraph {
    pub fn build(corpus: &Corpus) -> Self {
        let mut ids: Vec<String> = corpus.entries().iter().map(|e| e.id.clone()).collect();
        ids.sort();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut premises = vec![Vec::new(); ids.len()];
        let mut dependants = vec![Vec::new(); ids.len()];
        for entry in corpus.entries() {
            let from = index[&entry.id];
            for premise in entry.premises().iter() {
                if let Some(&to) = index.get(premise) {
                    premises[from].push(to);
                    dependants[to].push(from);
                }
            }
        }
        for list in premises.iter_mut().chain(dependants.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        PremiseGraph {
            ids,
            index,
            premises,
            dependants,
        }
    }

    /// Builds from explicit adjacency; ids missing from `edges` keys but
    /// named as targets are added. Self-loops are dropped.
    pub fn from_edges<'a>(all_ids: impl IntoIterator<Item = &'a str>, edges: &[(String, String)]) -> Self {
        let mut set: BTreeSet<String> = all_ids.into_iter().map(str::to_string).collect();
        for (a, b) in edges {
            set.insert(a.clone());
            set.insert(b.clone());
        }
        let ids: Vec<String> = set.into_iter().collect();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut premises = vec![Vec::new(); ids.len()];
        let mut dependants = vec![Vec::new(); ids.len()];
        for (a, b) in edges {
            if a == b {
                continue;
            }
            let (from, to) = (index[a], index[b]);
            premises[from].push(to);
            dependants[to].push(from);
        }
        for list in premises.iter_mut().chain(dependants.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        PremiseGraph {
            ids,
            index,
            premises,
            dependants,
        }
    }

    /// Ids with at least one incident edge, sorted.
    pub fn nodes(&self) -> Vec<&str> {
        (0..self.ids.len())
            .filter(|&i| !self.premises[i].is_empty() || !self.dependants[i].is_empty())
            .map(|i| self.ids[i].as_str())
            .collect()
    }

    pub fn node_count(&self) -> usize {
        (0..self.ids.len())
            .filter(|&i| !self.premises[i].is_empty() || !self.dependants[i].is_empty())
            .count()
    }

    /// Edges in lexicographic (from, to) order.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (from, targets) in self.premises.iter().enumerate() {
            for &to in targets {
                edges.push((self.ids[from].as_str(), self.ids[to].as_str()));
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.premises.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn direct_premises(&self, id: &str) -> Result<BTreeSet<String>> {
        let i = self.lookup(id)?;
        Ok(self.premises[i].iter().map(|&j| self.ids[j].clone()).collect())
    }

    pub fn premise_count(&self, id: &str) -> Result<usize> {
        Ok(self.premises[self.lookup(id)?].len())
    }

    pub fn dependant_count(&self, id: &str) -> Result<usize> {
        Ok(self.dependants[self.lookup(id)?].len())
    }

    fn lookup(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::Lookup(id.to_string()))
    }

    pub fn k_hop_premises(&self, id: &str, k: usize) -> Result<BTreeSet<String>> {
        if k == 0 {
            return Err(Error::Config("hop count k must be at least 1".into()));
        }
        let start = self.lookup(id)?;
        let mut visited = vec![false; self.ids.len()];
        visited[start] = true;
        let mut frontier = vec![start];
        let mut reached = BTreeSet::new();
        for _ in 0..k {
            let mut next = Vec::new();
            for &node in &frontier {
                for &p in &self.premises[node] {
                    if !visited[p] {
                        visited[p] = true;
                        reached.insert(self.ids[p].clone());
                        next.push(p);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(reached)
    }

    /// Gold premise sets at `k` hops for every entry with a nonempty set.
    pub fn k_hop_all(&self, k: usize) -> Result<BTreeMap<String, BTreeSet<String>>> {
        let mut gold = BTreeMap::new();
        for id in &self.ids {
            let set = self.k_hop_premises(id, k)?;
            if !set.is_empty() {
                gold.insert(id.clone(), set);
            }
        }
        Ok(gold)
    }

    /// Strongly connected components of more than one entry, each sorted,
    /// listed in order of their smallest id.
    pub fn cycles(&self) -> Vec<Vec<String>> {
        let mut graph: DiGraph<usize, ()> = DiGraph::with_capacity(self.ids.len(), self.edge_count());
        let nodes: Vec<_> = (0..self.ids.len()).map(|i| graph.add_node(i)).collect();
        for (from, targets) in self.premises.iter().enumerate() {
            for &to in targets {
                graph.add_edge(nodes[from], nodes[to], ());
            }
        }
        let mut cycles: Vec<Vec<String>> = tarjan_scc(&graph)
            .into_iter()
            .filter(|component| component.len() > 1)
            .map(|component| {
                let mut ids: Vec<String> = component.into_iter().map(|n| self.ids[graph[n]].clone()).collect();
                ids.sort();
                ids
            })
            .collect();
        cycles.sort();
        cycles
    }
}

/// Counts over contiguous ranges of a unit-width histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeCount {
    pub low: usize,
    pub high: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPremiseEntry {
    pub id: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub total_entries: usize,
    pub counts_by_kind: BTreeMap<EntryKind, usize>,
    /// Number of premises → number of entries with that many (≥ 1).
    pub premise_count_histogram: BTreeMap<usize, usize>,
    /// Number of dependants → number of entries cited that many times (≥ 1).
    pub dependant_count_histogram: BTreeMap<usize, usize>,
    pub entries_with_1_to_5_premises: RangeCount,
    pub entries_with_1_to_3_dependants: RangeCount,
    pub node_count: usize,
    pub edge_count: usize,
    pub max_premise_entry: Option<MaxPremiseEntry>,
    /// Mean number of characters (Unicode scalars, math included) per statement.
    pub avg_symbols_per_statement: f64,
    pub cycles: Vec<Vec<String>>,
}

fn range_count(hist: &BTreeMap<usize, usize>, low: usize, high: usize) -> RangeCount {
    RangeCount {
        low,
        high,
        count: hist.range(low..=high).map(|(_, c)| c).sum(),
    }
}

pub fn compute_stats(corpus: &Corpus, graph: &PremiseGraph) -> GraphStats {
    let mut premise_hist = BTreeMap::new();
    let mut dependant_hist = BTreeMap::new();
    let mut max_premise: Option<MaxPremiseEntry> = None;
    for (i, id) in graph.ids.iter().enumerate() {
        let out = graph.premises[i].len();
        let inc = graph.dependants[i].len();
        if out > 0 {
            *premise_hist.entry(out).or_insert(0) += 1;
            // ids iterate in ascending order, so strict > keeps the smallest id on ties
            if max_premise.as_ref().is_none_or(|m| out > m.count) {
                max_premise = Some(MaxPremiseEntry {
                    id: id.clone(),
                    count: out,
                });
            }
        }
        if inc > 0 {
            *dependant_hist.entry(inc).or_insert(0) += 1;
        }
    }
    let total_chars: usize = corpus.entries().iter().map(|e| e.statement_text.chars().count()).sum();
    let avg = if corpus.is_empty() {
        0.0
    } else {
        total_chars as f64 / corpus.len() as f64
    };
    GraphStats {
        total_entries: corpus.len(),
        counts_by_kind: corpus.counts_by_kind(),
        entries_with_1_to_5_premises: range_count(&premise_hist, 1, 5),
        entries_with_1_to_3_dependants: range_count(&dependant_hist, 1, 3),
        premise_count_histogram: premise_hist,
        dependant_count_histogram: dependant_hist,
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        max_premise_entry: max_premise,
        avg_symbols_per_statement: avg,
        cycles: graph.cycles(),
    }
}
