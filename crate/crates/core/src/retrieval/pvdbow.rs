use std::collections::{BTreeMap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rank::Vector;
use crate::error::{Error, Result};
use crate::tokenize::{Strategy, TokenStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvDbowParams {
    pub dim: usize,
    pub epochs: usize,
    pub negative: usize,
    /// Learning rate, decayed linearly from `alpha` to `min_alpha` over training.
    pub alpha: f64,
    pub min_alpha: f64,
    /// Tokens seen fewer times are dropped from the vocabulary.
    pub min_count: u64,
    /// Exponent applied to counts in the negative-sampling distribution.
    pub ns_exponent: f64,
    pub seed: u64,
    /// Epochs used to infer a vector for unseen text.
    pub infer_epochs: usize,
}

impl Default for PvDbowParams {
    fn default() -> Self {
        PvDbowParams {
            dim: 100,
            epochs: 20,
            negative: 5,
            alpha: 0.025,
            min_alpha: 0.0001,
            min_count: 2,
            ns_exponent: 0.75,
            seed: 0,
            infer_epochs: 20,
        }
    }
}

/// Distributed bag-of-words paragraph vectors trained with negative sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvDbowModel {
    pub strategy: Strategy,
    pub params: PvDbowParams,
    pub vocabulary: Vec<String>,
    pub counts: Vec<u64>,
    pub doc_ids: Vec<String>,
    pub document_vectors: Vec<Vec<f64>>,
    pub word_output_weights: Vec<Vec<f64>>,
    /// Mean loss per token update, one value per epoch.
    pub epoch_losses: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    doc_index: HashMap<String, usize>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-ln σ(x)` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Negative-sampling loss of one document vector predicting one target
/// against its negatives, with analytic gradients.
///
/// `outputs[i]` is the output vector of target `i`; `labels[i]` is true for
/// the observed token. Returns `(loss, d loss / d doc, d loss / d outputs)`.
pub fn ns_loss_and_grad(doc: &[f64], outputs: &[&[f64]], labels: &[bool]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let mut loss = 0.0;
    let mut grad_doc = vec![0.0; doc.len()];
    let mut grad_out = Vec::with_capacity(outputs.len());
    for (out, &label) in outputs.iter().zip(labels) {
        let f: f64 = doc.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
        let y = if label { 1.0 } else { 0.0 };
        loss += if label { neg_log_sigmoid(f) } else { neg_log_sigmoid(-f) };
        let e = sigmoid(f) - y;
        for (g, o) in grad_doc.iter_mut().zip(out.iter()) {
            *g += e * o;
        }
        grad_out.push(doc.iter().map(|d| e * d).collect());
    }
    (loss, grad_doc, grad_out)
}

/// One stochastic gradient step on [`ns_loss_and_grad`]'s objective.
///
/// Output vectors are updated in target order from the unchanged document
/// vector; the document update is applied at the end. For distinct
/// targets this is exactly `param -= lr * grad`. `neu1e` is scratch space
/// of length `doc.len()`. Returns the loss before the step.
pub(crate) fn sgd_step(
    doc: &mut [f64],
    outputs: &mut [Vec<f64>],
    targets: &[(usize, bool)],
    lr: f64,
    neu1e: &mut [f64],
    update_outputs: bool,
) -> f64 {
    neu1e.iter_mut().for_each(|x| *x = 0.0);
    let mut loss = 0.0;
    for &(t, label) in targets {
        let out = &mut outputs[t];
        let f: f64 = doc.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
        loss += if label { neg_log_sigmoid(f) } else { neg_log_sigmoid(-f) };
        let g = lr * (if label { 1.0 } else { 0.0 } - sigmoid(f));
        for (n, o) in neu1e.iter_mut().zip(out.iter()) {
            *n += g * o;
        }
        if update_outputs {
            for (o, d) in out.iter_mut().zip(doc.iter()) {
                *o += g * d;
            }
        }
    }
    for (d, n) in doc.iter_mut().zip(neu1e.iter()) {
        *d += n;
    }
    loss
}

struct Sampler {
    dist: WeightedIndex<f64>,
}

impl Sampler {
    fn new(counts: &[u64], exponent: f64) -> Self {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        Sampler {
            dist: WeightedIndex::new(weights).expect("vocabulary is nonempty with positive counts"),
        }
    }

    /// The positive target followed by `k` negatives that differ from it.
    fn targets(&self, positive: usize, k: usize, vocab_len: usize, rng: &mut ChaCha8Rng, out: &mut Vec<(usize, bool)>) {
        out.clear();
        out.push((positive, true));
        if vocab_len < 2 {
            return;
        }
        for _ in 0..k {
            let mut neg = self.dist.sample(rng);
            while neg == positive {
                neg = self.dist.sample(rng);
            }
            out.push((neg, false));
        }
    }
}

fn init_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bound = 0.5 / dim as f64;
    (0..dim).map(|_| rng.random_range(-bound..bound)).collect()
}

fn lr_at(params: &PvDbowParams, progress: f64) -> f64 {
    params.alpha - (params.alpha - params.min_alpha) * progress.clamp(0.0, 1.0)
}

impl PvDbowModel {
    pub fn train(streams: &[TokenStream], params: &PvDbowParams) -> Result<Self> {
        if params.dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if params.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        let Some(first) = streams.first() else {
            return Err(Error::Config("cannot train on an empty corpus".into()));
        };
        if let Some(other) = streams.iter().find(|s| s.strategy != first.strategy) {
            return Err(Error::StrategyMismatch {
                model: first.strategy.to_string(),
                requested: other.strategy.to_string(),
            });
        }
        let mut sorted: Vec<&TokenStream> = streams.iter().collect();
        sorted.sort_by(|a, b| a.source_id.cmp(&b.source_id));
        if sorted.windows(2).any(|w| w[0].source_id == w[1].source_id) {
            return Err(Error::Contract("duplicate document id".into()));
        }

        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for s in &sorted {
            for t in &s.tokens {
                *counts.entry(t).or_default() += 1;
            }
        }
        counts.retain(|_, c| *c >= params.min_count.max(1));
        if counts.is_empty() {
            return Err(Error::Config(format!(
                "no token occurs at least {} times",
                params.min_count
            )));
        }
        let vocabulary: Vec<String> = counts.keys().map(|t| t.to_string()).collect();
        let count_vec: Vec<u64> = counts.values().copied().collect();
        let index: HashMap<String, usize> = vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();

        let docs: Vec<Vec<usize>> = sorted
            .iter()
            .map(|s| s.tokens.iter().filter_map(|t| index.get(t).copied()).collect())
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut doc_vecs: Vec<Vec<f64>> = docs
            .iter()
            .map(|d| {
                let v = init_vector(params.dim, &mut rng);
                if d.is_empty() {
                    vec![0.0; params.dim]
                } else {
                    v
                }
            })
            .collect();
        let mut outputs = vec![vec![0.0; params.dim]; vocabulary.len()];
        let sampler = Sampler::new(&count_vec, params.ns_exponent);

        let total_words: usize = docs.iter().map(Vec::len).sum();
        let total = (total_words * params.epochs).max(1) as f64;
        let mut done = 0usize;
        let mut order: Vec<usize> = (0..docs.len()).collect();
        let mut targets = Vec::with_capacity(params.negative + 1);
        let mut neu1e = vec![0.0; params.dim];
        let mut epoch_losses = Vec::with_capacity(params.epochs);

        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            let (mut loss, mut updates) = (0.0, 0usize);
            for &di in &order {
                for &w in &docs[di] {
                    let lr = lr_at(params, done as f64 / total);
                    sampler.targets(w, params.negative, vocabulary.len(), &mut rng, &mut targets);
                    loss += sgd_step(&mut doc_vecs[di], &mut outputs, &targets, lr, &mut neu1e, true);
                    updates += 1;
                    done += 1;
                }
            }
            epoch_losses.push(if updates == 0 { 0.0 } else { loss / updates as f64 });
        }

        let mut model = PvDbowModel {
            strategy: first.strategy,
            params: params.clone(),
            vocabulary,
            counts: count_vec,
            doc_ids: sorted.iter().map(|s| s.source_id.clone()).collect(),
            document_vectors: doc_vecs,
            word_output_weights: outputs,
            epoch_losses,
            index: HashMap::new(),
            doc_index: HashMap::new(),
        };
        model.rebuild_index();
        Ok(model)
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        self.doc_index = self.doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn doc_vector(&self, id: &str) -> Option<Vector> {
        self.doc_vector_ref(id).map(|v| Vector::Dense(v.clone()))
    }

    pub fn doc_vector_ref(&self, id: &str) -> Option<&Vec<f64>> {
        self.doc_index.get(id).map(|&i| &self.document_vectors[i])
    }

    /// Trains a fresh document vector for unseen text with the output
    /// weights frozen. The result depends only on the model and `tokens`;
    /// text without known tokens gets the zero vector.
    pub fn infer(&self, tokens: &[String]) -> Vec<f64> {
        let words: Vec<usize> = tokens.iter().filter_map(|t| self.index.get(t).copied()).collect();
        let dim = self.params.dim;
        if words.is_empty() {
            return vec![0.0; dim];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut doc = init_vector(dim, &mut rng);
        let sampler = Sampler::new(&self.counts, self.params.ns_exponent);
        let mut outputs = self.word_output_weights.clone();
        let epochs = self.params.infer_epochs.max(1);
        let total = (words.len() * epochs) as f64;
        let mut targets = Vec::with_capacity(self.params.negative + 1);
        let mut neu1e = vec![0.0; dim];
        let mut done = 0usize;
        for _ in 0..epochs {
            for &w in &words {
                let lr = lr_at(&self.params, done as f64 / total);
                sampler.targets(w, self.params.negative, self.vocabulary.len(), &mut rng, &mut targets);
                sgd_step(&mut doc, &mut outputs, &targets, lr, &mut neu1e, false);
                done += 1;
            }
        }
        doc
    }
}
