//! Embedding-based interpretability of hidden units.
//!
//! A unit is characterised by its `top_n` words by absolute weight; its
//! score is the mean pairwise cosine similarity of their embeddings.

use std::collections::HashMap;
use std::path::Path;

use crate::corpus::read_file;
use crate::error::{Error, Result};
use crate::replicated_softmax::RsModel;
use crate::sbm::SbmModel;
use crate::scalar::Scalar;

/// Word vectors loaded from a text file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    vectors: HashMap<String, Vec<T>>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Insert or replace a vector; returns whether the word was present.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<T>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::arg(format!("vector of length {} for dimension {}", vector.len(), self.dim)));
        }
        if vector.iter().any(|x| x.is_nan()) {
            return Err(Error::arg("embedding contains NaN"));
        }
        Ok(self.vectors.insert(word.into(), vector).is_some())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Multiply every vector by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        EmbeddingTable {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .map(|(w, v)| (w.clone(), v.iter().map(|&x| x * factor).collect()))
                .collect(),
        }
    }
}

/// Result of [`load_embeddings`].
#[derive(Debug, Clone)]
pub struct LoadedEmbeddings<T> {
    pub table: EmbeddingTable<T>,
    /// Words that appeared more than once; the last occurrence is kept.
    pub duplicates: Vec<String>,
}

/// Parse `word v1 ... vd` lines. The dimension comes from the first line.
pub fn load_embeddings<T: Scalar>(path: &Path) -> Result<LoadedEmbeddings<T>> {
    let text = read_file(path)?;
    let mut table: Option<EmbeddingTable<T>> = None;
    let mut duplicates = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let vector = fields
            .map(|t| {
                t.parse::<T>()
                    .ok()
                    .filter(|x| !x.is_nan())
                    .ok_or_else(|| Error::parse(path, lineno, format!("malformed value {t:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if vector.is_empty() {
            return Err(Error::parse(path, lineno, "word has no vector"));
        }
        let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != t.dim {
            return Err(Error::parse(path, lineno, "dimension mismatch"));
        }
        if t.insert(word, vector)? {
            log::warn!("{}: duplicate embedding for {word:?} at line {lineno}; keeping the last", path.display());
            duplicates.push(word.to_string());
        }
    }
    let table = table.ok_or_else(|| Error::parse(path, 1, "embedding file is empty"))?;
    Ok(LoadedEmbeddings { table, duplicates })
}

/// Connection weights of a hidden unit, as `(visible index, weight)`.
pub trait UnitWeights<T> {
    fn n_units(&self) -> usize;
    fn unit_weights(&self, j: usize) -> Vec<(usize, T)>;
}

impl<T: Scalar> UnitWeights<T> for RsModel<T> {
    fn n_units(&self) -> usize {
        crate::model::BoltzmannModel::n_hidden(self)
    }

    /// All words, or only unmasked ones for a pruned model.
    fn unit_weights(&self, j: usize) -> Vec<(usize, T)> {
        let k = crate::model::BoltzmannModel::n_visible(self);
        (0..k)
            .filter(|&v| self.mask().is_none_or(|m| m.is_kept(j, v)))
            .map(|v| (v, self.weight(j, v)))
            .collect()
    }
}

impl<T: Scalar> UnitWeights<T> for SbmModel<T> {
    fn n_units(&self) -> usize {
        self.structure().n_hidden()
    }

    /// Connected words only.
    fn unit_weights(&self, j: usize) -> Vec<(usize, T)> {
        let s = self.structure();
        s.unit_edges(j)
            .map(|e| (s.visible_edges()[e].1, self.edge_weights()[e]))
            .collect()
    }
}

/// Score of one hidden unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScore<T> {
    pub score: T,
    /// Top words, by vocabulary index, in rank order.
    pub top_words: Vec<usize>,
    /// Top words that had an embedding.
    pub scored_words: Vec<usize>,
    /// Fewer than two top words had embeddings; `score` is zero.
    pub insufficient: bool,
}

/// Top words by `|W|`, ties to the lower index.
pub fn top_words_by_weight<T: Scalar>(weights: &[(usize, T)], top_n: usize) -> Vec<usize> {
    let mut order: Vec<(usize, T)> = weights.to_vec();
    order.sort_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    order.into_iter().take(top_n).map(|(k, _)| k).collect()
}

fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na * nb)
}

/// Mean pairwise cosine similarity of the unit's top words present in
/// `embeddings`.
pub fn interpretability_unit<T: Scalar, M: UnitWeights<T>>(
    model: &M,
    vocab: &[String],
    j: usize,
    embeddings: &EmbeddingTable<T>,
    top_n: usize,
) -> Result<UnitScore<T>> {
    if j >= model.n_units() {
        return Err(Error::arg(format!("hidden index {j} out of range for F={}", model.n_units())));
    }
    let top = top_words_by_weight(&model.unit_weights(j), top_n);
    let mut scored = Vec::new();
    let mut vecs = Vec::new();
    for &k in &top {
        if let Some(v) = vocab.get(k).and_then(|w| embeddings.get(w)) {
            scored.push(k);
            vecs.push(v);
        }
    }
    if vecs.len() < 2 {
        return Ok(UnitScore {
            score: T::zero(),
            top_words: top,
            scored_words: scored,
            insufficient: true,
        });
    }
    let mut sum = T::zero();
    let mut pairs = 0usize;
    for a in 0..vecs.len() {
        for b in a + 1..vecs.len() {
            sum += cosine(vecs[a], vecs[b]);
            pairs += 1;
        }
    }
    Ok(UnitScore {
        score: sum / T::of_usize(pairs),
        top_words: top,
        scored_words: scored,
        insufficient: false,
    })
}

/// Mean unit score over all hidden units.
pub fn interpretability_model<T: Scalar, M: UnitWeights<T>>(
    model: &M,
    vocab: &[String],
    embeddings: &EmbeddingTable<T>,
    top_n: usize,
) -> Result<(T, Vec<UnitScore<T>>)> {
    let f = model.n_units();
    if f == 0 {
        return Err(Error::arg("model has no hidden units"));
    }
    let units = (0..f)
        .map(|j| interpretability_unit(model, vocab, j, embeddings, top_n))
        .collect::<Result<Vec<_>>>()?;
    let q = units.iter().map(|u| u.score).sum::<T>() / T::of_usize(f);
    Ok((q, units))
}
