//! Sparse-topic corpus generator with known word groups.
//!
//! Each document switches on a random subset of topics; tokens come from the
//! words of the active topics, plus a little uniform background noise.
//! Planted pairs make a topic also emit one word owned by another group.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub vocab_size: usize,
    pub n_groups: usize,
    pub n_docs: usize,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    /// Probability that a topic is active in a document.
    pub topic_prob: f64,
    /// Probability that a token is drawn uniformly from the vocabulary.
    pub background: f64,
    /// `(topic, r)`: topic also emits the first word of group `r`.
    pub planted: Vec<(usize, usize)>,
    /// Emission weight of a planted word relative to the topic's mean word.
    pub plant_weight: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            vocab_size: 60,
            n_groups: 8,
            n_docs: 3300,
            doc_len_min: 20,
            doc_len_max: 50,
            topic_prob: 0.3,
            background: 0.05,
            planted: vec![(0, 1), (2, 3)],
            plant_weight: 0.6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Ground-truth word groups.
    pub groups: Vec<Vec<usize>>,
    /// Group label of every word.
    pub labels: Vec<usize>,
    /// `(topic, word)` cross-group emissions.
    pub planted: Vec<(usize, usize)>,
}

/// Cumulative distribution over `(word, weight)` pairs.
struct Emission {
    words: Vec<usize>,
    cdf: Vec<f64>,
}

impl Emission {
    fn new(pairs: &[(usize, f64)]) -> Self {
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(pairs.len());
        for &(_, w) in pairs {
            acc += w;
            cdf.push(acc);
        }
        Emission {
            words: pairs.iter().map(|p| p.0).collect(),
            cdf,
        }
    }

    fn draw(&self, r: &mut rng::Rng) -> usize {
        let u = r.random::<f64>() * self.cdf.last().copied().unwrap_or(0.0);
        let i = self.cdf.partition_point(|&c| c <= u).min(self.words.len() - 1);
        self.words[i]
    }
}

pub fn generate(config: &SyntheticConfig, seed: u64) -> Result<SyntheticCorpus> {
    let (k, g) = (config.vocab_size, config.n_groups);
    if g == 0 || k < g {
        return Err(Error::arg(format!("cannot split K={k} words into {g} groups")));
    }
    if config.doc_len_min == 0 || config.doc_len_min > config.doc_len_max {
        return Err(Error::arg("document length range is empty"));
    }
    if !(0.0..=1.0).contains(&config.topic_prob) || !(0.0..1.0).contains(&config.background) {
        return Err(Error::arg("probabilities must lie in [0, 1]"));
    }
    let mut words: Vec<usize> = (0..k).collect();
    words.shuffle(&mut rng::stream(seed, &[0x5e, 0]));
    let mut groups = Vec::with_capacity(g);
    let mut start = 0;
    for i in 0..g {
        let size = k / g + usize::from(i < k % g);
        groups.push(words[start..start + size].to_vec());
        start += size;
    }
    let mut labels = vec![0; k];
    for (i, grp) in groups.iter().enumerate() {
        for &v in grp {
            labels[v] = i;
        }
    }
    let mut planted = Vec::new();
    for &(t, r) in &config.planted {
        if t >= g || r >= g || t == r {
            return Err(Error::arg(format!("planted pair ({t}, {r}) is invalid for {g} groups")));
        }
        planted.push((t, groups[r][0]));
    }
    let emissions: Vec<Emission> = groups
        .iter()
        .enumerate()
        .map(|(t, grp)| {
            let mut pairs: Vec<(usize, f64)> = grp
                .iter()
                .enumerate()
                .map(|(rank, &v)| (v, 1.0 / ((rank + 1) as f64).sqrt()))
                .collect();
            let mean = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
            for &(pt, v) in &planted {
                if pt == t {
                    pairs.push((v, config.plant_weight * mean));
                }
            }
            Emission::new(&pairs)
        })
        .collect();

    let docs = (0..config.n_docs)
        .map(|n| {
            let mut r = rng::stream(seed, &[0x5e, 1, n as u64]);
            let mut active: Vec<usize> = (0..g).filter(|_| r.random::<f64>() < config.topic_prob).collect();
            if active.is_empty() {
                active.push(r.random_range(0..g));
            }
            let d = r.random_range(config.doc_len_min..=config.doc_len_max);
            let mut counts = vec![0u32; k];
            for _ in 0..d {
                let v = if r.random::<f64>() < config.background {
                    r.random_range(0..k)
                } else {
                    emissions[active[r.random_range(0..active.len())]].draw(&mut r)
                };
                counts[v] += 1;
            }
            Document::from_dense(&counts)
        })
        .collect();
    let vocab = (0..k).map(|v| format!("g{}w{v}", labels[v])).collect();
    let corpus = Corpus::new(format!("synthetic-{seed}"), vocab, docs)?;
    Ok(SyntheticCorpus {
        corpus,
        groups,
        labels,
        planted,
    })
}
