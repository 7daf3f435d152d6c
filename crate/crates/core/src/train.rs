//! Contrastive-divergence training shared by RS and SBM.

use rand_distr::{Distribution, Normal};

use crate::corpus::{BatchPlan, Corpus, Document};
use crate::error::{Error, Result};
use crate::model::{sample_independent, sample_tokens, BoltzmannModel};
use crate::replicated_softmax::RsModel;
use crate::rng::{self, Rng};
use crate::sbm::{SbmModel, SbmStructure};
use crate::scalar::Scalar;

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Full Gibbs steps `T` in the negative phase.
    pub cd_steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Standard deviation of the initial weights.
    pub weight_init_std: f64,
    /// Start `b` at smoothed log word frequencies instead of zero.
    pub init_visible_from_frequencies: bool,
    /// Use `E[φ | U_T]` for the final negative-phase hidden layer instead of
    /// a sampled state.
    pub mean_field_final: bool,
    pub momentum: f64,
    /// L2 penalty on interaction weights (not biases).
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            cd_steps: 10,
            learning_rate: 0.005,
            batch_size: 10,
            seed: 0,
            weight_init_std: 0.01,
            init_visible_from_frequencies: true,
            mean_field_final: true,
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cd_steps == 0 {
            return Err(Error::arg("cd_steps must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch_size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::arg("learning_rate must be a non-negative number"));
        }
        if !(self.weight_init_std >= 0.0) {
            return Err(Error::arg("weight_init_std must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::arg("momentum must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Run the CD-T negative chain from `doc` and add the negative statistics
/// (scaled by `scale`) to `out`.
pub fn add_negative_features<T: Scalar, M: BoltzmannModel<T>>(
    model: &M,
    doc: &Document,
    cd_steps: usize,
    mean_field_final: bool,
    scale: T,
    rng: &mut Rng,
    out: &mut [T],
) {
    let (f, d) = (model.n_hidden(), doc.len());
    let mut drive = vec![T::zero(); f];
    let mut logits = vec![T::zero(); model.n_visible()];
    model.hidden_drive(doc, &mut drive);
    // starting hidden state for sequential sweeps
    let mut h = sample_independent(&model.hidden_marginals(&drive, d), rng);
    let mut v = doc.clone();
    for _ in 0..cd_steps {
        model.sample_hidden(&drive, d, T::one(), &mut h, rng);
        model.visible_logits(&h, T::one(), &mut logits);
        v = sample_tokens(&logits, d, rng);
        model.hidden_drive(&v, &mut drive);
    }
    if mean_field_final {
        model.add_posterior_features(&v, scale, out);
    } else {
        model.sample_hidden(&drive, d, T::one(), &mut h, rng);
        model.add_features(&v, &h, scale, out);
    }
}

/// Batch-averaged CD-T gradient estimate.
pub fn cd_gradient<T: Scalar, M: BoltzmannModel<T>>(
    model: &M,
    batch: &[&Document],
    cd_steps: usize,
    mean_field_final: bool,
    seed: u64,
    tags: &[u64],
) -> Vec<T> {
    let mut grad = vec![T::zero(); model.n_params()];
    if batch.is_empty() {
        return grad;
    }
    let scale = T::one() / T::of_usize(batch.len());
    let mut path = tags.to_vec();
    path.push(0);
    for (i, doc) in batch.iter().enumerate() {
        *path.last_mut().expect("non-empty") = i as u64;
        let mut r = rng::stream(seed, &path);
        model.add_posterior_features(doc, scale, &mut grad);
        add_negative_features(model, doc, cd_steps, mean_field_final, -scale, &mut r, &mut grad);
    }
    grad
}

/// Optimizer state carried across CD updates.
#[derive(Debug, Clone)]
pub struct CdTrainer<T> {
    pub config: TrainConfig,
    velocity: Vec<T>,
    /// Updates applied so far; keys the random streams.
    pub updates: u64,
}

impl<T: Scalar> CdTrainer<T> {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(CdTrainer {
            config,
            velocity: Vec::new(),
            updates: 0,
        })
    }

    /// One parameter update from a minibatch.
    pub fn step<M: BoltzmannModel<T>>(&mut self, model: &mut M, batch: &[&Document]) {
        let c = &self.config;
        let grad = cd_gradient(model, batch, c.cd_steps, c.mean_field_final, c.seed, &[0xcd, self.updates]);
        self.updates += 1;
        if c.learning_rate == 0.0 {
            return;
        }
        let lr = T::of(c.learning_rate);
        let mom = T::of(c.momentum);
        let decay = T::of(c.weight_decay);
        let n_weights = model.n_weight_params();
        let mut params = model.params();
        if self.velocity.len() != params.len() {
            self.velocity = vec![T::zero(); params.len()];
        }
        for (i, (p, g)) in params.iter_mut().zip(grad).enumerate() {
            let g = if i < n_weights { g - decay * *p } else { g };
            let v = &mut self.velocity[i];
            *v = mom * *v + lr * g;
            *p += *v;
        }
        model.set_params(&params);
        model.enforce_constraints();
    }

    /// Run `epochs` passes over `corpus`, continuing the epoch count at
    /// `first_epoch`.
    pub fn run<M: BoltzmannModel<T>>(&mut self, model: &mut M, corpus: &Corpus, first_epoch: usize, epochs: usize) -> Result<()> {
        let plan = BatchPlan::new(corpus.len(), self.config.batch_size, self.config.seed)?;
        for epoch in first_epoch..first_epoch + epochs {
            for batch in plan.epoch(epoch) {
                let docs: Vec<&Document> = batch.iter().map(|&i| &corpus.docs()[i]).collect();
                self.step(model, &docs);
            }
        }
        Ok(())
    }
}

/// One CD-T update, as a free function.
pub fn cd_step<T: Scalar, M: BoltzmannModel<T>>(
    model: &M,
    batch: &[&Document],
    cd_steps: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<M> {
    let config = TrainConfig {
        cd_steps,
        learning_rate,
        seed,
        ..TrainConfig::default()
    };
    let mut trainer = CdTrainer::new(config)?;
    let mut next = model.clone();
    trainer.step(&mut next, batch);
    Ok(next)
}

fn normal_draws<T: Scalar>(n: usize, std: f64, r: &mut Rng) -> Vec<T> {
    if std == 0.0 {
        return vec![T::zero(); n];
    }
    let dist = Normal::new(0.0, std).expect("finite non-negative std");
    (0..n).map(|_| T::of(dist.sample(r))).collect()
}

/// `ln((count_k + 1) / (total + K))`.
pub fn log_frequency_bias<T: Scalar>(corpus: &Corpus) -> Vec<T> {
    let totals = corpus.word_totals();
    let sum: u64 = totals.iter().sum();
    let denom = (sum + totals.len() as u64) as f64;
    totals.iter().map(|&t| T::of(((t + 1) as f64 / denom).ln())).collect()
}

fn check_corpus(corpus: &Corpus) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::arg("training corpus is empty"));
    }
    Ok(())
}

/// Freshly initialized Replicated Softmax model.
pub fn init_rs<T: Scalar>(corpus: &Corpus, n_hidden: usize, config: &TrainConfig) -> Result<RsModel<T>> {
    let k = corpus.vocab_size();
    let mut r = rng::stream(config.seed, &[0x1717]);
    let w = normal_draws(n_hidden * k, config.weight_init_std, &mut r);
    let b = if config.init_visible_from_frequencies {
        log_frequency_bias(corpus)
    } else {
        vec![T::zero(); k]
    };
    RsModel::from_parts(n_hidden, k, w, vec![T::zero(); n_hidden], b)
}

/// Train a Replicated Softmax model with `n_hidden` units.
pub fn train_rs<T: Scalar>(corpus: &Corpus, n_hidden: usize, config: &TrainConfig) -> Result<RsModel<T>> {
    check_corpus(corpus)?;
    config.validate()?;
    let mut model = init_rs(corpus, n_hidden, config)?;
    CdTrainer::new(config.clone())?.run(&mut model, corpus, 0, config.epochs)?;
    Ok(model)
}

/// Freshly initialized SBM; tree weights start at zero.
pub fn init_sbm<T: Scalar>(corpus: &Corpus, structure: SbmStructure, config: &TrainConfig) -> Result<SbmModel<T>> {
    if structure.n_visible() != corpus.vocab_size() {
        return Err(Error::arg(format!(
            "structure has K={} but the corpus vocabulary has {} words",
            structure.n_visible(),
            corpus.vocab_size()
        )));
    }
    let mut r = rng::stream(config.seed, &[0x1717]);
    let w = normal_draws(structure.visible_edges().len(), config.weight_init_std, &mut r);
    let b = if config.init_visible_from_frequencies {
        log_frequency_bias(corpus)
    } else {
        vec![T::zero(); structure.n_visible()]
    };
    let (t, f) = (structure.tree_edges().len(), structure.n_hidden());
    SbmModel::from_parts(structure, w, vec![T::zero(); t], vec![T::zero(); f], b)
}

/// Train an SBM on a fixed structure.
pub fn train_sbm<T: Scalar>(corpus: &Corpus, structure: SbmStructure, config: &TrainConfig) -> Result<SbmModel<T>> {
    check_corpus(corpus)?;
    config.validate()?;
    let mut model = init_sbm(corpus, structure, config)?;
    CdTrainer::new(config.clone())?.run(&mut model, corpus, 0, config.epochs)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_corpus() -> Corpus {
        let docs = (0..12)
            .map(|i| {
                if i % 2 == 0 {
                    Document::from_counts([(0, 2), (1, 1)])
                } else {
                    Document::from_counts([(2, 1), (3, 2)])
                }
            })
            .collect();
        Corpus::with_anonymous_vocab("toy", 4, docs).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let c = toy_corpus();
        let cfg = TrainConfig {
            weight_init_std: 0.1,
            ..TrainConfig::default()
        };
        let m: RsModel<f64> = init_rs(&c, 3, &cfg).unwrap();
        let batch: Vec<&Document> = c.docs().iter().take(4).collect();
        assert_eq!(cd_step(&m, &batch, 2, 0.0, 1).unwrap(), m);
        let s = SbmStructure::new(2, 4, vec![(0, 0), (0, 1), (1, 2), (1, 3)], &[(0, 1)]).unwrap();
        let sm: SbmModel<f64> = init_sbm(&c, s, &cfg).unwrap();
        assert_eq!(cd_step(&sm, &batch, 2, 0.0, 1).unwrap(), sm);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let c = toy_corpus();
        let cfg = TrainConfig {
            epochs: 0,
            weight_init_std: 0.01,
            ..TrainConfig::default()
        };
        let trained: RsModel<f64> = train_rs(&c, 2, &cfg).unwrap();
        assert_eq!(trained, init_rs(&c, 2, &cfg).unwrap());
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let c = toy_corpus();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            cd_steps: 2,
            weight_init_std: 0.01,
            ..TrainConfig::default()
        };
        let a: RsModel<f64> = train_rs(&c, 2, &cfg).unwrap();
        let b: RsModel<f64> = train_rs(&c, 2, &cfg).unwrap();
        assert_eq!(a, b);
        let other: RsModel<f64> = train_rs(&c, 2, &TrainConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn symmetric_zero_model_has_no_expected_weight_update() {
        // With W = 0 and a uniform visible layer the data and model
        // statistics coincide in expectation; averaged over many chains the
        // W-gradient vanishes up to Monte Carlo noise.
        let docs: Vec<Document> = (0..4).map(|k| Document::from_counts([(k, 2)])).collect();
        let batch: Vec<&Document> = docs.iter().cycle().take(4000).collect();
        let m = RsModel::<f64>::zeros(2, 4);
        let g = cd_gradient(&m, &batch, 1, true, 3, &[]);
        for &gw in &g[..8] {
            assert!(gw.abs() < 0.05, "{gw}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { cd_steps: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: f64::NAN, ..TrainConfig::default() }.validate().is_err());
        assert!(train_rs::<f64>(&Corpus::with_anonymous_vocab("e", 2, vec![]).unwrap(), 1, &TrainConfig::default()).is_err());
    }
}
