//! Iterative magnitude pruning of a dense Replicated Softmax model, with
//! retraining between rounds.

use std::fmt::Write as _;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::mask::ConnectionMask;
use crate::model::BoltzmannModel;
use crate::replicated_softmax::RsModel;
use crate::scalar::Scalar;
use crate::train::{CdTrainer, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PruneConfig {
    /// Connections left per hidden unit at the end.
    pub target_per_unit: usize,
    /// Share of each unit's surviving connections removed per round.
    pub prune_fraction: f64,
    pub retrain_epochs_per_iter: usize,
    /// Retraining settings; `epochs` is ignored.
    pub train: TrainConfig,
}

impl PruneConfig {
    pub fn new(target_per_unit: usize, train: TrainConfig) -> Self {
        PruneConfig {
            target_per_unit,
            prune_fraction: 0.2,
            retrain_epochs_per_iter: 1,
            train,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.target_per_unit == 0 || self.target_per_unit > k {
            return Err(Error::arg(format!("target_per_unit {} outside 1..={k}", self.target_per_unit)));
        }
        if !(self.prune_fraction > 0.0 && self.prune_fraction < 1.0) {
            return Err(Error::arg(format!("prune_fraction {} outside (0, 1)", self.prune_fraction)));
        }
        if self.retrain_epochs_per_iter == 0 {
            return Err(Error::arg("retrain_epochs_per_iter must be positive"));
        }
        self.train.validate()
    }
}

/// Per-unit surviving connection counts.
pub fn unit_counts<T: Scalar>(model: &RsModel<T>) -> Vec<usize> {
    let (f, k) = (model.n_hidden(), model.n_visible());
    match model.mask() {
        Some(m) => (0..f).map(|j| m.unit_count(j)).collect(),
        None => vec![k; f],
    }
}

/// Keep the `keep_per_unit` largest `|W|` surviving connections of every
/// unit (ties to the lower visible index) and zero the rest.
pub fn prune_step<T: Scalar>(model: &mut RsModel<T>, keep_per_unit: usize) -> Result<()> {
    let (f, k) = (model.n_hidden(), model.n_visible());
    let counts = unit_counts(model);
    if let Some(j) = counts.iter().position(|&c| keep_per_unit > c) {
        return Err(Error::arg(format!(
            "cannot keep {keep_per_unit} connections: hidden unit {j} has {}",
            counts[j]
        )));
    }
    let old = model.mask().cloned().unwrap_or_else(|| ConnectionMask::full(f, k));
    let mut mask = ConnectionMask::full(f, k);
    for j in 0..f {
        let mut alive: Vec<usize> = (0..k).filter(|&v| old.is_kept(j, v)).collect();
        alive.sort_by(|&x, &y| {
            model
                .weight(j, y)
                .abs()
                .partial_cmp(&model.weight(j, x).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.cmp(&y))
        });
        for &v in &alive[keep_per_unit..] {
            mask.set(j, v, false);
        }
        for v in (0..k).filter(|&v| !old.is_kept(j, v)) {
            mask.set(j, v, false);
        }
    }
    model.set_mask(mask)
}

/// One row of the pruning log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PruneIteration {
    pub iter: usize,
    pub per_unit_count: usize,
    /// Retraining epochs consumed so far.
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome<T> {
    pub model: RsModel<T>,
    pub log: Vec<PruneIteration>,
}

impl<T> PruneOutcome<T> {
    pub fn total_epochs(&self) -> usize {
        self.log.last().map_or(0, |r| r.epochs)
    }

    pub fn log_tsv(&self) -> String {
        let mut out = String::from("iter\tper_unit_count\tepochs\n");
        for r in &self.log {
            let _ = writeln!(out, "{}\t{}\t{}", r.iter, r.per_unit_count, r.epochs);
        }
        out
    }
}

/// Prune to `⌈(1 - fraction) · current⌉` per unit (at least one fewer, never
/// below the target), retrain, and repeat until every unit has exactly
/// `target_per_unit` connections.
pub fn prune_and_retrain<T: Scalar>(model: RsModel<T>, corpus: &Corpus, config: &PruneConfig) -> Result<PruneOutcome<T>> {
    let k = model.n_visible();
    config.validate(k)?;
    if corpus.vocab_size() != k {
        return Err(Error::arg(format!(
            "model has K={k} but the corpus vocabulary has {} words",
            corpus.vocab_size()
        )));
    }
    let mut model = model;
    let mut trainer = CdTrainer::new(config.train.clone())?;
    let mut log = Vec::new();
    let mut epochs = 0;
    let mut current = unit_counts(&model).into_iter().max().unwrap_or(0);
    let target = config.target_per_unit;
    while current > target || unit_counts(&model).iter().any(|&c| c != target) {
        let shrunk = ((1.0 - config.prune_fraction) * current as f64).ceil() as usize;
        let next = shrunk.min(current.saturating_sub(1)).max(target);
        prune_step(&mut model, next)?;
        // epoch numbering continues after the initial training run
        trainer.run(&mut model, corpus, config.train.epochs + epochs, config.retrain_epochs_per_iter)?;
        epochs += config.retrain_epochs_per_iter;
        current = next;
        log.push(PruneIteration {
            iter: log.len() + 1,
            per_unit_count: next,
            epochs,
        });
    }
    Ok(PruneOutcome { model, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn one_unit(w: Vec<f64>) -> RsModel<f64> {
        let k = w.len();
        RsModel::from_parts(1, k, w, vec![0.0], vec![0.0; k]).unwrap()
    }

    #[test]
    fn keeps_largest_magnitudes() {
        let mut m = one_unit(vec![0.5, -0.9, 0.1]);
        prune_step(&mut m, 2).unwrap();
        assert_eq!(m.weights(), &[0.5, -0.9, 0.0]);
        let mask = m.mask().unwrap();
        assert!(!mask.is_kept(0, 2));
    }

    #[test]
    fn ties_keep_lower_index() {
        let mut m = one_unit(vec![0.3, -0.3]);
        prune_step(&mut m, 1).unwrap();
        assert_eq!(m.weights(), &[0.3, 0.0]);
    }

    #[test]
    fn keeping_everything_is_a_no_op() {
        let mut m = one_unit(vec![0.3, -0.2, 0.7]);
        let before = m.weights().to_vec();
        prune_step(&mut m, 3).unwrap();
        assert_eq!(m.weights(), &before[..]);
        assert!(prune_step(&mut m, 4).is_err());
    }

    #[test]
    fn masked_entries_stay_masked() {
        let mut m = one_unit(vec![0.5, -0.9, 0.1, 0.05]);
        prune_step(&mut m, 2).unwrap();
        m.weights_mut()[2] = 5.0;
        m.enforce_constraints();
        prune_step(&mut m, 1).unwrap();
        assert_eq!(m.weights(), &[0.0, -0.9, 0.0, 0.0]);
    }

    #[test]
    fn reaches_target_exactly() {
        let docs = (0..20).map(|i| Document::from_counts([(i % 10, 2), ((i + 3) % 10, 1)])).collect();
        let corpus = Corpus::with_anonymous_vocab("c", 10, docs).unwrap();
        let train = TrainConfig {
            epochs: 1,
            weight_init_std: 0.1,
            ..TrainConfig::default()
        };
        let model = crate::train::train_rs::<f64>(&corpus, 3, &train).unwrap();
        let out = prune_and_retrain(model.clone(), &corpus, &PruneConfig::new(2, train.clone())).unwrap();
        assert_eq!(unit_counts(&out.model), vec![2, 2, 2]);
        let counts: Vec<usize> = out.log.iter().map(|r| r.per_unit_count).collect();
        assert_eq!(counts, vec![8, 7, 6, 5, 4, 3, 2]);
        assert_eq!(out.total_epochs(), 7);

        let same = prune_and_retrain(model, &corpus, &PruneConfig::new(10, train)).unwrap();
        assert!(same.log.is_empty());
    }
}
