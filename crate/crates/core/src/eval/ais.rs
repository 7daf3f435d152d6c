//! Annealed importance sampling of `ln Z_D`.
//!
//! The intermediate distributions keep the visible biases fixed and scale
//! every hidden-side parameter (W, W_jl, a) by β, so β = 0 is the
//! independent token model times free hidden bits with
//! `ln Z_0 = F ln 2 + D ln Σ_k e^{b^k}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{sample_tokens, BoltzmannModel};
use crate::rng;
use crate::scalar::{log_sum_exp, Scalar};

/// `count` inverse temperatures spaced uniformly on `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AisSchedule {
    segments: Vec<Segment>,
}

impl AisSchedule {
    /// Segments must tile `[0, 1]` in order, each with a positive count.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::arg("AIS schedule needs at least one segment"));
        }
        let mut at = 0.0;
        for s in &segments {
            if s.count == 0 {
                return Err(Error::arg("AIS segment counts must be positive"));
            }
            if s.start != at || !(s.end >= s.start) {
                return Err(Error::arg(format!(
                    "AIS segment ({}, {}) does not continue from β={at}",
                    s.start, s.end
                )));
            }
            at = s.end;
        }
        if at != 1.0 {
            return Err(Error::arg("AIS schedule must end at β=1"));
        }
        Ok(AisSchedule { segments })
    }

    /// 500 temperatures on (0, 0.5], 3,000 on (0.5, 0.9], 6,500 on (0.9, 1].
    pub fn default_schedule() -> Self {
        Self::new(vec![
            Segment { start: 0.0, end: 0.5, count: 500 },
            Segment { start: 0.5, end: 0.9, count: 3000 },
            Segment { start: 0.9, end: 1.0, count: 6500 },
        ])
        .expect("valid default schedule")
    }

    /// A single uniform segment over `(0, 1]`.
    pub fn uniform(count: usize) -> Result<Self> {
        Self::new(vec![Segment { start: 0.0, end: 1.0, count }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of intermediate distributions.
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The intermediate β values, excluding the starting β = 0.
    pub fn betas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for s in &self.segments {
            let step = (s.end - s.start) / s.count as f64;
            for i in 1..s.count {
                out.push(s.start + i as f64 * step);
            }
            out.push(s.end);
        }
        out
    }
}

impl Default for AisSchedule {
    fn default() -> Self {
        Self::default_schedule()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AisEstimate {
    /// `ln Z_0 + ln mean_i exp(log_weights[i])`.
    pub log_z: f64,
    pub log_z_base: f64,
    pub log_weights: Vec<f64>,
    pub doc_len: usize,
}

impl AisEstimate {
    pub fn runs(&self) -> usize {
        self.log_weights.len()
    }

    /// Standard error of `log_z`: the relative standard error of the mean
    /// importance weight.
    pub fn std_error(&self) -> f64 {
        let n = self.log_weights.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|&l| (l - m).exp()).collect();
        let mean = w.iter().sum::<f64>() / n as f64;
        let var = w.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        var.sqrt() / (mean * (n as f64).sqrt())
    }
}

/// `ln Z` of the β = 0 base distribution.
pub fn base_log_z<T: Scalar, M: BoltzmannModel<T>>(model: &M, doc_len: usize) -> f64 {
    let b: Vec<f64> = model.visible_bias().iter().map(|&x| x.as_f64()).collect();
    model.n_hidden() as f64 * std::f64::consts::LN_2 + doc_len as f64 * log_sum_exp(&b)
}

/// One annealing run; returns its log importance weight.
fn run<T: Scalar, M: BoltzmannModel<T>>(model: &M, doc_len: usize, betas: &[f64], seed: u64, run: usize) -> f64 {
    let mut r = rng::stream(seed, &[0xa15, doc_len as u64, run as u64]);
    let (f, k) = (model.n_hidden(), model.n_visible());
    let mut logits = model.visible_bias().to_vec();
    let mut v = sample_tokens(&logits, doc_len, &mut r);
    let mut h: Vec<bool> = (0..f).map(|_| rand::Rng::random::<bool>(&mut r)).collect();
    let mut drive = vec![T::zero(); f];
    logits.resize(k, T::zero());
    let mut log_w = 0.0;
    let mut prev = T::zero();
    for (i, &beta) in betas.iter().enumerate() {
        let beta = T::of(beta);
        model.hidden_drive(&v, &mut drive);
        let hi = model.log_hidden_partition(&drive, doc_len, beta);
        let lo = model.log_hidden_partition(&drive, doc_len, prev);
        log_w += (hi - lo).as_f64();
        prev = beta;
        if i + 1 < betas.len() {
            model.sample_hidden(&drive, doc_len, beta, &mut h, &mut r);
            model.visible_logits(&h, beta, &mut logits);
            v = sample_tokens(&logits, doc_len, &mut r);
        }
    }
    log_w
}

/// Estimate `ln Z_D` over documents of length `doc_len`.
pub fn ais_log_z<T: Scalar, M: BoltzmannModel<T>>(
    model: &M,
    doc_len: usize,
    schedule: &AisSchedule,
    runs: usize,
    seed: u64,
) -> Result<AisEstimate> {
    if runs == 0 {
        return Err(Error::arg("AIS needs at least one run"));
    }
    if doc_len == 0 {
        return Err(Error::arg("document length must be positive"));
    }
    let betas = schedule.betas();
    let log_weights: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|i| run(model, doc_len, &betas, seed, i))
        .collect();
    let log_z_base = base_log_z(model, doc_len);
    let log_z = log_z_base + log_sum_exp(&log_weights) - (runs as f64).ln();
    Ok(AisEstimate {
        log_z,
        log_z_base,
        log_weights,
        doc_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicated_softmax::RsModel;

    #[test]
    fn default_schedule_shape() {
        let s = AisSchedule::default_schedule();
        assert_eq!(s.len(), 10_000);
        let b = s.betas();
        assert_eq!(b.len(), 10_000);
        assert_eq!(*b.last().unwrap(), 1.0);
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        assert!((b[9_999] - b[9_998] - 0.1 / 6500.0).abs() < 1e-12);
        assert!((b[1] - b[0] - 0.001).abs() < 1e-12);
    }

    #[test]
    fn uniform_schedule() {
        let b = AisSchedule::uniform(100).unwrap().betas();
        assert_eq!(b.len(), 100);
        for (i, x) in b.iter().enumerate() {
            assert!((x - (i + 1) as f64 / 100.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_schedules() {
        assert!(AisSchedule::uniform(0).is_err());
        assert!(AisSchedule::new(vec![Segment { start: 0.0, end: 0.5, count: 3 }]).is_err());
        assert!(AisSchedule::new(vec![Segment { start: 0.1, end: 1.0, count: 3 }]).is_err());
        assert!(AisSchedule::new(vec![]).is_err());
    }

    #[test]
    fn zero_model_gives_base_partition_exactly() {
        let m = RsModel::<f64>::zeros(4, 5);
        let est = ais_log_z(&m, 3, &AisSchedule::uniform(1).unwrap(), 7, 1).unwrap();
        assert_eq!(est.log_weights, vec![0.0; 7]);
        assert_eq!(est.std_error(), 0.0);
        let expected = 4.0 * 2f64.ln() + 3.0 * 5f64.ln();
        assert!((est.log_z - expected).abs() < 1e-14);
        assert!(ais_log_z(&m, 3, &AisSchedule::uniform(1).unwrap(), 0, 1).is_err());
    }
}
