//! Interface shared by Replicated Softmax and Sparse Boltzmann Machines.
//!
//! Both models have the energy
//! `-E(U, h) = θ · φ(U, h)` for a flat parameter vector `θ` and feature map
//! `φ`; training, annealing and the exact oracles are written once against
//! this trait.

use rand::Rng as _;

use crate::corpus::Document;
use crate::error::Result;
use crate::rng::Rng;
use crate::scalar::Scalar;

pub trait BoltzmannModel<T: Scalar>: Clone + Send + Sync {
    fn n_hidden(&self) -> usize;
    fn n_visible(&self) -> usize;
    fn visible_bias(&self) -> &[T];

    /// Per-unit input from the document alone: `Σ_k W_j^k û^k + D a_j`.
    fn hidden_drive(&self, doc: &Document, out: &mut [T]);

    /// `ln Σ_h exp(β · (h·drive + D Σ_{jl} W_jl h_j h_l))`.
    fn log_hidden_partition(&self, drive: &[T], doc_len: usize, beta: T) -> T;

    /// `P(h_j = 1 | U)` for every unit.
    fn hidden_marginals(&self, drive: &[T], doc_len: usize) -> Vec<T>;

    /// One Gibbs update of the hidden layer at inverse temperature `beta`.
    /// `h` holds the previous state on entry (ignored by factorized models).
    fn sample_hidden(&self, drive: &[T], doc_len: usize, beta: T, h: &mut [bool], rng: &mut Rng);

    /// Token logits `b^k + β Σ_j W_j^k h_j`.
    fn visible_logits(&self, h: &[bool], beta: T, out: &mut [T]);

    fn energy(&self, doc: &Document, h: &[bool]) -> Result<T>;

    fn n_params(&self) -> usize;
    fn params(&self) -> Vec<T>;
    fn set_params(&mut self, params: &[T]);
    /// Indices `0..n` of the flat vector holding interaction weights; the rest
    /// are biases.
    fn n_weight_params(&self) -> usize;

    /// `out += scale · φ(U, h)`.
    fn add_features(&self, doc: &Document, h: &[bool], scale: T, out: &mut [T]);

    /// `out += scale · E[φ(U, h) | U]`.
    fn add_posterior_features(&self, doc: &Document, scale: T, out: &mut [T]);

    /// Re-impose structural zeros after a parameter update.
    fn enforce_constraints(&mut self) {}

    /// `ln p*(U) = Σ_k û^k b^k + ln Σ_h exp(-E_hidden)`.
    fn log_unnormalized(&self, doc: &Document) -> T {
        let mut drive = vec![T::zero(); self.n_hidden()];
        self.hidden_drive(doc, &mut drive);
        let b = self.visible_bias();
        let vis: T = doc.iter().map(|(k, c)| b[k] * T::of(c as f64)).sum();
        vis + self.log_hidden_partition(&drive, doc.len(), T::one())
    }
}

/// Draw `doc_len` i.i.d. tokens from `softmax(logits)`.
pub fn sample_tokens<T: Scalar>(logits: &[T], doc_len: usize, rng: &mut Rng) -> Document {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut cdf = Vec::with_capacity(logits.len());
    let mut acc = 0.0f64;
    for &l in logits {
        acc += (l - m).as_f64().exp();
        cdf.push(acc);
    }
    let mut counts = vec![0u32; logits.len()];
    for _ in 0..doc_len {
        let u = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(logits.len() - 1);
        counts[k] += 1;
    }
    Document::from_dense(&counts)
}

#[inline]
pub(crate) fn bernoulli<T: Scalar>(p: T, rng: &mut Rng) -> bool {
    rng.random::<f64>() < p.as_f64()
}

/// Draw a hidden state with independent units `h_j ~ Bernoulli(p_j)`.
pub(crate) fn sample_independent<T: Scalar>(p: &[T], rng: &mut Rng) -> Vec<bool> {
    p.iter().map(|&pj| bernoulli(pj, rng)).collect()
}

/// Reference check of the shared `log p*` path against direct energies.
#[cfg(test)]
pub(crate) fn brute_log_unnormalized<T: Scalar, M: BoltzmannModel<T>>(m: &M, doc: &Document) -> f64 {
    let f = m.n_hidden();
    let terms: Vec<f64> = (0..1usize << f)
        .map(|bits| {
            let h: Vec<bool> = (0..f).map(|j| bits >> j & 1 == 1).collect();
            -m.energy(doc, &h).unwrap().as_f64()
        })
        .collect();
    crate::scalar::log_sum_exp(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn tokens_conserve_length_and_follow_bias() {
        let mut r = rng::stream(1, &[]);
        let d = sample_tokens(&[0.0f64; 4], 1000, &mut r);
        assert_eq!(d.len(), 1000);
        let mut logits = vec![-10.0f64; 5];
        logits[0] = 10.0;
        let d = sample_tokens(&logits, 500, &mut r);
        assert_eq!(d.count(0), 500);
    }

    #[test]
    fn uniform_tokens_pass_chi_square() {
        // 3 degrees of freedom, alpha = 0.01 critical value
        const CRIT: f64 = 11.345;
        let mut r = rng::stream(42, &[]);
        let d = sample_tokens(&[0.0f64; 4], 1000, &mut r);
        let chi2: f64 = (0..4)
            .map(|k| {
                let o = d.count(k) as f64;
                (o - 250.0).powi(2) / 250.0
            })
            .sum();
        assert!(chi2 < CRIT, "chi2 = {chi2}");
    }
}
