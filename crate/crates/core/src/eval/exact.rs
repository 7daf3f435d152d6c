//! Exact partition functions and expectations by enumeration.
//!
//! Documents of length `D` are enumerated as count vectors (compositions of
//! `D` into `K` parts), each weighted by its multinomial coefficient
//! `D! / Π û^k!`, which equals summing over token sequences.

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::model::BoltzmannModel;
use crate::scalar::{ln_factorial, log_add_exp, Scalar};

/// Largest `C(D+K-1, K-1) · 2^F` accepted.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// `C(D+K-1, K-1) · 2^F` as a float.
pub fn enumeration_cost(k: usize, d: usize, f: usize) -> f64 {
    let mut c = 1.0f64;
    // C(D+K-1, D)
    for i in 1..=d {
        c *= (k - 1 + i) as f64 / i as f64;
    }
    c * 2f64.powi(f as i32)
}

fn check_cost(k: usize, d: usize, f: usize) -> Result<()> {
    let cost = enumeration_cost(k, d, f);
    if cost > ENUMERATION_LIMIT || f >= 63 {
        return Err(Error::Infeasible {
            cost,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Call `visit` on every count vector of length `k` summing to `d`.
pub fn for_each_composition(k: usize, d: usize, mut visit: impl FnMut(&[u32])) {
    fn rec(counts: &mut [u32], pos: usize, left: u32, visit: &mut dyn FnMut(&[u32])) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            visit(counts);
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(counts, pos + 1, left - c, visit);
        }
    }
    if k == 0 {
        return;
    }
    let mut counts = vec![0u32; k];
    rec(&mut counts, 0, d as u32, &mut visit);
}

fn ln_multinomial(counts: &[u32]) -> f64 {
    let d: u32 = counts.iter().sum();
    ln_factorial(d) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

fn hidden_state(bits: usize, f: usize, h: &mut [bool]) {
    for (j, hj) in h.iter_mut().enumerate().take(f) {
        *hj = bits >> j & 1 == 1;
    }
}

/// Visit every `(U, h)` with its log weight `ln mult(U) - E(U, h)`.
fn for_each_state<T: Scalar, M: BoltzmannModel<T>>(
    model: &M,
    d: usize,
    mut visit: impl FnMut(&Document, &[bool], f64),
) -> Result<()> {
    let (k, f) = (model.n_visible(), model.n_hidden());
    check_cost(k, d, f)?;
    let mut h = vec![false; f];
    let mut err = None;
    for_each_composition(k, d, |counts| {
        if err.is_some() {
            return;
        }
        let doc = Document::from_dense(counts);
        let lm = ln_multinomial(counts);
        for bits in 0..1usize << f {
            hidden_state(bits, f, &mut h);
            match model.energy(&doc, &h) {
                Ok(e) => visit(&doc, &h, lm - e.as_f64()),
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
    });
    err.map_or(Ok(()), Err)
}

/// `ln Z_D = ln Σ_{U: |U| = D} Σ_h exp(-E(U, h))` over token sequences.
pub fn exact_log_z<T: Scalar, M: BoltzmannModel<T>>(model: &M, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::arg("document length must be positive"));
    }
    let mut acc = f64::NEG_INFINITY;
    for_each_state(model, d, |_, _, lw| acc = log_add_exp(acc, lw))?;
    Ok(acc)
}

/// `ln Z_D` by summing over hidden states: for fixed `h` the token sum
/// factorizes, `Σ_U exp(-E) = exp(D·g(h)) · (Σ_k exp(ℓ_k(h)))^D`, where `ℓ`
/// are the visible logits and `g` the per-token hidden term. Costs `2^F · K`.
pub fn exact_log_z_hidden<T: Scalar, M: BoltzmannModel<T>>(model: &M, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::arg("document length must be positive"));
    }
    let (k, f) = (model.n_visible(), model.n_hidden());
    let cost = 2f64.powi(f as i32) * k as f64;
    if cost > ENUMERATION_LIMIT || f >= 63 {
        return Err(Error::Infeasible {
            cost,
            limit: ENUMERATION_LIMIT,
        });
    }
    let single = Document::from_counts([(0, 1)]);
    let mut h = vec![false; f];
    let mut logits = vec![T::zero(); k];
    let mut acc = f64::NEG_INFINITY;
    for bits in 0..1usize << f {
        hidden_state(bits, f, &mut h);
        model.visible_logits(&h, T::one(), &mut logits);
        let g = -model.energy(&single, &h)?.as_f64() - logits[0].as_f64();
        let l: Vec<f64> = logits.iter().map(|x| x.as_f64()).collect();
        acc = log_add_exp(acc, d as f64 * (g + crate::scalar::log_sum_exp(&l)));
    }
    Ok(acc)
}

/// `ln P(U) = ln Σ_h exp(-E(U, h)) - ln Z_D` for one token sequence with
/// the counts of `doc`.
pub fn exact_log_prob<T: Scalar, M: BoltzmannModel<T>>(model: &M, doc: &Document) -> Result<f64> {
    let f = model.n_hidden();
    if f >= 63 {
        return Err(Error::Infeasible {
            cost: 2f64.powi(f as i32),
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut h = vec![false; f];
    let mut acc = f64::NEG_INFINITY;
    for bits in 0..1usize << f {
        hidden_state(bits, f, &mut h);
        acc = log_add_exp(acc, -model.energy(doc, &h)?.as_f64());
    }
    Ok(acc - exact_log_z(model, doc.len())?)
}

/// Model expectation `E_{P(U, h)}[φ(U, h)]` over documents of length `d`.
pub fn exact_model_expectations<T: Scalar, M: BoltzmannModel<T>>(model: &M, d: usize) -> Result<Vec<T>> {
    let log_z = exact_log_z(model, d)?;
    let mut out = vec![T::zero(); model.n_params()];
    for_each_state(model, d, |doc, h, lw| {
        model.add_features(doc, h, T::of((lw - log_z).exp()), &mut out);
    })?;
    Ok(out)
}

/// `∂ Σ_n ln P(U_n) / ∂θ` with the posterior term from the model's own
/// inference and the model term from enumeration.
pub fn exact_gradient<T: Scalar, M: BoltzmannModel<T>>(model: &M, docs: &[Document]) -> Result<Vec<T>> {
    let mut grad = vec![T::zero(); model.n_params()];
    let mut by_len = std::collections::BTreeMap::new();
    for doc in docs {
        model.add_posterior_features(doc, T::one(), &mut grad);
        *by_len.entry(doc.len()).or_insert(0usize) += 1;
    }
    for (d, n) in by_len {
        let e = exact_model_expectations(model, d)?;
        let n = T::of_usize(n);
        for (g, x) in grad.iter_mut().zip(e) {
            *g -= n * x;
        }
    }
    Ok(grad)
}
