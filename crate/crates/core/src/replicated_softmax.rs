//! Replicated Softmax: a fully connected RBM over word counts whose hidden
//! biases scale with document length.

use std::path::Path;

use crate::corpus::{read_file, write_file, Document};
use crate::error::{Error, Result};
use crate::mask::ConnectionMask;
use crate::model::{bernoulli, sample_tokens, BoltzmannModel};
use crate::rng::Rng;
use crate::scalar::{sigmoid, softplus, Scalar};
use crate::textfmt::{push_row, Sectioned};

const MAGIC: &str = "sparsebm rs-model v1";

#[derive(Debug, Clone, PartialEq)]
pub struct RsModel<T> {
    n_hidden: usize,
    n_visible: usize,
    /// Row-major `F × K`: `w[j * K + k] = W_j^k`.
    pub(crate) w: Vec<T>,
    pub(crate) a: Vec<T>,
    pub(crate) b: Vec<T>,
    /// Present for pruned models; masked weights are held at zero.
    pub(crate) mask: Option<ConnectionMask>,
}

impl<T: Scalar> RsModel<T> {
    pub fn zeros(n_hidden: usize, n_visible: usize) -> Self {
        RsModel {
            n_hidden,
            n_visible,
            w: vec![T::zero(); n_hidden * n_visible],
            a: vec![T::zero(); n_hidden],
            b: vec![T::zero(); n_visible],
            mask: None,
        }
    }

    /// `w` is row-major `F × K`.
    pub fn from_parts(n_hidden: usize, n_visible: usize, w: Vec<T>, a: Vec<T>, b: Vec<T>) -> Result<Self> {
        if n_hidden == 0 || n_visible == 0 {
            return Err(Error::arg("F and K must be positive"));
        }
        if w.len() != n_hidden * n_visible || a.len() != n_hidden || b.len() != n_visible {
            return Err(Error::arg(format!(
                "parameter shapes W={} a={} b={} do not match F={n_hidden} K={n_visible}",
                w.len(),
                a.len(),
                b.len()
            )));
        }
        if w.iter().chain(&a).chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::arg("parameters must be finite"));
        }
        Ok(RsModel {
            n_hidden,
            n_visible,
            w,
            a,
            b,
            mask: None,
        })
    }

    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> T {
        self.w[j * self.n_visible + k]
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.w
    }

    pub fn hidden_bias(&self) -> &[T] {
        &self.a
    }

    pub fn hidden_bias_mut(&mut self) -> &mut [T] {
        &mut self.a
    }

    pub fn visible_bias_mut(&mut self) -> &mut [T] {
        &mut self.b
    }

    pub fn mask(&self) -> Option<&ConnectionMask> {
        self.mask.as_ref()
    }

    /// Attach a mask and zero the masked weights.
    pub fn set_mask(&mut self, mask: ConnectionMask) -> Result<()> {
        if mask.n_hidden() != self.n_hidden || mask.n_visible() != self.n_visible {
            return Err(Error::arg("mask dimensions do not match the model"));
        }
        mask.apply(&mut self.w);
        self.mask = Some(mask);
        Ok(())
    }

    fn check_dims(&self, doc: &Document, h: Option<&[bool]>) -> Result<()> {
        if doc.min_vocab() > self.n_visible {
            return Err(Error::arg(format!(
                "document uses word {} but K={}",
                doc.min_vocab() - 1,
                self.n_visible
            )));
        }
        if let Some(h) = h {
            if h.len() != self.n_hidden {
                return Err(Error::arg(format!("hidden state has {} units, F={}", h.len(), self.n_hidden)));
            }
        }
        Ok(())
    }

    /// `Σ_k W_j^k û^k`, summed in ascending word order.
    fn unit_input(&self, j: usize, doc: &Document) -> T {
        let row = &self.w[j * self.n_visible..(j + 1) * self.n_visible];
        let mut acc = T::zero();
        for (k, c) in doc.iter() {
            acc += row[k] * T::of(c as f64);
        }
        acc
    }

    /// `P(h_j = 1 | U) = σ(D a_j + Σ_k W_j^k û^k)` for every `j`.
    pub fn hidden_conditional(&self, doc: &Document) -> Result<Vec<T>> {
        self.check_dims(doc, None)?;
        let mut drive = vec![T::zero(); self.n_hidden];
        self.hidden_drive(doc, &mut drive);
        Ok(drive.into_iter().map(sigmoid).collect())
    }

    /// Draw a document of `doc_len` tokens given the hidden state.
    pub fn sample_visible(&self, h: &[bool], doc_len: usize, rng: &mut Rng) -> Document {
        let mut logits = vec![T::zero(); self.n_visible];
        self.visible_logits(h, T::one(), &mut logits);
        sample_tokens(&logits, doc_len, rng)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC}\n[dims]\nF {}\nK {}\n[W]\n", self.n_hidden, self.n_visible);
        for row in self.w.chunks(self.n_visible) {
            push_row(&mut s, row);
        }
        s.push_str("[a]\n");
        push_row(&mut s, &self.a);
        s.push_str("[b]\n");
        push_row(&mut s, &self.b);
        if let Some(mask) = &self.mask {
            s.push_str("[mask]\n");
            for (j, k) in mask.pairs() {
                s.push_str(&format!("{j} {k}\n"));
            }
        }
        s
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let doc = Sectioned::parse(path, text, MAGIC)?;
        let f = doc.key_usize("dims", "F")?;
        let k = doc.key_usize("dims", "K")?;
        let w = doc.values("W", f * k)?;
        let a = doc.values("a", f)?;
        let b = doc.values("b", k)?;
        let mut model = Self::from_parts(f, k, w, a, b)?;
        if let Some(sec) = doc.get("mask") {
            let mut pairs = Vec::with_capacity(sec.rows.len());
            for &(line, row) in &sec.rows {
                let mut it = row.split_whitespace();
                pairs.push((doc.field(line, it.next(), "hidden index")?, doc.field(line, it.next(), "visible index")?));
            }
            let mask = ConnectionMask::from_pairs(f, k, &pairs)?;
            let mut masked = model.w.clone();
            mask.apply(&mut masked);
            if masked != model.w {
                return Err(Error::Structure(format!("{}: masked weights are non-zero", path.display())));
            }
            model.mask = Some(mask);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(path, &read_file(path)?)
    }
}

impl<T: Scalar> BoltzmannModel<T> for RsModel<T> {
    fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    fn n_visible(&self) -> usize {
        self.n_visible
    }

    fn visible_bias(&self) -> &[T] {
        &self.b
    }

    fn hidden_drive(&self, doc: &Document, out: &mut [T]) {
        let d = T::of_usize(doc.len());
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.unit_input(j, doc) + d * self.a[j];
        }
    }

    fn log_hidden_partition(&self, drive: &[T], _doc_len: usize, beta: T) -> T {
        drive.iter().map(|&x| softplus(beta * x)).sum()
    }

    fn hidden_marginals(&self, drive: &[T], _doc_len: usize) -> Vec<T> {
        drive.iter().map(|&x| sigmoid(x)).collect()
    }

    fn sample_hidden(&self, drive: &[T], _doc_len: usize, beta: T, h: &mut [bool], rng: &mut Rng) {
        for (hj, &x) in h.iter_mut().zip(drive) {
            *hj = bernoulli(sigmoid(beta * x), rng);
        }
    }

    fn visible_logits(&self, h: &[bool], beta: T, out: &mut [T]) {
        out.copy_from_slice(&self.b);
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            let row = &self.w[j * self.n_visible..(j + 1) * self.n_visible];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += beta * w;
            }
        }
    }

    /// `-Σ W_j^k h_j û^k - Σ û^k b^k - D Σ h_j a_j`.
    fn energy(&self, doc: &Document, h: &[bool]) -> Result<T> {
        self.check_dims(doc, Some(h))?;
        let mut e = T::zero();
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            e -= self.unit_input(j, doc);
        }
        for (k, c) in doc.iter() {
            e -= T::of(c as f64) * self.b[k];
        }
        let d = T::of_usize(doc.len());
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            e -= d * self.a[j];
        }
        Ok(e)
    }

    fn n_params(&self) -> usize {
        self.w.len() + self.a.len() + self.b.len()
    }

    fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w);
        p.extend_from_slice(&self.a);
        p.extend_from_slice(&self.b);
        p
    }

    fn set_params(&mut self, params: &[T]) {
        let (w, rest) = params.split_at(self.w.len());
        let (a, b) = rest.split_at(self.a.len());
        self.w.copy_from_slice(w);
        self.a.copy_from_slice(a);
        self.b.copy_from_slice(b);
    }

    fn n_weight_params(&self) -> usize {
        self.w.len()
    }

    fn add_features(&self, doc: &Document, h: &[bool], scale: T, out: &mut [T]) {
        let (kk, ff) = (self.n_visible, self.n_hidden);
        let d = T::of_usize(doc.len());
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            for (k, c) in doc.iter() {
                out[j * kk + k] += scale * T::of(c as f64);
            }
            out[ff * kk + j] += scale * d;
        }
        for (k, c) in doc.iter() {
            out[ff * kk + ff + k] += scale * T::of(c as f64);
        }
    }

    fn add_posterior_features(&self, doc: &Document, scale: T, out: &mut [T]) {
        let (kk, ff) = (self.n_visible, self.n_hidden);
        let mut drive = vec![T::zero(); ff];
        self.hidden_drive(doc, &mut drive);
        let d = T::of_usize(doc.len());
        for (j, x) in drive.into_iter().enumerate() {
            let p = scale * sigmoid(x);
            for (k, c) in doc.iter() {
                out[j * kk + k] += p * T::of(c as f64);
            }
            out[ff * kk + j] += p * d;
        }
        for (k, c) in doc.iter() {
            out[ff * kk + ff + k] += scale * T::of(c as f64);
        }
    }

    fn enforce_constraints(&mut self) {
        if let Some(mask) = &self.mask {
            mask.apply(&mut self.w);
        }
    }
}
