//! Sparse Boltzmann Machines: each hidden unit sees a subset of the
//! vocabulary and hidden units are coupled along a tree (or forest).

use std::path::Path;

use crate::corpus::{read_file, write_file, Document};
use crate::error::{Error, Result};
use crate::mask::ConnectionMask;
use crate::model::{bernoulli, BoltzmannModel};
use crate::rng::Rng;
use crate::scalar::{sigmoid, Scalar};
use crate::textfmt::{push_row, Sectioned};
use crate::tree::{HiddenTree, TreePosterior};

const MODEL_MAGIC: &str = "sparsebm sbm-model v1";
const STRUCTURE_MAGIC: &str = "sparsebm sbm-structure v1";

/// Connectivity of an SBM: hidden-visible edges plus a hidden forest.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmStructure {
    n_hidden: usize,
    n_visible: usize,
    /// Sorted by `(j, k)`; the edges of unit `j` are `offsets[j]..offsets[j+1]`.
    visible_edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    tree: HiddenTree,
}

impl SbmStructure {
    pub fn new(
        n_hidden: usize,
        n_visible: usize,
        mut visible_edges: Vec<(usize, usize)>,
        tree_edges: &[(usize, usize)],
    ) -> Result<Self> {
        if n_hidden == 0 || n_visible == 0 {
            return Err(Error::Structure("F and K must be positive".into()));
        }
        visible_edges.sort_unstable();
        for win in visible_edges.windows(2) {
            if win[0] == win[1] {
                return Err(Error::Structure(format!("duplicate visible edge {:?}", win[0])));
            }
        }
        if let Some(&(j, k)) = visible_edges.iter().find(|&&(j, k)| j >= n_hidden || k >= n_visible) {
            return Err(Error::Structure(format!(
                "visible edge ({j}, {k}) out of range for F={n_hidden} K={n_visible}"
            )));
        }
        let mut offsets = vec![0usize; n_hidden + 1];
        for &(j, _) in &visible_edges {
            offsets[j + 1] += 1;
        }
        for j in 0..n_hidden {
            if offsets[j + 1] == 0 {
                return Err(Error::Structure(format!("hidden unit {j} has no visible edge")));
            }
            offsets[j + 1] += offsets[j];
        }
        let mut sorted_tree: Vec<(usize, usize)> = tree_edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        sorted_tree.sort_unstable();
        let tree = HiddenTree::new(n_hidden, &sorted_tree)?;
        Ok(SbmStructure {
            n_hidden,
            n_visible,
            visible_edges,
            offsets,
            tree,
        })
    }

    /// Complete bipartite connectivity and no hidden coupling.
    pub fn fully_connected(n_hidden: usize, n_visible: usize) -> Result<Self> {
        let edges = (0..n_hidden).flat_map(|j| (0..n_visible).map(move |k| (j, k))).collect();
        Self::new(n_hidden, n_visible, edges, &[])
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn visible_edges(&self) -> &[(usize, usize)] {
        &self.visible_edges
    }

    /// Edge index range of hidden unit `j`.
    pub fn unit_edges(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Visible units connected to `j`, ascending.
    pub fn unit_visibles(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.visible_edges[self.unit_edges(j)].iter().map(|&(_, k)| k)
    }

    pub fn degree(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn tree(&self) -> &HiddenTree {
        &self.tree
    }

    /// Tree edges `(j, l)` with `j < l`, sorted.
    pub fn tree_edges(&self) -> &[(usize, usize)] {
        self.tree.edges()
    }

    pub fn has_visible_edge(&self, j: usize, k: usize) -> bool {
        self.visible_edges[self.unit_edges(j)]
            .binary_search(&(j, k))
            .is_ok()
    }

    pub fn mask(&self) -> ConnectionMask {
        ConnectionMask::from_pairs(self.n_hidden, self.n_visible, &self.visible_edges)
            .expect("edges validated at construction")
    }

    /// Same visible edges with the hidden coupling removed.
    pub fn without_tree(&self) -> SbmStructure {
        SbmStructure {
            tree: HiddenTree::new(self.n_hidden, &[]).expect("empty forest"),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{STRUCTURE_MAGIC}\n[dims]\nF {}\nK {}\n[visible_edges]\n", self.n_hidden, self.n_visible);
        for &(j, k) in &self.visible_edges {
            s.push_str(&format!("{j} {k}\n"));
        }
        s.push_str("[tree_edges]\n");
        for &(j, l) in self.tree_edges() {
            s.push_str(&format!("{j} {l}\n"));
        }
        s
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let doc = Sectioned::parse(path, text, STRUCTURE_MAGIC)?;
        let (f, k) = (doc.key_usize("dims", "F")?, doc.key_usize("dims", "K")?);
        let visible = parse_pairs(&doc, "visible_edges", 2)?
            .into_iter()
            .map(|(a, b, _)| (a, b))
            .collect();
        let tree: Vec<(usize, usize)> = parse_pairs(&doc, "tree_edges", 2)?
            .into_iter()
            .map(|(a, b, _)| (a, b))
            .collect();
        Self::new(f, k, visible, &tree)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(path, &read_file(path)?)
    }

    /// Whether `text` looks like a structure file.
    pub fn is_structure_text(text: &str) -> bool {
        text.lines().next().is_some_and(|l| l.trim() == STRUCTURE_MAGIC)
    }
}

/// Rows of `a b` or `a b w`; the weight is returned as its source token.
fn parse_pairs<'a>(doc: &Sectioned<'a>, section: &str, min_fields: usize) -> Result<Vec<(usize, usize, Option<&'a str>)>> {
    let Some(sec) = doc.get(section) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::with_capacity(sec.rows.len());
    for &(line, row) in &sec.rows {
        let mut it = row.split_whitespace();
        let a = doc.field(line, it.next(), "first index")?;
        let b = doc.field(line, it.next(), "second index")?;
        let w = it.next();
        if min_fields > 2 && w.is_none() {
            return Err(Error::parse(&doc.path, line, "missing weight"));
        }
        out.push((a, b, w));
    }
    Ok(out)
}

/// Zero every entry of a dense row-major `F × K` weight matrix that is not
/// a visible edge of `structure`.
pub fn apply_mask<T: Scalar>(structure: &SbmStructure, dense: &mut [T]) {
    structure.mask().apply(dense);
}

/// SBM parameters bound to a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmModel<T> {
    structure: SbmStructure,
    /// One weight per visible edge, aligned with `structure.visible_edges()`.
    pub(crate) w: Vec<T>,
    /// One weight per tree edge, aligned with `structure.tree_edges()`.
    pub(crate) wt: Vec<T>,
    pub(crate) a: Vec<T>,
    pub(crate) b: Vec<T>,
}

impl<T: Scalar> SbmModel<T> {
    pub fn zeros(structure: SbmStructure) -> Self {
        let (e, t, f, k) = (
            structure.visible_edges.len(),
            structure.tree_edges().len(),
            structure.n_hidden,
            structure.n_visible,
        );
        SbmModel {
            structure,
            w: vec![T::zero(); e],
            wt: vec![T::zero(); t],
            a: vec![T::zero(); f],
            b: vec![T::zero(); k],
        }
    }

    /// `w`/`wt` aligned with the structure's edge lists.
    pub fn from_parts(structure: SbmStructure, w: Vec<T>, wt: Vec<T>, a: Vec<T>, b: Vec<T>) -> Result<Self> {
        if w.len() != structure.visible_edges.len()
            || wt.len() != structure.tree_edges().len()
            || a.len() != structure.n_hidden
            || b.len() != structure.n_visible
        {
            return Err(Error::arg("parameter shapes do not match the structure"));
        }
        if w.iter().chain(&wt).chain(&a).chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::arg("parameters must be finite"));
        }
        Ok(SbmModel { structure, w, wt, a, b })
    }

    /// Build from a dense `F × K` weight matrix; entries off the structure
    /// are discarded.
    pub fn from_dense(structure: SbmStructure, dense: &[T], wt: Vec<T>, a: Vec<T>, b: Vec<T>) -> Result<Self> {
        let k = structure.n_visible;
        if dense.len() != structure.n_hidden * k {
            return Err(Error::arg("dense weight matrix has the wrong size"));
        }
        let w = structure.visible_edges.iter().map(|&(j, v)| dense[j * k + v]).collect();
        Self::from_parts(structure, w, wt, a, b)
    }

    /// Row-major `F × K` view; off-structure entries are exactly zero.
    pub fn dense_weights(&self) -> Vec<T> {
        let k = self.structure.n_visible;
        let mut d = vec![T::zero(); self.structure.n_hidden * k];
        for (&(j, v), &w) in self.structure.visible_edges.iter().zip(&self.w) {
            d[j * k + v] = w;
        }
        d
    }

    pub fn structure(&self) -> &SbmStructure {
        &self.structure
    }

    pub fn edge_weights(&self) -> &[T] {
        &self.w
    }

    pub fn edge_weights_mut(&mut self) -> &mut [T] {
        &mut self.w
    }

    pub fn tree_weights(&self) -> &[T] {
        &self.wt
    }

    pub fn tree_weights_mut(&mut self) -> &mut [T] {
        &mut self.wt
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

    fn check_doc(&self, doc: &Document) -> Result<()> {
        if doc.min_vocab() > self.structure.n_visible {
            return Err(Error::arg(format!(
                "document uses word {} but K={}",
                doc.min_vocab() - 1,
                self.structure.n_visible
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, h: &[bool]) -> Result<()> {
        if h.len() != self.structure.n_hidden {
            return Err(Error::arg(format!(
                "hidden state has {} units, F={}",
                h.len(),
                self.structure.n_hidden
            )));
        }
        Ok(())
    }

    /// `Σ_{(j,k)} W_j^k û^k` for unit `j`; merges two sorted lists.
    fn visible_input(&self, j: usize, doc: &Document) -> T {
        let range = self.structure.unit_edges(j);
        let edges = &self.structure.visible_edges[range.clone()];
        let weights = &self.w[range];
        let mut acc = T::zero();
        let mut e = 0;
        for (k, c) in doc.iter() {
            while e < edges.len() && edges[e].1 < k {
                e += 1;
            }
            if e == edges.len() {
                break;
            }
            if edges[e].1 == k {
                acc += weights[e] * T::of(c as f64);
            }
        }
        acc
    }

    /// Tree coupling input `D Σ_l W_jl h_l` over neighbours of `j`.
    fn coupling_input(&self, j: usize, doc_len: usize, h: &[bool]) -> T {
        let s: T = self
            .structure
            .tree
            .neighbors(j)
            .iter()
            .filter(|&&(l, _)| h[l])
            .map(|&(_, e)| self.wt[e])
            .sum();
        T::of_usize(doc_len) * s
    }

    /// `P(h_j = 1 | U, h_{-j})`.
    pub fn gibbs_hidden_conditional(&self, doc: &Document, h: &[bool], j: usize) -> Result<T> {
        self.check_doc(doc)?;
        self.check_hidden(h)?;
        if j >= self.structure.n_hidden {
            return Err(Error::arg(format!("hidden index {j} out of range for F={}", self.structure.n_hidden)));
        }
        let x = self.visible_input(j, doc) + T::of_usize(doc.len()) * self.a[j] + self.coupling_input(j, doc.len(), h);
        Ok(sigmoid(x))
    }

    fn potentials(&self, drive: &[T], doc_len: usize, beta: T) -> (Vec<[T; 2]>, Vec<T>) {
        let node = drive.iter().map(|&x| [T::zero(), beta * x]).collect();
        let d = T::of_usize(doc_len);
        let edge = self.wt.iter().map(|&w| beta * d * w).collect();
        (node, edge)
    }

    /// Exact posterior `P(h | U)` by sum-product on the hidden forest.
    pub fn tree_marginals(&self, doc: &Document) -> TreePosterior<T> {
        self.tree_marginals_clamped(doc, None)
    }

    /// Posterior with one hidden unit clamped to a state.
    pub fn tree_marginals_clamped(&self, doc: &Document, clamp: Option<(usize, bool)>) -> TreePosterior<T> {
        let mut drive = vec![T::zero(); self.structure.n_hidden];
        self.hidden_drive(doc, &mut drive);
        let (mut node, edge) = self.potentials(&drive, doc.len(), T::one());
        if let Some((j, state)) = clamp {
            node[j][usize::from(!state)] = T::neg_infinity();
        }
        self.structure.tree.infer(&node, &edge)
    }

    pub fn to_text(&self) -> String {
        let s = &self.structure;
        let mut out = format!("{MODEL_MAGIC}\n[dims]\nF {}\nK {}\n[visible_edges]\n", s.n_hidden, s.n_visible);
        for (&(j, k), w) in s.visible_edges.iter().zip(&self.w) {
            out.push_str(&format!("{j} {k} {w}\n"));
        }
        out.push_str("[tree_edges]\n");
        for (&(j, l), w) in s.tree_edges().iter().zip(&self.wt) {
            out.push_str(&format!("{j} {l} {w}\n"));
        }
        out.push_str("[a]\n");
        push_row(&mut out, &self.a);
        out.push_str("[b]\n");
        push_row(&mut out, &self.b);
        out
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let doc = Sectioned::parse(path, text, MODEL_MAGIC)?;
        let (f, k) = (doc.key_usize("dims", "F")?, doc.key_usize("dims", "K")?);
        let parse_w = |tok: Option<&str>| -> Result<T> {
            let tok = tok.unwrap_or_default();
            tok.parse()
                .map_err(|_| Error::Structure(format!("{}: malformed weight {tok:?}", path.display())))
        };
        let vis = parse_pairs(&doc, "visible_edges", 3)?;
        let tree = parse_pairs(&doc, "tree_edges", 3)?;
        let structure = SbmStructure::new(
            f,
            k,
            vis.iter().map(|&(a, b, _)| (a, b)).collect(),
            &tree.iter().map(|&(a, b, _)| (a, b)).collect::<Vec<_>>(),
        )?;
        // files written by this crate are sorted, but accept any order
        let mut w = vec![T::zero(); vis.len()];
        for &(j, v, tok) in &vis {
            let idx = structure
                .visible_edges
                .binary_search(&(j, v))
                .expect("edge present in structure");
            w[idx] = parse_w(tok)?;
        }
        let mut wt = vec![T::zero(); tree.len()];
        for &(j, l, tok) in &tree {
            let idx = structure
                .tree_edges()
                .binary_search(&(j.min(l), j.max(l)))
                .expect("edge present in structure");
            wt[idx] = parse_w(tok)?;
        }
        let a = doc.values("a", f)?;
        let b = doc.values("b", k)?;
        Self::from_parts(structure, w, wt, a, b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(path, &read_file(path)?)
    }
}

impl<T: Scalar> BoltzmannModel<T> for SbmModel<T> {
    fn n_hidden(&self) -> usize {
        self.structure.n_hidden
    }

    fn n_visible(&self) -> usize {
        self.structure.n_visible
    }

    fn visible_bias(&self) -> &[T] {
        &self.b
    }

    fn hidden_drive(&self, doc: &Document, out: &mut [T]) {
        let d = T::of_usize(doc.len());
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.visible_input(j, doc) + d * self.a[j];
        }
    }

    fn log_hidden_partition(&self, drive: &[T], doc_len: usize, beta: T) -> T {
        let (node, edge) = self.potentials(drive, doc_len, beta);
        self.structure.tree.log_partition(&node, &edge)
    }

    fn hidden_marginals(&self, drive: &[T], doc_len: usize) -> Vec<T> {
        let (node, edge) = self.potentials(drive, doc_len, T::one());
        self.structure.tree.infer(&node, &edge).singleton
    }

    /// Sequential sweep in ascending unit order.
    fn sample_hidden(&self, drive: &[T], doc_len: usize, beta: T, h: &mut [bool], rng: &mut Rng) {
        for j in 0..h.len() {
            let x = drive[j] + self.coupling_input(j, doc_len, h);
            h[j] = bernoulli(sigmoid(beta * x), rng);
        }
    }

    fn visible_logits(&self, h: &[bool], beta: T, out: &mut [T]) {
        out.copy_from_slice(&self.b);
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            for e in self.structure.unit_edges(j) {
                out[self.structure.visible_edges[e].1] += beta * self.w[e];
            }
        }
    }

    /// `-Σ_G W_j^k h_j û^k - Σ û^k b^k - D Σ h_j a_j - D Σ_G W_jl h_j h_l`.
    fn energy(&self, doc: &Document, h: &[bool]) -> Result<T> {
        self.check_doc(doc)?;
        self.check_hidden(h)?;
        let mut e = T::zero();
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            e -= self.visible_input(j, doc);
        }
        for (k, c) in doc.iter() {
            e -= T::of(c as f64) * self.b[k];
        }
        let d = T::of_usize(doc.len());
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            e -= d * self.a[j];
        }
        for (&(j, l), &w) in self.structure.tree_edges().iter().zip(&self.wt) {
            if h[j] && h[l] {
                e -= d * w;
            }
        }
        Ok(e)
    }

    fn n_params(&self) -> usize {
        self.w.len() + self.wt.len() + self.a.len() + self.b.len()
    }

    /// Layout: `[W edges, W_jl, a, b]`.
    fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w);
        p.extend_from_slice(&self.wt);
        p.extend_from_slice(&self.a);
        p.extend_from_slice(&self.b);
        p
    }

    fn set_params(&mut self, params: &[T]) {
        let (w, rest) = params.split_at(self.w.len());
        let (wt, rest) = rest.split_at(self.wt.len());
        let (a, b) = rest.split_at(self.a.len());
        self.w.copy_from_slice(w);
        self.wt.copy_from_slice(wt);
        self.a.copy_from_slice(a);
        self.b.copy_from_slice(b);
    }

    fn n_weight_params(&self) -> usize {
        self.w.len() + self.wt.len()
    }

    fn add_features(&self, doc: &Document, h: &[bool], scale: T, out: &mut [T]) {
        let (ne, nt, f) = (self.w.len(), self.wt.len(), self.a.len());
        let d = T::of_usize(doc.len());
        for (j, _) in h.iter().enumerate().filter(|(_, &on)| on) {
            for e in self.structure.unit_edges(j) {
                let c = doc.count(self.structure.visible_edges[e].1);
                if c > 0 {
                    out[e] += scale * T::of(c as f64);
                }
            }
            out[ne + nt + j] += scale * d;
        }
        for (t, &(j, l)) in self.structure.tree_edges().iter().enumerate() {
            if h[j] && h[l] {
                out[ne + t] += scale * d;
            }
        }
        for (k, c) in doc.iter() {
            out[ne + nt + f + k] += scale * T::of(c as f64);
        }
    }

    fn add_posterior_features(&self, doc: &Document, scale: T, out: &mut [T]) {
        let (ne, nt, f) = (self.w.len(), self.wt.len(), self.a.len());
        let post = self.tree_marginals(doc);
        let d = T::of_usize(doc.len());
        for (j, &p) in post.singleton.iter().enumerate() {
            for e in self.structure.unit_edges(j) {
                let c = doc.count(self.structure.visible_edges[e].1);
                if c > 0 {
                    out[e] += scale * p * T::of(c as f64);
                }
            }
            out[ne + nt + j] += scale * d * p;
        }
        for (t, tab) in post.pairwise.iter().enumerate() {
            out[ne + t] += scale * d * tab[1][1];
        }
        for (k, c) in doc.iter() {
            out[ne + nt + f + k] += scale * T::of(c as f64);
        }
    }
}
