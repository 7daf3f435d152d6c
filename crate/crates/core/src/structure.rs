//! Structure learning: a two-level skeleton over word-occurrence
//! indicators, then connection expansion by conditional mutual information.
//!
//! The skeleton builder is an MI-greedy grouping with a Chow-Liu tree over
//! the top-level groups. Skeletons from an external latent-tree tool can be
//! loaded instead.

use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{read_file, write_file, Corpus, Document};
use crate::error::{Error, Result};
use crate::sbm::{SbmModel, SbmStructure};
use crate::scalar::Scalar;
use crate::tree::{HiddenTree, TreePosterior};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Built,
    Loaded,
}

/// Hidden units with disjoint visible groups covering the vocabulary, plus a
/// hidden forest.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    groups: Vec<Vec<usize>>,
    tree_edges: Vec<(usize, usize)>,
    provenance: Provenance,
    owner: Vec<usize>,
}

impl Skeleton {
    /// Validates that `groups` partition `0..k` and `tree_edges` is a forest.
    pub fn new(
        k: usize,
        mut groups: Vec<Vec<usize>>,
        tree_edges: Vec<(usize, usize)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut owner = vec![usize::MAX; k];
        for (j, g) in groups.iter_mut().enumerate() {
            if g.is_empty() {
                return Err(Error::Structure(format!("hidden unit {j} has no visible units")));
            }
            g.sort_unstable();
            for &v in g.iter() {
                if v >= k {
                    return Err(Error::Structure(format!("visible {v} out of range for K={k}")));
                }
                if owner[v] != usize::MAX {
                    return Err(Error::Structure(format!("visible {v} assigned twice")));
                }
                owner[v] = j;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Structure(format!("visible {v} is not assigned")));
        }
        let tree = HiddenTree::new(groups.len(), &tree_edges)?;
        Ok(Skeleton {
            groups,
            tree_edges: tree.edges().to_vec(),
            provenance,
            owner,
        })
    }

    pub fn n_hidden(&self) -> usize {
        self.groups.len()
    }

    pub fn n_visible(&self) -> usize {
        self.owner.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn tree_edges(&self) -> &[(usize, usize)] {
        &self.tree_edges
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Hidden unit whose group holds visible `v`.
    pub fn owner(&self, v: usize) -> usize {
        self.owner[v]
    }

    /// Group label of every visible unit.
    pub fn labels(&self) -> &[usize] {
        &self.owner
    }

    /// The tree-structured SBM connectivity of the skeleton.
    pub fn structure(&self) -> Result<SbmStructure> {
        let edges: Vec<(usize, usize)> = self
            .groups
            .iter()
            .enumerate()
            .flat_map(|(j, g)| g.iter().map(move |&v| (j, v)))
            .collect();
        SbmStructure::new(self.n_hidden(), self.n_visible(), edges, &self.tree_edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (j, g) in self.groups.iter().enumerate() {
            let vs: Vec<String> = g.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{j}: {}", vs.join(" "));
        }
        out.push_str("[tree]\n");
        for &(j, l) in &self.tree_edges {
            let _ = writeln!(out, "{j} {l}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }
}

/// Parse a skeleton: `j: v v v` lines, then `[tree]` and `j l` lines.
pub fn parse_skeleton(path: &Path, text: &str, k: usize) -> Result<Skeleton> {
    let mut groups: Vec<Option<Vec<usize>>> = Vec::new();
    let mut edges = Vec::new();
    let mut in_tree = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[tree]" {
            in_tree = true;
            continue;
        }
        let num = |tok: &str| -> Result<usize> {
            tok.parse()
                .map_err(|_| Error::parse(path, lineno, format!("expected an index, found {tok:?}")))
        };
        if in_tree {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::parse(path, lineno, "expected \"j l\""));
            }
            edges.push((num(toks[0])?, num(toks[1])?));
        } else {
            let (head, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(path, lineno, "expected \"j: v v v\""))?;
            let j = num(head.trim())?;
            let vs = rest.split_whitespace().map(num).collect::<Result<Vec<_>>>()?;
            if j >= groups.len() {
                groups.resize(j + 1, None);
            }
            if groups[j].replace(vs).is_some() {
                return Err(Error::Structure(format!("hidden unit {j} listed twice")));
            }
        }
    }
    let groups = groups
        .into_iter()
        .enumerate()
        .map(|(j, g)| g.ok_or_else(|| Error::Structure(format!("hidden unit {j} is missing"))))
        .collect::<Result<Vec<_>>>()?;
    if groups.is_empty() {
        return Err(Error::Structure("skeleton has no hidden units".into()));
    }
    for &(a, b) in &edges {
        if a >= groups.len() || b >= groups.len() {
            return Err(Error::Structure(format!("tree edge {a}-{b} out of range for F={}", groups.len())));
        }
    }
    Skeleton::new(k, groups, edges, Provenance::Loaded)
}

pub fn load_skeleton(path: &Path, k: usize) -> Result<Skeleton> {
    parse_skeleton(path, &read_file(path)?, k)
}

/// Settings for [`build_skeleton`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonConfig {
    pub island_max: usize,
    pub supergroup_max: usize,
    /// Minimum MI (nats) to seed or grow an island. `None` uses
    /// [`significance_floor`] for the corpus size.
    pub mi_floor: Option<f64>,
    /// Minimum `MI / min(H_a, H_b)` to merge islands into a supergroup; the
    /// MI must also clear the island floor.
    pub supergroup_min_nmi: f64,
}

impl Default for SkeletonConfig {
    fn default() -> Self {
        SkeletonConfig {
            island_max: 7,
            supergroup_max: 5,
            mi_floor: None,
            supergroup_min_nmi: 0.1,
        }
    }
}

/// Upper 0.1% point of χ²(1).
const CHI2_1_999: f64 = 10.828;

/// Under independence `2 N MI` is approximately χ²(1); the floor is its
/// 0.999 quantile divided by `2N`.
pub fn significance_floor(n_docs: usize) -> f64 {
    CHI2_1_999 / (2.0 * n_docs.max(1) as f64)
}

/// MI of two binary indicators from counts, counted only when they are
/// positively associated.
pub fn positive_mi(n: f64, na: f64, nb: f64, nab: f64) -> f64 {
    if n <= 0.0 || nab * n <= na * nb {
        return 0.0;
    }
    binary_mi(n, na, nb, nab)
}

/// MI of two binary indicators from counts, in nats.
pub fn binary_mi(n: f64, na: f64, nb: f64, nab: f64) -> f64 {
    let cells = [
        (nab, na, nb),
        (na - nab, na, n - nb),
        (nb - nab, n - na, nb),
        (n - na - nb + nab, n - na, n - nb),
    ];
    cells
        .iter()
        .filter(|c| c.0 > 0.0)
        .map(|&(c, ra, rb)| c / n * (c * n / (ra * rb)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Per-variable and pairwise occurrence counts of binary variables.
struct Cooccurrence {
    n: f64,
    single: Vec<f64>,
    pair: Vec<f64>,
    dim: usize,
}

impl Cooccurrence {
    /// `present[d]` lists the distinct variables on in document `d`.
    fn new(dim: usize, present: &[Vec<usize>]) -> Self {
        let mut single = vec![0.0; dim];
        let mut pair = vec![0.0; dim * dim];
        for p in present {
            for (i, &a) in p.iter().enumerate() {
                single[a] += 1.0;
                for &b in &p[i + 1..] {
                    pair[a * dim + b] += 1.0;
                    pair[b * dim + a] += 1.0;
                }
            }
        }
        Cooccurrence {
            n: present.len() as f64,
            single,
            pair,
            dim,
        }
    }

    fn entropy(&self, a: usize) -> f64 {
        let p = self.single[a] / self.n;
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    /// `MI / min(H_a, H_b)` where the MI clears `floor`, else zero.
    fn normalized(&self, mi: &[f64], floor: f64) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for a in 0..d {
            for b in (0..d).filter(|&b| b != a) {
                let h = self.entropy(a).min(self.entropy(b));
                if mi[a * d + b] > floor && h > 0.0 {
                    m[a * d + b] = mi[a * d + b] / h;
                }
            }
        }
        m
    }

    fn matrix(&self, mi: fn(f64, f64, f64, f64) -> f64) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for a in 0..d {
            for b in a + 1..d {
                let v = mi(self.n, self.single[a], self.single[b], self.pair[a * d + b]);
                m[a * d + b] = v;
                m[b * d + a] = v;
            }
        }
        m
    }
}

/// Greedy grouping: seed with the best remaining pair above `floor`, grow by
/// highest average MI while above `floor`. Left-over variables become
/// singletons. Groups are returned in order of their smallest member.
fn greedy_groups(dim: usize, active: &[bool], mi: &[f64], max_size: usize, floor: f64) -> Vec<Vec<usize>> {
    let mut pairs: Vec<(usize, usize)> = (0..dim)
        .filter(|&a| active[a])
        .flat_map(|a| (a + 1..dim).filter(|&b| active[b]).map(move |b| (a, b)))
        .filter(|&(a, b)| mi[a * dim + b] > floor)
        .collect();
    pairs.sort_by(|x, y| mi[y.0 * dim + y.1].total_cmp(&mi[x.0 * dim + x.1]).then(x.cmp(y)));
    let mut assigned = vec![false; dim];
    let mut groups = Vec::new();
    if max_size >= 2 {
        for (a, b) in pairs {
            if assigned[a] || assigned[b] {
                continue;
            }
            let mut g = vec![a, b];
            assigned[a] = true;
            assigned[b] = true;
            while g.len() < max_size {
                let best = (0..dim)
                    .filter(|&c| active[c] && !assigned[c])
                    .map(|c| (c, g.iter().map(|&m| mi[c * dim + m]).sum::<f64>() / g.len() as f64))
                    .fold(None, |best: Option<(usize, f64)>, (c, s)| match best {
                        Some((_, bs)) if bs >= s => best,
                        _ => Some((c, s)),
                    });
                match best {
                    Some((c, s)) if s > floor => {
                        g.push(c);
                        assigned[c] = true;
                    }
                    _ => break,
                }
            }
            groups.push(g);
        }
    }
    for v in 0..dim {
        if active[v] && !assigned[v] {
            groups.push(vec![v]);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

/// Maximum spanning tree by Kruskal; ties go to the lower index pair.
fn max_spanning_tree(dim: usize, weight: &[f64]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..dim).flat_map(|a| (a + 1..dim).map(move |b| (a, b))).collect();
    pairs.sort_by(|x, y| weight[y.0 * dim + y.1].total_cmp(&weight[x.0 * dim + x.1]).then(x.cmp(y)));
    let mut comp: Vec<usize> = (0..dim).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    let mut edges = Vec::new();
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        if ra != rb {
            comp[ra.max(rb)] = ra.min(rb);
            edges.push((a, b));
        }
    }
    edges
}

fn occurrences(docs: &[Document]) -> Vec<Vec<usize>> {
    docs.iter().map(|d| d.iter().map(|(k, _)| k).collect()).collect()
}

/// Build a skeleton from document occurrence indicators.
///
/// Words are grouped into islands of at most `island_max` by positive MI,
/// islands into supergroups of at most `supergroup_max` by normalized MI of
/// "any member present" indicators, and each supergroup becomes one hidden
/// unit. The
/// hidden tree is the maximum spanning tree of supergroup-indicator MI.
/// Words present in every document or in none are appended to the smallest
/// group (lowest index on ties).
pub fn build_skeleton(corpus: &Corpus, config: &SkeletonConfig) -> Result<Skeleton> {
    let k = corpus.vocab_size();
    if k < 2 {
        return Err(Error::arg("skeleton needs at least two words"));
    }
    if config.island_max == 0 || config.supergroup_max == 0 {
        return Err(Error::arg("island_max and supergroup_max must be positive"));
    }
    if corpus.is_empty() {
        return Err(Error::arg("skeleton needs a non-empty corpus"));
    }
    let n = corpus.len();
    let floor = config.mi_floor.unwrap_or_else(|| significance_floor(n));
    let present = occurrences(corpus.docs());
    let words = Cooccurrence::new(k, &present);
    let active: Vec<bool> = words.single.iter().map(|&c| c > 0.0 && c < n as f64).collect();
    let word_mi = words.matrix(positive_mi);
    let islands = greedy_groups(k, &active, &word_mi, config.island_max, floor);

    let mut island_of = vec![usize::MAX; k];
    for (i, g) in islands.iter().enumerate() {
        for &v in g {
            island_of[v] = i;
        }
    }
    let indicators = |labels: &[usize], dim: usize| -> Vec<Vec<usize>> {
        present
            .iter()
            .map(|p| {
                let mut on: Vec<usize> = p.iter().map(|&v| labels[v]).filter(|&l| l < dim).collect();
                on.sort_unstable();
                on.dedup();
                on
            })
            .collect()
    };
    let ni = islands.len();
    let island_co = Cooccurrence::new(ni, &indicators(&island_of, ni));
    let island_nmi = island_co.normalized(&island_co.matrix(positive_mi), floor);
    let supers = greedy_groups(ni, &vec![true; ni], &island_nmi, config.supergroup_max, config.supergroup_min_nmi);

    let mut groups: Vec<Vec<usize>> = supers
        .iter()
        .map(|s| {
            let mut g: Vec<usize> = s.iter().flat_map(|&i| islands[i].iter().copied()).collect();
            g.sort_unstable();
            g
        })
        .collect();
    let degenerate: Vec<usize> = (0..k).filter(|&v| !active[v]).collect();
    if groups.is_empty() {
        groups.push(degenerate);
    } else {
        for v in degenerate {
            let smallest = (0..groups.len()).min_by_key(|&j| groups[j].len()).expect("non-empty");
            groups[smallest].push(v);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }

    let f = groups.len();
    let mut unit_of = vec![usize::MAX; k];
    for (j, g) in groups.iter().enumerate() {
        for &v in g {
            unit_of[v] = j;
        }
    }
    let unit_co = Cooccurrence::new(f, &indicators(&unit_of, f));
    let tree = max_spanning_tree(f, &unit_co.matrix(binary_mi));
    Skeleton::new(k, groups, tree, Provenance::Built)
}

/// Pairwise Rand index between two labelings of the same items.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

/// `I(Z; V | Z')` in nats from an unnormalized table `joint[z][v][z']`, with
/// `0 · ln 0 = 0`.
pub fn conditional_mutual_information(joint: &[[[f64; 2]; 2]; 2]) -> f64 {
    let total: f64 = joint.iter().flatten().flatten().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut cmi = 0.0;
    for zp in 0..2 {
        let pzp: f64 = (0..2).flat_map(|z| (0..2).map(move |v| (z, v))).map(|(z, v)| joint[z][v][zp]).sum::<f64>() / total;
        if pzp <= 0.0 {
            continue;
        }
        for z in 0..2 {
            let pz_zp = (joint[z][0][zp] + joint[z][1][zp]) / total;
            for v in 0..2 {
                let pzv = joint[z][v][zp] / total;
                if pzv <= 0.0 {
                    continue;
                }
                let pv_zp = (joint[0][v][zp] + joint[1][v][zp]) / total;
                cmi += pzv * (pzv * pzp / (pz_zp * pv_zp)).ln();
            }
        }
    }
    cmi
}

fn check_model<T: Scalar>(skeleton: &Skeleton, model: &SbmModel<T>) -> Result<()> {
    let expect = skeleton.structure()?;
    if model.structure() != &expect {
        return Err(Error::arg("tree model structure does not match the skeleton"));
    }
    Ok(())
}

fn tree_edge_index(tree: &HiddenTree, a: usize, b: usize) -> Option<usize> {
    tree.neighbors(a).iter().find(|&&(l, _)| l == b).map(|&(_, e)| e)
}

/// `p(Z_j = z, Z_u = z' | U)` as `[z][z']`.
fn pair_posterior<T: Scalar>(
    model: &SbmModel<T>,
    post: &TreePosterior<T>,
    clamped: &mut dyn FnMut(usize, bool) -> Vec<T>,
    j: usize,
    u: usize,
) -> [[f64; 2]; 2] {
    if let Some(e) = tree_edge_index(model.structure().tree(), j, u) {
        let t = post.pairwise[e];
        let t = t.map(|r| r.map(|x| x.as_f64()));
        return if j < u { t } else { [[t[0][0], t[1][0]], [t[0][1], t[1][1]]] };
    }
    let pu = post.singleton[u].as_f64();
    let mut out = [[0.0; 2]; 2];
    for (zp, w) in [(0usize, 1.0 - pu), (1, pu)] {
        let pj = clamped(u, zp == 1)[j].as_f64();
        out[1][zp] = pj * w;
        out[0][zp] = (1.0 - pj) * w;
    }
    out
}

/// Empirical CMI between hidden unit `j` and the occurrence of word `v`
/// given the unit owning `v`, with hidden posteriors from `model`.
pub fn estimate_cmi<T: Scalar>(
    model: &SbmModel<T>,
    skeleton: &Skeleton,
    corpus: &Corpus,
    j: usize,
    v: usize,
) -> Result<f64> {
    check_model(skeleton, model)?;
    if j >= skeleton.n_hidden() || v >= skeleton.n_visible() {
        return Err(Error::arg(format!("pair ({j}, {v}) out of range")));
    }
    let u = skeleton.owner(v);
    if u == j {
        return Err(Error::arg(format!("visible {v} belongs to hidden unit {j}")));
    }
    let mut joint = [[[0.0f64; 2]; 2]; 2];
    for doc in corpus.docs() {
        let post = model.tree_marginals(doc);
        let mut clamped = |unit: usize, state: bool| model.tree_marginals_clamped(doc, Some((unit, state))).singleton;
        let p = pair_posterior(model, &post, &mut clamped, j, u);
        let o = usize::from(doc.contains(v));
        for z in 0..2 {
            for zp in 0..2 {
                joint[z][o][zp] += p[z][zp];
            }
        }
    }
    Ok(conditional_mutual_information(&joint))
}

/// Per hidden unit, every outside word with its CMI score, sorted
/// descending (ties by ascending visible index).
#[derive(Debug, Clone, PartialEq)]
pub struct CmiTable {
    pub scores: Vec<Vec<(usize, f64)>>,
}

impl CmiTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("hidden\tvisible\tscore\n");
        for (j, row) in self.scores.iter().enumerate() {
            for &(v, s) in row {
                let _ = writeln!(out, "{j}\t{v}\t{s:.12e}");
            }
        }
        out
    }

    /// The `m` best words of unit `j`.
    pub fn top(&self, j: usize, m: usize) -> Vec<usize> {
        self.scores[j].iter().take(m).map(|&(v, _)| v).collect()
    }
}

/// All CMI scores at once. Equivalent to calling [`estimate_cmi`] on every
/// pair but shares the inference per document.
pub fn cmi_table<T: Scalar>(model: &SbmModel<T>, skeleton: &Skeleton, corpus: &Corpus) -> Result<CmiTable> {
    check_model(skeleton, model)?;
    let (f, k) = (skeleton.n_hidden(), skeleton.n_visible());
    // all[j][u][z][z'] over every document; with[j][v][z][z'] over documents containing v
    let mut all = vec![[[0.0f64; 2]; 2]; f * f];
    let mut with = vec![[[0.0f64; 2]; 2]; f * k];
    let mut pairs = vec![[[0.0f64; 2]; 2]; f * f];
    for doc in corpus.docs() {
        let post = model.tree_marginals(doc);
        let mut cache: Vec<[Option<Vec<T>>; 2]> = vec![[None, None]; f];
        let mut clamped = |unit: usize, state: bool| {
            cache[unit][usize::from(state)]
                .get_or_insert_with(|| model.tree_marginals_clamped(doc, Some((unit, state))).singleton)
                .clone()
        };
        for j in 0..f {
            for u in 0..f {
                if u != j {
                    let p = pair_posterior(model, &post, &mut clamped, j, u);
                    pairs[j * f + u] = p;
                    let cell = &mut all[j * f + u];
                    for z in 0..2 {
                        for zp in 0..2 {
                            cell[z][zp] += p[z][zp];
                        }
                    }
                }
            }
        }
        for (v, _) in doc.iter() {
            let u = skeleton.owner(v);
            for j in (0..f).filter(|&j| j != u) {
                let p = &pairs[j * f + u];
                let cell = &mut with[j * k + v];
                for z in 0..2 {
                    for zp in 0..2 {
                        cell[z][zp] += p[z][zp];
                    }
                }
            }
        }
    }
    let mut scores = vec![Vec::new(); f];
    for (j, row) in scores.iter_mut().enumerate() {
        for v in 0..k {
            let u = skeleton.owner(v);
            if u == j {
                continue;
            }
            let (on, tot) = (&with[j * k + v], &all[j * f + u]);
            let mut joint = [[[0.0f64; 2]; 2]; 2];
            for z in 0..2 {
                for zp in 0..2 {
                    joint[z][1][zp] = on[z][zp];
                    joint[z][0][zp] = (tot[z][zp] - on[z][zp]).max(0.0);
                }
            }
            row.push((v, conditional_mutual_information(&joint)));
        }
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    }
    Ok(CmiTable { scores })
}

/// How many connections each hidden unit gains.
#[derive(Debug, Clone, PartialEq)]
pub enum Budget {
    /// `M` new connections for every unit.
    PerUnit(usize),
    /// Total degree `⌈fraction · K⌉` per unit, counting the skeleton group.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionBudget {
    pub default: Budget,
    /// `(unit, M_j)` pairs overriding `default`.
    pub overrides: Vec<(usize, usize)>,
}

impl Default for ExpansionBudget {
    fn default() -> Self {
        ExpansionBudget {
            default: Budget::Fraction(0.2),
            overrides: Vec::new(),
        }
    }
}

impl ExpansionBudget {
    pub fn per_unit(m: usize) -> Self {
        ExpansionBudget {
            default: Budget::PerUnit(m),
            overrides: Vec::new(),
        }
    }

    pub fn fraction(f: f64) -> Self {
        ExpansionBudget {
            default: Budget::Fraction(f),
            overrides: Vec::new(),
        }
    }

    /// Requested `M_j` for each unit, before clamping.
    pub fn resolve(&self, skeleton: &Skeleton) -> Result<Vec<usize>> {
        let k = skeleton.n_visible();
        let mut m: Vec<usize> = match self.default {
            Budget::PerUnit(m) => vec![m; skeleton.n_hidden()],
            Budget::Fraction(f) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::arg(format!("fraction {f} outside [0, 1]")));
                }
                let degree = (f * k as f64).ceil() as usize;
                skeleton.groups().iter().map(|g| degree.saturating_sub(g.len())).collect()
            }
        };
        for &(j, mj) in &self.overrides {
            *m.get_mut(j)
                .ok_or_else(|| Error::arg(format!("override for hidden unit {j} out of range")))? = mj;
        }
        Ok(m)
    }
}

/// Output of [`sbm_sfc`].
#[derive(Debug, Clone)]
pub struct Expansion {
    pub structure: SbmStructure,
    pub table: CmiTable,
    /// `M_j` actually applied.
    pub added: Vec<usize>,
}

/// Expand the skeleton: each unit connects to its top-`M_j` words by CMI.
/// Requests above the number of outside words are clamped with a warning.
pub fn sbm_sfc<T: Scalar>(
    skeleton: &Skeleton,
    tree_model: &SbmModel<T>,
    corpus: &Corpus,
    budget: &ExpansionBudget,
) -> Result<Expansion> {
    if corpus.vocab_size() != skeleton.n_visible() {
        return Err(Error::arg(format!(
            "corpus has K={} but the skeleton has K={}",
            corpus.vocab_size(),
            skeleton.n_visible()
        )));
    }
    let requested = budget.resolve(skeleton)?;
    let table = cmi_table(tree_model, skeleton, corpus)?;
    let mut edges = Vec::new();
    let mut added = Vec::with_capacity(requested.len());
    for (j, &mj) in requested.iter().enumerate() {
        let room = table.scores[j].len();
        if mj > room {
            log::warn!("hidden unit {j}: requested {mj} new connections, only {room} available");
        }
        let m = mj.min(room);
        added.push(m);
        edges.extend(skeleton.groups()[j].iter().map(|&v| (j, v)));
        edges.extend(table.top(j, m).into_iter().map(|v| (j, v)));
    }
    let structure = SbmStructure::new(
        skeleton.n_hidden(),
        skeleton.n_visible(),
        edges,
        skeleton.tree_edges(),
    )?;
    Ok(Expansion { structure, table, added })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_corpus(n: usize) -> Corpus {
        // two independent blocks, each all-or-nothing with probability 1/2
        let docs = (0..n)
            .map(|i| {
                let (a, b) = (i % 2 == 0, (i / 2) % 2 == 0);
                let mut c = Vec::new();
                if a {
                    c.extend([(0, 1), (1, 1), (2, 1)]);
                }
                if b {
                    c.extend([(3, 1), (4, 1), (5, 1)]);
                }
                if c.is_empty() {
                    c.push((6, 1));
                }
                Document::from_counts(c)
            })
            .collect();
        Corpus::with_anonymous_vocab("blocks", 7, docs).unwrap()
    }

    #[test]
    fn recovers_independent_blocks() {
        let c = block_corpus(2000);
        let s = build_skeleton(&c, &SkeletonConfig::default()).unwrap();
        assert_eq!(s.provenance(), Provenance::Built);
        let labels = s.labels();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[1], labels[2]);
        assert_eq!(labels[3], labels[4]);
        assert_ne!(labels[0], labels[3]);
        assert_eq!(s, build_skeleton(&c, &SkeletonConfig::default()).unwrap());
    }

    #[test]
    fn two_dependent_words_give_one_unit() {
        let docs = (0..40)
            .map(|i| if i % 2 == 0 { Document::from_counts([(0, 2), (1, 1)]) } else { Document::from_counts([(0, 1)]) })
            .collect();
        let c = Corpus::with_anonymous_vocab("pair", 2, docs).unwrap();
        let s = build_skeleton(&c, &SkeletonConfig::default()).unwrap();
        // word 0 is in every document, so it falls back to the only group
        assert_eq!(s.groups(), &[vec![0, 1]]);
        assert!(s.tree_edges().is_empty());
    }

    #[test]
    fn loads_and_validates_skeletons() {
        let p = Path::new("s.txt");
        let s = parse_skeleton(p, "0: 0 1 2\n1: 3 4 5 6\n[tree]\n0 1\n", 7).unwrap();
        assert_eq!(s.provenance(), Provenance::Loaded);
        assert_eq!(s.owner(5), 1);
        assert_eq!(parse_skeleton(p, &s.to_text(), 7).unwrap(), s);

        let err = parse_skeleton(p, "0: 0 1 4\n1: 2 3 4\n", 5).unwrap_err();
        assert!(err.to_string().contains("visible 4 assigned twice"), "{err}");
        let err = parse_skeleton(p, "0: 0\n1: 1\n2: 2\n[tree]\n0 1\n1 2\n2 0\n", 3).unwrap_err();
        assert!(err.to_string().contains("hidden graph is not a forest"), "{err}");
        assert!(parse_skeleton(p, "0: 0 1\n", 3).is_err());
        assert!(parse_skeleton(p, "0: 0 9\n", 2).is_err());
    }

    #[test]
    fn cmi_of_copy_construction_is_ln2() {
        // Z copies V, Z' independent, all uniform
        let mut joint = [[[0.0; 2]; 2]; 2];
        for z in 0..2 {
            for zp in 0..2 {
                joint[z][z][zp] = 0.25;
            }
        }
        assert!((conditional_mutual_information(&joint) - 2f64.ln()).abs() < 1e-15);
        let indep = [[[0.125; 2]; 2]; 2];
        assert_eq!(conditional_mutual_information(&indep), 0.0);
    }

    #[test]
    fn positive_mi_ignores_negative_association() {
        assert_eq!(positive_mi(100.0, 50.0, 50.0, 10.0), 0.0);
        assert!(positive_mi(100.0, 50.0, 50.0, 40.0) > 0.0);
        assert!((binary_mi(100.0, 50.0, 50.0, 50.0) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rand_index_counts_agreeing_pairs() {
        assert_eq!(rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
        assert!((rand_index(&[0, 0, 1], &[0, 1, 1]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spanning_tree_prefers_heavy_edges() {
        let w = [0.0, 0.9, 0.1, 0.9, 0.0, 0.5, 0.1, 0.5, 0.0];
        assert_eq!(max_spanning_tree(3, &w), vec![(0, 1), (1, 2)]);
    }
}
