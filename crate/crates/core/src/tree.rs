//! Exact sum-product inference over binary hidden units linked by a forest.
//!
//! Messages are kept in the log domain. Node `j` carries log-potential
//! `[n_j(0), n_j(1)]` and each edge `{j, l}` carries `w · h_j · h_l`.
//! Clamping a unit sets the log-potential of its other state to `-inf`.

use crate::error::{Error, Result};
use crate::scalar::{log_add_exp, sigmoid, Scalar};

/// Rooted traversal of a forest over `n` binary units.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenTree {
    n: usize,
    /// Normalized edges with `j < l`.
    edges: Vec<(usize, usize)>,
    /// Neighbours of each node as `(node, edge index)`.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Nodes in BFS order, component by component.
    order: Vec<usize>,
    /// `(parent, edge index)` of each non-root node.
    parent: Vec<Option<(usize, usize)>>,
    /// Component root of each node.
    root: Vec<usize>,
    roots: Vec<usize>,
}

impl HiddenTree {
    /// Build from undirected edges. Fails on self-loops, duplicates, out of
    /// range indices and cycles.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        let mut uf = UnionFind::new(n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Structure(format!("tree edge ({a}, {b}) out of range for {n} hidden units")));
            }
            if a == b {
                return Err(Error::Structure(format!("tree edge ({a}, {b}) is a self-loop")));
            }
            if !uf.union(a, b) {
                return Err(Error::Structure("hidden graph is not a forest".into()));
            }
            norm.push((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (e, &(a, b)) in norm.iter().enumerate() {
            adjacency[a].push((b, e));
            adjacency[b].push((a, e));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut order = Vec::with_capacity(n);
        let mut parent = vec![None; n];
        let mut root = vec![usize::MAX; n];
        let mut roots = Vec::new();
        for r in 0..n {
            if root[r] != usize::MAX {
                continue;
            }
            roots.push(r);
            root[r] = r;
            let start = order.len();
            order.push(r);
            let mut head = start;
            while head < order.len() {
                let j = order[head];
                head += 1;
                for &(l, e) in &adjacency[j] {
                    if root[l] == usize::MAX {
                        root[l] = r;
                        parent[l] = Some((j, e));
                        order.push(l);
                    }
                }
            }
        }
        Ok(HiddenTree {
            n,
            edges: norm,
            adjacency,
            order,
            parent,
            root,
            roots,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, j: usize) -> &[(usize, usize)] {
        &self.adjacency[j]
    }

    pub fn component_root(&self, j: usize) -> usize {
        self.root[j]
    }

    pub fn n_components(&self) -> usize {
        self.roots.len()
    }

    /// Upward pass. Returns per-node upward beliefs and per-node messages to
    /// the parent, plus the total log partition.
    fn upward<T: Scalar>(&self, node: &[[T; 2]], edge_w: &[T]) -> (Vec<[T; 2]>, Vec<[T; 2]>, T) {
        let zero = [T::zero(); 2];
        let mut up = node.to_vec();
        let mut msg = vec![zero; self.n];
        for &j in self.order.iter().rev() {
            if let Some((p, e)) = self.parent[j] {
                let w = edge_w[e];
                let b = up[j];
                let m = [log_add_exp(b[0], b[1]), log_add_exp(b[0], b[1] + w)];
                msg[j] = m;
                up[p][0] += m[0];
                up[p][1] += m[1];
            }
        }
        let log_z = self
            .roots
            .iter()
            .map(|&r| log_add_exp(up[r][0], up[r][1]))
            .fold(T::zero(), |a, b| a + b);
        (up, msg, log_z)
    }

    /// Log partition `ln Σ_h Π exp(node) Π exp(edge)`.
    pub fn log_partition<T: Scalar>(&self, node: &[[T; 2]], edge_w: &[T]) -> T {
        self.upward(node, edge_w).2
    }

    /// Singleton and pairwise marginals plus the log partition.
    pub fn infer<T: Scalar>(&self, node: &[[T; 2]], edge_w: &[T]) -> TreePosterior<T> {
        let (up, msg, log_z) = self.upward(node, edge_w);
        // full[j] = up[j] + message from the parent side
        let mut full = up.clone();
        for &j in &self.order {
            if let Some((p, e)) = self.parent[j] {
                let w = edge_w[e];
                let cavity = [full[p][0] - msg[j][0], full[p][1] - msg[j][1]];
                let down = [log_add_exp(cavity[0], cavity[1]), log_add_exp(cavity[0], cavity[1] + w)];
                full[j][0] += down[0];
                full[j][1] += down[1];
            }
        }
        let singleton = full.iter().map(|f| sigmoid(f[1] - f[0])).collect();
        let mut pairwise = vec![[[T::zero(); 2]; 2]; self.edges.len()];
        for &j in &self.order {
            if let Some((p, e)) = self.parent[j] {
                let w = edge_w[e];
                let cav = [full[p][0] - msg[j][0], full[p][1] - msg[j][1]];
                let mut t = [[T::zero(); 2]; 2];
                // t[s_p][s_j]
                for (sp, row) in t.iter_mut().enumerate() {
                    for (sj, cell) in row.iter_mut().enumerate() {
                        let coupling = if sp == 1 && sj == 1 { w } else { T::zero() };
                        *cell = cav[sp] + up[j][sj] + coupling;
                    }
                }
                let z = log_add_exp(log_add_exp(t[0][0], t[0][1]), log_add_exp(t[1][0], t[1][1]));
                let (a, _) = self.edges[e];
                for sp in 0..2 {
                    for sj in 0..2 {
                        let v = (t[sp][sj] - z).exp();
                        // store as table[h_a][h_b] with a < b
                        if a == p {
                            pairwise[e][sp][sj] = v;
                        } else {
                            pairwise[e][sj][sp] = v;
                        }
                    }
                }
            }
        }
        TreePosterior {
            singleton,
            pairwise,
            log_hidden_partition: log_z,
        }
    }
}

/// Exact posterior over the hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePosterior<T> {
    /// `P(h_j = 1 | U)`.
    pub singleton: Vec<T>,
    /// Per tree edge `{j, l}` with `j < l`: `pairwise[e][h_j][h_l]`.
    pub pairwise: Vec<[[T; 2]; 2]>,
    pub log_hidden_partition: T,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Whether `edges` forms a forest over `n` nodes.
pub fn is_forest(n: usize, edges: &[(usize, usize)]) -> bool {
    HiddenTree::new(n, edges).is_ok()
}
