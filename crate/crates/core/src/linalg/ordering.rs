//! Fill-reducing orderings for the sparse direct solver.

use std::collections::VecDeque;

/// Undirected adjacency graph in compressed form (no self loops).
#[derive(Clone, Debug)]
pub struct Graph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    /// Symmetrised sparsity pattern of a square matrix given by CSR arrays.
    pub fn from_pattern(n: usize, indptr: &[usize], indices: &[usize]) -> Self {
        let mut deg = vec![0usize; n + 1];
        for i in 0..n {
            for &j in &indices[indptr[i]..indptr[i + 1]] {
                if i != j {
                    deg[i + 1] += 1;
                    deg[j + 1] += 1;
                }
            }
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut next = deg.clone();
        let mut adj = vec![0usize; deg[n]];
        for i in 0..n {
            for &j in &indices[indptr[i]..indptr[i + 1]] {
                if i != j {
                    adj[next[i]] = j;
                    next[i] += 1;
                    adj[next[j]] = i;
                    next[j] += 1;
                }
            }
        }
        let mut xadj = vec![0usize; n + 1];
        let mut out = Vec::with_capacity(adj.len());
        for i in 0..n {
            let row = &mut adj[deg[i]..deg[i + 1]];
            row.sort_unstable();
            let mut last = usize::MAX;
            for &j in row.iter() {
                if j != last {
                    out.push(j);
                    last = j;
                }
            }
            xadj[i + 1] = out.len();
        }
        Self { xadj, adj: out }
    }

    pub fn len(&self) -> usize {
        self.xadj.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.xadj[v]..self.xadj[v + 1]]
    }
}

const LEAF_SIZE: usize = 48;

/// Nested-dissection ordering built from breadth-first level structures.
///
/// Returns `perm` with `perm[k]` = original index eliminated at step `k`.
pub fn nested_dissection(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut nd = Dissector {
        g,
        owner: vec![0u32; n],
        level: vec![u32::MAX; n],
        next_label: 1,
        out: Vec::with_capacity(n),
    };
    let all: Vec<usize> = (0..n).collect();
    nd.dissect(all);
    debug_assert_eq!(nd.out.len(), n);
    nd.out
}

struct Dissector<'a> {
    g: &'a Graph,
    owner: Vec<u32>,
    level: Vec<u32>,
    next_label: u32,
    out: Vec<usize>,
}

impl Dissector<'_> {
    fn claim(&mut self, nodes: &[usize]) -> u32 {
        let label = self.next_label;
        self.next_label += 1;
        for &v in nodes {
            self.owner[v] = label;
        }
        label
    }

    /// Breadth-first levels from `root` restricted to nodes owned by `label`.
    fn bfs(&mut self, root: usize, label: u32, order: &mut Vec<usize>) -> Vec<usize> {
        order.clear();
        let mut widths = Vec::new();
        let mut q = VecDeque::new();
        self.level[root] = 0;
        q.push_back(root);
        while let Some(v) = q.pop_front() {
            order.push(v);
            let lv = self.level[v] as usize;
            if widths.len() <= lv {
                widths.push(0);
            }
            widths[lv] += 1;
            for &w in self.g.neighbors(v) {
                if self.owner[w] == label && self.level[w] == u32::MAX {
                    self.level[w] = self.level[v] + 1;
                    q.push_back(w);
                }
            }
        }
        widths
    }

    fn reset_levels(&mut self, order: &[usize]) {
        for &v in order {
            self.level[v] = u32::MAX;
        }
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.out.extend_from_slice(&nodes);
            return;
        }
        let label = self.claim(&nodes);
        let mut order = Vec::new();

        // split into connected components first
        let widths = self.bfs(nodes[0], label, &mut order);
        if order.len() < nodes.len() {
            let reached = order.clone();
            self.reset_levels(&reached);
            let rest: Vec<usize> = {
                let mut mark = std::collections::HashSet::with_capacity(reached.len());
                mark.extend(reached.iter().copied());
                nodes.iter().copied().filter(|v| !mark.contains(v)).collect()
            };
            self.dissect(reached);
            self.dissect(rest);
            return;
        }
        drop(widths);
        self.reset_levels(&order);

        // pseudo-peripheral root
        let mut root = nodes[0];
        let mut ecc = 0usize;
        for _ in 0..6 {
            let widths = self.bfs(root, label, &mut order);
            let depth = widths.len();
            let last_level = (depth - 1) as u32;
            let cand = order
                .iter()
                .copied()
                .filter(|&v| self.level[v] == last_level)
                .min_by_key(|&v| self.g.neighbors(v).len())
                .unwrap();
            self.reset_levels(&order);
            if depth <= ecc {
                break;
            }
            ecc = depth;
            root = cand;
        }

        let widths = self.bfs(root, label, &mut order);
        if widths.len() < 3 {
            self.reset_levels(&order);
            self.out.extend_from_slice(&nodes);
            return;
        }
        let half = nodes.len() / 2;
        let mut cum = 0;
        let mut mid = 1;
        for (l, &w) in widths.iter().enumerate() {
            if cum + w > half {
                mid = l;
                break;
            }
            cum += w;
        }
        let mid = mid.clamp(1, widths.len() - 2) as u32;

        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut sep = Vec::new();
        for &v in &order {
            let l = self.level[v];
            if l < mid {
                left.push(v);
            } else if l > mid {
                right.push(v);
            } else {
                // separator nodes without neighbours on the far side move to the near side
                let touches_right = self
                    .g
                    .neighbors(v)
                    .iter()
                    .any(|&w| self.owner[w] == label && self.level[w] == mid + 1);
                if touches_right {
                    sep.push(v);
                } else {
                    left.push(v);
                }
            }
        }
        self.reset_levels(&order);
        self.dissect(left);
        self.dissect(right);
        self.out.extend_from_slice(&sep);
    }
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}
