//! Reverse Cuthill-McKee ordering for symmetric sparsity patterns.

use std::collections::VecDeque;

use super::CsrMatrix;

/// Symmetric permutation: `perm[new] = old`, `inverse[old] = new`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    pub perm: Vec<usize>,
    pub inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            perm: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn from_perm(perm: Vec<usize>) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        Permutation { perm, inverse }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

fn adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.n_rows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, v) in a.row(i) {
            if i != j && v != 0.0 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
        nbrs.dedup();
    }
    adj
}

/// BFS level structure from `root`; returns (levels, last level).
fn level_structure(
    adj: &[Vec<usize>],
    root: usize,
    mark: &mut [usize],
    stamp: usize,
) -> (usize, Vec<usize>) {
    let mut frontier = vec![root];
    mark[root] = stamp;
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if mark[v] != stamp {
                    mark[v] = stamp;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// George-Liu pseudo-peripheral node search starting from `start`.
fn pseudo_peripheral(
    adj: &[Vec<usize>],
    start: usize,
    mark: &mut [usize],
    stamp: &mut usize,
) -> usize {
    let mut root = start;
    *stamp += 1;
    let (mut depth, mut last) = level_structure(adj, root, mark, *stamp);
    loop {
        let candidate = *last
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .expect("nonempty level");
        *stamp += 1;
        let (d, l) = level_structure(adj, candidate, mark, *stamp);
        if d > depth {
            root = candidate;
            depth = d;
            last = l;
        } else {
            return root;
        }
    }
}

/// Reverse Cuthill-McKee ordering of the (symmetrised) pattern of `a`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Permutation {
    let n = a.n_rows();
    let adj = adjacency(a);
    let mut visited = vec![false; n];
    let mut mark = vec![0usize; n];
    let mut stamp = 0usize;
    let mut order = Vec::with_capacity(n);

    // components in order of their lowest-degree unvisited node
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(&adj, seed, &mut mark, &mut stamp);
        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (adj[v].len(), v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    Permutation::from_perm(order)
}

/// Envelope (profile) size of `P A P^T`: sum over rows of `i - first(i)`.
pub fn profile(a: &CsrMatrix, p: &Permutation) -> usize {
    let mut total = 0;
    for new_i in 0..a.n_rows() {
        let old_i = p.perm[new_i];
        let first = a
            .row(old_i)
            .filter(|&(_, v)| v != 0.0)
            .map(|(j, _)| p.inverse[j])
            .min()
            .unwrap_or(new_i)
            .min(new_i);
        total += new_i - first;
    }
    total
}
