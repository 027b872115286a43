use std::collections::VecDeque;

use super::sparse::CsrMatrix;

/// Lower and upper bandwidths `(kl, ku)` of the stored pattern.
pub fn bandwidths(a: &CsrMatrix) -> (usize, usize) {
    let mut kl = 0;
    let mut ku = 0;
    for (i, j, _) in a.triplets() {
        if i > j {
            kl = kl.max(i - j);
        } else {
            ku = ku.max(j - i);
        }
    }
    (kl, ku)
}

/// Reverse Cuthill–McKee ordering of the symmetrized pattern of `a`.
///
/// Returns `perm` with `perm[k]` the original index placed at position `k`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for nb in &mut adj {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral_node(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// George–Liu pseudo-peripheral node search within the component of `seed`.
fn peripheral_node(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(root, adj);
    loop {
        let cand = last
            .iter()
            .copied()
            .min_by_key(|&u| (degree[u], u))
            .unwrap_or(root);
        let (e, l) = bfs_levels(cand, adj);
        if e > ecc {
            root = cand;
            ecc = e;
            last = l;
        } else {
            return root;
        }
    }
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut max_level = 0;
    let mut last = vec![root];
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                if level[u] > max_level {
                    max_level = level[u];
                    last.clear();
                }
                if level[u] == max_level {
                    last.push(u);
                }
                queue.push_back(u);
            }
        }
    }
    (max_level, last)
}
