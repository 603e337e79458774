//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use condforest::forest::{Forest, UlamHarrisTree};
use condforest::law::OffspringLaw;

pub const FIGURE_ONE_COUNTS: [u32; 13] = [3, 2, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0];
pub const FIGURE_ONE_WALK: [i64; 14] = [0, 2, 3, 5, 4, 3, 2, 3, 2, 1, 0, 1, 0, -1];
pub const FIGURE_ONE_HEIGHTS: [u64; 13] = [0, 1, 2, 3, 3, 3, 2, 3, 3, 1, 1, 2, 2];

pub fn figure_one() -> UlamHarrisTree {
    UlamHarrisTree::new(FIGURE_ONE_COUNTS.to_vec()).unwrap()
}

/// All child-count sequences of plane trees with `m` vertices.
pub fn all_trees(m: usize) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, pending: usize, m: usize, out: &mut Vec<Vec<u32>>) {
        let left = m - prefix.len();
        if left == 0 {
            if pending == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        if pending == 0 || pending > left {
            return;
        }
        for c in 0..=(left - pending) as u32 {
            prefix.push(c);
            rec(prefix, pending - 1 + c as usize, m, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), 1, m, &mut out);
    out
}

/// All forests (ordered sequences of trees) with total progeny `m`.
pub fn all_forests(m: usize) -> Vec<Forest> {
    let trees: Vec<Vec<Vec<u32>>> = (0..=m).map(all_trees).collect();
    fn rec(left: usize, prefix: &mut Vec<Vec<u32>>, trees: &[Vec<Vec<u32>>], out: &mut Vec<Forest>) {
        if left == 0 {
            let f = prefix.iter().map(|c| UlamHarrisTree::new(c.clone()).unwrap()).collect();
            out.push(Forest::new(f).unwrap());
            return;
        }
        for size in 1..=left {
            for t in &trees[size] {
                prefix.push(t.clone());
                rec(left - size, prefix, trees, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(m, &mut Vec::new(), &trees, &mut out);
    out
}

/// Parent of each vertex in depth-first order, from child counts alone.
pub fn parents(counts: &[u32]) -> Vec<Option<usize>> {
    let mut parent = vec![None; counts.len()];
    let mut open: Vec<(usize, u32)> = Vec::new();
    for (v, &c) in counts.iter().enumerate() {
        while matches!(open.last(), Some(&(_, 0))) {
            open.pop();
        }
        if let Some(top) = open.last_mut() {
            parent[v] = Some(top.0);
            top.1 -= 1;
        }
        open.push((v, c));
    }
    parent
}

/// Depths of the vertices of a forest in depth-first order.
pub fn depths(forest: &Forest) -> Vec<u64> {
    forest
        .trees()
        .iter()
        .flat_map(|t| {
            let p = parents(t.child_counts());
            let mut d = vec![0u64; p.len()];
            for v in 1..p.len() {
                d[v] = d[p[v].unwrap()] + 1;
            }
            d
        })
        .collect()
}

/// Rebuilds a forest from its depth-first depth sequence: the children of
/// `i` are the later vertices at depth `d_i + 1` before the next vertex at
/// depth at most `d_i`.
pub fn forest_from_depths(d: &[u64]) -> Forest {
    let counts: Vec<u32> = (0..d.len())
        .map(|i| {
            d[i + 1..]
                .iter()
                .take_while(|&&x| x > d[i])
                .filter(|&&x| x == d[i] + 1)
                .count() as u32
        })
        .collect();
    let mut trees = Vec::new();
    let mut start = 0;
    for i in 1..=d.len() {
        if i == d.len() || d[i] == 0 {
            trees.push(UlamHarrisTree::new(counts[start..i].to_vec()).unwrap());
            start = i;
        }
    }
    Forest::new(trees).unwrap()
}

/// Graph distances from `source` by breadth-first search.
pub fn bfs_distances(counts: &[u32], source: usize) -> Vec<u64> {
    let p = parents(counts);
    let mut adj = vec![Vec::new(); counts.len()];
    for (v, parent) in p.iter().enumerate() {
        if let Some(u) = *parent {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut dist = vec![u64::MAX; counts.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == u64::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// `H_n = #{k < n : x_k = min_{k <= j <= n} x_j}`.
pub fn literal_height(x: &[i64], n: usize) -> u64 {
    (0..n).filter(|&k| x[k] == *x[k..=n].iter().min().unwrap()).count() as u64
}

/// The conditioned law of the walk given `T_k = n`, by enumerating every
/// child-count sequence of length `n`.
pub fn brute_force_conditioned(law: &OffspringLaw, max_children: i64, k: u64, n: usize) -> HashMap<Vec<i64>, f64> {
    fn rec(
        law: &OffspringLaw,
        max_c: i64,
        k: i64,
        n: usize,
        path: &mut Vec<i64>,
        weight: f64,
        out: &mut HashMap<Vec<i64>, f64>,
    ) {
        let x = *path.last().unwrap();
        let i = path.len() - 1;
        if i == n {
            if x == -k {
                out.insert(path.clone(), weight);
            }
            return;
        }
        if x <= -k {
            return;
        }
        // at most one unit down per step
        if x - (n - i) as i64 > -k {
            return;
        }
        for c in 0..=max_c {
            let p = law.pmf(c as u64);
            if p > 0.0 {
                path.push(x + c - 1);
                rec(law, max_c, k, n, path, weight * p, out);
                path.pop();
            }
        }
    }
    let mut out = HashMap::new();
    rec(law, max_children, k as i64, n, &mut vec![0], 1.0, &mut out);
    let total: f64 = out.values().sum();
    for v in out.values_mut() {
        *v /= total;
    }
    out
}

pub fn total_variation(a: &HashMap<Vec<i64>, f64>, b: &HashMap<Vec<i64>, f64>) -> f64 {
    let mut tv = 0.0;
    for (key, p) in a {
        tv += (p - b.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, q) in b {
        if !a.contains_key(key) {
            tv += q;
        }
    }
    tv / 2.0
}
