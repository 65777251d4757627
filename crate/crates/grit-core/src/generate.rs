//! Seeded random graph generators.
//!
//! Both generators are pure functions of their arguments: the same inputs and
//! seed produce the same graph, bit for bit, on every platform.

use crate::graph::Graph;
use crate::rng::SplitMix64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("block {index} is empty")]
    EmptyBlock { index: usize },
    #[error("probability {value} outside [0, 1]")]
    BadProbability { value: f64 },
    #[error("molecular-like graphs need at least 3 nodes, got {n}")]
    TooSmall { n: usize },
}

/// Stochastic block model: within-block edges with probability `p_in`,
/// cross-block with `p_out`. Undirected, simple.
pub fn sample_sbm(
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<Graph, GenerateError> {
    for (index, &s) in sizes.iter().enumerate() {
        if s == 0 {
            return Err(GenerateError::EmptyBlock { index });
        }
    }
    for &p in &[p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(GenerateError::BadProbability { value: p });
        }
    }
    let n: usize = sizes.iter().sum();
    let mut block = Vec::with_capacity(n);
    for (b, &s) in sizes.iter().enumerate() {
        block.extend(std::iter::repeat_n(b, s));
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block[i] == block[j] { p_in } else { p_out };
            if rng.next_f64() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_edges(n, &edges, false).expect("generator emits valid edges"))
}

/// Connected sparse graph with molecular-like density: a random recursive
/// tree plus a few chords, so the edge count lands in
/// `[n - 1, ceil(1.15 * n)]`.
pub fn sample_molecular_like(n: usize, seed: u64) -> Result<Graph, GenerateError> {
    if n < 3 {
        return Err(GenerateError::TooSmall { n });
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n + n / 6);
    for i in 1..n {
        let parent = rng.uniform_usize(i);
        edges.push((parent, i));
    }
    let max_edges = (1.15 * n as f64).ceil() as usize;
    let extra = rng.uniform_usize(max_edges - (n - 1) + 1);
    let mut have: std::collections::BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < 50 * n {
        attempts += 1;
        let u = rng.uniform_usize(n);
        let v = rng.uniform_usize(n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if have.insert(key) {
            edges.push(key);
            added += 1;
        }
    }
    Ok(Graph::from_edges(n, &edges, false).expect("generator emits valid edges"))
}

/// True when every node can reach every other (BFS from node 0).
pub fn is_connected(g: &Graph) -> bool {
    let n = g.n();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sbm_forced_single_edge() {
        let g = sample_sbm(&[1, 1], 0.0, 1.0, 123).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn sbm_forced_triangle() {
        let g = sample_sbm(&[3], 1.0, 0.0, 9).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!((0..3).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn sbm_block_structure_dominates() {
        let g = sample_sbm(&[10, 10], 0.5, 0.05, 7).unwrap();
        let mut within = 0;
        let mut cross = 0;
        for (u, v) in g.edge_list() {
            if (u < 10) == (v < 10) {
                within += 1;
            } else {
                cross += 1;
            }
        }
        // 90 within-block pairs per block at p=.5 vs 100 cross pairs at p=.05
        let within_density = within as f64 / 90.0;
        let cross_density = cross as f64 / 100.0;
        assert!(within_density > cross_density, "{within_density} vs {cross_density}");
    }

    #[test]
    fn sbm_rejects_empty_block() {
        assert_eq!(
            sample_sbm(&[2, 0], 0.5, 0.5, 0).unwrap_err(),
            GenerateError::EmptyBlock { index: 1 }
        );
    }

    #[test]
    fn sbm_deterministic() {
        let a = sample_sbm(&[5, 5], 0.4, 0.1, 99).unwrap();
        let b = sample_sbm(&[5, 5], 0.4, 0.1, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn molecular_like_connected_and_sparse() {
        for seed in 0..20 {
            let g = sample_molecular_like(23, seed).unwrap();
            assert!(is_connected(&g), "seed {seed} disconnected");
            let e = g.edge_count();
            assert!((22..=27).contains(&e), "seed {seed}: {e} edges");
        }
    }

    #[test]
    fn molecular_like_tiny() {
        let g = sample_molecular_like(3, 4).unwrap();
        assert!(is_connected(&g));
        assert!((2..=3).contains(&g.edge_count()));
    }

    #[test]
    fn molecular_like_deterministic() {
        assert_eq!(
            sample_molecular_like(23, 0).unwrap(),
            sample_molecular_like(23, 0).unwrap()
        );
    }

    #[test]
    fn molecular_like_rejects_n2() {
        assert_eq!(sample_molecular_like(2, 0).unwrap_err(), GenerateError::TooSmall { n: 2 });
    }
}
