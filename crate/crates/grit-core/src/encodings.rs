//! Walk and distance encodings computed from a graph.
//!
//! The central object is [`RrwpTensor`]: the stack `[I, M, M^2, ..., M^(K-1)]`
//! of random-walk transition powers, where `M = D^-1 A`. Rows of isolated
//! nodes are all-zero (the walk has nowhere to go), and every power is built
//! by a sparse-times-dense product, so the whole stack costs `O(K * n * |E|)`.
//!
//! Two numeric modes are supported. Float64 is the default; exact big-integer
//! rationals back the color-refinement and proposition machinery where
//! equality has to be decided, not approximated.

use crate::graph::Graph;
use crate::mat::{Mat, RatMat};
use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("walk length bound K must be at least 1")]
    ZeroK,
    #[error("propagation coefficients: expected {expected}, got {got}")]
    CoeffLen { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericMode {
    Float64,
    ExactRational,
}

/// One-step random-walk matrix `M = D^-1 A`; rows of isolated nodes stay zero.
pub fn transition_matrix(g: &Graph) -> Mat {
    let n = g.n();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        let d = g.degree(i);
        if d == 0 {
            continue;
        }
        let w = 1.0 / d as f64;
        for &j in g.neighbors(i) {
            m[(i, j)] = w;
        }
    }
    m
}

/// Exact-rational variant of [`transition_matrix`].
pub fn transition_matrix_rational(g: &Graph) -> RatMat {
    let n = g.n();
    let mut m = RatMat::zeros(n, n);
    for i in 0..n {
        let d = g.degree(i);
        if d == 0 {
            continue;
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(d));
        for &j in g.neighbors(i) {
            m[(i, j)] = w.clone();
        }
    }
    m
}

#[derive(Debug, Clone)]
enum RrwpData {
    Float(Vec<Mat>),
    Rational(Vec<RatMat>),
}

/// The walk-power stack `[I, M, M^2, ..., M^(K-1)]`.
#[derive(Debug, Clone)]
pub struct RrwpTensor {
    n: usize,
    k: usize,
    data: RrwpData,
}

impl RrwpTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stacked powers, including the identity slice.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> NumericMode {
        match self.data {
            RrwpData::Float(_) => NumericMode::Float64,
            RrwpData::Rational(_) => NumericMode::ExactRational,
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        match &self.data {
            RrwpData::Float(s) => s[k][(i, j)],
            RrwpData::Rational(s) => crate::mat::rat_to_f64(&s[k][(i, j)]),
        }
    }

    /// Exact entry; panics in float mode.
    pub fn get_rational(&self, i: usize, j: usize, k: usize) -> &BigRational {
        match &self.data {
            RrwpData::Rational(s) => &s[k][(i, j)],
            RrwpData::Float(_) => panic!("rational access on a float-mode tensor"),
        }
    }

    pub fn slice(&self, k: usize) -> Mat {
        match &self.data {
            RrwpData::Float(s) => s[k].clone(),
            RrwpData::Rational(s) => s[k].to_f64(),
        }
    }

    /// The length-K walk-probability vector for the ordered pair (i, j).
    pub fn pair_vector(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.k).map(|k| self.get(i, j, k)).collect()
    }

    pub fn pair_vector_rational(&self, i: usize, j: usize) -> Vec<BigRational> {
        (0..self.k).map(|k| self.get_rational(i, j, k).clone()).collect()
    }

    /// Smallest k with a nonzero walk probability from i to j, if any.
    /// In rational mode this is exact; spec'd to equal the shortest path
    /// distance whenever j is reachable from i in fewer than K hops.
    pub fn first_nonzero_power(&self, i: usize, j: usize) -> Option<usize> {
        (0..self.k).find(|&k| match &self.data {
            RrwpData::Float(s) => s[k][(i, j)] != 0.0,
            RrwpData::Rational(s) => !s[k][(i, j)].is_zero(),
        })
    }
}

/// Builds the RRWP stack for `g` with `K` slices.
pub fn rrwp(g: &Graph, k: usize, mode: NumericMode) -> Result<RrwpTensor, EncodingError> {
    if k == 0 {
        return Err(EncodingError::ZeroK);
    }
    let n = g.n();
    let data = match mode {
        NumericMode::Float64 => {
            let mut slices = Vec::with_capacity(k);
            slices.push(Mat::identity(n));
            for step in 1..k {
                slices.push(spmm_float(g, &slices[step - 1]));
            }
            RrwpData::Float(slices)
        }
        NumericMode::ExactRational => {
            let mut slices = Vec::with_capacity(k);
            slices.push(RatMat::identity(n));
            for step in 1..k {
                slices.push(spmm_rational(g, &slices[step - 1]));
            }
            RrwpData::Rational(slices)
        }
    };
    Ok(RrwpTensor { n, k, data })
}

/// One sparse-times-dense step: `(M X)[i] = (1/d_i) * sum_{j in N(i)} X[j]`.
fn spmm_float(g: &Graph, x: &Mat) -> Mat {
    let n = g.n();
    let mut out = Mat::zeros(n, x.cols());
    for i in 0..n {
        let d = g.degree(i);
        if d == 0 {
            continue;
        }
        let w = 1.0 / d as f64;
        for &j in g.neighbors(i) {
            for c in 0..x.cols() {
                out[(i, c)] += w * x[(j, c)];
            }
        }
    }
    out
}

fn spmm_rational(g: &Graph, x: &RatMat) -> RatMat {
    let n = g.n();
    let mut out = RatMat::zeros(n, x.cols());
    for i in 0..n {
        let d = g.degree(i);
        if d == 0 {
            continue;
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(d));
        for &j in g.neighbors(i) {
            for c in 0..x.cols() {
                let add = &w * &x[(j, c)];
                let cur = &out[(i, c)] + add;
                out[(i, c)] = cur;
            }
        }
    }
    out
}

/// Node-level structural encoding: row i is the diagonal vector
/// `[P[i,i,0], ..., P[i,i,K-1]]`. Column 0 is all ones.
pub fn rwse(p: &RrwpTensor) -> Mat {
    let mut out = Mat::zeros(p.n(), p.k());
    for i in 0..p.n() {
        for k in 0..p.k() {
            out[(i, k)] = p.get(i, i, k);
        }
    }
    out
}

/// All-pairs shortest path distances. Unreachable pairs carry the sentinel
/// `n`, one more than any realizable distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpdMatrix {
    n: usize,
    dist: Vec<usize>,
}

impl SpdMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sentinel used for unreachable pairs.
    pub fn sentinel(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.dist[i * self.n + j]
    }

    pub fn is_reachable(&self, i: usize, j: usize) -> bool {
        self.get(i, j) < self.sentinel()
    }

    pub fn max_finite(&self) -> usize {
        (0..self.n * self.n)
            .map(|idx| self.dist[idx])
            .filter(|&d| d < self.n)
            .max()
            .unwrap_or(0)
    }
}

/// BFS from every node.
pub fn spd(g: &Graph) -> SpdMatrix {
    let n = g.n();
    let sentinel = n;
    let mut dist = vec![sentinel; n * n];
    let mut queue = std::collections::VecDeque::new();
    for s in 0..n {
        dist[s * n + s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = dist[s * n + u];
            for &v in g.neighbors(u) {
                if dist[s * n + v] == sentinel {
                    dist[s * n + v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    SpdMatrix { n, dist }
}

/// Truncated distances: the true distance when it is at most K-1, the value
/// K otherwise (including unreachable pairs).
pub fn spd_truncated(g: &Graph, k: usize) -> Result<Vec<Vec<usize>>, EncodingError> {
    if k == 0 {
        return Err(EncodingError::ZeroK);
    }
    let d = spd(g);
    let n = g.n();
    Ok((0..n)
        .map(|i| (0..n).map(|j| d.get(i, j).min(k)).collect())
        .collect())
}

/// Row-normalized binarized k-th adjacency power: entry (i, j) is positive
/// iff a walk of length exactly k joins i to j, and each nonzero row is
/// normalized to sum to one. Zero rows stay zero.
pub fn khop_target(g: &Graph, k: usize) -> Result<Mat, EncodingError> {
    if k == 0 {
        return Err(EncodingError::ZeroK);
    }
    let n = g.n();
    // boolean matrix power: no overflow regardless of k
    let mut reach: Vec<bool> = vec![false; n * n];
    for i in 0..n {
        for &j in g.neighbors(i) {
            reach[i * n + j] = true;
        }
    }
    for _ in 1..k {
        let mut next = vec![false; n * n];
        for i in 0..n {
            for m in 0..n {
                if reach[i * n + m] {
                    for &j in g.neighbors(m) {
                        next[i * n + j] = true;
                    }
                }
            }
        }
        reach = next;
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        let support = (0..n).filter(|&j| reach[i * n + j]).count();
        if support == 0 {
            continue;
        }
        let w = 1.0 / support as f64;
        for j in 0..n {
            if reach[i * n + j] {
                out[(i, j)] = w;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::named::NamedGraph;

    fn p3() -> Graph {
        NamedGraph::Path(3).build()
    }

    #[test]
    fn transition_matrix_p3() {
        let m = transition_matrix(&p3());
        let expect = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 1.0, 0.0],
        ]);
        assert_eq!(m, expect);
    }

    #[test]
    fn transition_matrix_k2_and_isolated() {
        let m = transition_matrix(&NamedGraph::Complete(2).build());
        assert_eq!(m, Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        let lonely = Graph::from_edges(1, &[], false).unwrap();
        assert_eq!(transition_matrix(&lonely), Mat::zeros(1, 1));
    }

    #[test]
    fn rrwp_p3_hand_values() {
        // M^2 on the 3-path is [[.5,0,.5],[0,1,0],[.5,0,.5]]
        let p = rrwp(&p3(), 3, NumericMode::Float64).unwrap();
        assert_eq!(p.pair_vector(0, 2), vec![0.0, 0.0, 0.5]);
        assert_eq!(p.get(1, 1, 2), 1.0);
    }

    #[test]
    fn rrwp_k1_is_identity() {
        let p = rrwp(&NamedGraph::Cycle(5).build(), 1, NumericMode::Float64).unwrap();
        assert_eq!(p.slice(0), Mat::identity(5));
    }

    #[test]
    fn rrwp_rational_exact() {
        let p = rrwp(&p3(), 3, NumericMode::ExactRational).unwrap();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(*p.get_rational(0, 2, 2), half);
        assert!(p.get_rational(0, 1, 2).is_zero());
    }

    #[test]
    fn rrwp_rejects_k0() {
        assert_eq!(rrwp(&p3(), 0, NumericMode::Float64).unwrap_err(), EncodingError::ZeroK);
    }

    #[test]
    fn rrwp_rows_stochastic() {
        let g = crate::generate::sample_molecular_like(17, 3).unwrap();
        let p = rrwp(&g, 6, NumericMode::Float64).unwrap();
        for k in 1..6 {
            let s = p.slice(k);
            for i in 0..g.n() {
                let sum: f64 = s.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "slice {k} row {i}: {sum}");
            }
        }
    }

    #[test]
    fn rrwp_entries_in_unit_interval() {
        let g = NamedGraph::Dodecahedron.build();
        let p = rrwp(&g, 8, NumericMode::Float64).unwrap();
        for k in 0..8 {
            for v in p.slice(k).data() {
                assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn rwse_p3() {
        let p = rrwp(&p3(), 3, NumericMode::Float64).unwrap();
        let x = rwse(&p);
        assert_eq!(x.row(1), &[1.0, 0.0, 1.0]);
        // column 0 is the identity diagonal
        for i in 0..3 {
            assert_eq!(x[(i, 0)], 1.0);
        }
    }

    #[test]
    fn rwse_cycle4_vertex_transitive() {
        let p = rrwp(&NamedGraph::Cycle(4).build(), 3, NumericMode::Float64).unwrap();
        let x = rwse(&p);
        for i in 0..4 {
            assert_eq!(x.row(i), &[1.0, 0.0, 0.5]);
        }
    }

    #[test]
    fn spd_p3_and_diameter() {
        let d = spd(&p3());
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.get(0, 0), 0);
        let dodec = spd(&NamedGraph::Dodecahedron.build());
        assert_eq!(dodec.max_finite(), 5);
    }

    #[test]
    fn spd_unreachable_sentinel() {
        let d = spd(&NamedGraph::TwoTriangles.build());
        assert_eq!(d.get(0, 3), d.sentinel());
        assert!(!d.is_reachable(0, 3));
        assert!(d.is_reachable(0, 1));
    }

    #[test]
    fn spd_symmetric_triangle_inequality() {
        let g = crate::generate::sample_sbm(&[6, 6], 0.5, 0.1, 11).unwrap();
        let d = spd(&g);
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(d.get(i, j), d.get(j, i));
                for m in 0..n {
                    if d.is_reachable(i, m) && d.is_reachable(m, j) {
                        assert!(d.get(i, j) <= d.get(i, m) + d.get(m, j));
                    }
                }
            }
        }
    }

    #[test]
    fn spd_truncated_values() {
        let t2 = spd_truncated(&p3(), 2).unwrap();
        assert_eq!(t2[0][2], 2); // true distance 2 exceeds K-1 = 1
        let t3 = spd_truncated(&p3(), 3).unwrap();
        assert_eq!(t3[0][2], 2); // within range, untouched
        let tt = spd_truncated(&NamedGraph::TwoTriangles.build(), 6).unwrap();
        assert_eq!(tt[0][3], 6); // sentinel maps to K
    }

    #[test]
    fn khop_k1_equals_transition() {
        for g in [p3(), NamedGraph::Cycle(5).build(), NamedGraph::Complete(4).build()] {
            assert_eq!(khop_target(&g, 1).unwrap(), transition_matrix(&g));
        }
    }

    #[test]
    fn khop_p3_two_hops() {
        let t = khop_target(&p3(), 2).unwrap();
        let expect = Mat::from_rows(&[
            vec![0.5, 0.0, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.5],
        ]);
        assert_eq!(t, expect);
    }

    #[test]
    fn khop_complete3_two_hops_uniform() {
        let t = khop_target(&NamedGraph::Complete(3).build(), 2).unwrap();
        let third = 1.0 / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t[(i, j)], third);
            }
        }
    }

    #[test]
    fn first_nonzero_power_matches_spd() {
        let g = NamedGraph::Dodecahedron.build();
        let p = rrwp(&g, g.n(), NumericMode::ExactRational).unwrap();
        let d = spd(&g);
        for i in 0..g.n() {
            for j in 0..g.n() {
                assert_eq!(p.first_nonzero_power(i, j), Some(d.get(i, j)));
            }
        }
    }

    #[test]
    fn float_and_rational_agree() {
        let g = crate::generate::sample_molecular_like(14, 21).unwrap();
        let pf = rrwp(&g, 10, NumericMode::Float64).unwrap();
        let pr = rrwp(&g, 10, NumericMode::ExactRational).unwrap();
        for k in 0..10 {
            assert!(pf.slice(k).max_abs_diff(&pr.slice(k)) < 1e-12);
        }
    }
}
