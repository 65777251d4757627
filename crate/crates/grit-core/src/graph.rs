//! Graph representation: CSR adjacency with optional node/edge attributes.
//!
//! Graphs are immutable once built. Construction canonicalizes the edge set
//! (sorted, deduplicated neighbor lists; symmetric closure for undirected
//! graphs) and rejects self-loops, so every algorithm downstream can assume a
//! simple graph in canonical form.

use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("self-loop at node {node}{}", line_suffix(*.line))]
    SelfLoop { node: usize, line: Option<usize> },
    #[error("line {line}: expected two integer node ids, got {text:?}")]
    Parse { line: usize, text: String },
    #[error("edge ({u}, {v}) out of range for {n} nodes")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("node attribute rows ({got}) do not match node count ({n})")]
    NodeAttrMismatch { got: usize, n: usize },
}

fn line_suffix(line: Option<usize>) -> String {
    line.map_or(String::new(), |l| format!(" (line {l})"))
}

/// Per-node degrees. `sum()` equals twice the edge count on undirected graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<usize>);

impl DegreeVector {
    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Simple graph in CSR form. Neighbor lists are strictly sorted and free of
/// duplicates; undirected graphs store both (i,j) and (j,i).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    directed: bool,
    node_attrs: Option<Vec<Vec<f64>>>,
    edge_attrs: Option<BTreeMap<(usize, usize), Vec<f64>>>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicates collapse; for undirected
    /// graphs the symmetric closure is applied. Self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::EdgeOutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop { node: u, line: None });
            }
            adj[u].push(v);
            if !directed {
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for list in &adj {
            col_idx.extend_from_slice(list);
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx, directed, node_attrs: None, edge_attrs: None })
    }

    /// Parses edge-list text: one "u v" pair per line, `#` starts a comment,
    /// blank lines ignored. Node count is max id + 1. Undirected.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut max_id = None::<usize>;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (u, v) = match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => {
                    let parse = |s: &str| {
                        s.parse::<usize>().map_err(|_| GraphError::Parse {
                            line: line_no,
                            text: raw.to_string(),
                        })
                    };
                    (parse(a)?, parse(b)?)
                }
                _ => return Err(GraphError::Parse { line: line_no, text: raw.to_string() }),
            };
            if u == v {
                return Err(GraphError::SelfLoop { node: u, line: Some(line_no) });
            }
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
            edges.push((u, v));
        }
        let n = max_id.map_or(0, |m| m + 1);
        Self::from_edges(n, &edges, false)
    }

    pub fn with_node_attrs(mut self, attrs: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        if attrs.len() != self.n {
            return Err(GraphError::NodeAttrMismatch { got: attrs.len(), n: self.n });
        }
        self.node_attrs = Some(attrs);
        Ok(self)
    }

    pub fn with_edge_attrs(mut self, attrs: BTreeMap<(usize, usize), Vec<f64>>) -> Self {
        self.edge_attrs = Some(attrs);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn degrees(&self) -> DegreeVector {
        DegreeVector((0..self.n).map(|i| self.degree(i)).collect())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Directed edge count for directed graphs, undirected edge count otherwise.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.col_idx.len()
        } else {
            self.col_idx.len() / 2
        }
    }

    /// Unique edges as (u, v) with u < v for undirected graphs.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                if self.directed || i < j {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    pub fn node_attrs(&self) -> Option<&[Vec<f64>]> {
        self.node_attrs.as_deref()
    }

    pub fn edge_attr(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.edge_attrs.as_ref()?.get(&(i, j)).map(Vec::as_slice)
    }

    pub fn edge_attr_dim(&self) -> usize {
        self.edge_attrs
            .as_ref()
            .and_then(|m| m.values().next())
            .map_or(0, Vec::len)
    }

    /// Nodes of degree zero are allowed but most walk-based code treats their
    /// transition row as all-zero; callers that care can check here.
    pub fn has_isolated_nodes(&self) -> bool {
        (0..self.n).any(|i| self.degree(i) == 0)
    }

    /// Relabels nodes: node `i` of the original becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n, "permutation length mismatch");
        let edges: Vec<(usize, usize)> =
            self.edge_list().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let mut g = Graph::from_edges(self.n, &edges, self.directed).expect("valid permutation");
        if let Some(attrs) = &self.node_attrs {
            let mut new_attrs = vec![Vec::new(); self.n];
            for (i, row) in attrs.iter().enumerate() {
                new_attrs[perm[i]] = row.clone();
            }
            g.node_attrs = Some(new_attrs);
        }
        if let Some(attrs) = &self.edge_attrs {
            g.edge_attrs = Some(
                attrs
                    .iter()
                    .map(|(&(u, v), a)| ((perm[u], perm[v]), a.clone()))
                    .collect(),
            );
        }
        g
    }

    /// JSON dump `{"n": ..., "edges": [[u, v], ...]}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump {
            n: usize,
            edges: Vec<(usize, usize)>,
        }
        serde_json::to_string(&Dump { n: self.n, edges: self.edge_list() })
            .expect("graph serializes")
    }
}
