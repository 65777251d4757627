//! Named graph catalogue.
//!
//! The Dodecahedron and Desargues graphs are stored as explicit edge lists
//! (the standard LCF-derived labelings); their generator-level properties
//! (3-regularity, bipartiteness or not) are pinned by tests rather than
//! rederived at construction time.

use crate::graph::{Graph, GraphError};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("unknown graph name {0:?}; expected path<N>, cycle<N>, complete<N>, c6, two_triangles, dodecahedron, or desargues")]
pub struct UnknownGraphName(pub String);

/// Built-in graphs addressable by name, e.g. on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGraph {
    Path(usize),
    Cycle(usize),
    Complete(usize),
    Dodecahedron,
    Desargues,
    /// Two disjoint triangles; the stock disconnected test graph.
    TwoTriangles,
    /// The 6-cycle, kept as its own name because it pairs with `TwoTriangles`
    /// in distinguishability tests.
    C6,
}

impl NamedGraph {
    pub fn build(self) -> Graph {
        match self {
            NamedGraph::Path(n) => {
                let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
                graph(n, &edges)
            }
            NamedGraph::Cycle(n) => {
                assert!(n >= 3, "cycle needs at least 3 nodes");
                let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                graph(n, &edges)
            }
            NamedGraph::Complete(n) => {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        edges.push((i, j));
                    }
                }
                graph(n, &edges)
            }
            NamedGraph::Dodecahedron => graph(20, DODECAHEDRON_EDGES),
            NamedGraph::Desargues => graph(20, DESARGUES_EDGES),
            NamedGraph::TwoTriangles => {
                graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
            }
            NamedGraph::C6 => NamedGraph::Cycle(6).build(),
        }
    }
}

impl FromStr for NamedGraph {
    type Err = UnknownGraphName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let parse_sized = |prefix: &str| -> Option<Result<usize, ()>> {
            s.strip_prefix(prefix).map(|rest| {
                let digits = rest.trim_start_matches('(').trim_end_matches(')');
                digits.parse::<usize>().map_err(|_| ())
            })
        };
        match s.as_str() {
            "dodecahedron" => return Ok(NamedGraph::Dodecahedron),
            "desargues" => return Ok(NamedGraph::Desargues),
            "two_triangles" | "two-triangles" => return Ok(NamedGraph::TwoTriangles),
            "c6" => return Ok(NamedGraph::C6),
            _ => {}
        }
        for (prefix, make) in [
            ("path", NamedGraph::Path as fn(usize) -> NamedGraph),
            ("cycle", NamedGraph::Cycle),
            ("complete", NamedGraph::Complete),
        ] {
            if let Some(parsed) = parse_sized(prefix) {
                return match parsed {
                    Ok(n) if n >= 1 => Ok(make(n)),
                    _ => Err(UnknownGraphName(s)),
                };
            }
        }
        Err(UnknownGraphName(s))
    }
}

fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    match Graph::from_edges(n, edges, false) {
        Ok(g) => g,
        Err(GraphError::SelfLoop { node, .. }) => unreachable!("self-loop in catalogue at {node}"),
        Err(e) => unreachable!("bad catalogue entry: {e}"),
    }
}

/// Dodecahedral graph: 20 nodes, 30 edges, 3-regular, girth 5.
const DODECAHEDRON_EDGES: &[(usize, usize)] = &[
    (0, 1), (0, 10), (0, 19), (1, 2), (1, 8), (2, 3), (2, 6), (3, 4), (3, 19),
    (4, 5), (4, 17), (5, 6), (5, 15), (6, 7), (7, 8), (7, 14), (8, 9), (9, 10),
    (9, 13), (10, 11), (11, 12), (11, 18), (12, 13), (12, 16), (13, 14),
    (14, 15), (15, 16), (16, 17), (17, 18), (18, 19),
];

/// Desargues graph: 20 nodes, 30 edges, 3-regular, bipartite, girth 6.
const DESARGUES_EDGES: &[(usize, usize)] = &[
    (0, 1), (0, 5), (0, 19), (1, 2), (1, 16), (2, 3), (2, 11), (3, 4), (3, 14),
    (4, 5), (4, 9), (5, 6), (6, 7), (6, 15), (7, 8), (7, 18), (8, 9), (8, 13),
    (9, 10), (10, 11), (10, 19), (11, 12), (12, 13), (12, 17), (13, 14),
    (14, 15), (15, 16), (16, 17), (17, 18), (18, 19),
];

/// BFS 2-coloring. Returns the part assignment if the graph is bipartite.
pub fn bipartition(g: &Graph) -> Option<Vec<u8>> {
    let n = g.n();
    let mut color = vec![u8::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if color[start] != u8::MAX {
            continue;
        }
        color[start] = 0;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if color[v] == u8::MAX {
                    color[v] = 1 - color[u];
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    return None;
                }
            }
        }
    }
    Some(color)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dodecahedron_is_cubic() {
        let g = NamedGraph::Dodecahedron.build();
        assert_eq!(g.n(), 20);
        assert_eq!(g.edge_count(), 30);
        assert!((0..20).all(|i| g.degree(i) == 3));
    }

    #[test]
    fn dodecahedron_not_bipartite_has_5_cycle() {
        let g = NamedGraph::Dodecahedron.build();
        assert!(bipartition(&g).is_none());
        // walk one face of the solid: 0-1-8-9-10-0
        for w in [(0, 1), (1, 8), (8, 9), (9, 10), (10, 0)] {
            assert!(g.has_edge(w.0, w.1));
        }
    }

    #[test]
    fn desargues_is_cubic_bipartite() {
        let g = NamedGraph::Desargues.build();
        assert_eq!(g.n(), 20);
        assert_eq!(g.edge_count(), 30);
        assert!((0..20).all(|i| g.degree(i) == 3));
        let parts = bipartition(&g).expect("Desargues graph is bipartite");
        assert_eq!(parts.iter().filter(|&&c| c == 0).count(), 10);
    }

    #[test]
    fn cycle6_is_2_regular() {
        let g = NamedGraph::Cycle(6).build();
        assert_eq!(g.n(), 6);
        assert_eq!(g.edge_count(), 6);
        assert!((0..6).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn two_triangles_disconnected() {
        let g = NamedGraph::TwoTriangles.build();
        assert_eq!(g.n(), 6);
        assert_eq!(g.edge_count(), 6);
        assert!(!g.has_edge(0, 3));
    }

    #[test]
    fn name_parsing() {
        assert_eq!("path3".parse::<NamedGraph>().unwrap(), NamedGraph::Path(3));
        assert_eq!("cycle(6)".parse::<NamedGraph>().unwrap(), NamedGraph::Cycle(6));
        assert_eq!("complete4".parse::<NamedGraph>().unwrap(), NamedGraph::Complete(4));
        assert_eq!("Dodecahedron".parse::<NamedGraph>().unwrap(), NamedGraph::Dodecahedron);
        assert!("petersen".parse::<NamedGraph>().is_err());
        assert!("pathx".parse::<NamedGraph>().is_err());
    }
}
