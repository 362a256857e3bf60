//! Immutable simple undirected graphs and the structural measures used by the
//! decomposition.
//!
//! Nodes are dense integers `0..n`. Adjacency lists are kept sorted so that
//! membership tests and neighborhood intersections are merge-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use thiserror::Error;

pub type NodeId = usize;
pub type Color = u32;
pub type Rational = Ratio<i64>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    delta: usize,
    m: usize,
}

impl Graph {
    /// Builds a simple graph, rejecting self-loops and repeated edges.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut m = 0;
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(u.min(w[0]), u.max(w[0])));
            }
            m += list.len();
        }
        let delta = adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { adj, delta, m: m / 2 })
    }

    pub fn empty(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], delta: 0, m: 0 }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Maximum degree.
    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// `|N(u) ∩ N(v)|` by sorted merge.
    pub fn common_neighbors(&self, u: NodeId, v: NodeId) -> usize {
        sorted_intersection_len(&self.adj[u], &self.adj[v])
    }

    /// Number of neighbors of `v` inside `set` (a membership mask).
    pub fn degree_into(&self, v: NodeId, set: &[bool]) -> usize {
        self.adj[v].iter().filter(|&&u| set[u]).count()
    }

    /// Number of edges of `G[N(v)]`.
    pub fn edges_in_neighborhood(&self, v: NodeId) -> usize {
        let nv = &self.adj[v];
        let twice: usize = nv.iter().map(|&u| sorted_intersection_len(&self.adj[u], nv)).sum();
        twice / 2
    }

    /// True when `N(v)` induces a clique.
    pub fn is_simplicial(&self, v: NodeId) -> bool {
        let d = self.degree(v);
        self.edges_in_neighborhood(v) as i64 == choose2(d)
    }

    /// Local sparsity `(binom(Δ,2) - m(N(v))) / Δ`, exact.
    pub fn sparsity(&self, v: NodeId) -> Rational {
        if self.delta == 0 {
            return Rational::from_integer(0);
        }
        let missing = choose2(self.delta) - self.edges_in_neighborhood(v) as i64;
        Rational::new(missing, self.delta as i64)
    }

    /// Whether the graph contains a clique on `Δ + 1` nodes.
    ///
    /// Every member of such a clique has degree exactly `Δ` with its whole
    /// neighborhood inside the clique, so it suffices to test `N[v]` for the
    /// nodes of maximum degree.
    pub fn contains_delta_plus_one_clique(&self) -> bool {
        self.nodes().any(|v| self.degree(v) == self.delta && self.is_simplicial(v))
    }

    /// Induced subgraph on `nodes`, relabelled to `0..nodes.len()` in the given order.
    pub fn induced(&self, nodes: &[NodeId]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in nodes.iter().enumerate() {
            index[v] = i;
        }
        let edges: Vec<_> = nodes
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| {
                let index = &index;
                self.adj[v].iter().filter_map(move |&u| {
                    let j = index[u];
                    (j != usize::MAX && j > i).then_some((i, j))
                })
            })
            .collect();
        Graph::from_edges(nodes.len(), edges).expect("induced subgraph of a simple graph is simple")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.m * 10);
        writeln!(out, "{} {}", self.n(), self.m).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    /// Parses the `n m` header + `u v` edge-line format. Lines starting with
    /// `#` and blank lines are skipped.
    pub fn parse_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let (n, m) = parse_pair(hline, header)?;

        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            let (u, v) = parse_pair(line, l)?;
            if u >= v {
                let message = if u == v {
                    format!("self-loop at node {u}")
                } else {
                    format!("edge endpoints must satisfy u < v, got {u} {v}")
                };
                return Err(GraphError::Parse { line, message });
            }
            if v >= n {
                return Err(GraphError::Parse { line, message: format!("node {v} out of range (n = {n})") });
            }
            edges.push((line, u, v));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: hline,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }

        match Graph::from_edges(n, edges.iter().map(|&(_, u, v)| (u, v))) {
            Err(GraphError::DuplicateEdge(a, b)) => {
                // Report the second occurrence.
                let line = edges.iter().filter(|&&(_, u, v)| (u, v) == (a, b)).nth(1).map_or(hline, |e| e.0);
                Err(GraphError::Parse { line, message: format!("duplicate edge {a} {b}") })
            }
            other => other,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::parse_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize), GraphError> {
    let mut it = text.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or_else(|| GraphError::Parse { line, message: "expected two integers".into() })?;
        tok.parse().map_err(|_| GraphError::Parse { line, message: format!("not a non-negative integer: {tok:?}") })
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(GraphError::Parse { line, message: "trailing tokens".into() });
    }
    Ok(pair)
}

pub(crate) fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `binom(n, 2)` as an i64.
pub(crate) fn choose2(n: usize) -> i64 {
    let n = n as i64;
    n * (n - 1).max(0) / 2
}
