//! Interaction topologies and the radius-limited neighborhoods agents use to
//! look around (knowledge) and to pick conversation partners (influence).
//!
//! Every adjacency list and every ball is kept sorted by [`NodeId`], so any
//! iteration over a neighborhood visits nodes in the same order on every run.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

/// Dense node label in `0..n`.
pub type NodeId = usize;

/// Graphs up to this many nodes get an exact diameter when validating radii.
pub const DIAMETER_NODE_LIMIT: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("lattice dimensions must both be at least 3 (got {rows}x{cols}); wraparound would duplicate edges")]
    InvalidDimension { rows: usize, cols: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node {node} is out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("graph has {0} connected components; exactly one is required")]
    Disconnected(usize),
}

/// How a graph was built. Scenarios that depend on geometry (the droplet)
/// inspect this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Lattice2dPbc { rows: usize, cols: usize },
    BarabasiAlbert { m: usize },
    Custom,
}

/// Immutable, undirected, simple, connected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    kind: GraphKind,
}

impl Graph {
    /// Square lattice with periodic boundaries and von Neumann neighbors.
    /// Node `(r, c)` has id `r * cols + c`.
    ///
    /// Both sides must be at least 3: with a side of 2 the up and down
    /// neighbors of a node coincide.
    pub fn lattice2d_pbc(rows: usize, cols: usize) -> Result<Graph, GraphError> {
        if rows < 3 || cols < 3 {
            return Err(GraphError::InvalidDimension { rows, cols });
        }
        let id = |r: usize, c: usize| r * cols + c;
        let adjacency = (0..rows * cols)
            .map(|v| {
                let (r, c) = (v / cols, v % cols);
                let mut adj = vec![
                    id((r + rows - 1) % rows, c),
                    id((r + 1) % rows, c),
                    id(r, (c + cols - 1) % cols),
                    id(r, (c + 1) % cols),
                ];
                adj.sort_unstable();
                adj
            })
            .collect();
        Ok(Graph {
            adjacency,
            kind: GraphKind::Lattice2dPbc { rows, cols },
        })
    }

    /// Barabási–Albert preferential attachment.
    ///
    /// Starts from a complete graph on `m` nodes; every later node attaches
    /// `m` edges to distinct earlier nodes chosen with probability
    /// proportional to their current degree. The result has exactly
    /// `m(n - m) + m(m - 1)/2` edges.
    pub fn barabasi_albert<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Graph, GraphError> {
        if m < 1 || n <= m {
            return Err(GraphError::InvalidParameter(format!(
                "Barabasi-Albert requires n > m >= 1 (got n={n}, m={m})"
            )));
        }
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        // Every edge contributes both endpoints, so a uniform pick from this
        // list is a degree-proportional pick over nodes.
        let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * m * n);
        for u in 0..m {
            for v in (u + 1)..m {
                adjacency[u].push(v);
                adjacency[v].push(u);
                endpoints.push(u);
                endpoints.push(v);
            }
        }
        let mut targets: Vec<NodeId> = Vec::with_capacity(m);
        for v in m..n {
            targets.clear();
            while targets.len() < m {
                let t = if endpoints.is_empty() {
                    // m = 1: the seed is a single isolated node.
                    rng.gen_range(0..v)
                } else {
                    endpoints[rng.gen_range(0..endpoints.len())]
                };
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for &t in &targets {
                adjacency[v].push(t);
                adjacency[t].push(v);
                endpoints.push(v);
                endpoints.push(t);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(Graph {
            adjacency,
            kind: GraphKind::BarabasiAlbert { m },
        })
    }

    /// Builds a graph from an undirected edge list. Duplicate edges are
    /// merged; self-loops and disconnected inputs are rejected.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParameter("graph must have at least one node".into()));
        }
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let graph = Graph {
            adjacency,
            kind: GraphKind::Custom,
        };
        match graph.component_count() {
            1 => Ok(graph),
            c => Err(GraphError::Disconnected(c)),
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Nodes at graph distance `1..=radius` from `node`, sorted, center
    /// excluded. A radius beyond the eccentricity of `node` simply returns
    /// every other node.
    pub fn k_ball(&self, node: NodeId, radius: usize) -> Result<Vec<NodeId>, GraphError> {
        if radius < 1 {
            return Err(GraphError::InvalidParameter("radius must be at least 1".into()));
        }
        if node >= self.len() {
            return Err(GraphError::NodeOutOfRange { node, n: self.len() });
        }
        let mut scratch = BfsScratch::new(self.len());
        let mut ball = Vec::new();
        scratch.ball_into(self, node, radius, &mut ball);
        Ok(ball)
    }

    /// Exact diameter by BFS from every node.
    pub fn diameter(&self) -> usize {
        let mut scratch = BfsScratch::new(self.len());
        (0..self.len())
            .map(|v| scratch.eccentricity(self, v))
            .max()
            .unwrap_or(0)
    }

    /// The diameter if the graph is small enough to afford all-pairs BFS.
    pub fn diameter_if_small(&self) -> Option<usize> {
        (self.len() <= DIAMETER_NODE_LIMIT).then(|| self.diameter())
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        let mut count = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }

    /// Writes `# nodes=N` followed by one ascending `u v` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# nodes={}", self.len())?;
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Reusable BFS state; the stamp trick avoids clearing `visited` between
/// searches.
struct BfsScratch {
    stamp: Vec<u32>,
    dist: Vec<usize>,
    current: u32,
    queue: VecDeque<NodeId>,
}

impl BfsScratch {
    fn new(n: usize) -> Self {
        BfsScratch {
            stamp: vec![0; n],
            dist: vec![0; n],
            current: 0,
            queue: VecDeque::new(),
        }
    }

    fn reset(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.current = 1;
        }
        self.queue.clear();
    }

    fn ball_into(&mut self, graph: &Graph, center: NodeId, radius: usize, out: &mut Vec<NodeId>) {
        self.reset();
        out.clear();
        self.stamp[center] = self.current;
        self.dist[center] = 0;
        self.queue.push_back(center);
        while let Some(u) = self.queue.pop_front() {
            let d = self.dist[u];
            if d == radius {
                continue;
            }
            for &v in graph.neighbors(u) {
                if self.stamp[v] != self.current {
                    self.stamp[v] = self.current;
                    self.dist[v] = d + 1;
                    out.push(v);
                    self.queue.push_back(v);
                }
            }
        }
        out.sort_unstable();
    }

    fn eccentricity(&mut self, graph: &Graph, source: NodeId) -> usize {
        self.reset();
        self.stamp[source] = self.current;
        self.dist[source] = 0;
        self.queue.push_back(source);
        let mut far = 0;
        while let Some(u) = self.queue.pop_front() {
            let d = self.dist[u];
            far = far.max(d);
            for &v in graph.neighbors(u) {
                if self.stamp[v] != self.current {
                    self.stamp[v] = self.current;
                    self.dist[v] = d + 1;
                    self.queue.push_back(v);
                }
            }
        }
        far
    }
}

/// Every node's radius-`r` ball, stored flat (CSR layout).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodTable {
    radius: usize,
    offsets: Vec<usize>,
    members: Vec<NodeId>,
}

impl NeighborhoodTable {
    pub fn build(graph: &Graph, radius: usize) -> Result<NeighborhoodTable, GraphError> {
        if radius < 1 {
            return Err(GraphError::InvalidParameter("radius must be at least 1".into()));
        }
        let n = graph.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut members = Vec::new();
        offsets.push(0);
        if radius == 1 {
            for v in 0..n {
                members.extend_from_slice(graph.neighbors(v));
                offsets.push(members.len());
            }
        } else {
            let mut scratch = BfsScratch::new(n);
            let mut ball = Vec::new();
            for v in 0..n {
                scratch.ball_into(graph, v, radius, &mut ball);
                members.extend_from_slice(&ball);
                offsets.push(members.len());
            }
        }
        Ok(NeighborhoodTable {
            radius,
            offsets,
            members,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ball(&self, node: NodeId) -> &[NodeId] {
        &self.members[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn contains(&self, center: NodeId, other: NodeId) -> bool {
        self.ball(center).binary_search(&other).is_ok()
    }
}
