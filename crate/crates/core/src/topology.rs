//! Undirected network topologies, edge weights and weighted Laplacians.
//!
//! Graphs are generated the way the experiments need them: a uniformly
//! random spanning tree (Wilson's loop-erased random walk) followed by
//! uniformly random extra links until the requested average degree is met.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("structural error: {0}")]
    Structure(String),
    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Undirected, connected graph on nodes `0..N` with no self-loops or
/// duplicate links. Edges are stored as `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = TopologyError;
    fn try_from(r: GraphRepr) -> Result<Self, Self::Error> {
        Graph::new(r.node_count, r.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { node_count: g.node_count, edges: g.edges }
    }
}

impl Graph {
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        if node_count < 2 {
            return Err(TopologyError::Parameter(format!(
                "a network needs at least 2 nodes, got {node_count}"
            )));
        }
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(TopologyError::Structure(format!(
                    "edge ({a},{b}) references a node outside 0..{node_count}"
                )));
            }
            if a == b {
                return Err(TopologyError::Structure(format!("self-loop at node {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(TopologyError::Structure(format!("duplicate edge {:?}", w[0])));
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for &(i, j) in &list {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        let g = Self { node_count, edges: list, neighbors };
        if !g.is_connected() {
            return Err(TopologyError::Structure("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn complete(node_count: usize) -> Result<Self, TopologyError> {
        let edges = (0..node_count).flat_map(|i| ((i + 1)..node_count).map(move |j| (i, j)));
        Self::new(node_count, edges)
    }

    pub fn path(node_count: usize) -> Result<Self, TopologyError> {
        Self::new(node_count, (1..node_count).map(|i| (i - 1, i)))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Position of `{i, j}` in [`Graph::edges`].
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.node_count
    }

    /// Relabel nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, TopologyError> {
        Self::new(self.node_count, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }
}

/// Generate a connected graph with `round(avg_degree * N / 2)` links.
///
/// A uniformly random spanning tree is drawn first, then distinct non-edges
/// are added uniformly at random. Deterministic for a given seed.
pub fn random_connected_graph(
    node_count: usize,
    avg_degree: f64,
    seed: u64,
) -> Result<Graph, TopologyError> {
    if node_count < 2 {
        return Err(TopologyError::Parameter(format!(
            "a network needs at least 2 nodes, got {node_count}"
        )));
    }
    if !avg_degree.is_finite() || avg_degree <= 0.0 {
        return Err(TopologyError::Parameter(format!("average degree {avg_degree} is not positive")));
    }
    let target = (avg_degree * node_count as f64 / 2.0).round() as usize;
    let max_edges = node_count * (node_count - 1) / 2;
    if target < node_count - 1 || target > max_edges {
        return Err(TopologyError::Parameter(format!(
            "average degree {avg_degree} gives {target} links; a connected {node_count}-node graph needs between {} and {max_edges}",
            node_count - 1
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = uniform_spanning_tree(node_count, &mut rng);
    let mut present = vec![false; node_count * node_count];
    for &(i, j) in &edges {
        present[i * node_count + j] = true;
    }
    let mut candidates: Vec<(usize, usize)> = (0..node_count)
        .flat_map(|i| ((i + 1)..node_count).map(move |j| (i, j)))
        .filter(|&(i, j)| !present[i * node_count + j])
        .collect();
    let extra = target - edges.len();
    // partial Fisher-Yates: the first `extra` slots become a uniform sample
    for k in 0..extra {
        let pick = rng.random_range(k..candidates.len());
        candidates.swap(k, pick);
    }
    edges.extend_from_slice(&candidates[..extra]);
    Graph::new(node_count, edges)
}

/// Wilson's algorithm on the complete graph.
fn uniform_spanning_tree(node_count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let nodes: Vec<usize> = (0..node_count).collect();
    let mut in_tree = vec![false; node_count];
    let mut next = vec![usize::MAX; node_count];
    let root = *nodes.choose(rng).expect("non-empty");
    in_tree[root] = true;
    for start in 0..node_count {
        let mut u = start;
        while !in_tree[u] {
            let mut v = rng.random_range(0..node_count - 1);
            if v >= u {
                v += 1;
            }
            next[u] = v;
            u = v;
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    (0..node_count)
        .filter(|&u| u != root)
        .map(|u| (u.min(next[u]), u.max(next[u])))
        .collect()
}

/// Positive weight per link, keyed by the unordered pair.
///
/// Used both for Laplacian weights `h_ij` and for per-link step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights {
    weights: BTreeMap<(usize, usize), f64>,
}

impl EdgeWeights {
    pub fn new(
        graph: &Graph,
        weights: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self, TopologyError> {
        let mut map = BTreeMap::new();
        for ((a, b), w) in weights {
            let key = (a.min(b), a.max(b));
            if !graph.has_edge(key.0, key.1) {
                return Err(TopologyError::Structure(format!("weight given for non-edge {key:?}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(TopologyError::Parameter(format!("weight {w} on {key:?} is not positive")));
            }
            if map.insert(key, w).is_some() {
                return Err(TopologyError::Structure(format!("edge {key:?} weighted twice")));
            }
        }
        if let Some(missing) = graph.edges().iter().find(|e| !map.contains_key(e)) {
            return Err(TopologyError::Structure(format!("missing weight for edge {missing:?}")));
        }
        Ok(Self { weights: map })
    }

    pub fn uniform(graph: &Graph, value: f64) -> Result<Self, TopologyError> {
        Self::new(graph, graph.edges().iter().map(|&e| (e, value)))
    }

    /// Build without checking coverage; [`laplacian`] reports gaps.
    pub fn partial(weights: impl IntoIterator<Item = ((usize, usize), f64)>) -> Self {
        Self {
            weights: weights.into_iter().map(|((a, b), w)| ((a.min(b), a.max(b)), w)).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.weights.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn max(&self) -> f64 {
        self.weights.values().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.weights.values().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { weights: self.weights.iter().map(|(&k, &w)| (k, w * factor)).collect() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Symmetric positive semidefinite N×N matrix with zero row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian(DMatrix<f64>);

impl WeightedLaplacian {
    /// Wrap an arbitrary matrix, checking symmetry and zero row sums.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self, TopologyError> {
        if !linalg::is_symmetric(&m, 1e-12) {
            return Err(TopologyError::Structure("Laplacian is not symmetric".into()));
        }
        let scale = m.amax().max(1.0);
        for (i, row) in m.row_iter().enumerate() {
            if row.sum().abs() > 1e-12 * scale * m.ncols() as f64 {
                return Err(TopologyError::Structure(format!("row {i} does not sum to zero")));
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn max_diagonal(&self) -> f64 {
        self.0.diagonal().max()
    }

    /// Rank, counting eigenvalues above `1e-10 * λ_max` as nonzero.
    pub fn rank(&self) -> usize {
        let ev = linalg::symmetric_eigenvalues(&self.0);
        let top = ev.last().copied().unwrap_or(0.0);
        ev.iter().filter(|&&v| v > 1e-10 * top).count()
    }
}

/// `H[i][i] = Σ_s h_is`, `H[i][j] = -h_ij` on links, zero elsewhere.
pub fn laplacian(graph: &Graph, weights: &EdgeWeights) -> Result<WeightedLaplacian, TopologyError> {
    let n = graph.node_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(i, j) in graph.edges() {
        let h = weights
            .get(i, j)
            .ok_or_else(|| TopologyError::Structure(format!("missing weight for edge ({i},{j})")))?;
        m[(i, j)] = -h;
        m[(j, i)] = -h;
        m[(i, i)] += h;
        m[(j, j)] += h;
    }
    Ok(WeightedLaplacian(m))
}

/// Unit-weight graph Laplacian.
pub fn unit_laplacian(graph: &Graph) -> WeightedLaplacian {
    laplacian(graph, &EdgeWeights::uniform(graph, 1.0).expect("unit weights cover every edge"))
        .expect("unit weights cover every edge")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Second-smallest eigenvalue (algebraic connectivity).
    pub lambda_2: f64,
    pub lambda_max: f64,
}

pub fn spectrum(l: &WeightedLaplacian) -> Result<Spectrum, TopologyError> {
    if !linalg::is_symmetric(l.matrix(), 1e-12) {
        return Err(TopologyError::Structure("Laplacian is not symmetric".into()));
    }
    let ev = linalg::symmetric_eigenvalues(l.matrix());
    if ev.len() < 2 {
        return Err(TopologyError::Structure("Laplacian must be at least 2x2".into()));
    }
    Ok(Spectrum { lambda_2: ev[1], lambda_max: ev[ev.len() - 1] })
}

/// Write `"N E"` then one `"i j weight"` line per link.
pub fn write_edge_list(graph: &Graph, weights: &EdgeWeights) -> String {
    let mut out = format!("{} {}\n", graph.node_count(), graph.edge_count());
    for &(i, j) in graph.edges() {
        let w = weights.get(i, j).unwrap_or(1.0);
        writeln!(out, "{i} {j} {w}").expect("writing to a String cannot fail");
    }
    out
}

pub fn read_edge_list(text: &str) -> Result<(Graph, EdgeWeights), TopologyError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) =
        lines.next().ok_or(TopologyError::Parse { line: 1, msg: "empty edge list".into() })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str, line: usize| {
        s.parse::<usize>().map_err(|e| TopologyError::Parse { line, msg: format!("{s:?}: {e}") })
    };
    if head.len() != 2 {
        return Err(TopologyError::Parse { line: hl + 1, msg: "header must be \"N E\"".into() });
    }
    let n = parse_usize(head[0], hl + 1)?;
    let e = parse_usize(head[1], hl + 1)?;
    let mut edges = Vec::with_capacity(e);
    let mut weights = Vec::with_capacity(e);
    for (ln, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(TopologyError::Parse { line: ln + 1, msg: "expected \"i j weight\"".into() });
        }
        let i = parse_usize(parts[0], ln + 1)?;
        let j = parse_usize(parts[1], ln + 1)?;
        let w: f64 = parts[2]
            .parse()
            .map_err(|err| TopologyError::Parse { line: ln + 1, msg: format!("weight: {err}") })?;
        edges.push((i, j));
        weights.push(((i, j), w));
    }
    if edges.len() != e {
        return Err(TopologyError::Parse {
            line: hl + 1,
            msg: format!("header announces {e} edges, found {}", edges.len()),
        });
    }
    let graph = Graph::new(n, edges)?;
    let weights = EdgeWeights::new(&graph, weights)?;
    Ok((graph, weights))
}
