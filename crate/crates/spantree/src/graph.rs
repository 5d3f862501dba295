//! Undirected simple graphs, bipartite views, random graphs and host families.

use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::rng::{mix64, Rng};

/// Vertex counts up to this bound get an adjacency bit matrix.
const BITMATRIX_LIMIT: usize = 20_000;

/// Undirected simple graph on vertices `0..n`.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
    rows: Option<Vec<FixedBitSet>>,
    m: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.adj == other.adj
    }
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Graph::from_adjacency(vec![Vec::new(); n])
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|v| (0..n as u32).filter(|&u| u as usize != v).collect()).collect();
        Graph::from_adjacency(adj)
    }

    /// Complete bipartite graph with sides `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let n = a + b;
        let adj = (0..n)
            .map(|v| if v < a { (a as u32..n as u32).collect() } else { (0..a as u32).collect() })
            .collect();
        Graph::from_adjacency(adj)
    }

    /// Builds from adjacency lists that are already symmetric and loop free.
    fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Self {
        let n = adj.len();
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        let m = adj.iter().map(|l| l.len()).sum::<usize>() / 2;
        let rows = (n <= BITMATRIX_LIMIT).then(|| {
            adj.iter()
                .map(|l| {
                    let mut b = FixedBitSet::with_capacity(n);
                    for &u in l {
                        b.insert(u as usize);
                    }
                    b
                })
                .collect()
        });
        Graph { n, adj, rows, m }
    }

    /// Builds from an edge list; rejects loops, duplicates and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Precondition(format!("edge ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Precondition(format!("loop at {u} in a simple graph")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for (v, l) in adj.iter_mut().enumerate() {
            l.sort_unstable();
            if l.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Precondition(format!("parallel edge at vertex {v}")));
            }
        }
        Ok(Graph::from_adjacency(adj))
    }

    /// Builds from an edge list, silently merging duplicates and dropping loops.
    pub fn from_edges_dedup(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                adj[u].push(v as u32);
                adj[v].push(u as u32);
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        Graph::from_adjacency(adj)
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    /// Degree of `v`.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Adjacency row of `v` as a bit set, when the bit matrix is present.
    pub fn row(&self, v: usize) -> Option<&FixedBitSet> {
        self.rows.as_ref().map(|r| &r[v])
    }

    /// Edge query.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u >= self.n || v >= self.n || u == v {
            return false;
        }
        match &self.rows {
            Some(r) => r[u].contains(v),
            None => self.adj[u].binary_search(&(v as u32)).is_ok(),
        }
    }

    /// Minimum degree (0 for the empty vertex set).
    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(|l| l.len()).min().unwrap_or(0)
    }

    /// Maximum degree.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|l| l.len()).max().unwrap_or(0)
    }

    /// All edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for (u, l) in self.adj.iter().enumerate() {
            for &v in l {
                if (v as usize) > u {
                    out.push((u, v as usize));
                }
            }
        }
        out
    }

    /// Union of two graphs on the same vertex set.
    pub fn union(&self, other: &Graph) -> Result<Graph> {
        if self.n != other.n {
            return Err(Error::Precondition("union of graphs with different vertex counts".into()));
        }
        let mut e = self.edges();
        e.extend(other.edges());
        Ok(Graph::from_edges_dedup(self.n, &e))
    }

    /// Subgraph keeping only the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let e: Vec<(usize, usize)> = self.edges().into_iter().filter(|&(u, v)| keep(u, v)).collect();
        Graph::from_edges_dedup(self.n, &e)
    }

    /// Connected components as sorted vertex lists, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                i += 1;
                for &u in &self.adj[v] {
                    if comp[u as usize] == usize::MAX {
                        comp[u as usize] = id;
                        members.push(u as usize);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Proper 2-colouring of the component containing `members[0]`, if one exists.
    pub fn two_colouring(&self, members: &[usize]) -> Option<Vec<u8>> {
        let mut colour = vec![u8::MAX; self.n];
        for &s in members {
            if colour[s] != u8::MAX {
                continue;
            }
            colour[s] = 0;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &u in &self.adj[v] {
                    let u = u as usize;
                    if colour[u] == u8::MAX {
                        colour[u] = 1 - colour[v];
                        stack.push(u);
                    } else if colour[u] == colour[v] {
                        return None;
                    }
                }
            }
        }
        Some(members.iter().map(|&v| colour[v]).collect())
    }

    /// Serializes in the edge-list format: `n m` then one `u v` per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.m);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parses the edge-list format.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, reason: "missing header `n m`".into() })?;
        let nums = parse_pair(header, hl + 1)?;
        let (n, m) = nums;
        let mut edges = Vec::with_capacity(m);
        for (idx, l) in lines {
            let (u, v) = parse_pair(l, idx + 1)?;
            if u == v {
                return Err(Error::Parse { line: idx + 1, reason: format!("loop `{u} {u}` not allowed in a host graph") });
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse { line: hl + 1, reason: format!("header announces {m} edges, found {}", edges.len()) });
        }
        Graph::from_edges(n, &edges).map_err(|e| Error::Parse { line: hl + 1, reason: e.to_string() })
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let a = it.next().and_then(|x| x.parse::<usize>().ok());
    let b = it.next().and_then(|x| x.parse::<usize>().ok());
    match (a, b, it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(Error::Parse { line: lineno, reason: format!("expected two non-negative integers, got `{}`", line.trim()) }),
    }
}

/// Bipartite view of a graph restricted to the edges between two disjoint sets.
#[derive(Clone, Debug)]
pub struct BipartiteView<'a> {
    g: &'a Graph,
    a: Vec<usize>,
    b: Vec<usize>,
    pos_a: Vec<u32>,
    pos_b: Vec<u32>,
}

const NO_POS: u32 = u32::MAX;

impl<'a> BipartiteView<'a> {
    /// Creates the view; fails if the sides intersect or contain duplicates.
    pub fn new(g: &'a Graph, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        let mut pos_a = vec![NO_POS; g.n()];
        let mut pos_b = vec![NO_POS; g.n()];
        for (i, &v) in a.iter().enumerate() {
            if v >= g.n() || pos_a[v] != NO_POS {
                return Err(Error::Precondition(format!("side A has invalid or repeated vertex {v}")));
            }
            pos_a[v] = i as u32;
        }
        for (i, &v) in b.iter().enumerate() {
            if v >= g.n() || pos_b[v] != NO_POS || pos_a[v] != NO_POS {
                return Err(Error::Precondition(format!("side B has invalid, repeated or shared vertex {v}")));
            }
            pos_b[v] = i as u32;
        }
        Ok(BipartiteView { g, a, b, pos_a, pos_b })
    }

    /// Underlying graph.
    pub fn graph(&self) -> &Graph {
        self.g
    }

    /// Side A.
    pub fn a(&self) -> &[usize] {
        &self.a
    }

    /// Side B.
    pub fn b(&self) -> &[usize] {
        &self.b
    }

    /// Index of `v` within side A.
    pub fn pos_in_a(&self, v: usize) -> Option<usize> {
        (self.pos_a[v] != NO_POS).then(|| self.pos_a[v] as usize)
    }

    /// Index of `v` within side B.
    pub fn pos_in_b(&self, v: usize) -> Option<usize> {
        (self.pos_b[v] != NO_POS).then(|| self.pos_b[v] as usize)
    }

    /// Whether `u v` is a visible edge.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let crosses = (self.pos_a[u] != NO_POS && self.pos_b[v] != NO_POS) || (self.pos_b[u] != NO_POS && self.pos_a[v] != NO_POS);
        crosses && self.g.has_edge(u, v)
    }

    /// Visible neighbours of `v` (on the opposite side).
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let other = if self.pos_a[v] != NO_POS { &self.pos_b } else { &self.pos_a };
        self.g.neighbors(v).iter().map(|&u| u as usize).filter(|&u| other[u] != NO_POS).collect()
    }

    /// Visible degree of `v`.
    pub fn degree(&self, v: usize) -> usize {
        let other = if self.pos_a[v] != NO_POS { &self.pos_b } else { &self.pos_a };
        self.g.neighbors(v).iter().filter(|&&u| other[u as usize] != NO_POS).count()
    }

    /// For each vertex of A, its neighbourhood in B as a bit set over B positions.
    pub fn a_rows(&self) -> Vec<FixedBitSet> {
        self.a
            .iter()
            .map(|&v| {
                let mut row = FixedBitSet::with_capacity(self.b.len());
                for &u in self.g.neighbors(v) {
                    if self.pos_b[u as usize] != NO_POS {
                        row.insert(self.pos_b[u as usize] as usize);
                    }
                }
                row
            })
            .collect()
    }

    /// For each vertex of B, its neighbourhood in A as a bit set over A positions.
    pub fn b_rows(&self) -> Vec<FixedBitSet> {
        self.b
            .iter()
            .map(|&v| {
                let mut row = FixedBitSet::with_capacity(self.a.len());
                for &u in self.g.neighbors(v) {
                    if self.pos_a[u as usize] != NO_POS {
                        row.insert(self.pos_a[u as usize] as usize);
                    }
                }
                row
            })
            .collect()
    }

    /// Number of visible edges.
    pub fn edge_count(&self) -> usize {
        self.a.iter().map(|&v| self.degree(v)).sum()
    }
}

/// Binomial random graph `G(n, p)` via geometric skipping over vertex pairs.
pub fn gen_gnp(n: usize, p: f64, rng: &mut Rng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::param("p", format!("must lie in [0,1], got {p}")));
    }
    if p == 0.0 || n < 2 {
        return Ok(Graph::empty(n));
    }
    if p == 1.0 {
        return Ok(Graph::complete(n));
    }
    let geo = Geometric::new(p).map_err(|e| Error::param("p", e.to_string()))?;
    let mut edges = Vec::new();
    // Pairs (w, v) with w < v enumerated row by row; skip lengths are geometric.
    let mut v: usize = 1;
    let mut w: i64 = -1;
    loop {
        let skip = geo.sample(rng);
        w += 1 + skip as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v >= n {
            break;
        }
        edges.push((w as usize, v));
    }
    Ok(Graph::from_edges_dedup(n, &edges))
}

/// Uniform value in `[0,1)` and a 64-bit label attached to the pair `{u, v}` under `key`.
fn pair_hash(key: u64, u: usize, v: usize) -> (f64, u64) {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    let h = mix64(key ^ mix64(((a as u64) << 32) | b as u64));
    let unit = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (unit, mix64(h))
}

/// Samples `layers` edge-disjoint random graphs by thinning one `G(n, q)` sample.
///
/// Every pair receives a uniform value and a uniform colour derived from
/// `key`; the pair is an edge of layer `c` iff its value is below `q` and its
/// colour is `c`. Two calls with the same key and `q1 <= q2` are coupled so
/// that the first union is a subgraph of the second.
pub fn gen_coloured_layers(n: usize, q: f64, layers: usize, key: u64) -> Result<Vec<Graph>> {
    if !(0.0..=1.0).contains(&q) || q.is_nan() {
        return Err(Error::param("q", format!("must lie in [0,1], got {q}")));
    }
    if layers == 0 {
        return Err(Error::param("layers", "must be positive"));
    }
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layers];
    for v in 1..n {
        for u in 0..v {
            let (x, lab) = pair_hash(key, u, v);
            if x < q {
                edges[(lab % layers as u64) as usize].push((u, v));
            }
        }
    }
    Ok(edges.iter().map(|e| Graph::from_edges_dedup(n, e)).collect())
}

/// Colours every edge of `g` independently and uniformly with one of `layers` colours.
pub fn thin_colours(g: &Graph, layers: usize, rng: &mut Rng) -> Vec<Graph> {
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layers.max(1)];
    for (u, v) in g.edges() {
        edges[rng.below(layers.max(1))].push((u, v));
    }
    edges.iter().map(|e| Graph::from_edges_dedup(g.n(), e)).collect()
}

/// Benchmark host families.
#[derive(Clone, Debug)]
pub enum HostFamily {
    /// Two disjoint cliques of sizes `ceil(n/2)` and `floor(n/2)`.
    TwoCliques,
    /// `K_{ceil(n/2)+1, floor(n/2)-1}`.
    UnbalancedCompleteBipartite,
    /// `G(n, alpha + 0.05)` resampled until the minimum degree reaches `alpha n`.
    DenseRandom,
    /// A user supplied graph.
    CustomEdgeList(Graph),
}

impl HostFamily {
    /// Parses a family name as used on the command line.
    pub fn parse(name: &str) -> Result<HostFamily> {
        match name {
            "two-cliques" => Ok(HostFamily::TwoCliques),
            "unbalanced-complete-bipartite" => Ok(HostFamily::UnbalancedCompleteBipartite),
            "dense-random" => Ok(HostFamily::DenseRandom),
            _ => Err(Error::param("host-family", format!("unknown family `{name}`"))),
        }
    }

    /// Canonical name.
    pub fn name(&self) -> &'static str {
        match self {
            HostFamily::TwoCliques => "two-cliques",
            HostFamily::UnbalancedCompleteBipartite => "unbalanced-complete-bipartite",
            HostFamily::DenseRandom => "dense-random",
            HostFamily::CustomEdgeList(_) => "custom-edge-list",
        }
    }
}

/// Maximum number of resamples for the dense random family.
pub const DENSE_RANDOM_ATTEMPTS: usize = 100;

/// Generates a host graph of the given family with minimum degree at least `alpha n`.
pub fn gen_host(family: &HostFamily, n: usize, alpha: f64, rng: &mut Rng) -> Result<Graph> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0,1], got {alpha}")));
    }
    if alpha * (n as f64) < 1.0 {
        return Err(Error::Precondition(format!("alpha n = {} is below 1", alpha * n as f64)));
    }
    let need = (alpha * n as f64 - 1e-9).ceil() as usize;
    let g = match family {
        HostFamily::TwoCliques => {
            let a = n.div_ceil(2);
            let mut edges = Vec::new();
            for (lo, hi) in [(0, a), (a, n)] {
                for u in lo..hi {
                    for v in u + 1..hi {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges_dedup(n, &edges)
        }
        HostFamily::UnbalancedCompleteBipartite => {
            if n < 4 {
                return Err(Error::Infeasible("unbalanced complete bipartite host needs n >= 4".into()));
            }
            Graph::complete_bipartite(n.div_ceil(2) + 1, n / 2 - 1)
        }
        HostFamily::DenseRandom => {
            let q = (alpha + 0.05).min(1.0);
            let mut found = None;
            for _ in 0..DENSE_RANDOM_ATTEMPTS {
                let g = gen_gnp(n, q, rng)?;
                if g.min_degree() >= need {
                    found = Some(g);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Infeasible(format!("G({n}, {q}) missed minimum degree {need} in {DENSE_RANDOM_ATTEMPTS} samples"))
            })?
        }
        HostFamily::CustomEdgeList(g) => {
            if g.n() != n {
                return Err(Error::Precondition(format!("custom host has {} vertices, expected {n}", g.n())));
            }
            g.clone()
        }
    };
    if g.min_degree() < need {
        return Err(Error::Infeasible(format!(
            "family {} has minimum degree {} < alpha n = {}",
            family.name(),
            g.min_degree(),
            alpha * n as f64
        )));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_extremes() {
        let mut r = Rng::from_seed(1);
        let g = gen_gnp(5, 0.0, &mut r).unwrap();
        assert_eq!(g.m(), 0);
        assert_eq!(g.n(), 5);
        let g = gen_gnp(5, 1.0, &mut r).unwrap();
        assert_eq!(g.m(), 10);
        assert!(gen_gnp(5, 1.5, &mut r).is_err());
    }

    #[test]
    fn gnp_edge_count_within_four_sigma() {
        let n = 2000usize;
        let p = 0.01;
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = pairs * p;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        assert!((mean - 19990.0).abs() < 1e-6);
        let g = gen_gnp(n, p, &mut Rng::from_seed(2024)).unwrap();
        assert!(((g.m() as f64) - mean).abs() <= 4.0 * sd, "m = {}", g.m());
    }

    #[test]
    fn edge_count_is_half_degree_sum() {
        let g = gen_gnp(300, 0.1, &mut Rng::from_seed(3)).unwrap();
        let s: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        assert_eq!(s, 2 * g.m());
        for (u, v) in g.edges() {
            assert!(g.has_edge(u, v) && g.has_edge(v, u));
        }
    }

    #[test]
    fn coloured_layers_are_disjoint_and_coupled() {
        let lo = gen_coloured_layers(120, 0.2, 3, 77).unwrap();
        let hi = gen_coloured_layers(120, 0.5, 3, 77).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            for (u, v) in a.edges() {
                assert!(b.has_edge(u, v));
            }
        }
        for (u, v) in lo[0].edges() {
            assert!(!lo[1].has_edge(u, v) && !lo[2].has_edge(u, v));
        }
    }

    #[test]
    fn two_cliques_example() {
        let g = gen_host(&HostFamily::TwoCliques, 10, 0.4, &mut Rng::from_seed(0)).unwrap();
        assert_eq!(g.min_degree(), 4);
        assert_eq!(g.m(), 20);
        let comps = g.components();
        assert_eq!(comps, vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
    }

    #[test]
    fn unbalanced_bipartite_example() {
        let g = gen_host(&HostFamily::UnbalancedCompleteBipartite, 10, 0.4, &mut Rng::from_seed(0)).unwrap();
        assert_eq!(g.min_degree(), 4);
        assert_eq!(g.m(), 24);
        assert!(g.two_colouring(&(0..10).collect::<Vec<_>>()).is_some());
        assert!(gen_host(&HostFamily::UnbalancedCompleteBipartite, 10, 0.5, &mut Rng::from_seed(0)).is_err());
    }

    #[test]
    fn dense_random_example() {
        // Chernoff: P(deg < 300) for Bin(999, 0.35) is about 1e-3 per vertex,
        // so a handful of resamples at most are expected.
        let g = gen_host(&HostFamily::DenseRandom, 1000, 0.3, &mut Rng::from_seed(9)).unwrap();
        assert!(g.min_degree() >= 300);
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let g = gen_gnp(30, 0.2, &mut Rng::from_seed(4)).unwrap();
        let again = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, again);
        assert!(matches!(Graph::parse_edge_list("3 1\n0 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Graph::parse_edge_list("3 2\n0 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn bipartite_view_hides_inner_edges() {
        let g = Graph::complete(6);
        let v = BipartiteView::new(&g, vec![0, 1, 2], vec![3, 4, 5]).unwrap();
        assert!(!v.has_edge(0, 1));
        assert!(v.has_edge(0, 4));
        assert_eq!(v.degree(0), 3);
        assert_eq!(v.edge_count(), 9);
        assert!(BipartiteView::new(&g, vec![0, 1], vec![1, 2]).is_err());
    }
}
