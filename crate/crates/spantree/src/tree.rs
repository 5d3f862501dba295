//! Rooted trees, structural queries, leaf classification, bare paths and
//! random tree generators.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::Rng;

/// Marker for "no parent".
const NONE: u32 = u32::MAX;

/// A rooted tree with a breadth-first order in which children are visited in
/// ascending index order, so every vertex's children are consecutive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    n: usize,
    root: usize,
    parent: Vec<u32>,
    child_start: Vec<usize>,
    child_list: Vec<u32>,
    order: Vec<u32>,
    pos: Vec<u32>,
    depth: Vec<u32>,
    size: Vec<u32>,
}

impl RootedTree {
    /// Builds a tree from undirected adjacency lists and a root.
    fn from_adjacency(adj: &[Vec<usize>], root: usize) -> Result<Self> {
        let n = adj.len();
        if n == 0 {
            return Err(Error::Precondition("a tree needs at least one vertex".into()));
        }
        if root >= n {
            return Err(Error::Precondition(format!("root {root} out of range for n = {n}")));
        }
        let mut parent = vec![NONE; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut child_start = vec![0usize; n + 1];
        let mut child_list = Vec::with_capacity(n.saturating_sub(1));
        let mut queue = VecDeque::new();
        queue.push_back(root);
        seen[root] = true;
        let mut kids: Vec<Vec<u32>> = vec![Vec::new(); n];
        while let Some(v) = queue.pop_front() {
            order.push(v as u32);
            let mut ch: Vec<usize> = adj[v].iter().copied().filter(|&u| !seen[u]).collect();
            ch.sort_unstable();
            for &u in &ch {
                if seen[u] {
                    return Err(Error::Precondition("duplicate edge in tree input".into()));
                }
                seen[u] = true;
                parent[u] = v as u32;
                queue.push_back(u);
            }
            kids[v] = ch.into_iter().map(|u| u as u32).collect();
        }
        if order.len() != n {
            return Err(Error::Precondition(format!("tree input is disconnected: reached {} of {n} vertices", order.len())));
        }
        let edges: usize = adj.iter().map(|a| a.len()).sum();
        if edges != 2 * (n - 1) {
            return Err(Error::Precondition(format!("tree input has {} edges, expected {}", edges / 2, n - 1)));
        }
        for v in 0..n {
            child_start[v] = child_list.len();
            child_list.extend_from_slice(&kids[v]);
        }
        child_start[n] = child_list.len();
        let mut pos = vec![0u32; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        let mut depth = vec![0u32; n];
        for &v in &order[1..] {
            depth[v as usize] = depth[parent[v as usize] as usize] + 1;
        }
        let mut size = vec![1u32; n];
        for &v in order.iter().rev() {
            let p = parent[v as usize];
            if p != NONE {
                size[p as usize] += size[v as usize];
            }
        }
        Ok(RootedTree { n, root, parent, child_start, child_list, order, pos, depth, size })
    }

    /// Builds a tree from an edge list and a root.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], root: usize) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Precondition(format!("tree edge ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Precondition(format!("tree edge ({u},{v}) is a loop")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Self::from_adjacency(&adj, root)
    }

    /// Builds a tree from a parent array; exactly one entry must be `None`.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<Self> {
        let roots: Vec<usize> = (0..parents.len()).filter(|&v| parents[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Precondition(format!("parent array needs exactly one root, found {}", roots.len())));
        }
        let edges: Vec<(usize, usize)> = parents.iter().enumerate().filter_map(|(v, p)| p.map(|p| (v, p))).collect();
        Self::from_edges(parents.len(), &edges, roots[0])
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The root `x_1`.
    pub fn root(&self) -> usize {
        self.root
    }

    /// Parent `a_T(v)`, or `None` for the root.
    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NONE).then_some(p as usize)
    }

    /// Children `D_T(v)` in ascending index order.
    pub fn children(&self, v: usize) -> &[u32] {
        &self.child_list[self.child_start[v]..self.child_start[v + 1]]
    }

    /// Number of children.
    pub fn child_count(&self, v: usize) -> usize {
        self.child_start[v + 1] - self.child_start[v]
    }

    /// Degree in the underlying undirected tree.
    pub fn degree(&self, v: usize) -> usize {
        self.child_count(v) + usize::from(self.parent[v] != NONE)
    }

    /// Whether `v` has degree exactly 1 (the root counts when it has one child).
    pub fn is_leaf(&self, v: usize) -> bool {
        self.degree(v) == 1
    }

    /// Whether `v` has no children.
    pub fn is_childless(&self, v: usize) -> bool {
        self.child_count(v) == 0
    }

    /// Breadth-first order `x_1, ..., x_n`.
    pub fn bfs_order(&self) -> impl DoubleEndedIterator<Item = usize> + ExactSizeIterator + '_ {
        self.order.iter().map(|&v| v as usize)
    }

    /// Vertex at BFS position `i` (0-based).
    pub fn at(&self, i: usize) -> usize {
        self.order[i] as usize
    }

    /// BFS position of `v` (0-based).
    pub fn pos(&self, v: usize) -> usize {
        self.pos[v] as usize
    }

    /// Depth of `v` (root has depth 0).
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    /// Size `|T(v)|` of the subtree rooted at `v`.
    pub fn subtree_size(&self, v: usize) -> usize {
        self.size[v] as usize
    }

    /// `D^l_T(v)`: descendants at distance exactly `l` below `v`.
    pub fn descendants_at_depth(&self, v: usize, l: usize) -> Vec<usize> {
        let mut frontier = vec![v];
        for _ in 0..l {
            let mut next = Vec::new();
            for &u in &frontier {
                next.extend(self.children(u).iter().map(|&c| c as usize));
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        frontier
    }

    /// All vertices of `T(v)` in BFS order.
    pub fn subtree_vertices(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            let u = out[i];
            out.extend(self.children(u).iter().map(|&c| c as usize));
            i += 1;
        }
        out
    }

    /// Tree edges as `(parent, child)` pairs in BFS order of the child.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.order[1..].iter().map(|&c| (self.parent[c as usize] as usize, c as usize)).collect()
    }

    /// Vertices of degree 1.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.is_leaf(v)).collect()
    }

    /// Maximum degree.
    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Height (maximum depth).
    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0) as usize
    }

    /// Undirected adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (p, c) in self.edges() {
            adj[p].push(c);
            adj[c].push(p);
        }
        adj
    }

    /// The same tree rooted at `r`.
    pub fn reroot(&self, r: usize) -> Result<Self> {
        Self::from_adjacency(&self.adjacency(), r)
    }

    /// Lowest-index vertex of degree 1 (vertex 0 when `n = 1`).
    pub fn lowest_leaf(&self) -> usize {
        (0..self.n).find(|&v| self.degree(v) <= 1).unwrap_or(0)
    }

    /// The same tree rooted at its lowest-index leaf.
    pub fn reroot_at_lowest_leaf(&self) -> Self {
        let r = self.lowest_leaf();
        if r == self.root {
            self.clone()
        } else {
            self.reroot(r).expect("rerooting a valid tree")
        }
    }

    /// Tree file text: `n root`, then `child parent` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.root);
        for (p, c) in self.edges() {
            let _ = writeln!(s, "{c} {p}");
        }
        s
    }

    /// Parses the tree file format written by [`RootedTree::to_text`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, reason: "missing header `n root`".into() })?;
        let nums = parse_pair(header, hl + 1)?;
        let (n, root) = nums;
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        for (i, l) in lines {
            edges.push(parse_pair(l, i + 1)?);
        }
        if edges.len() + 1 != n {
            return Err(Error::Parse { line: hl + 1, reason: format!("expected {} edge lines, found {}", n.saturating_sub(1), edges.len()) });
        }
        let t = Self::from_edges(n, &edges, root)?;
        for &(c, p) in &edges {
            if t.parent(c) != Some(p) {
                return Err(Error::Parse { line: 0, reason: format!("line `{c} {p}` disagrees with the orientation from root {root}") });
            }
        }
        Ok(t)
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Parse { line: lineno, reason: format!("expected two integers, got `{line}`") });
    }
    let a = parts[0].parse().map_err(|_| Error::Parse { line: lineno, reason: format!("bad integer `{}`", parts[0]) })?;
    let b = parts[1].parse().map_err(|_| Error::Parse { line: lineno, reason: format!("bad integer `{}`", parts[1]) })?;
    Ok((a, b))
}

/// Heavy/light classification of the non-root leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafClassification {
    /// Heavy leaves in ascending order.
    pub heavy: Vec<usize>,
    /// Light leaves in ascending order.
    pub light: Vec<usize>,
    /// Per vertex: number of heavy leaf children.
    pub heavy_children: Vec<usize>,
    /// Per vertex: number of childless children.
    pub leaf_children: Vec<usize>,
    /// Threshold used.
    pub threshold: f64,
    /// Per vertex: whether it is a heavy leaf.
    pub is_heavy: Vec<bool>,
}

/// Classifies leaves with the threshold `n p' / log n`.
pub fn classify_leaves(t: &RootedTree, params: &ParamSet) -> LeafClassification {
    classify_leaves_with(t, params.heavy_threshold())
}

/// Classifies leaves with an explicit threshold: a leaf is heavy iff its
/// parent has at least `threshold` leaf children.
pub fn classify_leaves_with(t: &RootedTree, threshold: f64) -> LeafClassification {
    let n = t.n();
    let mut leaf_children = vec![0usize; n];
    for v in 0..n {
        if v != t.root() && t.is_childless(v) {
            if let Some(p) = t.parent(v) {
                leaf_children[p] += 1;
            }
        }
    }
    let mut heavy = Vec::new();
    let mut light = Vec::new();
    let mut heavy_children = vec![0usize; n];
    let mut is_heavy = vec![false; n];
    for v in 0..n {
        if v == t.root() || !t.is_childless(v) {
            continue;
        }
        let p = t.parent(v).expect("non-root vertex has a parent");
        if leaf_children[p] as f64 >= threshold {
            heavy.push(v);
            heavy_children[p] += 1;
            is_heavy[v] = true;
        } else {
            light.push(v);
        }
    }
    LeafClassification { heavy, light, heavy_children, leaf_children, threshold, is_heavy }
}

/// Vertex-disjoint bare paths of `k_len` vertices, each consisting of tree
/// vertices of degree exactly 2, obtained by slicing every maximal bare
/// segment greedily from one end.
pub fn find_bare_paths(t: &RootedTree, k_len: usize) -> Result<Vec<Vec<usize>>> {
    if k_len < 2 {
        return Err(Error::Precondition(format!("bare paths need k_len >= 2, got {k_len}")));
    }
    let n = t.n();
    let adj = t.adjacency();
    let deg2 = |v: usize| adj[v].len() == 2;
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !deg2(s) || seen[s] {
            continue;
        }
        // Walk to one end of the segment containing s.
        let mut prev = usize::MAX;
        let mut cur = s;
        loop {
            let next = adj[cur].iter().copied().find(|&u| u != prev && deg2(u) && u != s);
            match next {
                Some(u) if !seen[u] && u != cur => {
                    prev = cur;
                    cur = u;
                    if cur == s {
                        break;
                    }
                }
                _ => break,
            }
        }
        // Collect the segment from that end.
        let mut seg = vec![cur];
        seen[cur] = true;
        let mut prev = usize::MAX;
        let mut at = cur;
        while let Some(u) = adj[at].iter().copied().find(|&u| u != prev && deg2(u) && !seen[u]) {
            seg.push(u);
            seen[u] = true;
            prev = at;
            at = u;
        }
        for chunk in seg.chunks_exact(k_len) {
            out.push(chunk.to_vec());
        }
    }
    Ok(out)
}

/// The Lemma-style lower bound `n / k_len - 2 * leaves` on the number of bare paths.
pub fn bare_path_bound(t: &RootedTree, k_len: usize) -> f64 {
    t.n() as f64 / k_len as f64 - 2.0 * t.leaves().len() as f64
}

/// Random tree profiles.
#[derive(Clone, Debug, PartialEq)]
pub enum TreeProfile {
    /// Uniform labelled tree via a random Prüfer sequence.
    UniformPrufer,
    /// Prüfer sequence with every label used at most `delta - 1` times.
    MaxDegreeCapped(usize),
    /// Spiders of random leg lengths joined into a tree, degrees capped.
    SpiderMix(usize),
    /// At least `fraction * n` leaves grouped under parents with at least
    /// `threshold` leaf children, degrees capped by `delta`.
    HeavyLeafRich {
        /// Fraction of vertices that are heavy leaves.
        fraction: f64,
        /// Maximum degree.
        delta: usize,
        /// Heavy-leaf threshold `n p' / log n`.
        threshold: f64,
    },
}

impl TreeProfile {
    /// Short name for CSV output.
    pub fn name(&self) -> String {
        match self {
            TreeProfile::UniformPrufer => "uniform-prufer".into(),
            TreeProfile::MaxDegreeCapped(d) => format!("max-degree-capped({d})"),
            TreeProfile::SpiderMix(d) => format!("spider-mix({d})"),
            TreeProfile::HeavyLeafRich { fraction, delta, .. } => format!("heavy-leaf-rich({fraction},{delta})"),
        }
    }
}

/// Decodes a Prüfer sequence over labels `0..seq.len()+2`.
pub fn prufer_decode(seq: &[usize]) -> Result<Vec<(usize, usize)>> {
    let n = seq.len() + 2;
    if seq.iter().any(|&x| x >= n) {
        return Err(Error::Precondition("Prüfer label out of range".into()));
    }
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &v in seq {
        edges.push((leaf, v));
        degree[v] -= 1;
        degree[leaf] = 0;
        if v < ptr && degree[v] == 1 {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    let last: Vec<usize> = (0..n).filter(|&v| degree[v] == 1 && v != leaf).collect();
    edges.push((leaf, last[0]));
    Ok(edges)
}

fn tree_from_edges_at_lowest_leaf(n: usize, edges: &[(usize, usize)]) -> Result<RootedTree> {
    let t = RootedTree::from_edges(n, edges, 0)?;
    Ok(t.reroot_at_lowest_leaf())
}

/// Generates a random tree on `n` vertices, rooted at its lowest-index leaf.
pub fn gen_random_tree(n: usize, profile: &TreeProfile, rng: &mut Rng) -> Result<RootedTree> {
    if n == 0 {
        return Err(Error::Infeasible("a tree needs at least one vertex".into()));
    }
    if n == 1 {
        return RootedTree::from_edges(1, &[], 0);
    }
    if n == 2 {
        return RootedTree::from_edges(2, &[(0, 1)], 0);
    }
    match profile {
        TreeProfile::UniformPrufer => {
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.below(n)).collect();
            tree_from_edges_at_lowest_leaf(n, &prufer_decode(&seq)?)
        }
        TreeProfile::MaxDegreeCapped(delta) => capped_tree(n, *delta, rng),
        TreeProfile::SpiderMix(delta) => spider_mix(n, *delta, rng),
        TreeProfile::HeavyLeafRich { fraction, delta, threshold } => heavy_leaf_rich(n, *fraction, *delta, *threshold, rng),
    }
}

fn capped_tree(n: usize, delta: usize, rng: &mut Rng) -> Result<RootedTree> {
    if delta < 2 {
        return Err(Error::Infeasible(format!("maximum degree {delta} admits no tree on {n} vertices")));
    }
    let mut count = vec![0usize; n];
    let mut seq = Vec::with_capacity(n - 2);
    let mut open: Vec<usize> = (0..n).collect();
    while seq.len() < n - 2 {
        let i = rng.below(open.len());
        let v = open[i];
        seq.push(v);
        count[v] += 1;
        if count[v] + 1 >= delta {
            open.swap_remove(i);
        }
    }
    tree_from_edges_at_lowest_leaf(n, &prufer_decode(&seq)?)
}

fn spider_mix(n: usize, delta: usize, rng: &mut Rng) -> Result<RootedTree> {
    if delta < 2 {
        return Err(Error::Infeasible(format!("maximum degree {delta} admits no tree on {n} vertices")));
    }
    let mut deg = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut centers = vec![0usize];
    let mut v = 1;
    while v < n {
        // Pick a center with spare degree, else start a new center on the last vertex.
        let open: Vec<usize> = centers.iter().copied().filter(|&c| deg[c] < delta).collect();
        let c = if open.is_empty() || rng.chance(0.1) {
            let c = v - 1;
            if deg[c] >= delta {
                return Err(Error::Infeasible("spider mix ran out of degree capacity".into()));
            }
            centers.push(c);
            c
        } else {
            open[rng.below(open.len())]
        };
        let leg = 1 + rng.below(4);
        let mut prev = c;
        for _ in 0..leg {
            if v >= n {
                break;
            }
            edges.push((prev, v));
            deg[prev] += 1;
            deg[v] += 1;
            prev = v;
            v += 1;
        }
    }
    tree_from_edges_at_lowest_leaf(n, &edges)
}

fn heavy_leaf_rich(n: usize, fraction: f64, delta: usize, threshold: f64, rng: &mut Rng) -> Result<RootedTree> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Infeasible(format!("heavy fraction {fraction} must lie in [0,1)")));
    }
    if delta < 3 {
        return Err(Error::Infeasible(format!("heavy-leaf-rich trees need delta >= 3, got {delta}")));
    }
    let need = threshold.ceil().max(1.0) as usize;
    if need > delta - 1 {
        return Err(Error::Infeasible(format!("heavy threshold {threshold:.3} exceeds delta - 1 = {}", delta - 1)));
    }
    let leaves = (fraction * n as f64).ceil() as usize;
    if leaves == 0 {
        return capped_tree(n, delta, rng);
    }
    let groups = leaves.div_ceil(delta - 1);
    let base = leaves / groups;
    if base < need {
        return Err(Error::Infeasible(format!("{leaves} heavy leaves cannot form groups of at least {need} under delta = {delta}")));
    }
    let backbone_n = n - leaves;
    if backbone_n < 2 {
        return Err(Error::Infeasible(format!("heavy fraction {fraction} leaves no backbone at n = {n}")));
    }
    let backbone = if backbone_n == 2 { RootedTree::from_edges(2, &[(0, 1)], 0)? } else { capped_tree(backbone_n, delta, rng)? };
    let mut edges: Vec<(usize, usize)> = backbone.edges();
    let mut deg: Vec<usize> = (0..backbone_n).map(|v| backbone.degree(v)).collect();
    let mut candidates: Vec<usize> = (0..backbone_n).collect();
    rng.shuffle(&mut candidates);
    candidates.sort_by_key(|&v| deg[v]);
    let mut next = backbone_n;
    let mut ci = 0;
    for g in 0..groups {
        let size = base + usize::from(g < leaves % groups);
        while ci < candidates.len() && deg[candidates[ci]] + size > delta {
            ci += 1;
        }
        if ci >= candidates.len() {
            return Err(Error::Infeasible(format!("not enough backbone vertices to host {groups} heavy groups")));
        }
        let y = candidates[ci];
        ci += 1;
        for _ in 0..size {
            edges.push((y, next));
            next += 1;
        }
        deg[y] += size;
    }
    tree_from_edges_at_lowest_leaf(n, &edges)
}

/// Path `0 - 1 - ... - (n-1)` rooted at 0.
pub fn path(n: usize) -> RootedTree {
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    RootedTree::from_edges(n, &edges, 0).expect("path is a tree")
}

/// Star `K_{1,n-1}` with center 0, rooted at the leaf 1.
pub fn star(n: usize) -> RootedTree {
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (0, i)).collect();
    RootedTree::from_edges(n, &edges, if n > 1 { 1 } else { 0 }).expect("star is a tree")
}

/// Caterpillar: spine `0..spine` with `legs` leaves attached round-robin,
/// rooted at the lowest-index leaf.
pub fn caterpillar(spine: usize, legs: usize) -> RootedTree {
    let mut edges: Vec<(usize, usize)> = (1..spine).map(|i| (i - 1, i)).collect();
    for j in 0..legs {
        edges.push((j % spine, spine + j));
    }
    RootedTree::from_edges(spine + legs, &edges, 0).expect("caterpillar is a tree").reroot_at_lowest_leaf()
}

/// Complete `m`-ary tree of the given height, rooted at the lowest-index leaf.
pub fn complete_mary(m: usize, height: usize) -> RootedTree {
    let mut edges = Vec::new();
    let mut level = vec![0usize];
    let mut next = 1;
    for _ in 0..height {
        let mut nl = Vec::new();
        for &v in &level {
            for _ in 0..m {
                edges.push((v, next));
                nl.push(next);
                next += 1;
            }
        }
        level = nl;
    }
    RootedTree::from_edges(next, &edges, 0).expect("complete tree is a tree").reroot_at_lowest_leaf()
}

/// Spider with `legs` legs of `leg_len` vertices each around center 0, rooted
/// at the lowest-index leaf.
pub fn spider(legs: usize, leg_len: usize) -> RootedTree {
    let mut edges = Vec::new();
    let mut next = 1;
    for _ in 0..legs {
        let mut prev = 0;
        for _ in 0..leg_len {
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
    }
    RootedTree::from_edges(next, &edges, 0).expect("spider is a tree").reroot_at_lowest_leaf()
}

/// Canonical AHU string of the subtree at `v` with parent `p` in `adj`.
fn ahu(adj: &[Vec<usize>], v: usize, p: usize) -> String {
    let mut kids: Vec<String> = adj[v].iter().filter(|&&u| u != p).map(|&u| ahu(adj, u, v)).collect();
    kids.sort();
    let mut s = String::from("(");
    for k in kids {
        s.push_str(&k);
    }
    s.push(')');
    s
}

/// Centers of a tree given by adjacency lists.
fn centers(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| deg[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &u in &adj[v] {
                if deg[u] > 1 {
                    deg[u] -= 1;
                    if deg[u] == 1 {
                        next.push(u);
                    }
                }
            }
            deg[v] = 0;
        }
        layer = next;
    }
    layer
}

/// Isomorphism-invariant canonical form of a free tree.
pub fn canonical_form(t: &RootedTree) -> String {
    let adj = t.adjacency();
    centers(&adj).into_iter().map(|c| ahu(&adj, c, usize::MAX)).min().unwrap_or_default()
}

/// All unlabelled free trees on `n` vertices, one representative per
/// isomorphism class, each rooted at its lowest-index leaf. Enumerates rooted
/// level sequences and keeps one per canonical form.
pub fn enumerate_free_trees(n: usize) -> Vec<RootedTree> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![RootedTree::from_edges(1, &[], 0).expect("single vertex")];
    }
    let mut level: Vec<usize> = (0..n).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    loop {
        let mut edges = Vec::with_capacity(n - 1);
        let mut stack: Vec<usize> = Vec::new();
        for (v, &l) in level.iter().enumerate() {
            stack.truncate(l);
            if let Some(&p) = stack.last() {
                edges.push((p, v));
            }
            stack.push(v);
        }
        let t = RootedTree::from_edges(n, &edges, 0).expect("level sequence is a tree");
        if seen.insert(canonical_form(&t)) {
            out.push(t.reroot_at_lowest_leaf());
        }
        let Some(p) = (0..n).rev().find(|&i| level[i] > 1) else { break };
        let q = (0..p).rev().find(|&i| level[i] == level[p] - 1).expect("level sequence predecessor");
        for i in p..n {
            level[i] = level[i - (p - q)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn union_find_connected(n: usize, edges: &[(usize, usize)]) -> bool {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        let mut comps = n;
        for &(u, v) in edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a] = b;
                comps -= 1;
            }
        }
        comps == 1
    }

    #[test]
    fn path_queries() {
        let t = path(3);
        assert_eq!(t.subtree_size(1), 2);
        assert_eq!(t.parent(2), Some(1));
        assert_eq!(t.descendants_at_depth(0, 2), vec![2]);
    }

    #[test]
    fn star_rooted_at_leaf() {
        let t = star(6);
        assert_eq!(t.root(), 1);
        assert_eq!(t.subtree_size(0), 5);
        assert_eq!(t.children(0).len(), 4);
    }

    #[test]
    fn random_tree_child_sum() {
        let t = gen_random_tree(500, &TreeProfile::UniformPrufer, &mut Rng::from_seed(3)).unwrap();
        let s: usize = (0..500).map(|v| t.children(v).len()).sum();
        assert_eq!(s, 499);
    }

    #[test]
    fn bfs_children_consecutive() {
        let t = gen_random_tree(300, &TreeProfile::UniformPrufer, &mut Rng::from_seed(4)).unwrap();
        assert_eq!(t.at(0), t.root());
        for v in 0..300 {
            let ch = t.children(v);
            for w in ch.windows(2) {
                assert_eq!(t.pos(w[1] as usize), t.pos(w[0] as usize) + 1);
            }
            if let Some(p) = t.parent(v) {
                assert!(t.pos(p) < t.pos(v));
            }
        }
    }

    #[test]
    fn reroot_at_leaf() {
        let t = complete_mary(3, 2);
        assert!(t.is_leaf(t.root()));
        assert_eq!(t.root(), t.lowest_leaf());
    }

    #[test]
    fn text_round_trip() {
        let t = gen_random_tree(50, &TreeProfile::UniformPrufer, &mut Rng::from_seed(5)).unwrap();
        let u = RootedTree::parse(&t.to_text()).unwrap();
        assert_eq!(t, u);
        assert!(RootedTree::parse("3 0\n1 0\n").is_err());
        assert!(RootedTree::parse("3 0\n1 0\n1 0\n").is_err());
        assert!(RootedTree::parse("").is_err());
    }

    #[test]
    fn classify_unreachable_threshold() {
        let t = gen_random_tree(200, &TreeProfile::MaxDegreeCapped(5), &mut Rng::from_seed(1)).unwrap();
        let c = classify_leaves_with(&t, 5.0);
        assert!(c.heavy.is_empty());
        assert_eq!(c.light.len() + 1, t.leaves().len());
    }

    #[test]
    fn classify_spider_center() {
        // Center with exactly ceil(thr) leaf children, thr = 4.2.
        let t = star(6);
        let c = classify_leaves_with(&t, 4.2);
        assert!(c.heavy.is_empty());
        let t = star(7);
        let c = classify_leaves_with(&t, 4.2);
        assert_eq!(c.heavy.len(), 5);
        assert_eq!(c.heavy_children[0], 5);
    }

    #[test]
    fn classify_matches_independent_scan() {
        let n = 10_000;
        let delta = 100;
        let thr = 7.5;
        let t = gen_random_tree(
            n,
            &TreeProfile::HeavyLeafRich { fraction: 0.3, delta, threshold: thr },
            &mut Rng::from_seed(9),
        )
        .unwrap();
        let c = classify_leaves_with(&t, thr);
        // Independent scan from the undirected adjacency.
        let adj = t.adjacency();
        let mut heavy = 0;
        for v in 0..n {
            if v == t.root() || adj[v].len() != 1 {
                continue;
            }
            let y = adj[v][0];
            let lc = adj[y].iter().filter(|&&u| u != t.root() && adj[u].len() == 1 && t.parent(u) == Some(y)).count();
            if lc as f64 >= thr {
                heavy += 1;
            }
        }
        assert_eq!(c.heavy.len(), heavy);
    }

    #[test]
    fn heavy_leaf_rich_meets_fraction() {
        let t = gen_random_tree(
            1000,
            &TreeProfile::HeavyLeafRich { fraction: 0.5, delta: 100, threshold: 10.0 },
            &mut Rng::from_seed(2),
        )
        .unwrap();
        assert!(t.max_degree() <= 100);
        let c = classify_leaves_with(&t, 10.0);
        assert!(c.heavy.len() >= 500);
        for v in 0..1000 {
            assert!(c.heavy_children[v] == 0 || c.heavy_children[v] as f64 >= 10.0);
        }
        assert!(gen_random_tree(10, &TreeProfile::HeavyLeafRich { fraction: 0.5, delta: 2, threshold: 1.0 }, &mut Rng::from_seed(2)).is_err());
    }

    #[test]
    fn two_vertex_trees() {
        for p in [TreeProfile::UniformPrufer, TreeProfile::MaxDegreeCapped(3), TreeProfile::SpiderMix(3)] {
            let t = gen_random_tree(2, &p, &mut Rng::from_seed(0)).unwrap();
            assert_eq!(t.edges().len(), 1);
        }
    }

    /// Straight-line Prüfer decoder: repeatedly remove the smallest leaf.
    fn naive_prufer(seq: &[usize]) -> Vec<(usize, usize)> {
        let n = seq.len() + 2;
        let mut deg = vec![1usize; n];
        for &x in seq {
            deg[x] += 1;
        }
        let mut removed = vec![false; n];
        let mut edges = Vec::new();
        for &x in seq {
            let leaf = (0..n).find(|&v| !removed[v] && deg[v] == 1).unwrap();
            edges.push((leaf.min(x), leaf.max(x)));
            removed[leaf] = true;
            deg[x] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| !removed[v]).collect();
        edges.push((rest[0], rest[1]));
        edges.sort();
        edges
    }

    #[test]
    fn prufer_matches_naive_decoder() {
        let mut rng = Rng::from_seed(8);
        for _ in 0..200 {
            let seq: Vec<usize> = (0..6).map(|_| rng.below(8)).collect();
            let mut e: Vec<(usize, usize)> = prufer_decode(&seq).unwrap().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
            e.sort();
            assert_eq!(e, naive_prufer(&seq));
            let mut deg = [0usize; 8];
            for &(a, b) in &e {
                deg[a] += 1;
                deg[b] += 1;
            }
            for v in 0..8 {
                assert_eq!(deg[v], 1 + seq.iter().filter(|&&x| x == v).count());
            }
        }
    }

    #[test]
    fn generated_trees_are_trees() {
        let mut rng = Rng::from_seed(12);
        for n in [3, 10, 57, 400] {
            for prof in [
                TreeProfile::UniformPrufer,
                TreeProfile::MaxDegreeCapped(3),
                TreeProfile::SpiderMix(4),
            ] {
                let t = gen_random_tree(n, &prof, &mut rng).unwrap();
                let e = t.edges();
                assert_eq!(e.len(), n - 1);
                assert!(union_find_connected(n, &e));
                if let TreeProfile::MaxDegreeCapped(d) | TreeProfile::SpiderMix(d) = prof {
                    assert!(t.max_degree() <= d);
                }
            }
        }
    }

    #[test]
    fn bare_paths_on_path() {
        let t = path(20);
        let ps = find_bare_paths(&t, 4).unwrap();
        assert_eq!(ps.len(), 4);
        assert!(ps.len() as f64 >= bare_path_bound(&t, 4));
        // Exhaustive check: interior vertices 1..19 form a single segment of 18.
        assert_eq!(18 / 4, ps.len());
    }

    #[test]
    fn bare_paths_on_star() {
        let t = star(10);
        assert!(find_bare_paths(&t, 3).unwrap().is_empty());
        assert!(bare_path_bound(&t, 3) < 0.0);
        assert!(find_bare_paths(&t, 1).is_err());
    }

    #[test]
    fn bare_paths_on_caterpillar() {
        let t = caterpillar(30, 10);
        let ps = find_bare_paths(&t, 5).unwrap();
        let bound = 40.0 / 5.0 - 2.0 * t.leaves().len() as f64;
        assert!(ps.len() as f64 >= bound);
        let mut used = HashSet::new();
        for p in &ps {
            assert_eq!(p.len(), 5);
            for w in p.windows(2) {
                assert!(t.parent(w[0]) == Some(w[1]) || t.parent(w[1]) == Some(w[0]));
            }
            for &v in p {
                assert_eq!(t.degree(v), 2);
                assert!(used.insert(v));
            }
        }
        // Spine vertices 10..29 have degree 2 except the end; 9 spine vertices
        // after the legs end form one segment 10..=28 of 19 vertices.
        assert_eq!(ps.len(), 3);
    }

    #[test]
    fn free_tree_counts() {
        let expected = [1, 1, 1, 2, 3, 6, 11, 23, 47, 106, 235, 551];
        for (i, &c) in expected.iter().enumerate() {
            assert_eq!(enumerate_free_trees(i + 1).len(), c, "n = {}", i + 1);
        }
    }
}
