//! Extremal trees showing the random-edge density is needed, an exhaustive
//! backtracking oracle for spanning-tree containment in small hosts, and a
//! Monte Carlo verifier of non-embeddability.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{gen_gnp, Graph};
use crate::rng::Rng;
use crate::tree::RootedTree;

/// Which construction of the extremal tree to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExtremalRegime {
    /// `Delta > n^((k+2)/(k+1)^2)`: an odd number of bushy copies joined at an apex.
    LargeDelta,
    /// Otherwise: one bushy tree of height `k + 1`.
    SmallDelta,
}

/// Parameters of an extremal tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtremalSpec {
    /// Number of vertices.
    pub n: usize,
    /// Regime index with `n^(1/(k+1)) <= Delta < n^(1/k)`.
    pub k: usize,
    /// Maximum degree bound.
    pub delta: usize,
    /// Constant of the random graph density `c p / 2`.
    pub c: f64,
    /// Construction branch.
    pub regime: ExtremalRegime,
}

impl ExtremalSpec {
    /// Chooses the branch from `Delta` versus `n^((k+2)/(k+1)^2)`.
    pub fn auto(n: usize, k: usize, delta: usize, c: f64) -> ExtremalSpec {
        let kk = (k + 1) as f64;
        let cut = (n as f64).powf((k + 2) as f64 / (kk * kk));
        let regime = if delta as f64 > cut { ExtremalRegime::LargeDelta } else { ExtremalRegime::SmallDelta };
        ExtremalSpec { n, k, delta, c, regime }
    }

    /// `p = max(n^(-k/(k+1)), Delta^(k+1) / n^2)`.
    pub fn p(&self) -> f64 {
        let n = self.n as f64;
        let k = self.k as f64;
        n.powf(-k / (k + 1.0)).max((self.delta as f64).powf(k + 1.0) / (n * n))
    }

    /// Edge probability `c p / 2` of the random graph.
    pub fn r_prob(&self) -> f64 {
        (self.c * self.p() / 2.0).min(1.0)
    }
}

/// An extremal tree with the quantities of its construction.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremalTree {
    /// The tree.
    #[serde(skip)]
    pub tree: RootedTree,
    /// Construction branch.
    pub regime: ExtremalRegime,
    /// Number of copies (large-Delta branch), otherwise 1.
    pub copies: usize,
    /// Vertices per copy (large-Delta branch), otherwise `n`.
    pub copy_size: usize,
    /// Roots of the copies.
    pub copy_roots: Vec<usize>,
    /// Sizes of the two colour classes of the tree.
    pub bipartition: (usize, usize),
    /// Lower bound on the load forced into one side of `K_{n/2,n/2}` when no random edge is used.
    pub side_load: usize,
    /// `n/2 + Delta^k / 8`, the load the argument needs.
    pub side_load_target: f64,
}

impl ExtremalTree {
    /// Whether the forced side load exceeds `n/2` (so the tree cannot embed into the balanced bipartite host alone).
    pub fn side_load_exceeds_half(&self) -> bool {
        2 * self.side_load > self.tree.n()
    }
}

/// Builds the extremal tree of the requested branch on exactly `n` vertices with maximum degree at most `Delta`.
pub fn build_extremal_tree(spec: &ExtremalSpec, rng: &mut Rng) -> Result<ExtremalTree> {
    let ExtremalSpec { n, k, delta, .. } = *spec;
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if n < 4 || delta < 2 {
        return Err(Error::Infeasible(format!("n = {n}, Delta = {delta} admit no extremal tree")));
    }
    let parents = match spec.regime {
        ExtremalRegime::LargeDelta => large_delta(n, k, delta)?,
        ExtremalRegime::SmallDelta => small_delta(n, k, delta)?,
    };
    let (parents, roots) = parents;
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let mut relabelled = vec![None; n];
    for (v, p) in parents.iter().enumerate() {
        relabelled[perm[v]] = p.map(|q| perm[q]);
    }
    let tree = RootedTree::from_parents(&relabelled)?;
    if tree.n() != n || tree.max_degree() > delta {
        return Err(Error::Invariant(format!("extremal tree has {} vertices and maximum degree {}", tree.n(), tree.max_degree())));
    }
    let even = (0..n).filter(|&v| tree.depth(v) % 2 == 0).count();
    let copy_roots: Vec<usize> = roots.iter().map(|&r| perm[r]).collect();
    let (side_load, copies, copy_size) = match spec.regime {
        ExtremalRegime::LargeDelta => {
            let s = copy_roots.len();
            let deep = tree.descendants_at_depth(copy_roots[0], k).len();
            (s.div_ceil(2) * deep, s, tree.subtree_size(copy_roots[0]))
        }
        ExtremalRegime::SmallDelta => (even.max(n - even), 1, n),
    };
    Ok(ExtremalTree {
        tree,
        regime: spec.regime,
        copies,
        copy_size,
        copy_roots,
        bipartition: (even, n - even),
        side_load,
        side_load_target: n as f64 / 2.0 + (delta as f64).powi(k as i32) / 8.0,
    })
}

/// Parent array of a rooted tree of height at most `height` on `m` vertices whose
/// internal vertices have degree in `[lo, hi]` (the root counts no parent edge).
fn bushy(m: usize, height: usize, lo: usize, hi: usize) -> Option<Vec<Option<usize>>> {
    // Children counts: root in [lo, hi], other internal vertices in [lo - 1, hi - 1].
    for b in (lo..=hi).rev() {
        let mut parents: Vec<Option<usize>> = vec![None];
        let mut frontier = vec![0usize];
        let mut ok = true;
        for depth in 0..height {
            let remaining = m - parents.len();
            if remaining == 0 {
                break;
            }
            let (clo, chi) = if depth == 0 { (lo, b) } else { (lo.saturating_sub(1).max(1), b - 1) };
            if chi == 0 {
                ok = false;
                break;
            }
            let last = depth + 1 == height;
            let take = if last { remaining } else { remaining.min(frontier.len() * chi) };
            let used_parents = frontier.len().min(take / clo.max(1)).max(1);
            if take > used_parents * chi || take < used_parents * clo {
                ok = false;
                break;
            }
            let mut next = Vec::with_capacity(take);
            for j in 0..used_parents {
                let share = take / used_parents + usize::from(j < take % used_parents);
                for _ in 0..share {
                    let id = parents.len();
                    parents.push(Some(frontier[j]));
                    next.push(id);
                }
            }
            frontier = next;
        }
        if ok && parents.len() == m {
            return Some(parents);
        }
    }
    None
}

fn large_delta(n: usize, k: usize, delta: usize) -> Result<(Vec<Option<usize>>, Vec<usize>)> {
    let half = (delta as f64 / 2.0).powi(k as i32);
    let s0 = (n as f64 / half).ceil() as usize;
    let s = if s0 % 2 == 1 { s0 } else { s0 + 1 };
    if s < 3 {
        return Err(Error::Infeasible(format!("s = {s} copies, need an odd s >= 3 (Delta^k < n fails)")));
    }
    let m = (n - 1) / s;
    let lo = (delta as f64 / 5.0).ceil().max(2.0) as usize;
    let hi = (2.0 * delta as f64 / 3.0).floor() as usize;
    let min_size: f64 = (0..=k).map(|l| (delta as f64 / 5.0).powi(l as i32)).sum();
    let max_size: f64 = (0..=k).map(|l| (2.0 * delta as f64 / 3.0 - 1.0).powi(l as i32)).sum();
    if !(max_size > m as f64 && m as f64 > min_size) {
        return Err(Error::Infeasible(format!("size window {min_size:.1} < m = {m} < {max_size:.1} fails")));
    }
    if hi < lo {
        return Err(Error::Infeasible(format!("degree window [{lo}, {hi}] is empty")));
    }
    let copy = bushy(m, k, lo, hi.min(delta - 1))
        .ok_or_else(|| Error::Infeasible(format!("no height-{k} tree on {m} vertices with degrees in [{lo}, {hi}]")))?;
    let mut parents: Vec<Option<usize>> = vec![None; n];
    let mut deg = vec![0usize; n];
    let mut roots = Vec::with_capacity(s);
    for i in 0..s {
        let off = 1 + i * m;
        for (v, p) in copy.iter().enumerate() {
            parents[off + v] = p.map(|q| off + q);
            if let Some(q) = p {
                deg[off + v] += 1;
                deg[off + q] += 1;
            }
        }
        roots.push(off);
    }
    // Connectors: the apex, then padding vertices chained below it while more capacity is needed.
    let pads: Vec<usize> = (1 + s * m..n).collect();
    let mut spine = vec![0usize];
    let mut c = 0;
    let mut pi = 0;
    let mut ri = 0;
    while ri < s {
        let free = delta - deg[c];
        let take = if s - ri <= free { s - ri } else { free.saturating_sub(1) };
        for _ in 0..take {
            parents[roots[ri]] = Some(c);
            deg[c] += 1;
            deg[roots[ri]] += 1;
            ri += 1;
        }
        if ri < s {
            let p = *pads.get(pi).ok_or_else(|| Error::Infeasible(format!("{s} copies cannot be joined within degree {delta}")))?;
            pi += 1;
            parents[p] = Some(c);
            deg[c] += 1;
            deg[p] += 1;
            spine.push(p);
            c = p;
        }
    }
    for &p in &pads[pi..] {
        let at = *spine.iter().find(|&&v| deg[v] < delta).ok_or_else(|| Error::Infeasible("no room for padding vertices".into()))?;
        parents[p] = Some(at);
        deg[at] += 1;
        deg[p] += 1;
        spine.push(p);
    }
    Ok((parents, roots))
}

fn small_delta(n: usize, k: usize, delta: usize) -> Result<(Vec<Option<usize>>, Vec<usize>)> {
    let np = (n as f64).powf(1.0 / (k + 1) as f64);
    let lo = (np / 2.0).ceil().max(2.0) as usize;
    let hi = ((2.0 * np).floor() as usize).min(delta);
    if hi < lo {
        return Err(Error::Infeasible(format!("degree window [{lo}, {hi}] is empty")));
    }
    let t = bushy(n, k + 1, lo, hi)
        .ok_or_else(|| Error::Infeasible(format!("no height-{} tree on {n} vertices with degrees in [{lo}, {hi}]", k + 1)))?;
    Ok((t, vec![0]))
}

/// Budget of one oracle call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    /// Wall-clock limit.
    pub time: Duration,
    /// Limit on search nodes.
    pub nodes: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { time: Duration::from_secs(10), nodes: u64::MAX }
    }
}

/// Verdict of [`brute_force_embed`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum OracleVerdict {
    /// An embedding `phi(x)`.
    Found(Vec<usize>),
    /// The search space was exhausted: no embedding exists.
    Exhausted,
    /// The budget ran out first.
    Timeout,
}

impl OracleVerdict {
    /// Short name for CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            OracleVerdict::Found(_) => "found",
            OracleVerdict::Exhausted => "exhausted",
            OracleVerdict::Timeout => "timeout",
        }
    }

    /// Whether the search finished with a definite answer.
    pub fn complete(&self) -> bool {
        !matches!(self, OracleVerdict::Timeout)
    }
}

/// Verdict with the number of search nodes visited.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleOutcome {
    /// The verdict.
    pub verdict: OracleVerdict,
    /// Search nodes visited.
    pub nodes: u64,
}

/// Twin classes: vertices with equal open or equal closed neighbourhoods.
fn twin_classes(host: &Graph) -> Vec<usize> {
    let n = host.n();
    let mut class: Vec<usize> = (0..n).collect();
    let mut key: Vec<(Vec<u32>, usize)> = (0..n).map(|v| (host.neighbors(v).to_vec(), v)).collect();
    key.sort();
    for w in key.windows(2) {
        if w[0].0 == w[1].0 {
            let c = class[w[0].1];
            class[w[1].1] = c;
        }
    }
    let mut closed: Vec<(Vec<u32>, usize)> = (0..n)
        .filter(|&v| class[v] == v && !(0..n).any(|u| u != v && class[u] == v))
        .map(|v| {
            let mut nb = host.neighbors(v).to_vec();
            nb.push(v as u32);
            nb.sort_unstable();
            (nb, v)
        })
        .collect();
    closed.sort();
    for w in closed.windows(2) {
        if w[0].0 == w[1].0 {
            let c = class[w[0].1];
            class[w[1].1] = c;
        }
    }
    class
}

struct Search<'a> {
    t: &'a RootedTree,
    host: &'a Graph,
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
    cands: Vec<Vec<usize>>,
    class: Vec<usize>,
    phi: Vec<usize>,
    used: Vec<bool>,
    pending: Vec<usize>,
    free: Vec<usize>,
    nodes: u64,
    start: Instant,
    budget: OracleBudget,
    timed_out: bool,
}

impl Search<'_> {
    fn place(&mut self, x: usize, v: usize) {
        self.phi[x] = v;
        self.used[v] = true;
        for &u in self.host.neighbors(v) {
            self.free[u as usize] -= 1;
        }
        if let Some(p) = self.parent[x] {
            self.pending[p] -= 1;
        }
    }

    fn unplace(&mut self, x: usize, v: usize) {
        self.phi[x] = usize::MAX;
        self.used[v] = false;
        for &u in self.host.neighbors(v) {
            self.free[u as usize] += 1;
        }
        if let Some(p) = self.parent[x] {
            self.pending[p] += 1;
        }
    }

    /// Every embedded vertex next to `v` still has room for its unembedded children.
    fn feasible(&self, x: usize, v: usize) -> bool {
        if self.free[v] < self.pending[x] {
            return false;
        }
        self.host.neighbors(v).iter().all(|&u| {
            let u = u as usize;
            if !self.used[u] {
                return true;
            }
            let y = self.owner(u);
            self.free[u] >= self.pending[y]
        })
    }

    fn owner(&self, v: usize) -> usize {
        self.order.iter().copied().find(|&x| self.phi[x] == v).expect("used vertex has an owner")
    }

    fn run(&mut self, i: usize) -> bool {
        if i == self.order.len() {
            return true;
        }
        self.nodes += 1;
        if self.nodes >= self.budget.nodes || (self.nodes.is_multiple_of(1024) && self.start.elapsed() > self.budget.time) {
            self.timed_out = true;
            return false;
        }
        let x = self.order[i];
        let need = self.t.degree(x);
        let list: Vec<usize> = match self.parent[x] {
            None => self.cands[self.host.n()].clone(),
            Some(p) => self.cands[self.phi[p]].clone(),
        };
        let mut tried: Vec<usize> = Vec::new();
        for v in list {
            if self.used[v] || self.host.degree(v) < need {
                continue;
            }
            let c = self.class[v];
            if tried.contains(&c) {
                continue;
            }
            tried.push(c);
            self.place(x, v);
            if self.feasible(x, v) && self.run(i + 1) {
                return true;
            }
            self.unplace(x, v);
            if self.timed_out {
                return false;
            }
        }
        false
    }
}

/// Exhaustive backtracking search for a spanning embedding of `t` into `host`.
pub fn brute_force_embed(t: &RootedTree, host: &Graph, budget: OracleBudget) -> OracleOutcome {
    let n = t.n();
    if n != host.n() {
        return OracleOutcome { verdict: OracleVerdict::Exhausted, nodes: 0 };
    }
    if n == 0 {
        return OracleOutcome { verdict: OracleVerdict::Found(Vec::new()), nodes: 0 };
    }
    let mut tdeg: Vec<usize> = (0..n).map(|v| t.degree(v)).collect();
    let mut hdeg: Vec<usize> = (0..n).map(|v| host.degree(v)).collect();
    tdeg.sort_unstable_by(|a, b| b.cmp(a));
    hdeg.sort_unstable_by(|a, b| b.cmp(a));
    if tdeg.iter().zip(&hdeg).any(|(a, b)| a > b) {
        return OracleOutcome { verdict: OracleVerdict::Exhausted, nodes: 0 };
    }
    let root = (0..n).max_by_key(|&v| (t.degree(v), std::cmp::Reverse(v))).expect("nonempty");
    let rt = t.reroot(root).expect("vertex of the tree");
    let order: Vec<usize> = rt.bfs_order().collect();
    let parent: Vec<Option<usize>> = (0..n).map(|v| rt.parent(v)).collect();
    let by_degree = |mut vs: Vec<usize>| {
        vs.sort_by_key(|&v| (std::cmp::Reverse(host.degree(v)), v));
        vs
    };
    let mut cands: Vec<Vec<usize>> = (0..n).map(|v| by_degree(host.neighbors(v).iter().map(|&u| u as usize).collect())).collect();
    cands.push(by_degree((0..n).collect()));
    let mut s = Search {
        t: &rt,
        host,
        pending: (0..n).map(|v| rt.child_count(v)).collect(),
        order,
        parent,
        cands,
        class: twin_classes(host),
        phi: vec![usize::MAX; n],
        used: vec![false; n],
        free: (0..n).map(|v| host.degree(v)).collect(),
        nodes: 0,
        start: Instant::now(),
        budget,
        timed_out: false,
    };
    let found = s.run(0);
    let verdict = if found {
        OracleVerdict::Found(s.phi.clone())
    } else if s.timed_out {
        OracleVerdict::Timeout
    } else {
        OracleVerdict::Exhausted
    };
    OracleOutcome { verdict, nodes: s.nodes }
}

/// Naive oracle trying every permutation (for `n <= 10`).
pub fn naive_embed(t: &RootedTree, host: &Graph) -> Result<Option<Vec<usize>>> {
    let n = t.n();
    if n > 10 {
        return Err(Error::Precondition(format!("naive oracle is limited to n <= 10, got {n}")));
    }
    if n != host.n() {
        return Ok(None);
    }
    let edges = t.edges();
    let mut perm: Vec<usize> = (0..n).collect();
    let fits = |p: &[usize]| edges.iter().all(|&(a, b)| host.has_edge(p[a], p[b]));
    if fits(&perm) {
        return Ok(Some(perm));
    }
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if fits(&perm) {
                return Ok(Some(perm));
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(None)
}

/// Whether `phi` is a spanning embedding of `t` into `host`.
pub fn is_embedding(t: &RootedTree, host: &Graph, phi: &[usize]) -> bool {
    let n = t.n();
    if phi.len() != n || host.n() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in phi {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    t.edges().iter().all(|&(a, b)| host.has_edge(phi[a], phi[b]))
}

/// Dense part of the host in the non-embeddability experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DenseHost {
    /// `K_{n/2,n/2}`.
    Bipartite,
    /// `K_n` (sanity inversion).
    Complete,
}

/// One trial of [`verify_nonembeddability`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonEmbedTrial {
    /// Trial index.
    pub trial: usize,
    /// Edges of the random graph.
    pub r_edges: usize,
    /// Whether every random-graph degree is at most `c n p`.
    pub event_e: bool,
    /// Oracle verdict name.
    pub verdict: String,
    /// Search nodes visited.
    pub nodes: u64,
}

/// Rates of [`verify_nonembeddability`].
#[derive(Clone, Debug, Serialize)]
pub struct NonEmbedReport {
    /// The tree's construction data.
    pub tree: ExtremalTree,
    /// Dense host.
    pub host: DenseHost,
    /// Per-trial rows.
    pub trials: Vec<NonEmbedTrial>,
}

impl NonEmbedReport {
    /// Trials where the oracle finished.
    pub fn complete(&self) -> usize {
        self.trials.iter().filter(|t| t.verdict != "timeout").count()
    }

    /// Finished trials with no embedding.
    pub fn non_embedded(&self) -> usize {
        self.trials.iter().filter(|t| t.verdict == "exhausted").count()
    }

    /// Finished trials with an embedding.
    pub fn embedded(&self) -> usize {
        self.trials.iter().filter(|t| t.verdict == "found").count()
    }

    /// Non-embedding rate among finished trials.
    pub fn non_embed_rate(&self) -> f64 {
        self.non_embedded() as f64 / self.complete().max(1) as f64
    }

    /// Fraction of trials in which event `E` held.
    pub fn event_rate(&self) -> f64 {
        self.trials.iter().filter(|t| t.event_e).count() as f64 / self.trials.len().max(1) as f64
    }

    /// Finished trials where `E` held but an embedding was found.
    pub fn violations(&self) -> usize {
        self.trials.iter().filter(|t| t.event_e && t.verdict == "found").count()
    }

    /// CSV with a versioned header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# spantree extremal v1\ntrial,r_edges,event_e,verdict,nodes\n");
        for t in &self.trials {
            let _ = writeln!(s, "{},{},{},{},{}", t.trial, t.r_edges, u8::from(t.event_e), t.verdict, t.nodes);
        }
        s
    }
}

/// Samples `R ~ G(n, c p / 2)` per trial and asks the oracle whether the extremal tree embeds into the dense host plus `R`.
pub fn verify_nonembeddability(spec: &ExtremalSpec, host: DenseHost, trials: usize, budget: OracleBudget, rng: &mut Rng) -> Result<NonEmbedReport> {
    let n = spec.n;
    if n % 2 == 1 {
        return Err(Error::param("n", "must be even for K_{n/2,n/2}"));
    }
    let tree = build_extremal_tree(spec, &mut rng.split(0))?;
    let dense = match host {
        DenseHost::Bipartite => Graph::complete_bipartite(n / 2, n / 2),
        DenseHost::Complete => Graph::complete(n),
    };
    let cap = spec.c * n as f64 * spec.p();
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut tr = rng.split(1 + trial as u64);
        let r = gen_gnp(n, spec.r_prob(), &mut tr)?;
        let event_e = (0..n).all(|v| r.degree(v) as f64 <= cap);
        let g = dense.union(&r)?;
        let out = brute_force_embed(&tree.tree, &g, budget);
        if let OracleVerdict::Found(phi) = &out.verdict {
            if !is_embedding(&tree.tree, &g, phi) {
                return Err(Error::Invariant("oracle returned an invalid embedding".into()));
            }
        }
        rows.push(NonEmbedTrial { trial, r_edges: r.m(), event_e, verdict: out.verdict.name().into(), nodes: out.nodes });
    }
    Ok(NonEmbedReport { tree, host, trials: rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{enumerate_free_trees, path, star};

    fn cycle(n: usize) -> Graph {
        let e: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn path_into_complete() {
        let out = brute_force_embed(&path(4), &Graph::complete(4), OracleBudget::default());
        match out.verdict {
            OracleVerdict::Found(phi) => assert!(is_embedding(&path(4), &Graph::complete(4), &phi)),
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn star_into_cycle() {
        let out = brute_force_embed(&star(5), &cycle(5), OracleBudget::default());
        assert_eq!(out.verdict, OracleVerdict::Exhausted);
    }

    #[test]
    fn bipartition_criterion_on_k44() {
        let host = Graph::complete_bipartite(4, 4);
        let trees = enumerate_free_trees(8);
        assert_eq!(trees.len(), 23);
        for t in &trees {
            let even = (0..8).filter(|&v| t.depth(v) % 2 == 0).count();
            let out = brute_force_embed(t, &host, OracleBudget::default());
            assert_eq!(matches!(out.verdict, OracleVerdict::Found(_)), even == 4);
            assert!(out.verdict.complete());
        }
    }

    #[test]
    fn naive_and_backtracking_agree() {
        let mut rng = Rng::new(3, 0);
        for n in 1..=7 {
            for t in enumerate_free_trees(n) {
                for _ in 0..3 {
                    let g = gen_gnp(n, 0.55, &mut rng).unwrap();
                    let a = brute_force_embed(&t, &g, OracleBudget::default());
                    let b = naive_embed(&t, &g).unwrap();
                    assert_eq!(matches!(a.verdict, OracleVerdict::Found(_)), b.is_some());
                }
            }
        }
    }

    #[test]
    fn large_delta_recount() {
        let spec = ExtremalSpec { n: 60, k: 1, delta: 10, c: 0.0, regime: ExtremalRegime::LargeDelta };
        let ex = build_extremal_tree(&spec, &mut Rng::new(1, 0)).unwrap();
        assert_eq!(ex.tree.n(), 60);
        assert!(ex.tree.max_degree() <= 10);
        assert!(ex.copies >= 3 && ex.copies % 2 == 1);
        for &r in &ex.copy_roots {
            assert_eq!(ex.tree.subtree_size(r), ex.copy_size);
            let internal = ex.tree.subtree_vertices(r).into_iter().filter(|&v| !ex.tree.is_childless(v));
            for v in internal {
                let d = ex.tree.child_count(v);
                assert!((2..=6).contains(&d), "internal degree {d}");
            }
        }
    }

    #[test]
    fn small_delta_window() {
        let spec = ExtremalSpec { n: 100, k: 1, delta: 30, c: 0.0, regime: ExtremalRegime::SmallDelta };
        let ex = build_extremal_tree(&spec, &mut Rng::new(1, 0)).unwrap();
        let np = 10.0;
        assert_eq!(ex.tree.n(), 100);
        assert!(ex.tree.height() <= 2);
        assert!(ex.tree.max_degree() as f64 <= 2.0 * np);
        for v in 0..100 {
            if !ex.tree.is_childless(v) {
                assert!(ex.tree.degree(v) as f64 >= np / 2.0);
            }
        }
    }

    #[test]
    fn degenerate_sizes_are_rejected() {
        let spec = ExtremalSpec::auto(3, 1, 2, 0.0);
        assert!(build_extremal_tree(&spec, &mut Rng::new(0, 0)).is_err());
    }

    #[test]
    fn extremal_tree_does_not_embed_without_random_edges() {
        let spec = ExtremalSpec::auto(24, 1, 12, 0.0);
        assert_eq!(spec.regime, ExtremalRegime::LargeDelta);
        let rep = verify_nonembeddability(&spec, DenseHost::Bipartite, 3, OracleBudget::default(), &mut Rng::new(5, 0)).unwrap();
        assert_eq!(rep.non_embedded(), 3);
        let rep = verify_nonembeddability(&spec, DenseHost::Complete, 3, OracleBudget::default(), &mut Rng::new(5, 0)).unwrap();
        assert_eq!(rep.embedded(), 3);
    }
}
