//! Embedding subroutines: random forest embedding with tracked set families,
//! star-forest embedding through matchings, light-leaf stars, bare paths,
//! and an empirical checker for uniformly random injections.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matching::{b_matching, hopcroft_karp, left_saturating_matching, Bipartite, HallCertificate, Matching};
use crate::rng::Rng;
use crate::tree::RootedTree;

const UNSET: u32 = u32::MAX;

/// Injective partial map from tree vertices to host vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialEmbedding {
    phi: Vec<u32>,
    inv: Vec<u32>,
}

impl PartialEmbedding {
    /// Empty map between a tree on `tree_n` and a host on `host_n` vertices.
    pub fn new(tree_n: usize, host_n: usize) -> Self {
        PartialEmbedding { phi: vec![UNSET; tree_n], inv: vec![UNSET; host_n] }
    }

    /// Image of `x`.
    pub fn get(&self, x: usize) -> Option<usize> {
        (self.phi[x] != UNSET).then_some(self.phi[x] as usize)
    }

    /// Pre-image of the host vertex `v`.
    pub fn owner(&self, v: usize) -> Option<usize> {
        (self.inv[v] != UNSET).then_some(self.inv[v] as usize)
    }

    /// Whether the host vertex `v` is used.
    pub fn is_used(&self, v: usize) -> bool {
        self.inv[v] != UNSET
    }

    /// Maps `x` to `v`; both must be free.
    pub fn map(&mut self, x: usize, v: usize) -> Result<()> {
        if self.phi[x] != UNSET {
            return Err(Error::Invariant(format!("tree vertex {x} is already mapped")));
        }
        if self.inv[v] != UNSET {
            return Err(Error::Invariant(format!("host vertex {v} is already used by {}", self.inv[v])));
        }
        self.phi[x] = v as u32;
        self.inv[v] = x as u32;
        Ok(())
    }

    /// Number of mapped tree vertices.
    pub fn len(&self) -> usize {
        self.phi.iter().filter(|&&v| v != UNSET).count()
    }

    /// Whether nothing is mapped.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of tree vertices.
    pub fn tree_n(&self) -> usize {
        self.phi.len()
    }

    /// The map as a vector with `None` for unmapped vertices.
    pub fn to_vec(&self) -> Vec<Option<usize>> {
        (0..self.phi.len()).map(|x| self.get(x)).collect()
    }

    /// Whether every tree vertex is mapped.
    pub fn is_total(&self) -> bool {
        self.phi.iter().all(|&v| v != UNSET)
    }
}

/// Checks injectivity and that every tree edge with both ends mapped lies in `host`.
pub fn check_partial(t: &RootedTree, phi: &PartialEmbedding, host: &dyn Fn(usize, usize) -> bool) -> std::result::Result<(), String> {
    let mut seen = vec![false; phi.inv.len()];
    for x in 0..t.n() {
        if let Some(v) = phi.get(x) {
            if seen[v] {
                return Err(format!("host vertex {v} used twice"));
            }
            seen[v] = true;
        }
    }
    for (p, c) in t.edges() {
        if let (Some(a), Some(b)) = (phi.get(p), phi.get(c)) {
            if !host(a, b) {
                return Err(format!("tree edge {p}-{c} maps to non-edge {a}-{b}"));
            }
        }
    }
    Ok(())
}

/// Multiset of host vertex sets with accumulated weight from embedded tree vertices.
#[derive(Clone, Debug, Default)]
pub struct TrackedSetFamily {
    /// The sets, each a sorted list of host vertices.
    pub sets: Vec<Vec<usize>>,
    /// Weight `f` of every tree vertex (0 when untracked).
    pub weight: Vec<f64>,
    /// Accumulated `sum_{phi(x) in B} f(x)` per set.
    pub mass: Vec<f64>,
    /// Threshold above which a set is exceptional.
    pub threshold: f64,
    member_of: Vec<Vec<u32>>,
}

impl TrackedSetFamily {
    /// Family over a host with `host_n` vertices.
    pub fn new(sets: Vec<Vec<usize>>, weight: Vec<f64>, threshold: f64, host_n: usize) -> Self {
        let mut member_of = vec![Vec::new(); host_n];
        for (i, s) in sets.iter().enumerate() {
            for &v in s {
                member_of[v].push(i as u32);
            }
        }
        let mass = vec![0.0; sets.len()];
        TrackedSetFamily { sets, weight, mass, threshold, member_of }
    }

    /// Sets whose mass exceeds the threshold.
    pub fn exceptional(&self) -> Vec<usize> {
        (0..self.sets.len()).filter(|&i| self.mass[i] > self.threshold).collect()
    }

    fn score(&self, x: usize, u: usize) -> (usize, usize) {
        let f = self.weight[x];
        let half = self.threshold / 2.0;
        let ids = &self.member_of[u];
        let newly = ids.iter().filter(|&&i| self.mass[i as usize] <= half && self.mass[i as usize] + f > half).count();
        (newly, ids.len())
    }

    fn record(&mut self, x: usize, u: usize) {
        let f = self.weight[x];
        if f != 0.0 {
            for &i in &self.member_of[u] {
                self.mass[i as usize] += f;
            }
        }
    }
}

/// Orders the non-root vertices of a forest breadth-first: the forest
/// consists of the tree vertices with `in_forest` set, whose parents are
/// either in the forest or already embedded. Children of every vertex are
/// consecutive, untracked children first.
pub fn forest_order(t: &RootedTree, in_forest: &[bool], tracked: &[bool]) -> Vec<usize> {
    let mut out = Vec::new();
    let push_children = |p: usize, out: &mut Vec<usize>| {
        let kids = t.children(p).iter().map(|&c| c as usize).filter(|&c| in_forest[c]);
        let (plain, late): (Vec<usize>, Vec<usize>) = kids.partition(|&c| !tracked[c]);
        out.extend(plain);
        out.extend(late);
    };
    for p in t.bfs_order() {
        push_children(p, &mut out);
    }
    out
}

/// Embeds the vertices of `order` one by one: every vertex goes to a uniformly
/// random unused host neighbour of its parent's image whose slice equals
/// `want[x]`. Tracked vertices (positive weight) instead pick the neighbour
/// minimising the number of tracked sets whose mass newly exceeds half the
/// threshold, then the number of tracked sets hit, then the index.
///
/// Returns the exceptional sets of `tracked`. A dead end is reported as a
/// stage failure naming the stuck vertex.
pub fn random_forest_embed(
    t: &RootedTree,
    order: &[usize],
    want: &[u32],
    slice_of: &[u32],
    host: &Graph,
    phi: &mut PartialEmbedding,
    mut tracked: Option<&mut TrackedSetFamily>,
    stage: &str,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    for &x in order {
        let p = t.parent(x).ok_or_else(|| Error::Precondition(format!("forest vertex {x} has no parent")))?;
        let pv = phi.get(p).ok_or_else(|| Error::Precondition(format!("parent {p} of {x} is not embedded")))?;
        let w = want[x];
        let ok = |u: usize| slice_of[u] == w && !phi.is_used(u);
        let is_tracked = tracked.as_ref().is_some_and(|tr| tr.weight[x] > 0.0);
        let choice = if is_tracked {
            let tr = tracked.as_ref().expect("tracked");
            host.neighbors(pv).iter().map(|&u| u as usize).filter(|&u| ok(u)).min_by_key(|&u| {
                let (a, b) = tr.score(x, u);
                (a, b, u)
            })
        } else {
            let count = host.neighbors(pv).iter().filter(|&&u| ok(u as usize)).count();
            if count == 0 {
                None
            } else {
                let pick = rng.below(count);
                host.neighbors(pv).iter().map(|&u| u as usize).filter(|&u| ok(u)).nth(pick)
            }
        };
        let u = choice.ok_or_else(|| {
            Error::stage(stage, format!("dead end at tree vertex {x}: parent image {pv} has no free neighbour in slice {w}"))
        })?;
        phi.map(x, u)?;
        if let Some(tr) = tracked.as_deref_mut() {
            tr.record(x, u);
        }
    }
    Ok(tracked.map(|tr| tr.exceptional()).unwrap_or_default())
}

/// [`random_forest_embed`] without tracked sets.
pub fn random_forest_embed_simple(
    t: &RootedTree,
    order: &[usize],
    want: &[u32],
    slice_of: &[u32],
    host: &Graph,
    phi: &mut PartialEmbedding,
    stage: &str,
    rng: &mut Rng,
) -> Result<()> {
    random_forest_embed(t, order, want, slice_of, host, phi, None, stage, rng).map(|_| ())
}

/// A star whose centre is already embedded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Star {
    /// Host image of the centre.
    pub centre: usize,
    /// Tree leaves to embed.
    pub leaves: Vec<usize>,
}

/// Failure of a star-forest embedding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StarFailure {
    /// Index of the slice without a perfect matching (0 for the greedy variant).
    pub slice: usize,
    /// Hall certificate in the slice's split graph (left indices are copy indices).
    pub certificate: HallCertificate,
}

impl From<StarFailure> for Error {
    fn from(f: StarFailure) -> Error {
        Error::stage(
            "star-forest",
            format!(
                "slice {} has no perfect matching: {} copies see only {} vertices",
                f.slice,
                f.certificate.demand,
                f.certificate.neighbourhood.len()
            ),
        )
    }
}

/// Number of slices `ceil(log|V| / eps)`, capped so that slices keep at least `min_slice` vertices.
pub fn slice_count(v: usize, eps: f64, min_slice: usize) -> usize {
    if v == 0 {
        return 1;
    }
    let t = ((v as f64).ln() / eps).ceil().max(1.0) as usize;
    t.min((v / min_slice.max(1)).max(1))
}

/// Splits `0..n` (after shuffling) into `parts` chunks whose sizes differ by at most one.
fn chunks(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for j in 0..parts {
        let len = n / parts + usize::from(j < n % parts);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Embeds the leaves of `stars` into `right` through `host`: every centre is
/// split into one copy per leaf, dummy centres with random neighbourhoods of
/// size `d |V|` pad the left side to `|V|`, both sides are cut into
/// `slice_count` random slices and every slice pair gets a perfect matching.
///
/// Returns `(leaf, host vertex)` pairs.
pub fn star_forest_embed_balanced(
    stars: &[Star],
    right: &[usize],
    host: &Graph,
    d: f64,
    eps: f64,
    min_slice: usize,
    rng: &mut Rng,
) -> std::result::Result<Vec<(usize, usize)>, StarFailure> {
    let v_len = right.len();
    let leaves: usize = stars.iter().map(|s| s.leaves.len()).sum();
    assert!(leaves <= v_len, "more leaves ({leaves}) than target vertices ({v_len})");
    if leaves == 0 {
        return Ok(Vec::new());
    }
    // Left copies: (star index or usize::MAX for dummies, leaf position).
    let mut copies: Vec<(usize, usize)> = Vec::with_capacity(v_len);
    for (j, s) in stars.iter().enumerate() {
        copies.extend((0..s.leaves.len()).map(|i| (j, i)));
    }
    let dummy_deg = ((d * v_len as f64).round() as usize).clamp(1, v_len);
    while copies.len() < v_len {
        copies.push((usize::MAX, 0));
    }
    rng.shuffle(&mut copies);
    let mut rperm: Vec<usize> = right.to_vec();
    rng.shuffle(&mut rperm);
    let slices = slice_count(v_len, eps, min_slice);
    let mut out = Vec::with_capacity(leaves);
    for (si, range) in chunks(v_len, slices).into_iter().enumerate() {
        let lefts = &copies[range.clone()];
        let rights = &rperm[range];
        let mut g = Bipartite::new(lefts.len(), rights.len());
        for (a, &(j, _)) in lefts.iter().enumerate() {
            if j == usize::MAX {
                // A dummy sees each vertex with probability d |V| / |V|.
                let q = dummy_deg as f64 / v_len as f64;
                for b in 0..rights.len() {
                    if rng.chance(q) {
                        g.add_edge(a, b);
                    }
                }
            } else {
                let c = stars[j].centre;
                for (b, &v) in rights.iter().enumerate() {
                    if host.has_edge(c, v) {
                        g.add_edge(a, b);
                    }
                }
            }
        }
        g.shuffle(rng);
        let m = left_saturating_matching(&g, None).map_err(|certificate| StarFailure { slice: si, certificate })?;
        for (a, &(j, i)) in lefts.iter().enumerate() {
            if j != usize::MAX {
                out.push((stars[j].leaves[i], rights[m.mate_left[a].expect("perfect")]));
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Achieved and predicted weight of a set after a star-forest embedding.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarDistribution {
    /// `sum_y f(y) [phi(y) in B]`.
    pub achieved: f64,
    /// `sum_x sum_{y child of x} f(y) |N(phi(x)) cap B| / (d |V|)`.
    pub predicted: f64,
}

/// Compares achieved and predicted weight for every `(f, B)` pair.
pub fn star_distribution(
    stars: &[Star],
    placed: &[(usize, usize)],
    host: &Graph,
    d: f64,
    v_len: usize,
    weights: &[Vec<f64>],
    sets: &[Vec<usize>],
) -> Vec<Vec<StarDistribution>> {
    let host_n = host.n();
    weights
        .iter()
        .map(|f| {
            sets.iter()
                .map(|b| {
                    let mut in_b = vec![false; host_n];
                    for &v in b {
                        in_b[v] = true;
                    }
                    let achieved = placed.iter().filter(|&&(_, v)| in_b[v]).map(|&(y, _)| f[y]).sum();
                    let predicted = stars
                        .iter()
                        .map(|s| {
                            let hits = b.iter().filter(|&&v| host.has_edge(s.centre, v)).count() as f64;
                            s.leaves.iter().map(|&y| f[y]).sum::<f64>() * hits / (d * v_len as f64)
                        })
                        .sum();
                    StarDistribution { achieved, predicted }
                })
                .collect()
        })
        .collect()
}

/// Embeds all leaves of `stars` onto exactly the vertices of `right`
/// (`sum |leaves| = |right|`). Vertices of `right` with fewer than
/// `(d - eps)|V|` split neighbours are matched greedily first; a maximum
/// matching then completes the assignment.
pub fn star_forest_embed_greedy(
    stars: &[Star],
    right: &[usize],
    host: &Graph,
    d: f64,
    eps: f64,
    rng: &mut Rng,
) -> std::result::Result<Vec<(usize, usize)>, StarFailure> {
    let v_len = right.len();
    let copies: Vec<(usize, usize)> = stars.iter().enumerate().flat_map(|(j, s)| (0..s.leaves.len()).map(move |i| (j, i))).collect();
    assert_eq!(copies.len(), v_len, "leaf count must equal the number of target vertices");
    let mut g = Bipartite::new(v_len, v_len);
    for (a, &(j, _)) in copies.iter().enumerate() {
        let c = stars[j].centre;
        for (b, &v) in right.iter().enumerate() {
            if host.has_edge(c, v) {
                g.add_edge(a, b);
            }
        }
    }
    g.shuffle(rng);
    // Split degree of every right vertex.
    let mut split_deg = vec![0usize; v_len];
    for a in &g.adj {
        for &b in a {
            split_deg[b as usize] += 1;
        }
    }
    let mut rev: Vec<Vec<u32>> = vec![Vec::new(); v_len];
    for (a, adj) in g.adj.iter().enumerate() {
        for &b in adj {
            rev[b as usize].push(a as u32);
        }
    }
    let floor = (d - eps) * v_len as f64;
    let mut deficient: Vec<usize> = (0..v_len).filter(|&b| (split_deg[b] as f64) < floor).collect();
    rng.shuffle(&mut deficient);
    let mut init = Matching::empty(v_len, v_len);
    for &b in &deficient {
        let free: Vec<u32> = rev[b].iter().copied().filter(|&a| init.mate_left[a as usize].is_none()).collect();
        if !free.is_empty() {
            let a = free[rng.below(free.len())] as usize;
            init.mate_left[a] = Some(b);
            init.mate_right[b] = Some(a);
        }
    }
    let m = left_saturating_matching(&g, Some(init)).map_err(|certificate| StarFailure { slice: 0, certificate })?;
    let mut out: Vec<(usize, usize)> =
        copies.iter().enumerate().map(|(a, &(j, i))| (stars[j].leaves[i], right[m.mate_left[a].expect("perfect")])).collect();
    out.sort_unstable();
    Ok(out)
}

/// Gives every centre `a_i` exactly `d_i` distinct pool vertices adjacent to it in `host`.
pub fn light_leaves_embed(
    centres: &[(usize, usize)],
    pool: &[usize],
    host: &Graph,
    rng: &mut Rng,
) -> std::result::Result<Vec<Vec<usize>>, HallCertificate> {
    let mut pos = vec![usize::MAX; host.n()];
    for (b, &v) in pool.iter().enumerate() {
        pos[v] = b;
    }
    let mut g = Bipartite::new(centres.len(), pool.len());
    for (i, &(a, d)) in centres.iter().enumerate() {
        if d == 0 {
            continue;
        }
        for &v in host.neighbors(a) {
            if pos[v as usize] != usize::MAX {
                g.add_edge(i, pos[v as usize]);
            }
        }
    }
    g.shuffle(rng);
    let demands: Vec<usize> = centres.iter().map(|&(_, d)| d).collect();
    let assign = b_matching(&g, &demands)?;
    Ok(assign.into_iter().map(|bs| bs.into_iter().map(|b| pool[b]).collect()).collect())
}

/// Failure of [`bare_paths_embed`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BarePathFailure {
    /// Largest number of paths completed in any attempt.
    pub completed: usize,
    /// Number of pairs requested.
    pub requested: usize,
}

/// Node budget of one depth-first search.
const PATH_DFS_BUDGET: usize = 20_000;

/// Finds vertex-disjoint paths of `k_len` vertices from `s_i` to `t_i` whose
/// interiors use free vertices of `pool`. Pairs are routed one at a time by
/// randomized depth-first search; when a pair is stuck, interior vertices of
/// finished paths are swapped with free pool vertices that fit the same
/// position, and the search is repeated. Whole attempts restart with a fresh
/// pair order up to `retries` times.
pub fn bare_paths_embed(
    pairs: &[(usize, usize)],
    pool: &[usize],
    k_len: usize,
    host: &Graph,
    retries: usize,
    rng: &mut Rng,
) -> std::result::Result<Vec<Vec<usize>>, BarePathFailure> {
    assert!(k_len >= 2, "paths need at least two vertices");
    let inner = k_len - 2;
    let n = host.n();
    let mut best = 0;
    if inner == 0 {
        return if pairs.iter().all(|&(s, t)| host.has_edge(s, t)) {
            Ok(vec![Vec::new(); pairs.len()])
        } else {
            Err(BarePathFailure { completed: pairs.iter().take_while(|&&(s, t)| host.has_edge(s, t)).count(), requested: pairs.len() })
        };
    }
    if pool.len() < inner * pairs.len() {
        return Err(BarePathFailure { completed: 0, requested: pairs.len() });
    }
    for _ in 0..retries.max(1) {
        let mut free = vec![false; n];
        for &v in pool {
            free[v] = true;
        }
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        rng.shuffle(&mut order);
        let mut paths: Vec<Option<Vec<usize>>> = vec![None; pairs.len()];
        let mut done = 0;
        let mut stuck = false;
        for &i in &order {
            let (s, t) = pairs[i];
            let mut found = route(s, t, inner, host, &free, rng);
            let mut repairs = 0;
            while found.is_none() && repairs < 50 * inner {
                repairs += 1;
                swap_one(&mut paths, pairs, &mut free, host, rng);
                found = route(s, t, inner, host, &free, rng);
            }
            match found {
                Some(p) => {
                    for &v in &p {
                        free[v] = false;
                    }
                    paths[i] = Some(p);
                    done += 1;
                }
                None => {
                    stuck = true;
                    break;
                }
            }
        }
        best = best.max(done);
        if !stuck {
            return Ok(paths.into_iter().map(|p| p.expect("all routed")).collect());
        }
    }
    Err(BarePathFailure { completed: best, requested: pairs.len() })
}

/// Randomized DFS for `s, u_1, .., u_inner, t` with free interior vertices.
fn route(s: usize, t: usize, inner: usize, host: &Graph, free: &[bool], rng: &mut Rng) -> Option<Vec<usize>> {
    let mut path = Vec::with_capacity(inner);
    let mut budget = PATH_DFS_BUDGET;
    let mut used = std::collections::HashSet::new();
    fn rec(
        at: usize,
        t: usize,
        inner: usize,
        host: &Graph,
        free: &[bool],
        path: &mut Vec<usize>,
        used: &mut std::collections::HashSet<usize>,
        budget: &mut usize,
        rng: &mut Rng,
    ) -> bool {
        if path.len() == inner {
            return host.has_edge(at, t);
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let last = path.len() + 1 == inner;
        let mut cand: Vec<usize> =
            host.neighbors(at).iter().map(|&u| u as usize).filter(|&u| free[u] && !used.contains(&u) && (!last || host.has_edge(u, t))).collect();
        rng.shuffle(&mut cand);
        for u in cand {
            path.push(u);
            used.insert(u);
            if rec(u, t, inner, host, free, path, used, budget, rng) {
                return true;
            }
            used.remove(&u);
            path.pop();
        }
        false
    }
    rec(s, t, inner, host, free, &mut path, &mut used, &mut budget, rng).then_some(path)
}

/// Replaces one interior vertex of a random finished path by a free vertex fitting its position.
fn swap_one(paths: &mut [Option<Vec<usize>>], pairs: &[(usize, usize)], free: &mut [bool], host: &Graph, rng: &mut Rng) {
    let built: Vec<usize> = (0..paths.len()).filter(|&i| paths[i].is_some()).collect();
    if built.is_empty() {
        return;
    }
    let i = built[rng.below(built.len())];
    let p = paths[i].as_mut().expect("built");
    let pos = rng.below(p.len());
    let before = if pos == 0 { pairs[i].0 } else { p[pos - 1] };
    let after = if pos + 1 == p.len() { pairs[i].1 } else { p[pos + 1] };
    let cand: Vec<usize> = host.neighbors(before).iter().map(|&u| u as usize).filter(|&u| free[u] && host.has_edge(u, after)).collect();
    if cand.is_empty() {
        return;
    }
    let w = cand[rng.below(cand.len())];
    free[p[pos]] = true;
    free[w] = false;
    p[pos] = w;
}

/// One row of [`check_injection_distribution`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InjectionRow {
    /// Index of the weight function.
    pub f_index: usize,
    /// Index of the set.
    pub set_index: usize,
    /// `|B| ||f||_1 / |V|`.
    pub predicted: f64,
    /// Empirical mean of `sum_{sigma(u) in B} f(u)`.
    pub mean: f64,
    /// Fraction of trials outside `predicted +- eps sqrt(w |V| ||f||_inf)`.
    pub violation_rate: f64,
}

/// Samples uniformly random injections `U -> V` and compares the weight that
/// lands in every set with its expectation.
pub fn check_injection_distribution(
    u_len: usize,
    v_len: usize,
    weights: &[Vec<f64>],
    w: &[f64],
    sets: &[Vec<usize>],
    eps: f64,
    trials: usize,
    rng: &mut Rng,
) -> Result<Vec<InjectionRow>> {
    if u_len > v_len {
        return Err(Error::Precondition(format!("|U| = {u_len} exceeds |V| = {v_len}")));
    }
    let mut membership = vec![Vec::new(); v_len];
    for (b, s) in sets.iter().enumerate() {
        for &v in s {
            membership[v].push(b);
        }
    }
    let mut sums = vec![vec![0.0f64; sets.len()]; weights.len()];
    let mut viol = vec![vec![0usize; sets.len()]; weights.len()];
    let predicted: Vec<Vec<f64>> = weights
        .iter()
        .map(|f| {
            let l1: f64 = f.iter().sum();
            sets.iter().map(|s| s.len() as f64 * l1 / v_len as f64).collect()
        })
        .collect();
    let windows: Vec<f64> = weights
        .iter()
        .zip(w)
        .map(|(f, &wi)| {
            let inf = f.iter().cloned().fold(0.0, f64::max);
            eps * (wi * v_len as f64 * inf).sqrt()
        })
        .collect();
    let mut acc = vec![0.0f64; sets.len()];
    for _ in 0..trials {
        let image = rng.sample_indices(v_len, u_len);
        for (fi, f) in weights.iter().enumerate() {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (u, &v) in image.iter().enumerate() {
                if f[u] != 0.0 {
                    for &b in &membership[v] {
                        acc[b] += f[u];
                    }
                }
            }
            for b in 0..sets.len() {
                sums[fi][b] += acc[b];
                if (acc[b] - predicted[fi][b]).abs() > windows[fi] {
                    viol[fi][b] += 1;
                }
            }
        }
    }
    let mut rows = Vec::new();
    for fi in 0..weights.len() {
        for b in 0..sets.len() {
            rows.push(InjectionRow {
                f_index: fi,
                set_index: b,
                predicted: predicted[fi][b],
                mean: sums[fi][b] / trials.max(1) as f64,
                violation_rate: viol[fi][b] as f64 / trials.max(1) as f64,
            });
        }
    }
    Ok(rows)
}

/// Maximum matching size used by tests as an independent feasibility oracle.
pub fn max_matching_size(g: &Bipartite) -> usize {
    hopcroft_karp(g, None).size()
}
