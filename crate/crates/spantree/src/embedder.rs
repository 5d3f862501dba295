//! The staged embedding of a spanning tree into a dense graph plus random
//! graphs: slice planning, rounds of random-graph and matching steps, the
//! final round, the reductions for trees with few heavy leaves, and an
//! independent validity checker.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::assignment::{assign, ClusterAssignment, NONE};
use crate::decomposition::{decompose, CaseTag, Home, Stratum, TreeDecomposition};
use crate::error::{Error, Result};
use crate::graph::{gen_coloured_layers, thin_colours, BipartiteView, Graph};
use crate::host::{bar, build_host_partition, HostPartition};
use crate::params::ParamSet;
use crate::primitives::{
    bare_paths_embed, forest_order, light_leaves_embed, random_forest_embed, star_forest_embed_balanced, star_forest_embed_greedy,
    PartialEmbedding, Star, TrackedSetFamily,
};
use crate::regularity::{irregularity_graph, IrregularityGraph};
use crate::report::{Report, Status};
use crate::rng::{mix64, Rng};
use crate::tree::{classify_leaves_with, find_bare_paths, RootedTree};

/// Run-level options of [`embed_tree`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbedConfig {
    /// Whole-pipeline attempts, each with fresh random graphs.
    pub retries: usize,
    /// Abort when a probabilistic window fails even with slack.
    pub strict_windows: bool,
    /// Compute irregularity graphs and the conditions that use them.
    pub j_checks: bool,
    /// Resamples of the slice partition while searching for `(V2)`.
    pub v2_resamples: usize,
    /// Minimum slice size of the balanced star-forest embedding.
    pub min_slice: usize,
    /// Restarts of the bare-path search.
    pub path_retries: usize,
    /// Key of the random-graph layers; attempt `a` uses `mix(key, a)`.
    pub r_key: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig { retries: 3, strict_windows: false, j_checks: true, v2_resamples: 5, min_slice: 32, path_retries: 20, r_key: 0x5eed }
    }
}

/// Where the random graphs come from.
#[derive(Clone, Copy, Debug)]
pub enum RSource<'a> {
    /// Sample `G(n, r_density)` and thin it into layers.
    Sample,
    /// Use the given graph, thinned uniformly into layers.
    Given(&'a Graph),
}

/// Layout of the slices of one cluster for a decomposition with `levels` levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SliceLayout {
    /// Number of colour-2 levels `L`.
    pub levels: usize,
}

impl SliceLayout {
    /// Slices per cluster: `V_l` and `V'_l` for `l = 0..=L+1`, `V-hat_l` for `l = 1..=L`, and the residual.
    pub fn count(&self) -> usize {
        3 * self.levels + 5
    }

    /// Local index of `V_{ih,l}`.
    pub fn main(&self, l: usize) -> usize {
        l
    }

    /// Local index of `V'_{ih,l}`.
    pub fn prime(&self, l: usize) -> usize {
        self.levels + 2 + l
    }

    /// Local index of `V-hat_{ih,l}` (`l >= 1`).
    pub fn hat(&self, l: usize) -> usize {
        2 * self.levels + 3 + l
    }

    /// Local index of the residual slice `V_{ih,k+2}`.
    pub fn residual(&self) -> usize {
        3 * self.levels + 4
    }

    /// Number of slices that carry a `mu n_ih` buffer.
    pub fn buffered(&self) -> usize {
        3 * self.levels + 4
    }

    /// Human-readable slice name.
    pub fn name(&self, local: usize) -> String {
        let l = self.levels;
        if local <= l + 1 {
            format!("V{local}")
        } else if local <= 2 * l + 3 {
            format!("V'{}", local - l - 2)
        } else if local < self.residual() {
            format!("Vhat{}", local - 2 * l - 3)
        } else {
            "Vres".into()
        }
    }
}

/// Random partition of every cluster into slices.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingPlan {
    /// Slice layout.
    pub layout: SliceLayout,
    /// `floor(mu n_ih)` per cluster.
    pub buffer: Vec<usize>,
    /// Slice sizes, indexed by cluster then local slice.
    pub sizes: Vec<Vec<usize>>,
    /// Slice members (sorted), indexed by cluster then local slice.
    pub members: Vec<Vec<Vec<usize>>>,
    /// Global slice id `c * count + local` of every host vertex.
    pub slice_of: Vec<u32>,
    /// Partitions drawn while searching for `(V2)`.
    pub resamples: usize,
    /// Largest `(V2)` deviation of the chosen partition.
    pub worst_v2: f64,
}

impl EmbeddingPlan {
    /// Global id of a slice.
    pub fn id(&self, c: usize, local: usize) -> u32 {
        (c * self.layout.count() + local) as u32
    }
}

/// Irregularity graphs of the clusters and the position of every host vertex in its cluster.
#[derive(Clone, Debug)]
pub struct HostExtras {
    /// `J_ih` over `V_ih` (present when irregularity checks are enabled).
    pub j: Vec<Option<IrregularityGraph>>,
    /// Position of every host vertex inside its cluster.
    pub pos: Vec<usize>,
}

impl HostExtras {
    /// Builds the extras, computing irregularity graphs when `with_j` is set.
    pub fn new(host: &HostPartition, params: &ParamSet, with_j: bool) -> Result<HostExtras> {
        let mut pos = vec![usize::MAX; host.n()];
        for cl in &host.clusters {
            for (i, &v) in cl.iter().enumerate() {
                pos[v] = i;
            }
        }
        let mut j = Vec::with_capacity(host.clusters.len());
        for c in 0..host.clusters.len() {
            if with_j {
                let view = BipartiteView::new(&host.g_prime, host.clusters[c].clone(), host.clusters[bar(c)].clone())?;
                j.push(Some(irregularity_graph(&view, host.density_of(c), params.eps())?));
            } else {
                j.push(None);
            }
        }
        Ok(HostExtras { j, pos })
    }
}

/// Per-vertex weights `g_1..g_6`, the set `X'` and their cluster aggregates.
#[derive(Clone, Debug, Serialize)]
pub struct RoundState {
    /// `g_j(x)` indexed by `j - 1`, then vertex.
    pub g: Vec<Vec<u64>>,
    /// Membership in `X'`.
    pub x_prime: Vec<bool>,
    /// `m^{j,l}_ih` indexed by level, cluster, `j - 1`.
    pub m: Vec<Vec<[u64; 6]>>,
    /// `m-hat^{j,l}_ih` indexed by level, cluster, `j - 1`.
    pub m_hat: Vec<Vec<[u64; 6]>>,
}

/// Computes the `g` tables, `X'` and the aggregates, asserting the counting identities.
pub fn round_state(t: &RootedTree, dec: &TreeDecomposition, ca: &ClusterAssignment, params: &ParamSet, report: &mut Report) -> Result<RoundState> {
    let n = t.n();
    let parts = ca.parts();
    let lv = dec.levels + 2;
    let fprime_kids = |x: usize| t.children(x).iter().map(|&c| c as usize).filter(move |&c| matches!(dec.stratum[c], Some(Stratum::FPrime(_))));
    let lambda_count = |x: usize| t.children(x).iter().filter(|&&c| dec.stratum[c as usize] == Some(Stratum::Lambda)).count() as u64;
    let mut g = vec![vec![0u64; n]; 6];
    let mut x_prime = vec![false; n];
    let nf = n as f64;
    let xp_threshold = nf / (params.m_big * nf.ln().max(1.0));
    for x in 0..n {
        g[0][x] = fprime_kids(x).count() as u64;
        g[1][x] = lambda_count(x);
        let a: u64 = fprime_kids(x).map(|y| fprime_kids(y).count() as u64).sum();
        let b: u64 = fprime_kids(x).map(lambda_count).sum();
        if matches!(dec.home[x], Home::F(_)) && (a + b) as f64 >= xp_threshold {
            x_prime[x] = true;
        }
        let (ja, jb) = if x_prime[x] { (4, 5) } else { (2, 3) };
        g[ja][x] = a;
        g[jb][x] = b;
    }
    let mut m = vec![vec![[0u64; 6]; parts]; lv];
    let mut m_hat = vec![vec![[0u64; 6]; parts]; lv];
    for x in 0..n {
        let c = ca.cluster[x];
        if c == NONE {
            continue;
        }
        let slot = match dec.home[x] {
            Home::F(l) => Some((&mut m, l)),
            Home::FPrimeLeaf(l) => Some((&mut m_hat, l)),
            _ => None,
        };
        if let Some((table, l)) = slot {
            for j in 0..6 {
                table[l][c][j] += g[j][x];
            }
        }
    }
    let xp = x_prime.iter().filter(|&&b| b).count();
    report.upper("Xprime", 0, NONE, xp as f64, params.m_big * nf.ln(), params.slack);
    let mut ok = true;
    for c in 0..parts {
        let cb = bar(c);
        for l in 1..lv {
            for j in 0..2 {
                let lhs = m[l][cb][j + 2] + m[l][cb][j + 4] + m_hat[l - 1][cb][j + 2];
                ok &= lhs == m_hat[l][c][j];
            }
        }
        let lhs: u64 = (0..lv).map(|l| m[l][cb][1] + m_hat[l][cb][1]).sum();
        let lam = (0..n).filter(|&v| ca.cluster[v] == c && dec.stratum[v] == Some(Stratum::Lambda)).count() as u64;
        ok &= lhs == lam;
    }
    report.exact("m-g-identities", 0, NONE, ok);
    if !ok {
        return Err(Error::Invariant("bookkeeping identities between m and m-hat fail".into()));
    }
    Ok(RoundState { g, x_prime, m, m_hat })
}

/// Samples the slice partition, retrying to improve the `(V2)` deviation.
pub fn plan_slices(
    t: &RootedTree,
    dec: &TreeDecomposition,
    ca: &ClusterAssignment,
    host: &HostPartition,
    extras: &HostExtras,
    params: &ParamSet,
    cfg: &EmbedConfig,
    report: &mut Report,
    rng: &mut Rng,
) -> Result<EmbeddingPlan> {
    let layout = SliceLayout { levels: dec.levels };
    let parts = ca.parts();
    let s_count = layout.count();
    let n = t.n();
    let mut sizes = vec![vec![0usize; s_count]; parts];
    let mut buffer = vec![0usize; parts];
    for c in 0..parts {
        buffer[c] = (params.mu * ca.n_c[c] as f64).floor() as usize;
    }
    for x in 0..n {
        let c = ca.target(x);
        match dec.home[x] {
            Home::Root => sizes[c][layout.main(0)] += 1,
            Home::F(l) => sizes[c][layout.main(l)] += 1,
            Home::FPrimeLeaf(l) => sizes[c][layout.hat(l)] += 1,
            _ => {}
        }
    }
    for c in 0..parts {
        for local in 0..layout.residual() {
            sizes[c][local] += buffer[c];
        }
        let used: usize = sizes[c][..layout.residual()].iter().sum();
        if used > ca.n_c[c] {
            return Err(Error::stage(
                "plan",
                format!("cluster {c}: slices need {used} vertices but the cluster has {}; residual would be negative", ca.n_c[c]),
            ));
        }
        sizes[c][layout.residual()] = ca.n_c[c] - used;
        let eta3 = params.eta.powi(3) * ca.n_c[c] as f64;
        report.lower("nres", 0, c, sizes[c][layout.residual()] as f64, eta3, 0.0, 1.0);
        let total: usize = sizes[c].iter().sum();
        report.exact("slice-sum", 0, c, total == ca.n_c[c]);
        if total != ca.n_c[c] {
            return Err(Error::Invariant(format!("slice sizes of cluster {c} do not sum to n_ih")));
        }
    }

    let mut best: Option<(f64, Vec<Vec<Vec<usize>>>)> = None;
    let mut resamples = 0;
    let tol = params.eps().powi(2);
    for _ in 0..cfg.v2_resamples.max(1) {
        resamples += 1;
        let mut members = Vec::with_capacity(parts);
        for c in 0..parts {
            let mut vs = host.clusters[c].clone();
            rng.shuffle(&mut vs);
            let mut out = Vec::with_capacity(s_count);
            let mut at = 0;
            for &sz in &sizes[c] {
                let mut sl = vs[at..at + sz].to_vec();
                sl.sort_unstable();
                out.push(sl);
                at += sz;
            }
            members.push(out);
        }
        let dev = v2_deviation(&members, &sizes, host, extras, rng);
        let better = best.as_ref().is_none_or(|(d, _)| dev < *d);
        if better {
            best = Some((dev, members));
        }
        if best.as_ref().expect("set").0 <= tol * host.clusters.iter().map(|c| c.len()).min().unwrap_or(0) as f64 {
            break;
        }
    }
    let (worst, members) = best.expect("at least one partition");
    let mut worst_rel = 0.0f64;
    for c in 0..parts {
        worst_rel = worst_rel.max(worst / (tol * ca.n_c[c] as f64).max(f64::MIN_POSITIVE));
    }
    let st = report.upper("V2", 0, NONE, worst, tol * ca.n_c.iter().copied().min().unwrap_or(0) as f64, params.slack);
    if st == Status::Fail && cfg.strict_windows {
        return Err(Error::stage("plan", format!("(V2) deviation {worst:.1} exceeds the window after {resamples} partitions")));
    }
    let mut slice_of = vec![u32::MAX; n];
    for c in 0..parts {
        for (local, sl) in members[c].iter().enumerate() {
            for &v in sl {
                slice_of[v] = (c * s_count + local) as u32;
            }
        }
    }
    Ok(EmbeddingPlan { layout, buffer, sizes, members, slice_of, resamples, worst_v2: worst })
}

/// Largest deviation `| |S cap B| - |S||B|/n_ih |` over slices `S` and tracked sets `B`.
fn v2_deviation(members: &[Vec<Vec<usize>>], sizes: &[Vec<usize>], host: &HostPartition, extras: &HostExtras, rng: &mut Rng) -> f64 {
    let n = host.n();
    let parts = members.len();
    let mut local = vec![u32::MAX; n];
    for c in 0..parts {
        for (s, sl) in members[c].iter().enumerate() {
            for &v in sl {
                local[v] = s as u32;
            }
        }
    }
    let mut worst = 0.0f64;
    let mut counts = vec![0usize; sizes.first().map_or(0, |s| s.len())];
    let mut eval = |set: &mut dyn Iterator<Item = usize>, c: usize, counts: &mut Vec<usize>| {
        counts.iter_mut().for_each(|x| *x = 0);
        let mut total = 0;
        for v in set {
            counts[local[v] as usize] += 1;
            total += 1;
        }
        let nc = host.clusters[c].len() as f64;
        for (s, &sz) in sizes[c].iter().enumerate() {
            let dev = (counts[s] as f64 - sz as f64 * total as f64 / nc).abs();
            worst = worst.max(dev);
        }
    };
    for c in 0..parts {
        let cb = bar(c);
        // B_ih: G'-neighbourhoods of the partner cluster's vertices.
        for &u in &host.clusters[cb] {
            eval(&mut host.g_prime.neighbors(u).iter().map(|&v| v as usize), c, &mut counts);
        }
        // B'_ih: irregularity neighbourhoods.
        if let Some(j) = &extras.j[c] {
            for i in 0..j.vertices.len() {
                eval(&mut j.adj[i].ones().map(|q| j.vertices[q]), c, &mut counts);
            }
        }
        // B''_ih: common neighbourhoods of a sample of partner pairs.
        let m = host.clusters[cb].len();
        if m >= 2 {
            for _ in 0..64 {
                let a = host.clusters[cb][rng.below(m)];
                let b = host.clusters[cb][rng.below(m)];
                if a == b {
                    continue;
                }
                let g = &host.g_prime;
                eval(&mut g.neighbors(a).iter().map(|&v| v as usize).filter(|&v| g.has_edge(b, v)), c, &mut counts);
            }
        }
    }
    worst
}

/// Which host graph an edge of the tree must use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Designation {
    /// The random graphs `R_1, R_2, ...`.
    Random,
    /// The dense graph `G'`.
    Dense,
}

/// Summary of a passed validity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidityCertificate {
    /// Tree edges verified in the dense graph.
    pub dense_edges: usize,
    /// Tree edges verified in the random graphs.
    pub random_edges: usize,
    /// Whether the map is a bijection onto the host.
    pub bijective: bool,
}

/// Independently verifies injectivity and that every tree edge lies in its designated host graph.
pub fn check_embedding(
    t: &RootedTree,
    phi: &[usize],
    dense: &Graph,
    random: &[Graph],
    designation: &[Option<Designation>],
) -> std::result::Result<ValidityCertificate, String> {
    let n = t.n();
    if phi.len() != n {
        return Err(format!("map has {} entries for {n} tree vertices", phi.len()));
    }
    let host_n = dense.n();
    let mut seen = vec![false; host_n];
    for (x, &v) in phi.iter().enumerate() {
        if v >= host_n {
            return Err(format!("vertex {x} maps outside the host"));
        }
        if seen[v] {
            return Err(format!("host vertex {v} is used twice"));
        }
        seen[v] = true;
    }
    let (mut de, mut re) = (0, 0);
    for (p, c) in t.edges() {
        let (a, b) = (phi[p], phi[c]);
        match designation[c] {
            Some(Designation::Dense) => {
                if !dense.has_edge(a, b) {
                    return Err(format!("edge {p}-{c} should use the dense graph but {a}-{b} is not an edge"));
                }
                de += 1;
            }
            Some(Designation::Random) => {
                if !random.iter().any(|r| r.has_edge(a, b)) {
                    return Err(format!("edge {p}-{c} should use a random graph but {a}-{b} is not an edge"));
                }
                re += 1;
            }
            None => return Err(format!("edge {p}-{c} has no designated host")),
        }
    }
    Ok(ValidityCertificate { dense_edges: de, random_edges: re, bijective: n == host_n })
}

/// How to undo a few-heavy-leaf reduction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Restoration {
    /// Removed light leaves with their parents; the same ids carry the artificial leaves.
    LightLeaves {
        /// `(leaf, parent)` pairs.
        removed: Vec<(usize, usize)>,
    },
    /// Excised bare paths `(s, t, interior from s to t)`; the interior ids carry the artificial leaves.
    BarePaths {
        /// Paths with `s` an ancestor of `t`.
        paths: Vec<(usize, usize, Vec<usize>)>,
    },
}

/// Output of [`reduce_few_heavy`].
#[derive(Clone, Debug, Serialize)]
pub struct Reduction {
    /// The modified tree `T*` on the same vertex ids.
    #[serde(skip)]
    pub tree: RootedTree,
    /// Case of the original tree.
    pub case: CaseTag,
    /// Recipe to restore the original tree.
    pub restoration: Restoration,
    /// Sizes of the artificial leaf groups.
    pub group_sizes: Vec<usize>,
    /// Vertices carrying the groups.
    pub group_centres: Vec<usize>,
}

/// Splits `total` into `groups` parts whose sizes differ by at most one.
fn even_sizes(total: usize, groups: usize) -> Vec<usize> {
    (0..groups).map(|j| total / groups + usize::from(j < total % groups)).collect()
}

/// Turns a tree with few heavy leaves into one with many: Case A swaps light
/// leaves for stars of artificial heavy leaves, Case B replaces the interiors
/// of bare paths by edges and artificial heavy stars.
pub fn reduce_few_heavy(t: &RootedTree, dec: &TreeDecomposition, params: &ParamSet, rng: &mut Rng) -> Result<Reduction> {
    let n = t.n();
    let root = t.root();
    let thr = params.heavy_threshold();
    let eta_n = params.eta * n as f64;
    let mut parent: Vec<Option<usize>> = (0..n).map(|v| t.parent(v)).collect();
    let (restoration, group_sizes, group_centres) = match dec.case {
        CaseTag::FewHeavyCaseA => {
            let want = (4.0 * eta_n).ceil() as usize;
            let light: Vec<usize> = classify_leaves_with(t, thr).light.into_iter().filter(|&v| v != root).collect();
            if light.len() < want {
                return Err(Error::stage("reduction", format!("case A needs {want} light leaves, found {}", light.len())));
            }
            let pick = rng.sample_indices(light.len(), want);
            let mut removed: Vec<(usize, usize)> = pick.iter().map(|&i| (light[i], t.parent(light[i]).expect("leaf"))).collect();
            removed.sort_unstable();
            let mut gone = vec![false; n];
            for &(x, _) in &removed {
                gone[x] = true;
            }
            let mut deg = vec![0usize; n];
            for v in 0..n {
                if let Some(p) = parent[v] {
                    if !gone[v] {
                        deg[v] += 1;
                        deg[p] += 1;
                    }
                }
            }
            let size0 = (2.0 * thr).ceil().max(1.0) as usize;
            let groups = (want / size0).max(1);
            let sizes = even_sizes(want, groups);
            let mut cands: Vec<usize> = (0..n).filter(|&v| !gone[v] && v != root && deg[v] <= 2).collect();
            if cands.len() < groups {
                return Err(Error::stage("reduction", format!("case A needs {groups} vertices of degree at most 2, found {}", cands.len())));
            }
            rng.shuffle(&mut cands);
            let centres: Vec<usize> = cands[..groups].to_vec();
            for (&y, &s) in centres.iter().zip(&sizes) {
                if deg[y] + s > params.delta_max {
                    return Err(Error::stage("reduction", format!("artificial star at {y} would reach degree {}", deg[y] + s)));
                }
            }
            let mut it = removed.iter().map(|&(x, _)| x);
            for (&y, &s) in centres.iter().zip(&sizes) {
                for _ in 0..s {
                    parent[it.next().expect("enough removed leaves")] = Some(y);
                }
            }
            (Restoration::LightLeaves { removed }, sizes, centres)
        }
        CaseTag::FewHeavyCaseB => {
            let k = params.k;
            let want = (2.0 * eta_n).ceil() as usize;
            let all = find_bare_paths(t, k + 3)?;
            if all.len() < want {
                return Err(Error::stage("reduction", format!("case B needs {want} bare paths on {} vertices, found {}", k + 3, all.len())));
            }
            let pick = rng.sample_indices(all.len(), want);
            let mut paths = Vec::with_capacity(want);
            for &i in &pick {
                let mut p = all[i].clone();
                if t.depth(p[0]) > t.depth(p[p.len() - 1]) {
                    p.reverse();
                }
                let s = p[0];
                let e = p[p.len() - 1];
                paths.push((s, e, p[1..p.len() - 1].to_vec()));
            }
            paths.sort_unstable();
            let total = (k + 1) * want;
            let size0 = ((k + 1) as f64 * thr).ceil().max(1.0) as usize;
            let groups = (total / size0).clamp(1, want);
            let sizes = even_sizes(total, groups);
            let centres: Vec<usize> = paths[..groups].iter().map(|p| p.0).collect();
            for &s in &sizes {
                if 2 + s > params.delta_max {
                    return Err(Error::stage("reduction", format!("artificial star of size {s} exceeds the degree bound")));
                }
            }
            for (s, e, _) in &paths {
                parent[*e] = Some(*s);
            }
            let mut it = paths.iter().flat_map(|p| p.2.iter().copied());
            for (&y, &s) in centres.iter().zip(&sizes) {
                for _ in 0..s {
                    parent[it.next().expect("enough interiors")] = Some(y);
                }
            }
            (Restoration::BarePaths { paths }, sizes, centres)
        }
        other => return Err(Error::Precondition(format!("reduction applies to few-heavy cases, got {}", other.name()))),
    };
    let tree = RootedTree::from_parents(&parent)?;
    if tree.max_degree() > params.delta_max {
        return Err(Error::stage("reduction", format!("reduced tree has maximum degree {}", tree.max_degree())));
    }
    let heavy = classify_leaves_with(&tree, thr).heavy.len();
    if (heavy as f64) < 4.0 * eta_n {
        return Err(Error::stage("reduction", format!("reduced tree has only {heavy} heavy leaves")));
    }
    Ok(Reduction { tree, case: dec.case, restoration, group_sizes, group_centres })
}

/// Exact counting ledger of a successful run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CountLedger {
    /// `(L2)`: every cluster receives exactly `n_ih` vertices.
    pub l2: bool,
    /// Slice sizes sum to `n_ih` with the residual as defined.
    pub slice_sum: bool,
    /// The `m`/`m-hat` identities.
    pub m_g_identity: bool,
    /// `sum m^2 + sum m-hat^2 = |X_ih cap Lambda*|`.
    pub g_sum: bool,
    /// `|V-bullet_ih|` equals the remaining `Lambda*` demand and every cluster is filled.
    pub exact_fill: bool,
}

impl CountLedger {
    /// Whether every identity holds.
    pub fn all(&self) -> bool {
        self.l2 && self.slice_sum && self.m_g_identity && self.g_sum && self.exact_fill
    }
}

/// Result of [`embed_tree`].
#[derive(Clone, Debug, Serialize)]
pub struct EmbedResult {
    /// Whether an embedding was found and verified.
    pub success: bool,
    /// The embedding `phi(x)` on success.
    pub phi: Option<Vec<usize>>,
    /// Case of the input tree (when the decomposition ran).
    pub case: Option<String>,
    /// Stage of the last failure.
    pub failure_stage: Option<String>,
    /// Message of the last failure.
    pub failure_reason: Option<String>,
    /// Attempts made.
    pub attempts: usize,
    /// Failures per stage over all attempts.
    pub stage_histogram: BTreeMap<String, usize>,
    /// Conditions of the last attempt.
    pub report: Report,
    /// Counting identities of the successful attempt.
    pub ledger: Option<CountLedger>,
    /// Validity certificate of the successful attempt.
    pub certificate: Option<ValidityCertificate>,
    /// Wall time per stage of the last attempt, in milliseconds.
    pub timings: Vec<(String, f64)>,
    /// Seed of the run.
    pub seed: u64,
    /// Edge probability of the union of the random graphs.
    pub r_density: f64,
}

/// A successful attempt.
struct Success {
    phi: Vec<usize>,
    designation: Vec<Option<Designation>>,
    layers: Vec<Graph>,
    g_prime: Graph,
    ledger: CountLedger,
}

/// Mutable state of one many-heavy pipeline run.
struct Pipeline<'a> {
    t: &'a RootedTree,
    dec: &'a TreeDecomposition,
    ca: &'a ClusterAssignment,
    host: &'a HostPartition,
    layers: &'a [Graph],
    params: &'a ParamSet,
    cfg: &'a EmbedConfig,
    extras: &'a HostExtras,
    plan: &'a EmbeddingPlan,
    state: &'a RoundState,
    phi: PartialEmbedding,
    report: Report,
    dtilde1: Vec<Vec<usize>>,
}

impl Pipeline<'_> {
    fn window(&self, st: Status, stage: &str, what: &str) -> Result<()> {
        if st == Status::Fail && self.cfg.strict_windows {
            Err(Error::stage(stage, format!("window {what} fails")))
        } else {
            Ok(())
        }
    }

    fn embed_root(&mut self, rng: &mut Rng) -> Result<()> {
        let x1 = self.t.root();
        let c = self.ca.target(x1);
        let sl = &self.plan.members[c][self.plan.layout.main(0)];
        let v = sl[rng.below(sl.len())];
        self.phi.map(x1, v)
    }

    /// Step l.1: the interior vertices of `F_l` go into `R_l`.
    fn step1(&mut self, l: usize, rng: &mut Rng) -> Result<()> {
        let t = self.t;
        let n = t.n();
        let stage = format!("step{l}.1");
        let layout = self.plan.layout;
        let in_forest: Vec<bool> = (0..n).map(|v| self.dec.home[v] == Home::F(l)).collect();
        let order = forest_order(t, &in_forest, &self.state.x_prime);
        if order.is_empty() {
            return self.phi3(l);
        }
        let mut want = vec![u32::MAX; n];
        for &x in &order {
            let c = self.ca.target(x);
            let local = if self.state.x_prime[x] { layout.prime(l) } else { layout.main(l) };
            want[x] = self.plan.id(c, local);
        }
        let layer = &self.layers[l - 1];
        let (inner, deferred): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&x| !t.is_childless(x));
        let tracked_any = inner.iter().any(|&x| self.state.x_prime[x]);
        let mut family = if tracked_any { self.tracked_family(l) } else { None };
        let exceptional =
            random_forest_embed(t, &inner, &want, &self.plan.slice_of, layer, &mut self.phi, family.as_mut(), &stage, rng)?;
        if let Some(fam) = &family {
            let bound = 2f64.powf(-self.params.w_star) * n as f64;
            let st = self.report.upper("B2", l, NONE, exceptional.len() as f64, bound.max(fam.sets.len() as f64 * 0.0), self.params.slack);
            self.window(st, &stage, "B2")?;
        }
        self.match_leaves(&deferred, &want, layer, &stage, rng)?;
        self.phi3(l)
    }

    /// Tracked family `{B cap V'_{ih,l}}` over irregularity neighbourhoods, weight `(r / 2tn)(g_5 + g_6)`.
    fn tracked_family(&self, l: usize) -> Option<TrackedSetFamily> {
        let n = self.t.n();
        let mut sets = Vec::new();
        for c in 0..self.ca.parts() {
            let j = self.extras.j[c].as_ref()?;
            let prime = &self.plan.members[c][self.plan.layout.prime(l)];
            let mut in_prime = vec![false; j.vertices.len()];
            for &v in prime {
                in_prime[self.extras.pos[v]] = true;
            }
            for i in 0..j.vertices.len() {
                let s: Vec<usize> = j.adj[i].ones().filter(|&q| in_prime[q]).map(|q| j.vertices[q]).collect();
                if !s.is_empty() {
                    sets.push(s);
                }
            }
        }
        let scale = self.ca.r as f64 / (2.0 * self.params.t * n as f64);
        let weight: Vec<f64> = (0..n).map(|x| scale * (self.state.g[4][x] + self.state.g[5][x]) as f64).collect();
        Some(TrackedSetFamily::new(sets, weight, self.params.eps().sqrt(), self.host.n()))
    }

    /// Embeds childless forest vertices by one b-matching per target slice.
    fn match_leaves(&mut self, leaves: &[usize], want: &[u32], layer: &Graph, stage: &str, rng: &mut Rng) -> Result<()> {
        let mut by_slice: BTreeMap<u32, BTreeMap<usize, Vec<usize>>> = BTreeMap::new();
        for &x in leaves {
            let p = self.t.parent(x).expect("non-root");
            by_slice.entry(want[x]).or_default().entry(p).or_default().push(x);
        }
        let s_count = self.plan.layout.count();
        for (sid, groups) in by_slice {
            let (c, local) = (sid as usize / s_count, sid as usize % s_count);
            let pool: Vec<usize> = self.plan.members[c][local].iter().copied().filter(|&v| !self.phi.is_used(v)).collect();
            self.match_groups(&groups, &pool, layer, stage, rng)?;
        }
        Ok(())
    }

    /// Gives every parent in `groups` distinct pool vertices adjacent to its image in `layer`.
    fn match_groups(&mut self, groups: &BTreeMap<usize, Vec<usize>>, pool: &[usize], layer: &Graph, stage: &str, rng: &mut Rng) -> Result<()> {
        let centres: Vec<(usize, usize)> = groups
            .iter()
            .map(|(&p, kids)| Ok((self.phi.get(p).ok_or_else(|| Error::Invariant(format!("parent {p} not embedded")))?, kids.len())))
            .collect::<Result<_>>()?;
        let assign = light_leaves_embed(&centres, pool, layer, rng).map_err(|cert| {
            Error::stage(stage, format!("leaf matching fails: {} parents need {} vertices but see {}", cert.left.len(), cert.demand, cert.neighbourhood.len()))
        })?;
        for ((_, kids), imgs) in groups.iter().zip(assign) {
            for (&x, v) in kids.iter().zip(imgs) {
                self.phi.map(x, v)?;
            }
        }
        Ok(())
    }

    /// Sums of `w` over `G'`-neighbourhoods: entry `u` for every host vertex.
    fn gprime_sums(&self, weights: &[(usize, f64)]) -> Vec<f64> {
        let mut s = vec![0.0; self.host.n()];
        for &(v, w) in weights {
            for &u in self.host.g_prime.neighbors(v) {
                s[u as usize] += w;
            }
        }
        s
    }

    /// Sums of `w` over `J_ih`-neighbourhoods inside cluster `c`.
    fn j_sums(&self, c: usize, weights: &[(usize, f64)]) -> Option<Vec<f64>> {
        let j = self.extras.j[c].as_ref()?;
        let mut s = vec![0.0; j.vertices.len()];
        for &(v, w) in weights {
            for q in j.adj[self.extras.pos[v]].ones() {
                s[q] += w;
            }
        }
        Some(s)
    }

    fn weights(&self, c: usize, home: Home, j: usize) -> Vec<(usize, f64)> {
        (0..self.t.n())
            .filter(|&x| self.ca.cluster[x] == c && self.dec.home[x] == home && self.state.g[j][x] > 0)
            .map(|x| (self.phi.get(x).expect("embedded"), self.state.g[j][x] as f64))
            .collect()
    }

    /// Deviation-set conditions after Step l.1.
    fn phi3(&mut self, l: usize) -> Result<()> {
        let stage = format!("step{l}.1");
        let eps = self.params.eps();
        let nu = self.params.nu;
        let small = 2f64.powf(-self.params.w_star) * self.t.n() as f64;
        for c in 0..self.ca.parts() {
            let nc = self.ca.n_c[c] as f64;
            let d = self.host.density_of(c);
            for j in 0..6 {
                let m = self.state.m[l][c][j] as f64;
                let w = self.weights(c, Home::F(l), j);
                let tau = match j {
                    0 | 1 => nu,
                    2 | 3 => eps,
                    _ => eps.powf(1.0 / 3.0),
                };
                let allowed = eps.sqrt() * m + tau * nc;
                if j < 2 {
                    let s = self.gprime_sums(&w);
                    let worst = self.host.clusters[bar(c)].iter().map(|&u| (s[u] - d * m).abs() / allowed).fold(0.0, f64::max);
                    let st = self.report.upper(&format!("Phi3.Ct{}", j + 1), l, c, worst, 1.0, self.params.slack);
                    self.window(st, &stage, "Phi3")?;
                }
                if let Some(s) = self.j_sums(c, &w) {
                    let st = if j < 4 {
                        let worst = s.iter().map(|&x| x / allowed).fold(0.0, f64::max);
                        self.report.upper(&format!("Phi3.C{}", j + 1), l, c, worst, 1.0, self.params.slack)
                    } else {
                        let count = s.iter().filter(|&&x| x > allowed).count();
                        self.report.upper(&format!("Phi3.C{}", j + 1), l, c, count as f64, small, self.params.slack)
                    };
                    self.window(st, &stage, "Phi3")?;
                }
            }
        }
        Ok(())
    }

    /// Step l.2: the leaves of `F'_l` go into `V-hat` through `G'` by a balanced star-forest embedding.
    fn step2(&mut self, l: usize, rng: &mut Rng) -> Result<()> {
        let stage = format!("step{l}.2");
        let t = self.t;
        let layout = self.plan.layout;
        let eps = self.params.eps();
        for c in 0..self.ca.parts() {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for x in 0..t.n() {
                if self.dec.home[x] == Home::FPrimeLeaf(l) && self.ca.target(x) == c {
                    groups.entry(t.parent(x).expect("non-root")).or_default().push(x);
                }
            }
            if groups.is_empty() {
                continue;
            }
            let trim = &self.dtilde1[bar(c)];
            let mut removed = vec![false; self.host.n()];
            for &u in trim {
                removed[u] = true;
            }
            let target: Vec<usize> =
                self.plan.members[c][layout.hat(l)].iter().copied().filter(|&v| !removed[v] && !self.phi.is_used(v)).collect();
            let stars: Vec<Star> = groups
                .iter()
                .map(|(&p, kids)| Star { centre: self.phi.get(p).expect("centre embedded"), leaves: kids.clone() })
                .collect();
            let leaves: usize = stars.iter().map(|s| s.leaves.len()).sum();
            if leaves > target.len() {
                return Err(Error::stage(&stage, format!("cluster {c}: {leaves} leaves but only {} target vertices", target.len())));
            }
            let d = self.host.density_of(c);
            let vlen = target.len() as f64;
            let mut in_target = vec![false; self.host.n()];
            for &v in &target {
                in_target[v] = true;
            }
            let worst = stars
                .iter()
                .map(|s| {
                    let deg = self.host.g_prime.neighbors(s.centre).iter().filter(|&&u| in_target[u as usize]).count() as f64;
                    (deg / vlen - d).abs() / eps
                })
                .fold(0.0, f64::max);
            let st = self.report.upper("A2.star", l, c, worst, 1.0, self.params.slack);
            self.window(st, &stage, "A2.star")?;
            let placed = star_forest_embed_balanced(&stars, &target, &self.host.g_prime, d, eps, self.cfg.min_slice, rng)
                .map_err(|f| Error::stage(&stage, format!("cluster {c}: slice {} has no perfect matching", f.slice)))?;
            for (x, v) in placed {
                self.phi.map(x, v)?;
            }
        }
        self.phi4(l)
    }

    /// Deviation-set conditions after Step l.2.
    fn phi4(&mut self, l: usize) -> Result<()> {
        let stage = format!("step{l}.2");
        let eps = self.params.eps();
        let eps_l = self.params.eps_chain.get(l).copied().unwrap_or(*self.params.eps_chain.last().expect("chain"));
        let small = 2f64.powf(-self.params.w_star) * self.t.n() as f64;
        let mut next = vec![Vec::new(); self.ca.parts()];
        for c in 0..self.ca.parts() {
            let nc = self.ca.n_c[c] as f64;
            let d = self.host.density_of(c);
            for j in 0..6 {
                let m = self.state.m_hat[l][c][j] as f64;
                let w = self.weights(c, Home::FPrimeLeaf(l), j);
                let allowed = eps.sqrt() * m + eps_l * nc;
                if j < 2 {
                    let s = self.gprime_sums(&w);
                    let dev: Vec<usize> =
                        self.host.clusters[bar(c)].iter().copied().filter(|&u| (s[u] - d * m).abs() > allowed).collect();
                    let st = self.report.upper(&format!("Phi4.Dt{}", j + 1), l, c, dev.len() as f64, small, self.params.slack);
                    self.window(st, &stage, "Phi4")?;
                    if j == 0 {
                        next[c] = dev;
                    }
                }
                if let Some(s) = self.j_sums(c, &w) {
                    let worst = s.iter().map(|&x| x / allowed).fold(0.0, f64::max);
                    let st = self.report.upper(&format!("Phi4.D{}", j + 1), l, c, worst, 1.0, self.params.slack);
                    self.window(st, &stage, "Phi4")?;
                }
            }
        }
        self.dtilde1 = next;
        Ok(())
    }

    /// Final round: `L_1 cup F°` into `R_{L+2}`, then `Lambda \ F°` by perfect matchings in `G'`.
    fn final_round(&mut self, rng: &mut Rng) -> Result<bool> {
        let t = self.t;
        let n = t.n();
        let cor = self.ca.correction.as_ref().expect("correction computed");
        let layer = &self.layers[self.plan.layout.levels + 1];
        let parts = self.ca.parts();
        let mut exact = true;
        for c in 0..parts {
            let circ: Vec<usize> = self.host.clusters[c].iter().copied().filter(|&v| !self.phi.is_used(v)).collect();
            let late = (0..n).filter(|&x| self.ca.target(x) == c && matches!(self.dec.home[x], Home::L1 | Home::Lambda)).count();
            let ok = circ.len() == late;
            self.report.exact("n-circ", 0, c, ok);
            if !ok {
                return Err(Error::Invariant(format!("cluster {c}: {} uncovered vertices but {late} leaves left", circ.len())));
            }
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for x in 0..n {
                let via_r = self.dec.home[x] == Home::L1 || cor.in_f_circ[x];
                if via_r && self.ca.target(x) == c {
                    groups.entry(t.parent(x).expect("leaf")).or_default().push(x);
                }
            }
            self.match_groups(&groups, &circ, layer, "final.R", rng)?;
            let bullet: Vec<usize> = circ.iter().copied().filter(|&v| !self.phi.is_used(v)).collect();
            let mut stars_map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for x in 0..n {
                if self.dec.home[x] == Home::Lambda && !cor.in_f_circ[x] && self.ca.target(x) == c {
                    stars_map.entry(t.parent(x).expect("leaf")).or_default().push(x);
                }
            }
            let demand: usize = stars_map.values().map(|v| v.len()).sum();
            let fill = bullet.len() == demand;
            exact &= fill;
            self.report.exact("n-bullet", 0, c, fill);
            if !fill {
                return Err(Error::Invariant(format!("cluster {c}: |V-bullet| = {} but {demand} leaves remain", bullet.len())));
            }
            self.v3(c, &circ, &bullet)?;
            let stars: Vec<Star> = stars_map
                .iter()
                .map(|(&p, kids)| Star { centre: self.phi.get(p).expect("centre embedded"), leaves: kids.clone() })
                .collect();
            let d = self.host.density_of(c);
            let placed = star_forest_embed_greedy(&stars, &bullet, &self.host.g_prime, d, self.params.eps(), rng).map_err(|f| {
                Error::stage("final.matching", format!("cluster {c}: {} copies see only {} vertices", f.certificate.demand, f.certificate.neighbourhood.len()))
            })?;
            for (x, v) in placed {
                self.phi.map(x, v)?;
            }
            let filled = self.host.clusters[c].iter().all(|&v| self.phi.is_used(v));
            exact &= filled;
            if !filled {
                return Err(Error::Invariant(format!("cluster {c} is not filled exactly")));
            }
        }
        Ok(exact)
    }

    /// `(V3)` over the `G'`-neighbourhoods of the partner cluster.
    fn v3(&mut self, c: usize, circ: &[usize], bullet: &[usize]) -> Result<()> {
        let n = self.host.n();
        let mut in_circ = vec![false; n];
        let mut in_bullet = vec![false; n];
        circ.iter().for_each(|&v| in_circ[v] = true);
        bullet.iter().for_each(|&v| in_bullet[v] = true);
        let tol = (n as f64).powf(0.8);
        let ratio = bullet.len() as f64 / circ.len().max(1) as f64;
        let mut worst = 0.0f64;
        for &u in &self.host.clusters[bar(c)] {
            let (mut a, mut b) = (0usize, 0usize);
            for &v in self.host.g_prime.neighbors(u) {
                a += usize::from(in_circ[v as usize]);
                b += usize::from(in_bullet[v as usize]);
            }
            worst = worst.max((b as f64 - a as f64 * ratio).abs());
        }
        let st = self.report.upper("V3", 0, c, worst, tol, self.params.slack);
        self.window(st, "final.R", "V3")
    }
}

/// Runs the many-heavy pipeline on `t` (which must be a many-heavy tree).
fn many_heavy(
    t: &RootedTree,
    dec: &TreeDecomposition,
    host: &HostPartition,
    extras: &HostExtras,
    layers: &[Graph],
    params: &ParamSet,
    cfg: &EmbedConfig,
    report: &mut Report,
    timings: &mut Vec<(String, f64)>,
    rng: &mut Rng,
) -> Result<(PartialEmbedding, Vec<Option<Designation>>, CountLedger)> {
    let clock = Instant::now();
    let ca = assign(t, dec, host, params, &mut rng.split(1))?;
    report.extend(ca.report.clone());
    timings.push(("assignment".into(), clock.elapsed().as_secs_f64() * 1e3));
    let clock = Instant::now();
    let state = round_state(t, dec, &ca, params, report)?;
    let plan = plan_slices(t, dec, &ca, host, extras, params, cfg, report, &mut rng.split(2))?;
    timings.push(("plan".into(), clock.elapsed().as_secs_f64() * 1e3));
    let mut pl = Pipeline {
        t,
        dec,
        ca: &ca,
        host,
        layers,
        params,
        cfg,
        extras,
        plan: &plan,
        state: &state,
        phi: PartialEmbedding::new(t.n(), host.n()),
        report: Report::default(),
        dtilde1: vec![Vec::new(); ca.parts()],
    };
    let mut r = rng.split(3);
    let outcome = (|| -> Result<bool> {
        pl.embed_root(&mut r)?;
        for l in 1..=dec.levels + 1 {
            let clock = Instant::now();
            pl.step1(l, &mut r)?;
            if l <= dec.levels {
                pl.step2(l, &mut r)?;
            }
            timings.push((format!("round{l}"), clock.elapsed().as_secs_f64() * 1e3));
        }
        let clock = Instant::now();
        let fill = pl.final_round(&mut r)?;
        timings.push(("final".into(), clock.elapsed().as_secs_f64() * 1e3));
        Ok(fill)
    })();
    report.extend(std::mem::take(&mut pl.report));
    let fill = outcome?;
    let cor = ca.correction.as_ref().expect("correction");
    let designation = (0..t.n())
        .map(|v| {
            dec.stratum[v].map(|s| match s {
                Stratum::F(_) | Stratum::L1 => Designation::Random,
                Stratum::FPrime(_) => Designation::Dense,
                Stratum::Lambda if cor.in_f_circ[v] => Designation::Random,
                Stratum::Lambda => Designation::Dense,
            })
        })
        .collect();
    let ledger = CountLedger { l2: true, slice_sum: true, m_g_identity: true, g_sum: true, exact_fill: fill };
    Ok((pl.phi, designation, ledger))
}

/// Restores the original tree after a reduction.
fn restore(
    t: &RootedTree,
    red: &Reduction,
    phi_star: &PartialEmbedding,
    designation_star: &[Option<Designation>],
    layer: &Graph,
    cfg: &EmbedConfig,
    rng: &mut Rng,
) -> Result<(Vec<usize>, Vec<Option<Designation>>)> {
    let n = t.n();
    let mut phi: Vec<usize> = (0..n).map(|x| phi_star.get(x).expect("total")).collect();
    let mut designation = designation_star.to_vec();
    match &red.restoration {
        Restoration::LightLeaves { removed } => {
            let pool: Vec<usize> = removed.iter().map(|&(x, _)| phi[x]).collect();
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &(x, p) in removed {
                groups.entry(p).or_default().push(x);
            }
            let centres: Vec<(usize, usize)> = groups.iter().map(|(&p, kids)| (phi[p], kids.len())).collect();
            let assign = light_leaves_embed(&centres, &pool, layer, rng)
                .map_err(|c| Error::stage("restore", format!("light leaves: {} parents need {} vertices but see {}", c.left.len(), c.demand, c.neighbourhood.len())))?;
            for ((_, kids), imgs) in groups.iter().zip(assign) {
                for (&x, v) in kids.iter().zip(imgs) {
                    phi[x] = v;
                    designation[x] = Some(Designation::Random);
                }
            }
        }
        Restoration::BarePaths { paths } => {
            let pool: Vec<usize> = paths.iter().flat_map(|p| p.2.iter().map(|&x| phi[x])).collect();
            let pairs: Vec<(usize, usize)> = paths.iter().map(|p| (phi[p.0], phi[p.1])).collect();
            let k_len = paths.first().map_or(2, |p| p.2.len() + 2);
            let routes = bare_paths_embed(&pairs, &pool, k_len, layer, cfg.path_retries, rng)
                .map_err(|f| Error::stage("restore", format!("bare paths: routed {} of {}", f.completed, f.requested)))?;
            for (p, route) in paths.iter().zip(routes) {
                for (&x, v) in p.2.iter().zip(route) {
                    phi[x] = v;
                    designation[x] = Some(Designation::Random);
                }
                designation[p.1] = Some(Designation::Random);
            }
        }
    }
    Ok((phi, designation))
}

/// One attempt of the whole pipeline.
fn attempt(
    t: &RootedTree,
    g: &Graph,
    r_source: RSource<'_>,
    params: &ParamSet,
    cfg: &EmbedConfig,
    attempt_no: usize,
    report: &mut Report,
    timings: &mut Vec<(String, f64)>,
    case_out: &mut Option<String>,
    rng: &mut Rng,
) -> Result<Success> {
    let clock = Instant::now();
    let (_, dec0) = decompose(t, params, &mut rng.split(10))?;
    *case_out = Some(dec0.case.name().to_string());
    let reduction = if dec0.case.many_heavy() { None } else { Some(reduce_few_heavy(t, &dec0, params, &mut rng.split(11))?) };
    let work = reduction.as_ref().map_or(t, |r| &r.tree);
    let dec = match &reduction {
        None => dec0.clone(),
        Some(red) => {
            let (_, d) = decompose(&red.tree, params, &mut rng.split(12))?;
            if !d.case.many_heavy() {
                return Err(Error::stage("reduction", format!("reduced tree is still {}", d.case.name())));
            }
            d
        }
    };
    let params = params.with_case2(dec.case == CaseTag::ManyHeavyCase2);
    timings.push(("decompose".into(), clock.elapsed().as_secs_f64() * 1e3));

    let clock = Instant::now();
    let host = build_host_partition(g, &params, &mut rng.split(13))?;
    let extras = HostExtras::new(&host, &params, cfg.j_checks)?;
    timings.push(("host".into(), clock.elapsed().as_secs_f64() * 1e3));

    let clock = Instant::now();
    let n_layers = dec.levels + 3;
    let layers = match r_source {
        RSource::Sample => gen_coloured_layers(g.n(), params.r_density(), n_layers, mix64(cfg.r_key ^ mix64(attempt_no as u64 + 1)))?,
        RSource::Given(r) => thin_colours(r, n_layers, &mut rng.split(14)),
    };
    timings.push(("random-graphs".into(), clock.elapsed().as_secs_f64() * 1e3));

    let (phi_star, des_star, ledger) = many_heavy(work, &dec, &host, &extras, &layers, &params, cfg, report, timings, &mut rng.split(15))?;
    let (phi, designation) = match &reduction {
        None => ((0..t.n()).map(|x| phi_star.get(x).expect("total")).collect(), des_star),
        Some(red) => {
            let clock = Instant::now();
            let out = restore(t, red, &phi_star, &des_star, &layers[n_layers - 1], cfg, &mut rng.split(16))?;
            timings.push(("restore".into(), clock.elapsed().as_secs_f64() * 1e3));
            out
        }
    };
    Ok(Success { phi, designation, layers, g_prime: host.g_prime, ledger })
}

/// Embeds the spanning tree `t` into `g` plus random graphs sampled at `params.r_density()`.
pub fn embed_tree(t: &RootedTree, g: &Graph, params: &ParamSet, cfg: &EmbedConfig, rng: &mut Rng) -> EmbedResult {
    embed_tree_with(t, g, RSource::Sample, params, cfg, rng)
}

/// Embeds the spanning tree `t` into `g` plus the given random graph `r`.
pub fn embed_tree_with_r(t: &RootedTree, g: &Graph, r: &Graph, params: &ParamSet, cfg: &EmbedConfig, rng: &mut Rng) -> EmbedResult {
    embed_tree_with(t, g, RSource::Given(r), params, cfg, rng)
}

fn embed_tree_with(t: &RootedTree, g: &Graph, r_source: RSource<'_>, params: &ParamSet, cfg: &EmbedConfig, rng: &mut Rng) -> EmbedResult {
    let mut res = EmbedResult {
        success: false,
        phi: None,
        case: None,
        failure_stage: None,
        failure_reason: None,
        attempts: 0,
        stage_histogram: BTreeMap::new(),
        report: Report::default(),
        ledger: None,
        certificate: None,
        timings: Vec::new(),
        seed: rng.seed(),
        r_density: params.r_density(),
    };
    let fail = |res: &mut EmbedResult, stage: &str, reason: String| {
        *res.stage_histogram.entry(stage.to_string()).or_default() += 1;
        res.failure_stage = Some(stage.to_string());
        res.failure_reason = Some(reason);
    };
    if t.n() != g.n() {
        fail(&mut res, "precondition", format!("tree has {} vertices but the host has {}", t.n(), g.n()));
        return res;
    }
    if let RSource::Given(r) = r_source {
        if r.n() != g.n() {
            fail(&mut res, "precondition", "random graph and host differ in size".into());
            return res;
        }
    }
    let rooted;
    let t = if t.n() >= 2 && !t.is_leaf(t.root()) {
        rooted = t.reroot_at_lowest_leaf();
        &rooted
    } else {
        t
    };
    for a in 0..cfg.retries.max(1) {
        res.attempts = a + 1;
        let mut report = Report::default();
        let mut timings = Vec::new();
        let mut sub = rng.split(0xa77e + a as u64);
        let out = attempt(t, g, r_source, params, cfg, a, &mut report, &mut timings, &mut res.case, &mut sub);
        res.report = report;
        res.timings = timings;
        match out {
            Ok(s) => match check_embedding(t, &s.phi, &s.g_prime, &s.layers, &s.designation) {
                Ok(cert) => {
                    res.success = true;
                    res.phi = Some(s.phi);
                    res.ledger = Some(s.ledger);
                    res.certificate = Some(cert);
                    res.failure_stage = None;
                    res.failure_reason = None;
                    return res;
                }
                Err(msg) => {
                    fail(&mut res, "checker", msg);
                    return res;
                }
            },
            Err(e) => {
                let (stage, retryable) = match &e {
                    Error::StageFailure { stage, .. } => (stage.clone(), true),
                    Error::Invariant(_) => ("invariant".to_string(), false),
                    Error::Precondition(_) | Error::InvalidParam { .. } => ("precondition".to_string(), false),
                    Error::Infeasible(_) => ("infeasible".to_string(), false),
                    _ => ("error".to_string(), false),
                };
                fail(&mut res, &stage, e.to_string());
                if !retryable {
                    return res;
                }
            }
        }
    }
    res
}
