//! Distribution of the tree vertices over the clusters `V_ih`: the round-based
//! vector distribution building the sets `Z^l_ih`, and the leaf-level balance
//! correction that makes every cluster receive exactly `n_ih` vertices.

use std::fmt::Write as _;

use serde::Serialize;

use crate::decomposition::{CaseTag, Home, Stratum, TreeDecomposition};
use crate::error::{Error, Result};
use crate::host::{bar, HostPartition};
use crate::params::ParamSet;
use crate::report::{Report, Status};
use crate::rng::Rng;
use crate::tree::RootedTree;
use crate::vector_partition::{distribute_vectors, Caps, VectorPartition, WeightVector, DEFAULT_SEED_RETRIES};

/// Marker for "no cluster" / "no round".
pub const NONE: usize = usize::MAX;

/// Output of the balance correction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Correction {
    /// `|X_ih| - n_ih` for surplus clusters, 0 otherwise.
    pub surplus: Vec<usize>,
    /// `M_ih`: leaves of `Lambda*` removed from surplus clusters.
    pub m_sets: Vec<Vec<usize>>,
    /// `Y_ih`: leaves of `F°` received by deficit clusters.
    pub y_sets: Vec<Vec<usize>>,
    /// `L_{1,ih}`.
    pub l1_sets: Vec<Vec<usize>>,
    /// Whether the leaf lies in `L(F°)`.
    pub in_f_circ: Vec<bool>,
    /// Centres of the stars of `F°`, ascending.
    pub f_circ_centres: Vec<usize>,
    /// Cluster that receives the image of every vertex.
    pub target: Vec<usize>,
}

/// Assignment of tree vertices to clusters.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterAssignment {
    /// Number of cluster pairs.
    pub r: usize,
    /// `n_ih` for every cluster index `2 i + h`.
    pub n_c: Vec<usize>,
    /// Cluster `ih` with `v in X_ih`, or [`NONE`] for leaves of `L_1`.
    pub cluster: Vec<usize>,
    /// Round `l` with `v in Z^l_ih`, or [`NONE`] for leaves of `L_1`.
    pub round: Vec<usize>,
    /// `|Z^l_ih|` indexed by round, then cluster.
    pub z_sizes: Vec<Vec<usize>>,
    /// Vector partition of every round (round 0 has none).
    pub partitions: Vec<Option<VectorPartition>>,
    /// Conditions `(Z1)`-`(Z5)` and, after correction, `(L1)`-`(L4)`.
    pub report: Report,
    /// Balance correction, once computed.
    pub correction: Option<Correction>,
}

impl ClusterAssignment {
    /// Number of clusters `2r`.
    pub fn parts(&self) -> usize {
        2 * self.r
    }

    /// `|X_ih|`.
    pub fn x_size(&self, c: usize) -> usize {
        self.cluster.iter().filter(|&&x| x == c).count()
    }

    /// Members of `X_ih`, ascending.
    pub fn x_members(&self, c: usize) -> Vec<usize> {
        (0..self.cluster.len()).filter(|&v| self.cluster[v] == c).collect()
    }

    /// Cluster receiving the image of `v` (requires the correction).
    pub fn target(&self, v: usize) -> usize {
        self.correction.as_ref().expect("balance correction computed").target[v]
    }

    /// CSV `vertex,cluster_i,cluster_h,round` over `X` (1-based `i`, `h`).
    pub fn z_csv(&self) -> String {
        let mut s = String::from("vertex,cluster_i,cluster_h,round\n");
        for v in 0..self.cluster.len() {
            let c = self.cluster[v];
            if c != NONE {
                let _ = writeln!(s, "{v},{},{},{}", c / 2 + 1, c % 2 + 1, self.round[v]);
            }
        }
        s
    }

    /// CSV `leaf,target_cluster,kind` over `L_{1,ih}` and `Y_ih` (cluster index `2 i + h`).
    pub fn leaf_csv(&self) -> String {
        let mut s = String::from("leaf,target_cluster,kind\n");
        if let Some(cor) = &self.correction {
            let mut rows: Vec<(usize, usize, &str)> = Vec::new();
            for (c, set) in cor.l1_sets.iter().enumerate() {
                rows.extend(set.iter().map(|&v| (v, c, "L1")));
            }
            for (c, set) in cor.y_sets.iter().enumerate() {
                rows.extend(set.iter().map(|&v| (v, c, "Y")));
            }
            rows.sort();
            for (v, c, kind) in rows {
                let _ = writeln!(s, "{v},{c},{kind}");
            }
        }
        s
    }
}

/// Members of every `F#` component, keyed by component root.
pub fn fsharp_components(t: &RootedTree, dec: &TreeDecomposition) -> Vec<Vec<usize>> {
    let mut comps = vec![Vec::new(); t.n()];
    for v in t.bfs_order() {
        let r = dec.fsharp_root[v];
        if r != usize::MAX {
            comps[r].push(v);
        }
    }
    comps
}

/// `min{2 Delta^k, n / M*}`.
fn delta_k_cap(params: &ParamSet) -> f64 {
    let dk = (params.delta_max as f64).powi(params.k as i32);
    (2.0 * dk).min(params.n as f64 / params.m_star)
}

/// Builds the sets `Z^l_ih` round by round (no correction yet).
pub fn run_distribution(t: &RootedTree, dec: &TreeDecomposition, host: &HostPartition, params: &ParamSet, rng: &mut Rng) -> Result<ClusterAssignment> {
    if !dec.case.many_heavy() {
        return Err(Error::Precondition(format!("distribution needs a many-heavy case, got {}", dec.case.name())));
    }
    let n = t.n();
    if host.n() != n {
        return Err(Error::Precondition(format!("tree has {n} vertices but the host has {}", host.n())));
    }
    let r = host.r;
    let parts = 2 * r;
    let n_c: Vec<usize> = (0..parts).map(|c| host.size(c)).collect();
    let alphas: Vec<f64> = n_c.iter().map(|&s| s as f64 / n as f64).collect();
    let cap = delta_k_cap(params);
    let caps = Caps { d1: cap, d2: cap, d3: params.delta_max as f64 };
    let comps = fsharp_components(t, dec);
    let rounds = dec.levels + 1;

    let mut cluster = vec![NONE; n];
    let mut round = vec![NONE; n];
    let mut z_sizes = vec![vec![0usize; parts]; rounds + 1];
    let mut partitions: Vec<Option<VectorPartition>> = vec![None];
    let root = t.root();
    cluster[root] = 0;
    round[root] = 0;
    z_sizes[0][0] = 1;

    let mut lambda_star_round = vec![0usize; rounds + 1];
    let mut lambda_round = vec![0usize; rounds + 1];
    for v in 0..n {
        if dec.stratum[v] == Some(Stratum::Lambda) {
            lambda_star_round[dec.lambda_star_level[v].min(rounds)] += 1;
            if dec.lambda_level[v] > 0 {
                lambda_round[dec.lambda_level[v].min(rounds)] += 1;
            }
        }
    }

    for l in 1..=rounds {
        let xs: Vec<usize> = t.bfs_order().filter(|&x| dec.home[x] == Home::F(l)).collect();
        let depth = |v: usize, root: usize| t.depth(v) - t.depth(root);
        let family: Vec<WeightVector> = xs
            .iter()
            .map(|&x| {
                if dec.fsharp_root[x] != x {
                    return [1, 0, 0, 0, 0, 0];
                }
                let mut q = [0u64; 6];
                for &v in &comps[x] {
                    let side = depth(v, x) % 2;
                    q[side] += 1;
                    if dec.stratum[v] == Some(Stratum::Lambda) {
                        q[2 + side] += 1;
                        if dec.lambda_level[v] == l {
                            q[4 + side] += 1;
                        }
                    }
                }
                q
            })
            .collect();
        if family.is_empty() {
            partitions.push(None);
            continue;
        }
        let mut sub = rng.split(0x5a00 + l as u64);
        let vp = distribute_vectors(&family, &alphas, caps, 2.0 * params.eta, params.t, &mut sub, DEFAULT_SEED_RETRIES)
            .map_err(|e| Error::stage(format!("distribution.round{l}"), e.to_string()))?;
        for (j, &x) in xs.iter().enumerate() {
            let c = vp.part[j];
            let members: &[usize] = if dec.fsharp_root[x] == x { &comps[x] } else { std::slice::from_ref(&xs[j]) };
            for &v in members {
                let cv = if depth(v, x) % 2 == 0 { c } else { bar(c) };
                if cluster[v] != NONE {
                    return Err(Error::Invariant(format!("vertex {v} assigned twice")));
                }
                cluster[v] = cv;
                round[v] = l;
                z_sizes[l][cv] += 1;
            }
        }
        partitions.push(Some(vp));
    }

    let mut report = Report::default();
    // (Z2): every vertex outside L(L_1) is assigned.
    let covered = (0..n).all(|v| (cluster[v] == NONE) == (dec.stratum[v] == Some(Stratum::L1)));
    report.exact("Z2", rounds, NONE, covered);
    if !covered {
        return Err(Error::Invariant("distribution does not cover V(T) \\ L(L_1) exactly".into()));
    }
    // (Z4): children inside an F# component sit in the partner cluster.
    let z4 = (0..n).all(|v| !dec.in_fsharp_edge(v) || cluster[v] == bar(cluster[t.parent(v).expect("non-root")]));
    report.exact("Z4", rounds, NONE, z4);
    if !z4 {
        return Err(Error::Invariant("an F# edge joins two clusters that are not partners".into()));
    }
    let rf = r as f64;
    let nf = n as f64;
    let dk = (params.delta_max as f64).powi(params.k as i32);
    let z1_bound = (2.0 * rf.powi(5) * dk / nf).min(rf.powi(5) / params.m_star);
    let case2 = dec.case == CaseTag::ManyHeavyCase2;
    let eta2 = params.eta * params.eta;
    for l in 0..=rounds {
        let rel: Vec<f64> = (0..parts).map(|c| z_sizes[l][c] as f64 / n_c[c] as f64).collect();
        let spread = rel.iter().cloned().fold(f64::MIN, f64::max) - rel.iter().cloned().fold(f64::MAX, f64::min);
        report.upper("Z1", l, NONE, spread, z1_bound, params.slack);
        if let Some(vp) = &partitions[l] {
            report.upper("seeding", l, NONE, vp.seeding_deviation, 1.0, params.slack);
        }
        for c in 0..parts {
            let share = n_c[c] as f64 / nf;
            let ls = (0..n).filter(|&v| round[v] == l && cluster[v] == c && dec.stratum[v] == Some(Stratum::Lambda)).count();
            if case2 {
                let err = (2.0 * rf * rf * dk).min(rf * rf * nf / params.m_star);
                report.lower("Z3", l, c, ls as f64, 2.0 * eta2 * lambda_star_round[l] as f64 * share, err, params.slack);
            }
            let lam = (0..n)
                .filter(|&v| round[v] == l && cluster[v] == c && dec.stratum[v] == Some(Stratum::Lambda) && dec.lambda_level[v] == l)
                .count();
            report.lower("Z5", l, c, lam as f64, 2.0 * eta2 * lambda_round[l] as f64 * share, rf * rf * params.delta_max as f64, params.slack);
        }
    }
    Ok(ClusterAssignment { r, n_c, cluster, round, z_sizes, partitions, report, correction: None })
}

/// Makes every cluster receive exactly `n_ih` vertices by moving leaves of
/// `Lambda*` out of surplus clusters (`F°`, `Y_ih`) and filling the rest with
/// the leaves of `L_1`.
pub fn balance_correction(
    mut ca: ClusterAssignment,
    t: &RootedTree,
    dec: &TreeDecomposition,
    params: &ParamSet,
    rng: &mut Rng,
) -> Result<ClusterAssignment> {
    let n = t.n();
    let parts = ca.parts();
    let x_sizes: Vec<usize> = (0..parts).map(|c| ca.x_size(c)).collect();
    let cap = params.np_prime().floor().max(0.0) as usize;
    let case1 = dec.case == CaseTag::ManyHeavyCase1;

    let mut surplus = vec![0usize; parts];
    let mut m_sets: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for c in 0..parts {
        if x_sizes[c] <= ca.n_c[c] {
            continue;
        }
        let need = x_sizes[c] - ca.n_c[c];
        surplus[c] = need;
        // Lambda parents in the partner cluster, by descending Lambda-degree.
        let mut by_parent: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
        for v in 0..n {
            if ca.cluster[v] == c && dec.stratum[v] == Some(Stratum::Lambda) {
                by_parent.entry(t.parent(v).expect("leaf has a parent")).or_default().push(v);
            }
        }
        let mut parents: Vec<(usize, Vec<usize>)> = by_parent.into_iter().collect();
        parents.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
        let available: usize = parents.iter().map(|(_, l)| l.len().min(cap)).sum();
        if available < need {
            return Err(Error::stage(
                "balance-correction",
                format!("cluster {c} has surplus {need} but only {available} Lambda* leaves are available under the per-parent cap {cap}"),
            ));
        }
        // Round robin over the parents, one leaf at a time.
        let mut taken = Vec::with_capacity(need);
        let mut depth = 0;
        while taken.len() < need {
            for (_, leaves) in &parents {
                if taken.len() == need {
                    break;
                }
                if depth < leaves.len() && depth < cap {
                    taken.push(leaves[depth]);
                }
            }
            depth += 1;
        }
        taken.sort_unstable();
        m_sets[c] = taken;
    }
    let total_m: usize = m_sets.iter().map(|m| m.len()).sum();

    // Largest-remainder packing of the M-leaves into the deficit clusters.
    let deficits: Vec<usize> = (0..parts).map(|c| ca.n_c[c].saturating_sub(x_sizes[c])).collect();
    let total_def: usize = deficits.iter().sum();
    if total_m > total_def {
        return Err(Error::Invariant(format!("surplus {total_m} exceeds total deficit {total_def}")));
    }
    let mut quota = vec![0usize; parts];
    if total_m > 0 {
        let exact: Vec<f64> = deficits.iter().map(|&d| total_m as f64 * d as f64 / total_def as f64).collect();
        let mut given = 0;
        for c in 0..parts {
            quota[c] = exact[c].floor() as usize;
            given += quota[c];
        }
        let mut order: Vec<usize> = (0..parts).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).partial_cmp(&(exact[a] - exact[a].floor())).unwrap().then(a.cmp(&b)));
        for &c in order.iter() {
            if given == total_m {
                break;
            }
            if quota[c] < deficits[c] {
                quota[c] += 1;
                given += 1;
            }
        }
    }
    let mut y_sets: Vec<Vec<usize>> = vec![Vec::new(); parts];
    let mut pool: Vec<usize> = m_sets.iter().flatten().copied().collect();
    pool.sort_unstable();
    let mut it = pool.into_iter();
    for c in 0..parts {
        y_sets[c] = it.by_ref().take(quota[c]).collect();
    }

    // L_{1,ih} fills every cluster exactly.
    let mut l1_leaves: Vec<usize> = (0..n).filter(|&v| dec.stratum[v] == Some(Stratum::L1)).collect();
    rng.shuffle(&mut l1_leaves);
    let mut l1_sets: Vec<Vec<usize>> = vec![Vec::new(); parts];
    let mut it = l1_leaves.into_iter();
    for c in 0..parts {
        let have = x_sizes[c] - m_sets[c].len() + y_sets[c].len();
        let want = ca.n_c[c].checked_sub(have).ok_or_else(|| Error::Invariant(format!("cluster {c} overfull after correction")))?;
        l1_sets[c] = it.by_ref().take(want).collect();
        l1_sets[c].sort_unstable();
        if l1_sets[c].len() != want {
            return Err(Error::Invariant(format!("not enough L_1 leaves to fill cluster {c}")));
        }
    }
    if it.next().is_some() {
        return Err(Error::Invariant("L_1 leaves left over after filling every cluster".into()));
    }

    let mut in_f_circ = vec![false; n];
    let mut target = ca.cluster.clone();
    for (c, set) in y_sets.iter().enumerate() {
        for &v in set {
            in_f_circ[v] = true;
            target[v] = c;
        }
    }
    for (c, set) in l1_sets.iter().enumerate() {
        for &v in set {
            target[v] = c;
        }
    }
    let mut f_circ_centres: Vec<usize> = (0..n).filter(|&v| in_f_circ[v]).map(|v| t.parent(v).expect("leaf")).collect();
    f_circ_centres.sort_unstable();
    f_circ_centres.dedup();

    // (L1)-(L4).
    let l1_ok = l1_sets.iter().map(|s| s.len()).sum::<usize>() == dec.stratum_size(Stratum::L1)
        && y_sets.iter().map(|s| s.len()).sum::<usize>() == in_f_circ.iter().filter(|&&b| b).count();
    ca.report.exact("L1", 0, NONE, l1_ok);
    for c in 0..parts {
        let lhs = x_sizes[c] - m_sets[c].len() + l1_sets[c].len() + y_sets[c].len();
        if ca.report.exact("L2", 0, c, lhs == ca.n_c[c]) == Status::Fail {
            return Err(Error::Invariant(format!("(L2) fails for cluster {c}: {lhs} != {}", ca.n_c[c])));
        }
    }
    let mut fdeg = vec![0usize; n];
    for v in 0..n {
        if in_f_circ[v] {
            fdeg[t.parent(v).expect("leaf")] += 1;
        }
    }
    let max_fdeg = fdeg.iter().copied().max().unwrap_or(0);
    if case1 {
        // In Case 1 the surplus set is empty for the paper's constants.
        ca.report.upper("L3", 0, NONE, total_m as f64, 0.0, params.slack);
    } else {
        ca.report.upper("L3", 0, NONE, max_fdeg as f64, params.np_prime(), 1.0);
    }
    let rf = ca.r as f64;
    let dk = (params.delta_max as f64).powi(params.k as i32);
    let l4 = (rf.powi(7) * dk).min(rf.powi(7) * n as f64 / params.m_star);
    ca.report.upper("L4", 0, NONE, total_m as f64, l4, params.slack);

    ca.correction = Some(Correction { surplus, m_sets, y_sets, l1_sets, in_f_circ, f_circ_centres, target });
    Ok(ca)
}

/// Runs [`run_distribution`] and [`balance_correction`].
pub fn assign(t: &RootedTree, dec: &TreeDecomposition, host: &HostPartition, params: &ParamSet, rng: &mut Rng) -> Result<ClusterAssignment> {
    let ca = run_distribution(t, dec, host, params, rng)?;
    let mut sub = rng.split(0xba1a);
    balance_correction(ca, t, dec, params, &mut sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::graph::{gen_host, HostFamily};
    use crate::host::build_host_partition;
    use crate::params::{derive_params, desk_overrides, ParamOverrides};
    use crate::tree::{gen_random_tree, TreeProfile};

    fn setup(n: usize, delta: usize, fraction: f64, seed: u64) -> (RootedTree, TreeDecomposition, HostPartition, ParamSet) {
        let ov = ParamOverrides { r: Some(2), eps: Some(0.1), ..desk_overrides() };
        let params = derive_params(n, 1, delta, &ov).unwrap();
        let mut rng = Rng::new(seed, 3);
        let profile = TreeProfile::HeavyLeafRich { fraction, delta, threshold: params.heavy_threshold() };
        let t = gen_random_tree(n, &profile, &mut rng).unwrap();
        let (_, dec) = decompose(&t, &params, &mut rng).unwrap();
        let g = gen_host(&HostFamily::TwoCliques, n, 0.45, &mut rng).unwrap();
        let hp = build_host_partition(&g, &params, &mut rng).unwrap();
        (t, dec, hp, params)
    }

    #[test]
    fn round_zero_holds_only_the_root() {
        let (t, dec, hp, params) = setup(600, 40, 0.4, 1);
        let ca = run_distribution(&t, &dec, &hp, &params, &mut Rng::from_seed(2)).unwrap();
        let z0: Vec<usize> = (0..t.n()).filter(|&v| ca.round[v] == 0).collect();
        assert_eq!(z0, vec![t.root()]);
        assert_eq!(ca.cluster[t.root()], 0);
    }

    #[test]
    fn correction_fills_every_cluster_exactly() {
        for seed in 0..20 {
            let (t, dec, hp, params) = setup(800, 40, 0.4, seed);
            if !dec.case.many_heavy() {
                continue;
            }
            let ca = assign(&t, &dec, &hp, &params, &mut Rng::from_seed(seed)).unwrap();
            let cor = ca.correction.as_ref().unwrap();
            let mut count = vec![0usize; ca.parts()];
            for v in 0..t.n() {
                count[cor.target[v]] += 1;
            }
            assert_eq!(count, ca.n_c);
            // Every surplus leaf is a Lambda leaf and the per-parent cap holds.
            let cap = params.np_prime().floor() as usize;
            let mut per_parent = vec![0usize; t.n()];
            for v in (0..t.n()).filter(|&v| cor.in_f_circ[v]) {
                assert_eq!(dec.stratum[v], Some(Stratum::Lambda));
                per_parent[t.parent(v).unwrap()] += 1;
            }
            assert!(per_parent.iter().all(|&d| d <= cap));
        }
    }

    #[test]
    fn csv_dumps_have_headers() {
        let (t, dec, hp, params) = setup(400, 30, 0.4, 4);
        let ca = assign(&t, &dec, &hp, &params, &mut Rng::from_seed(4)).unwrap();
        assert!(ca.z_csv().starts_with("vertex,cluster_i,cluster_h,round\n"));
        assert!(ca.leaf_csv().starts_with("leaf,target_cluster,kind\n"));
        assert_eq!(ca.z_csv().lines().count(), 1 + t.n() - dec.stratum_size(Stratum::L1));
    }
}
