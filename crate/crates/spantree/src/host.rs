//! Constructive partition of a dense host into super-regular cluster pairs.
//!
//! Clusters are indexed by `c = 2 i + h` for `i in 0..r`, `h in {0, 1}`; the
//! partner cluster of `c` is `c ^ 1`.

use crate::error::{Error, Result};
use crate::graph::{BipartiteView, Graph};
use crate::params::ParamSet;
use crate::regularity::{check_superregular_with_id, RegCertificate};
use crate::rng::Rng;

/// Number of subset samples the certifier draws per pair.
pub const CERT_BUDGET: usize = 64;

/// Partner cluster index.
pub fn bar(c: usize) -> usize {
    c ^ 1
}

/// Clusters `V_ih`, their sizes and the pair subgraph `G'`.
#[derive(Clone, Debug)]
pub struct HostPartition {
    /// Number of pairs `r`.
    pub r: usize,
    /// Clusters indexed by `2 i + h`, each sorted ascending.
    pub clusters: Vec<Vec<usize>>,
    /// Cluster index of every host vertex.
    pub cluster_of: Vec<usize>,
    /// `G'`: the edges of `G` inside pairs, after trimming.
    pub g_prime: Graph,
    /// Measured density of every pair in `G'`.
    pub pair_density: Vec<f64>,
    /// Certificate of every pair.
    pub certificates: Vec<RegCertificate>,
    /// Number of `G` edges deleted by degree trimming.
    pub trimmed_edges: usize,
}

impl HostPartition {
    /// Number of host vertices.
    pub fn n(&self) -> usize {
        self.cluster_of.len()
    }

    /// `n_ih`.
    pub fn size(&self, c: usize) -> usize {
        self.clusters[c].len()
    }

    /// Bipartite view of pair `i` in `G'`.
    pub fn pair_view(&self, i: usize) -> BipartiteView<'_> {
        BipartiteView::new(&self.g_prime, self.clusters[2 * i].clone(), self.clusters[2 * i + 1].clone())
            .expect("clusters are disjoint")
    }

    /// Density of the pair containing cluster `c`.
    pub fn density_of(&self, c: usize) -> f64 {
        self.pair_density[c / 2]
    }

    /// Whether every cluster satisfies `n/(t r) <= n_ih <= t n / r`.
    pub fn check_sizes(&self, t: f64) -> Result<()> {
        let n = self.n() as f64;
        let r = self.r as f64;
        for (c, cl) in self.clusters.iter().enumerate() {
            let s = cl.len() as f64;
            if s < n / (t * r) - 1e-9 || s > t * n / r + 1e-9 {
                return Err(Error::stage(
                    "host-partition",
                    format!("cluster {c} has size {} outside [{:.2}, {:.2}]", cl.len(), n / (t * r), t * n / r),
                ));
            }
        }
        Ok(())
    }
}

/// Distributes `r` pairs over components proportionally to size, at least one each.
fn pairs_per_component(sizes: &[usize], r: usize) -> Result<Vec<usize>> {
    let k = sizes.len();
    if k > r {
        return Err(Error::stage("host-partition", format!("host has {k} components but only r = {r} pairs")));
    }
    let total: usize = sizes.iter().sum();
    let mut q = vec![1usize; k];
    let extra = r - k;
    let quotas: Vec<f64> = sizes.iter().map(|&s| extra as f64 * s as f64 / total as f64).collect();
    let mut given = 0;
    for (i, &x) in quotas.iter().enumerate() {
        q[i] += x.floor() as usize;
        given += x.floor() as usize;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(extra - given) {
        q[i] += 1;
    }
    for (i, &s) in sizes.iter().enumerate() {
        if 2 * q[i] > s {
            return Err(Error::stage("host-partition", format!("component of size {s} cannot host {} pairs", q[i])));
        }
    }
    Ok(q)
}

/// Splits `items` into `parts` contiguous chunks whose sizes differ by at most one.
fn split_even(items: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for j in 0..parts {
        let len = n / parts + usize::from(j < n % parts);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Builds clusters from components: bipartite components split each colour
/// class into `q` parts paired across, other components are shuffled into
/// `2q` parts. Every pair is trimmed to the degree window and certified.
pub fn build_host_partition(g: &Graph, params: &ParamSet, rng: &mut Rng) -> Result<HostPartition> {
    let n = g.n();
    let need = (params.alpha * n as f64 - 1e-9).ceil() as usize;
    if g.min_degree() < need.min(n.saturating_sub(1)) {
        return Err(Error::Precondition(format!("host minimum degree {} is below alpha n = {need}", g.min_degree())));
    }
    let r = params.r;
    let eps = params.eps();
    let mut comps = g.components();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let sizes: Vec<usize> = comps.iter().map(|c| c.len()).collect();
    let q = pairs_per_component(&sizes, r)?;

    let mut clusters: Vec<Vec<usize>> = Vec::with_capacity(2 * r);
    for (comp, &qc) in comps.iter().zip(&q) {
        match g.two_colouring(comp) {
            Some(col) => {
                let mut xs: Vec<usize> = comp.iter().zip(&col).filter(|(_, &c)| c == 0).map(|(&v, _)| v).collect();
                let mut ys: Vec<usize> = comp.iter().zip(&col).filter(|(_, &c)| c == 1).map(|(&v, _)| v).collect();
                if xs.len() < ys.len() {
                    std::mem::swap(&mut xs, &mut ys);
                }
                rng.shuffle(&mut xs);
                rng.shuffle(&mut ys);
                for (a, b) in split_even(&xs, qc).into_iter().zip(split_even(&ys, qc)) {
                    clusters.push(a);
                    clusters.push(b);
                }
            }
            None => {
                let mut members = comp.clone();
                rng.shuffle(&mut members);
                clusters.extend(split_even(&members, 2 * qc));
            }
        }
    }
    for c in clusters.iter_mut() {
        c.sort_unstable();
        if c.is_empty() {
            return Err(Error::stage("host-partition", "empty cluster"));
        }
    }
    let mut cluster_of = vec![usize::MAX; n];
    for (ci, cl) in clusters.iter().enumerate() {
        for &v in cl {
            cluster_of[v] = ci;
        }
    }

    // G' keeps pair edges only, then trims vertices above the degree window.
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (u, v) in g.edges() {
        if cluster_of[u] == bar(cluster_of[v]) {
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
    }
    let mut pair_density = Vec::with_capacity(r);
    let mut trimmed = 0;
    for i in 0..r {
        let (ca, cb) = (2 * i, 2 * i + 1);
        let e: usize = clusters[ca].iter().map(|&v| adj[v].len()).sum();
        let d_i = e as f64 / (clusters[ca].len() as f64 * clusters[cb].len() as f64);
        if d_i < params.d {
            return Err(Error::stage("host-partition", format!("pair {i} has density {d_i:.4} below d = {}", params.d)));
        }
        pair_density.push(d_i);
        for (side, other) in [(ca, cb), (cb, ca)] {
            let hi = ((d_i + eps) * clusters[other].len() as f64).floor() as usize;
            let lo = ((d_i - eps) * clusters[other].len() as f64).ceil() as usize;
            for &v in &clusters[side] {
                if adj[v].len() <= hi {
                    continue;
                }
                let mut nb = adj[v].clone();
                rng.shuffle(&mut nb);
                for u in nb {
                    if adj[v].len() <= hi {
                        break;
                    }
                    let u = u as usize;
                    if adj[u].len() > lo {
                        adj[v].retain(|&x| x as usize != u);
                        adj[u].retain(|&x| x as usize != v);
                        trimmed += 1;
                    }
                }
            }
        }
    }
    let mut edges = Vec::new();
    for (u, a) in adj.iter().enumerate() {
        for &v in a {
            if (v as usize) > u {
                edges.push((u, v as usize));
            }
        }
    }
    let g_prime = Graph::from_edges(n, &edges)?;
    let mut hp = HostPartition { r, clusters, cluster_of, g_prime, pair_density, certificates: Vec::new(), trimmed_edges: trimmed };
    for i in 0..r {
        let view = hp.pair_view(i);
        let cert = check_superregular_with_id(&view, hp.pair_density[i], eps, CERT_BUDGET, i, rng)?;
        if let Some(clause) = cert.first_violation {
            return Err(Error::stage("host-partition", format!("pair {i} fails certification at clause {clause:?}")));
        }
        hp.certificates.push(cert);
    }
    hp.check_sizes(params.t)?;
    Ok(hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_gnp, gen_host, HostFamily};
    use crate::params::{derive_params, ParamOverrides};
    use crate::regularity::CertMode;

    fn params(n: usize, r: usize, d: f64, eps: f64) -> ParamSet {
        let ov = ParamOverrides { r: Some(r), d: Some(d), eps: Some(eps), alpha: Some(0.3), ..Default::default() };
        derive_params(n, 1, 8, &ov).unwrap()
    }

    #[test]
    fn two_cliques_split_in_halves() {
        let g = gen_host(&HostFamily::TwoCliques, 40, 0.45, &mut Rng::from_seed(1)).unwrap();
        let hp = build_host_partition(&g, &params(40, 2, 0.5, 0.1), &mut Rng::from_seed(2)).unwrap();
        assert_eq!(hp.clusters.iter().map(|c| c.len()).collect::<Vec<_>>(), vec![10, 10, 10, 10]);
        for i in 0..2 {
            assert_eq!(hp.pair_density[i], 1.0);
            assert_eq!(hp.certificates[i].mode, CertMode::ExactFamily);
        }
    }

    #[test]
    fn unbalanced_bipartite_single_pair() {
        let g = gen_host(&HostFamily::UnbalancedCompleteBipartite, 10, 0.4, &mut Rng::from_seed(1)).unwrap();
        let hp = build_host_partition(&g, &params(10, 1, 0.5, 0.1), &mut Rng::from_seed(2)).unwrap();
        assert_eq!(hp.size(0), 6);
        assert_eq!(hp.size(1), 4);
        assert_eq!(hp.pair_density[0], 1.0);
    }

    #[test]
    fn too_many_components_rejected() {
        let g = gen_host(&HostFamily::TwoCliques, 40, 0.45, &mut Rng::from_seed(1)).unwrap();
        assert!(build_host_partition(&g, &params(40, 1, 0.5, 0.1), &mut Rng::from_seed(2)).is_err());
    }

    #[test]
    fn dense_random_certifies() {
        let mut fails = 0;
        for seed in 0..100u64 {
            let mut rng = Rng::new(seed, 1);
            let g = gen_gnp(2000, 0.5, &mut rng).unwrap();
            match build_host_partition(&g, &params(2000, 2, 0.4, 0.1), &mut rng) {
                Ok(hp) => {
                    hp.check_sizes(4.0).unwrap();
                    assert!(hp.pair_density.iter().all(|&d| (d - 0.5).abs() < 0.02));
                }
                Err(_) => fails += 1,
            }
        }
        assert!(fails < 5, "fails = {fails}");
    }

    #[test]
    fn pair_allocation_is_proportional() {
        assert_eq!(pairs_per_component(&[30, 10], 4).unwrap(), vec![3, 1]);
        assert_eq!(pairs_per_component(&[20, 20], 4).unwrap(), vec![2, 2]);
        assert!(pairs_per_component(&[3], 2).is_err());
    }
}
