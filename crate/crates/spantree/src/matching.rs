//! Bipartite matchings: Hopcroft–Karp maximum matchings, b-matchings via
//! maximum flow, and Hall-violation certificates for infeasible instances.

use std::collections::VecDeque;

use serde::Serialize;

use crate::rng::Rng;

/// Bipartite graph with left vertices `0..left` and right vertices `0..right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartite {
    /// Number of right vertices.
    pub right: usize,
    /// Right neighbours of every left vertex.
    pub adj: Vec<Vec<u32>>,
}

impl Bipartite {
    /// Graph with `left` isolated left vertices and `right` right vertices.
    pub fn new(left: usize, right: usize) -> Self {
        Bipartite { right, adj: vec![Vec::new(); left] }
    }

    /// Number of left vertices.
    pub fn left(&self) -> usize {
        self.adj.len()
    }

    /// Adds the edge `(u, v)`.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(v < self.right);
        self.adj[u].push(v as u32);
    }

    /// Total number of edges.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum()
    }

    /// Shuffles every adjacency list.
    pub fn shuffle(&mut self, rng: &mut Rng) {
        for a in self.adj.iter_mut() {
            rng.shuffle(a);
        }
    }
}

/// A matching stored from both sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    /// Partner of every left vertex.
    pub mate_left: Vec<Option<usize>>,
    /// Partner of every right vertex.
    pub mate_right: Vec<Option<usize>>,
}

impl Matching {
    /// The empty matching.
    pub fn empty(left: usize, right: usize) -> Self {
        Matching { mate_left: vec![None; left], mate_right: vec![None; right] }
    }

    /// Number of matched pairs.
    pub fn size(&self) -> usize {
        self.mate_left.iter().filter(|m| m.is_some()).count()
    }

    /// Whether every left vertex is matched.
    pub fn saturates_left(&self) -> bool {
        self.mate_left.iter().all(|m| m.is_some())
    }
}

/// A set `S` of left vertices whose neighbourhood is smaller than its demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HallCertificate {
    /// The left set `S`.
    pub left: Vec<usize>,
    /// `N(S)`.
    pub neighbourhood: Vec<usize>,
    /// Total demand of `S`.
    pub demand: usize,
}

impl HallCertificate {
    /// Recomputes `N(S)` in `g` and checks that it is smaller than the demand.
    pub fn verify(&self, g: &Bipartite, demands: &[usize]) -> bool {
        let mut seen = vec![false; g.right];
        let mut count = 0;
        for &u in &self.left {
            for &v in &g.adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                }
            }
        }
        let demand: usize = self.left.iter().map(|&u| demands[u]).sum();
        count == self.neighbourhood.len() && demand == self.demand && count < demand
    }
}

const INF: usize = usize::MAX;

/// Maximum matching by Hopcroft–Karp, extending `initial` if given.
///
/// Augmenting paths never unmatch a matched vertex, so every vertex matched
/// by `initial` stays matched.
pub fn hopcroft_karp(g: &Bipartite, initial: Option<Matching>) -> Matching {
    let nl = g.left();
    let mut m = initial.unwrap_or_else(|| Matching::empty(nl, g.right));
    let mut dist = vec![INF; nl];
    let mut it = vec![0usize; nl];
    loop {
        // Layered BFS from free left vertices.
        let mut q = VecDeque::new();
        for u in 0..nl {
            if m.mate_left[u].is_none() {
                dist[u] = 0;
                q.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = q.pop_front() {
            for &v in &g.adj[u] {
                match m.mate_right[v as usize] {
                    None => found = true,
                    Some(w) => {
                        if dist[w] == INF {
                            dist[w] = dist[u] + 1;
                            q.push_back(w);
                        }
                    }
                }
            }
        }
        if !found {
            break;
        }
        it.iter_mut().for_each(|x| *x = 0);
        let mut augmented = false;
        for u in 0..nl {
            if m.mate_left[u].is_none() && augment(g, &mut m, &mut dist, &mut it, u) {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }
    m
}

/// Iterative DFS along the BFS layers; flips the path if a free right vertex is reached.
fn augment(g: &Bipartite, m: &mut Matching, dist: &mut [usize], it: &mut [usize], start: usize) -> bool {
    let mut stack: Vec<(usize, usize)> = vec![(start, usize::MAX)];
    while let Some(&(u, _)) = stack.last() {
        if it[u] >= g.adj[u].len() {
            dist[u] = INF;
            stack.pop();
            continue;
        }
        let v = g.adj[u][it[u]] as usize;
        it[u] += 1;
        match m.mate_right[v] {
            None => {
                // Flip along the stack: every frame records the right vertex it entered through.
                let mut right = v;
                while let Some((x, via)) = stack.pop() {
                    m.mate_left[x] = Some(right);
                    m.mate_right[right] = Some(x);
                    right = via;
                }
                return true;
            }
            Some(w) => {
                if dist[w] == dist[u].wrapping_add(1) {
                    stack.push((w, v));
                }
            }
        }
    }
    false
}

/// Certificate for a left vertex left unmatched by a maximum matching.
///
/// The set of left vertices reachable from `u` by alternating paths has a
/// neighbourhood consisting of matched right vertices only, one fewer than
/// its size.
pub fn hall_violation(g: &Bipartite, m: &Matching) -> Option<HallCertificate> {
    let start = (0..g.left()).find(|&u| m.mate_left[u].is_none())?;
    let mut seen_l = vec![false; g.left()];
    let mut seen_r = vec![false; g.right];
    let mut left = vec![start];
    let mut nb = Vec::new();
    seen_l[start] = true;
    let mut q = VecDeque::from([start]);
    while let Some(u) = q.pop_front() {
        for &v in &g.adj[u] {
            let v = v as usize;
            if seen_r[v] {
                continue;
            }
            seen_r[v] = true;
            nb.push(v);
            if let Some(w) = m.mate_right[v] {
                if !seen_l[w] {
                    seen_l[w] = true;
                    left.push(w);
                    q.push_back(w);
                }
            }
        }
    }
    left.sort_unstable();
    nb.sort_unstable();
    let demand = left.len();
    (nb.len() < demand).then_some(HallCertificate { left, neighbourhood: nb, demand })
}

/// Perfect matching saturating the left side, or a Hall certificate.
pub fn left_saturating_matching(g: &Bipartite, initial: Option<Matching>) -> Result<Matching, HallCertificate> {
    let m = hopcroft_karp(g, initial);
    if m.saturates_left() {
        Ok(m)
    } else {
        Err(hall_violation(g, &m).expect("unsaturated maximum matching has a Hall violation"))
    }
}

struct FlowEdge {
    to: usize,
    cap: usize,
}

/// Dinic maximum flow on a small adjacency-list network.
struct Flow {
    edges: Vec<FlowEdge>,
    out: Vec<Vec<usize>>,
    level: Vec<usize>,
    iter: Vec<usize>,
}

impl Flow {
    fn new(n: usize) -> Self {
        Flow { edges: Vec::new(), out: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    fn add(&mut self, u: usize, v: usize, cap: usize) -> usize {
        let id = self.edges.len();
        self.edges.push(FlowEdge { to: v, cap });
        self.out[u].push(id);
        self.edges.push(FlowEdge { to: u, cap: 0 });
        self.out[v].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = INF);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.out[u] {
                let v = self.edges[e].to;
                if self.edges[e].cap > 0 && self.level[v] == INF {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, f: usize) -> usize {
        if u == t {
            return f;
        }
        while self.iter[u] < self.out[u].len() {
            let e = self.out[u][self.iter[u]];
            let v = self.edges[e].to;
            if self.edges[e].cap > 0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.edges[e].cap));
                if d > 0 {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut total = 0;
        loop {
            self.bfs(s);
            if self.level[t] == INF {
                return total;
            }
            self.iter.iter_mut().for_each(|x| *x = 0);
            loop {
                let f = self.dfs(s, t, INF);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
    }
}

/// Assigns to every left vertex `u` exactly `demands[u]` distinct right
/// neighbours, every right vertex used at most once.
///
/// On infeasibility returns a set `S` of left vertices with
/// `|N(S)| < sum_{u in S} demands[u]`, read off a minimum cut.
pub fn b_matching(g: &Bipartite, demands: &[usize]) -> Result<Vec<Vec<usize>>, HallCertificate> {
    let nl = g.left();
    assert_eq!(demands.len(), nl, "one demand per left vertex");
    let s = nl + g.right;
    let t = s + 1;
    let mut fl = Flow::new(t + 1);
    for (u, &d) in demands.iter().enumerate() {
        if d > 0 {
            fl.add(s, u, d);
        }
    }
    let mut mid = Vec::with_capacity(g.edge_count());
    for (u, a) in g.adj.iter().enumerate() {
        if demands[u] == 0 {
            continue;
        }
        for &v in a {
            mid.push((u, v as usize, fl.add(u, nl + v as usize, INF / 4)));
        }
    }
    for v in 0..g.right {
        fl.add(nl + v, t, 1);
    }
    let want: usize = demands.iter().sum();
    let got = fl.max_flow(s, t);
    if got == want {
        let mut out = vec![Vec::new(); nl];
        for (u, v, e) in mid {
            if fl.edges[e ^ 1].cap > 0 {
                out[u].push(v);
            }
        }
        return Ok(out);
    }
    fl.bfs(s);
    let left: Vec<usize> = (0..nl).filter(|&u| demands[u] > 0 && fl.level[u] != INF).collect();
    let mut seen = vec![false; g.right];
    let mut nb = Vec::new();
    for &u in &left {
        for &v in &g.adj[u] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                nb.push(v as usize);
            }
        }
    }
    nb.sort_unstable();
    let demand = left.iter().map(|&u| demands[u]).sum();
    Err(HallCertificate { left, neighbourhood: nb, demand })
}

/// All perfect matchings of a small balanced bipartite graph, as `mate_left` vectors.
pub fn enumerate_perfect_matchings(g: &Bipartite) -> Vec<Vec<usize>> {
    fn rec(g: &Bipartite, u: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if u == g.left() {
            out.push(cur.clone());
            return;
        }
        for &v in &g.adj[u] {
            let v = v as usize;
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(g, u + 1, used, cur, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    if g.left() == g.right {
        rec(g, 0, &mut vec![false; g.right], &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_max_matching(g: &Bipartite) -> usize {
        fn rec(g: &Bipartite, u: usize, used: &mut Vec<bool>) -> usize {
            if u == g.left() {
                return 0;
            }
            let mut best = rec(g, u + 1, used);
            for &v in &g.adj[u] {
                if !used[v as usize] {
                    used[v as usize] = true;
                    best = best.max(1 + rec(g, u + 1, used));
                    used[v as usize] = false;
                }
            }
            best
        }
        rec(g, 0, &mut vec![false; g.right])
    }

    fn random_bipartite(l: usize, r: usize, p: f64, rng: &mut Rng) -> Bipartite {
        let mut g = Bipartite::new(l, r);
        for u in 0..l {
            for v in 0..r {
                if rng.chance(p) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    #[test]
    fn hopcroft_karp_matches_brute_force() {
        let mut rng = Rng::from_seed(5);
        for _ in 0..300 {
            let l = 1 + rng.below(7);
            let r = 1 + rng.below(7);
            let g = random_bipartite(l, r, 0.3, &mut rng);
            let m = hopcroft_karp(&g, None);
            assert_eq!(m.size(), brute_max_matching(&g));
            for (u, mv) in m.mate_left.iter().enumerate() {
                if let Some(v) = mv {
                    assert!(g.adj[u].contains(&(*v as u32)));
                    assert_eq!(m.mate_right[*v], Some(u));
                }
            }
            if !m.saturates_left() {
                let cert = hall_violation(&g, &m).unwrap();
                assert!(cert.verify(&g, &vec![1; l]));
            }
        }
    }

    #[test]
    fn initial_matching_stays_matched() {
        let mut rng = Rng::from_seed(9);
        for _ in 0..100 {
            let g = random_bipartite(8, 8, 0.4, &mut rng);
            let mut init = Matching::empty(8, 8);
            for u in 0..8 {
                if let Some(&v) = g.adj[u].iter().find(|&&v| init.mate_right[v as usize].is_none()) {
                    init.mate_left[u] = Some(v as usize);
                    init.mate_right[v as usize] = Some(u);
                }
            }
            let before: Vec<usize> = (0..8).filter(|&u| init.mate_left[u].is_some()).collect();
            let m = hopcroft_karp(&g, Some(init));
            assert!(before.iter().all(|&u| m.mate_left[u].is_some()));
            assert_eq!(m.size(), brute_max_matching(&g));
        }
    }

    #[test]
    fn b_matching_agrees_with_vertex_splitting() {
        let mut rng = Rng::from_seed(11);
        for _ in 0..200 {
            let l = 1 + rng.below(4);
            let r = 1 + rng.below(8);
            let g = random_bipartite(l, r, 0.5, &mut rng);
            let demands: Vec<usize> = (0..l).map(|_| rng.below(3)).collect();
            // Independent check: split every left vertex into `demand` copies.
            let mut split = Bipartite::new(0, r);
            for u in 0..l {
                for _ in 0..demands[u] {
                    split.adj.push(g.adj[u].clone());
                }
            }
            let feasible = brute_max_matching(&split) == split.left();
            match b_matching(&g, &demands) {
                Ok(assign) => {
                    assert!(feasible);
                    let mut used = vec![false; r];
                    for u in 0..l {
                        assert_eq!(assign[u].len(), demands[u]);
                        for &v in &assign[u] {
                            assert!(g.adj[u].contains(&(v as u32)));
                            assert!(!used[v]);
                            used[v] = true;
                        }
                    }
                }
                Err(cert) => {
                    assert!(!feasible);
                    assert!(cert.verify(&g, &demands));
                }
            }
        }
    }

    #[test]
    fn perfect_matchings_of_k33() {
        let mut g = Bipartite::new(3, 3);
        for u in 0..3 {
            for v in 0..3 {
                g.add_edge(u, v);
            }
        }
        assert_eq!(enumerate_perfect_matchings(&g).len(), 6);
    }
}
