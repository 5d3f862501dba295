//! Property tests for trees, matchings, the vector partition, the oracle and
//! the embedding checker.

use proptest::prelude::*;
use spantree::embedder::{check_embedding, Designation};
use spantree::graph::{gen_gnp, Graph};
use spantree::matching::{b_matching, hopcroft_karp, Bipartite};
use spantree::oracle::{brute_force_embed, is_embedding, naive_embed, OracleBudget, OracleVerdict};
use spantree::rng::Rng;
use spantree::tree::{enumerate_free_trees, gen_random_tree, prufer_decode, RootedTree, TreeProfile};
use spantree::vector_partition::{part_stat, rebalance_traced, WeightVector};

fn random_bipartite(left: usize, right: usize, p: f64, rng: &mut Rng) -> Bipartite {
    let mut g = Bipartite::new(left, right);
    for u in 0..left {
        for v in 0..right {
            if rng.chance(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Maximum matching size by exhaustive search over left vertices.
fn exhaustive_matching(g: &Bipartite, u: usize, used: &mut Vec<bool>) -> usize {
    if u == g.left() {
        return 0;
    }
    let mut best = exhaustive_matching(g, u + 1, used);
    for &v in &g.adj[u] {
        let v = v as usize;
        if !used[v] {
            used[v] = true;
            best = best.max(1 + exhaustive_matching(g, u + 1, used));
            used[v] = false;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prufer_sequences_decode_to_trees(seq in proptest::collection::vec(0usize..40, 0..38)) {
        let n = seq.len() + 2;
        let seq: Vec<usize> = seq.into_iter().map(|x| x % n).collect();
        let edges = prufer_decode(&seq).unwrap();
        prop_assert_eq!(edges.len(), n - 1);
        let t = RootedTree::from_edges(n, &edges, 0).unwrap();
        // Label x appears deg(x) - 1 times in the sequence.
        for x in 0..n {
            prop_assert_eq!(t.degree(x), 1 + seq.iter().filter(|&&s| s == x).count());
        }
    }

    #[test]
    fn capped_trees_respect_the_cap(n in 10usize..800, cap in 3usize..20, seed in any::<u64>()) {
        let t = gen_random_tree(n, &TreeProfile::MaxDegreeCapped(cap), &mut Rng::new(seed, 0)).unwrap();
        prop_assert_eq!(t.n(), n);
        prop_assert!(t.max_degree() <= cap);
        prop_assert_eq!(t.bfs_order().len(), n);
    }

    #[test]
    fn hopcroft_karp_is_maximum(left in 1usize..7, right in 1usize..7, p in 0.1f64..0.9, seed in any::<u64>()) {
        let g = random_bipartite(left, right, p, &mut Rng::new(seed, 1));
        let m = hopcroft_karp(&g, None);
        for (u, mate) in m.mate_left.iter().enumerate() {
            if let Some(v) = mate {
                prop_assert!(g.adj[u].contains(&(*v as u32)));
                prop_assert_eq!(m.mate_right[*v], Some(u));
            }
        }
        prop_assert_eq!(m.size(), exhaustive_matching(&g, 0, &mut vec![false; right]));
    }

    #[test]
    fn b_matching_or_hall_certificate(left in 1usize..8, right in 1usize..16, p in 0.1f64..0.9, seed in any::<u64>()) {
        let mut rng = Rng::new(seed, 2);
        let g = random_bipartite(left, right, p, &mut rng);
        let demands: Vec<usize> = (0..left).map(|_| rng.below(3)).collect();
        match b_matching(&g, &demands) {
            Ok(assign) => {
                let mut used = vec![false; right];
                for (u, vs) in assign.iter().enumerate() {
                    prop_assert_eq!(vs.len(), demands[u]);
                    for &v in vs {
                        prop_assert!(g.adj[u].contains(&(v as u32)));
                        prop_assert!(!used[v]);
                        used[v] = true;
                    }
                }
            }
            Err(cert) => prop_assert!(cert.verify(&g, &demands)),
        }
    }

    #[test]
    fn local_search_strictly_decreases_objective(m in 50usize..600, r in 1usize..4, seed in any::<u64>()) {
        let mut rng = Rng::new(seed, 3);
        let parts = 2 * r;
        let family: Vec<WeightVector> = (0..m)
            .map(|_| {
                let big = 1 + rng.below(9) as u64;
                if rng.chance(0.5) { [big, 0, 0, 0, 0, 0] } else { [0, big, 0, 0, 0, 0] }
            })
            .collect();
        let raw: Vec<f64> = (0..parts).map(|_| 1.0 + rng.unit()).collect();
        let total: f64 = raw.iter().sum();
        let alphas: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let mut part: Vec<usize> = (0..m).map(|_| rng.below(parts)).collect();
        let before: u64 = part_stat(&family, &part, parts, 0).iter().sum();
        let (moves, trace) = rebalance_traced(&family, &alphas, 1.0, &mut part, &vec![true; m]);
        prop_assert_eq!(trace.len(), 1 + moves.iter().sum::<usize>());
        for w in trace.windows(2) {
            let tol = 1e-9 * w[0].0.abs().max(1.0);
            prop_assert!(w[1].0 < w[0].0 - tol || ((w[1].0 - w[0].0).abs() <= tol && w[1].1 < w[0].1));
        }
        let after: u64 = part_stat(&family, &part, parts, 0).iter().sum();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn oracle_matches_naive_search(n in 2usize..8, p in 0.2f64..0.9, seed in any::<u64>(), pick in any::<usize>()) {
        let mut rng = Rng::new(seed, 4);
        let trees = enumerate_free_trees(n);
        let t = &trees[pick % trees.len()];
        let g = gen_gnp(n, p, &mut rng).unwrap();
        let out = brute_force_embed(t, &g, OracleBudget::default());
        prop_assert!(out.verdict.complete());
        let naive = naive_embed(t, &g).unwrap();
        match out.verdict {
            OracleVerdict::Found(phi) => {
                prop_assert!(is_embedding(t, &g, &phi));
                prop_assert!(naive.is_some());
            }
            _ => prop_assert!(naive.is_none()),
        }
    }

    #[test]
    fn checker_accepts_identity_and_rejects_collisions(n in 3usize..200, seed in any::<u64>()) {
        let mut rng = Rng::new(seed, 5);
        let t = gen_random_tree(n, &TreeProfile::UniformPrufer, &mut rng).unwrap();
        let dense = Graph::from_edges(n, &t.edges()).unwrap();
        let empty = Graph::empty(n);
        let designation = vec![Some(Designation::Dense); n];
        let phi: Vec<usize> = (0..n).collect();
        prop_assert!(check_embedding(&t, &phi, &dense, std::slice::from_ref(&empty), &designation).is_ok());
        let mut bad = phi.clone();
        bad[1] = bad[0];
        prop_assert!(check_embedding(&t, &bad, &dense, &[empty], &designation).is_err());
    }
}
