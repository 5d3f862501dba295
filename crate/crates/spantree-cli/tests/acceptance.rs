//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use spantree::decomposition::{decompose, verify_claims, ClaimStatus, Stratum};
use spantree::embedder::{embed_tree_with_r, EmbedConfig};
use spantree::graph::{gen_gnp, gen_host, BipartiteView, Graph, HostFamily};
use spantree::oracle::{
    brute_force_embed, verify_nonembeddability, DenseHost, ExtremalRegime, ExtremalSpec, OracleBudget, OracleVerdict,
};
use spantree::params::{derive_params, desk_overrides, regime_k, ParamOverrides, ParamSet, DEFAULT_ALPHA};
use spantree::primitives::check_injection_distribution;
use spantree::regularity::{check_superregular, Clause};
use spantree::rng::Rng;
use spantree::tree::{enumerate_free_trees, gen_random_tree, RootedTree, TreeProfile};
use spantree::vector_partition::{distribute_vectors, rebalance_traced, Caps, WeightVector};
use spantree_cli::invariants::{corpus_tree, CorpusEntry, CorpusFamily};
use spantree_cli::sweep::{run_sweep, DeltaSpec, ProfileKind, SweepSpec};

fn verdict(criterion: usize, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Desk parameters with the degree regime chosen from `delta`.
fn desk(n: usize, delta: usize, r_mult: f64) -> ParamSet {
    let ov = ParamOverrides { r_mult: Some(r_mult), ..desk_overrides() };
    derive_params(n, regime_k(n, delta), delta, &ov).unwrap()
}

fn desk_overrides_alpha() -> f64 {
    desk_overrides().alpha.unwrap_or(DEFAULT_ALPHA)
}

/// Whether `phi` is a bijection onto `0..n` mapping every tree edge to an edge of `g` or `r`.
fn valid_spanning_embedding(t: &RootedTree, g: &Graph, r: &Graph, phi: &[usize]) -> bool {
    let n = t.n();
    if phi.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in phi {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    t.edges().iter().all(|&(a, b)| g.has_edge(phi[a], phi[b]) || r.has_edge(phi[a], phi[b]))
}

#[test]
fn criterion_01_decomposition_exactness() {
    let clock = Instant::now();
    let families = [CorpusFamily::Path, CorpusFamily::Star, CorpusFamily::Caterpillar, CorpusFamily::Heavy, CorpusFamily::Uniform];
    let sizes = [100usize, 300, 1000, 3000, 10_000, 30_000, 100_000, 500];
    let mut trees = 0;
    let mut failures = Vec::new();
    for (fi, &family) in families.iter().enumerate() {
        for i in 0..40usize {
            let n = sizes[i % sizes.len()];
            let mut rng = Rng::new(1000 * fi as u64 + i as u64, 11);
            let cap = ((n as f64).sqrt().round() as usize).max(3);
            let probe = desk(n, cap, 1.0);
            let t = corpus_tree(&CorpusEntry { family, n }, probe.heavy_threshold(), &mut rng).unwrap();
            let t = if t.is_leaf(t.root()) { t } else { t.reroot_at_lowest_leaf() };
            let params = desk(n, t.max_degree().max(2), 1.0);
            let (ch, dec) = decompose(&t, &params, &mut rng).unwrap();
            trees += 1;

            // Edge-partition identity, counted directly from the stratum labels.
            let (mut f, mut fp, mut l1, mut lam, mut unlabelled) = (0usize, 0usize, 0usize, 0usize, 0usize);
            for v in 0..t.n() {
                match (v == t.root(), dec.stratum[v]) {
                    (true, None) => {}
                    (_, Some(Stratum::F(_))) => f += 1,
                    (_, Some(Stratum::FPrime(_))) => fp += 1,
                    (_, Some(Stratum::L1)) => l1 += 1,
                    (_, Some(Stratum::Lambda)) => lam += 1,
                    _ => unlabelled += 1,
                }
            }
            if unlabelled > 0 || f + fp + l1 + lam != n - 1 {
                failures.push(format!("{}:{n}#{i} edge identity {f}+{fp}+{l1}+{lam} != {}", family.name(), n - 1));
            }
            for c in verify_claims(&t, &ch, &dec, &params).checks {
                if c.unconditional && c.status == ClaimStatus::Fail {
                    failures.push(format!("{}:{n}#{i} {} ({:?})", family.name(), c.name, c.witness));
                }
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = trees == 200 && failures.is_empty() && secs < 60.0;
    verdict(1, pass, &format!("trees={trees} failures={} time={secs:.1}s", failures.len()));
    assert!(failures.is_empty(), "{failures:?}");
    assert_eq!(trees, 200);
    assert!(secs < 60.0, "runtime {secs:.1}s");
}

fn random_bipartite(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in n..2 * n {
            if rng.chance(p) {
                e.push((u, v));
            }
        }
    }
    Graph::from_edges(2 * n, &e).unwrap()
}

/// `A = A1 u A2`, `B = B1 u B2` with `A1 - B1` and `A2 - B2` complete and nothing else.
fn glued_halves(m: usize) -> Graph {
    let mut e = Vec::new();
    for u in 0..m {
        for v in 2 * m..3 * m {
            e.push((u, v));
        }
    }
    for u in m..2 * m {
        for v in 3 * m..4 * m {
            e.push((u, v));
        }
    }
    Graph::from_edges(4 * m, &e).unwrap()
}

#[test]
fn criterion_02_regularity_toolkit() {
    let clock = Instant::now();
    let (n, d, eps) = (300usize, 0.5, 0.1);
    let mut passed = 0;
    let mut j_bad = 0;
    for seed in 0..50u64 {
        let mut rng = Rng::new(seed, 21);
        let g = random_bipartite(n, d, &mut rng);
        let view = BipartiteView::new(&g, (0..n).collect(), (n..2 * n).collect()).unwrap();
        let cert = check_superregular(&view, d, eps, 100, &mut rng).unwrap();
        if cert.passed() {
            passed += 1;
            if cert.j_max_degree as f64 > 2.0 * eps * n as f64 {
                j_bad += 1;
            }
        }
    }
    let m = n / 2;
    let glued = glued_halves(m);
    let view = BipartiteView::new(&glued, (0..2 * m).collect(), (2 * m..4 * m).collect()).unwrap();
    let mut glued_fail = 0;
    for seed in 0..50u64 {
        let cert = check_superregular(&view, d, eps, 100, &mut Rng::new(seed, 22)).unwrap();
        if cert.first_violation == Some(Clause::SubsetDensity) {
            glued_fail += 1;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = passed >= 45 && j_bad == 0 && glued_fail == 50 && secs < 120.0;
    verdict(2, pass, &format!("passed={passed}/50 j_violations={j_bad} glued_clause_iii={glued_fail}/50 time={secs:.1}s"));
    assert_eq!(j_bad, 0);
    assert_eq!(glued_fail, 50);
    assert!(passed >= 45, "certifier passed only {passed}/50");
    assert!(secs < 120.0);
}

/// Random family obeying the ratio condition and the caps for `r`.
fn ratio_family(m: usize, r: usize, caps: Caps, rng: &mut Rng) -> Vec<WeightVector> {
    let lim = 2 * r * r;
    (0..m)
        .map(|_| {
            let big = 1 + rng.below(caps.d1 as usize) as u64;
            let small = if rng.chance(0.5) { 0 } else { rng.below(big as usize / (lim + 1) + 1) as u64 };
            let small = if small * lim as u64 >= big { 0 } else { small };
            let (q1, q2) = if rng.chance(0.5) { (big, small) } else { (small, big) };
            let q3 = rng.below(caps.d2 as usize + 1) as u64;
            let q4 = rng.below(caps.d2 as usize + 1) as u64;
            let q5 = rng.below(caps.d3 as usize + 1) as u64;
            let q6 = rng.below(caps.d3 as usize + 1) as u64;
            [q1, q2, q3, q4, q5, q6]
        })
        .collect()
}

fn strictly_decreasing(trace: &[(f64, usize)]) -> (usize, usize) {
    let mut ok = 0;
    let mut bad = 0;
    for w in trace.windows(2) {
        let (a, b) = (w[0], w[1]);
        let tol = 1e-9 * a.0.abs().max(1.0);
        if b.0 < a.0 - tol || ((b.0 - a.0).abs() <= tol && b.1 < a.1) {
            ok += 1;
        } else {
            bad += 1;
        }
    }
    (ok, bad)
}

#[test]
fn criterion_03_vector_partition() {
    let clock = Instant::now();
    let t_const = 4.0;
    let beta = 0.2;
    let mut good = 0;
    let mut moves_ok = 0;
    let mut moves_bad = 0;
    for run in 0..100u64 {
        let r = if run % 2 == 0 { 2 } else { 4 };
        let mut rng = Rng::new(run, 31);
        let caps = Caps { d1: 20.0, d2: 6.0, d3: 3.0 };
        let m = 2000 + rng.below(2000);
        let family = ratio_family(m, r, caps, &mut rng);
        let raw: Vec<f64> = (0..2 * r).map(|_| 1.0 + rng.unit()).collect();
        let total: f64 = raw.iter().sum();
        let alphas: Vec<f64> = raw.iter().map(|x| x / total).collect();
        assert!(alphas.iter().all(|&a| a >= 1.0 / (2.0 * t_const * r as f64) && a <= 2.0 * t_const / r as f64));

        let vp = distribute_vectors(&family, &alphas, caps, beta, t_const, &mut rng, 50).unwrap();
        assert_eq!(vp.a1_violations + vp.a2_violations, 0);

        // (B1)-(B3) recomputed from the returned parts.
        let parts = 2 * r;
        let stat = |j: usize| {
            let mut s = vec![0u64; parts];
            for (q, &c) in family.iter().zip(&vp.part) {
                s[c] += q[2 * j];
                s[c ^ 1] += q[2 * j + 1];
            }
            s
        };
        let norm: Vec<f64> = stat(0).iter().zip(&alphas).map(|(&x, &a)| x as f64 / a).collect();
        let spread = norm.iter().cloned().fold(f64::MIN, f64::max) - norm.iter().cloned().fold(f64::MAX, f64::min);
        let b1 = spread <= (r as f64).powi(5) * caps.d1;
        let lower = |j: usize, dj: f64| {
            let mj: f64 = family.iter().map(|q| (q[2 * j] + q[2 * j + 1]) as f64).sum();
            stat(j).iter().zip(&alphas).all(|(&x, &a)| x as f64 >= a * beta * beta * mj - (r * r) as f64 * dj)
        };
        if b1 && lower(1, caps.d2) && lower(2, caps.d3) {
            good += 1;
        }
        let (ok, bad) = strictly_decreasing(&vp.trace);
        moves_ok += ok;
        moves_bad += bad;

        // Local search from a maximally skewed start exercises many moves.
        let mut part = vec![0usize; family.len()];
        let (_, trace) = rebalance_traced(&family, &alphas, caps.d1, &mut part, &vec![true; family.len()]);
        let (ok, bad) = strictly_decreasing(&trace);
        moves_ok += ok;
        moves_bad += bad;
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = good >= 99 && moves_bad == 0 && moves_ok > 0 && secs < 30.0;
    verdict(3, pass, &format!("bounds={good}/100 strict_moves={moves_ok} non_strict={moves_bad} time={secs:.1}s"));
    assert!(good >= 99, "(B1)-(B3) held in {good}/100");
    assert_eq!(moves_bad, 0);
    assert!(moves_ok > 0);
    assert!(secs < 30.0);
}

/// Runs of the end-to-end pipeline shared by criteria 4 and 5.
struct E2eRun {
    success: bool,
    ledger_exact: bool,
    valid: bool,
    certificate: bool,
}

fn e2e_runs(count: u64) -> Vec<E2eRun> {
    let configs = [(600usize, 25usize, "two-cliques"), (1000, 32, "two-cliques"), (1000, 32, "dense-random"), (1500, 40, "two-cliques")];
    (0..count)
        .map(|s| {
            let (n, delta, family) = configs[s as usize % configs.len()];
            let params = desk(n, delta, 4.0);
            let mut rng = Rng::new(s, 41);
            let profile = if s % 5 == 4 {
                TreeProfile::MaxDegreeCapped(delta)
            } else {
                TreeProfile::HeavyLeafRich { fraction: 0.5, delta, threshold: params.heavy_threshold() }
            };
            let t = gen_random_tree(n, &profile, &mut rng).unwrap();
            let g = gen_host(&HostFamily::parse(family).unwrap(), n, params.alpha, &mut rng).unwrap();
            let r = gen_gnp(n, params.r_density(), &mut rng).unwrap();
            let cfg = EmbedConfig { r_key: s, ..EmbedConfig::default() };
            let res = embed_tree_with_r(&t, &g, &r, &params, &cfg, &mut rng);
            E2eRun {
                success: res.success,
                ledger_exact: res.ledger.as_ref().is_some_and(|l| l.all()),
                valid: res.phi.as_ref().is_some_and(|phi| valid_spanning_embedding(&t, &g, &r, phi)),
                certificate: res.certificate.as_ref().is_some_and(|c| c.bijective),
            }
        })
        .collect()
}

#[test]
fn criterion_04_exact_count_ledger() {
    let runs = e2e_runs(150);
    let successes: Vec<&E2eRun> = runs.iter().filter(|r| r.success).collect();
    let exact = successes.iter().filter(|r| r.ledger_exact).count();
    let pass = successes.len() >= 100 && exact == successes.len();
    verdict(4, pass, &format!("successes={} ledger_exact={exact}", successes.len()));
    assert!(successes.len() >= 100, "only {} successful runs", successes.len());
    assert_eq!(exact, successes.len());
}

#[test]
fn criterion_05_end_to_end_validity() {
    let runs = e2e_runs(120);
    let successes: Vec<&E2eRun> = runs.iter().filter(|r| r.success).collect();
    let valid = successes.iter().filter(|r| r.valid && r.certificate).count();
    let pass = !successes.is_empty() && valid == successes.len();
    verdict(5, pass, &format!("successes={} valid={valid}", successes.len()));
    assert!(!successes.is_empty());
    assert_eq!(valid, successes.len());
}

#[test]
fn criterion_06_oracle_cross_check() {
    let mut runs = 0;
    let mut successes = 0;
    let mut agree = 0;
    let mut oracle_complete = 0;
    let mut oracle_found = 0;
    for n in 4..=12usize {
        for (ti, t) in enumerate_free_trees(n).iter().enumerate() {
            let delta = t.max_degree().max(2);
            // Two cliques on n vertices have minimum degree floor(n/2) - 1.
            let alpha = ((n / 2 - 1) as f64 / n as f64).min(desk_overrides_alpha());
            let ov = ParamOverrides { alpha: Some(alpha), ..desk_overrides() };
            let params = derive_params(n, regime_k(n, delta), delta, &ov).unwrap();
            for seed in 0..5u64 {
                let mut rng = Rng::new(seed, (n * 10_000 + ti) as u64);
                let g = gen_host(&HostFamily::TwoCliques, n, params.alpha, &mut rng).unwrap();
                let r = gen_gnp(n, 0.5, &mut rng).unwrap();
                let cfg = EmbedConfig { r_key: seed, ..EmbedConfig::default() };
                let res = embed_tree_with_r(t, &g, &r, &params, &cfg, &mut rng);
                runs += 1;
                let host = g.union(&r).unwrap();
                let out = brute_force_embed(t, &host, OracleBudget::default());
                if out.verdict.complete() {
                    oracle_complete += 1;
                }
                let found = matches!(out.verdict, OracleVerdict::Found(_));
                if found {
                    oracle_found += 1;
                }
                if res.success {
                    successes += 1;
                    let phi_ok = res.phi.as_ref().is_some_and(|phi| valid_spanning_embedding(t, &g, &r, phi));
                    if found && phi_ok {
                        agree += 1;
                    }
                }
            }
        }
    }

    // On K_{4,4} a tree on 8 vertices embeds exactly when its bipartition is balanced.
    let k44 = Graph::complete_bipartite(4, 4);
    let mut k44_trees = 0;
    let mut k44_match = 0;
    for t in enumerate_free_trees(8) {
        let even = (0..8).filter(|&v| t.depth(v) % 2 == 0).count();
        let out = brute_force_embed(&t, &k44, OracleBudget::default());
        k44_trees += 1;
        if out.verdict.complete() && matches!(out.verdict, OracleVerdict::Found(_)) == (even == 4) {
            k44_match += 1;
        }
    }
    let pass = agree == successes && oracle_complete == runs && k44_match == k44_trees;
    let detail = format!(
        "runs={runs} embed_successes={successes} oracle_agrees={agree} oracle_found={oracle_found} oracle_complete={oracle_complete} k44={k44_match}/{k44_trees}"
    );
    verdict(6, pass, &detail);
    assert_eq!(oracle_complete, runs);
    assert_eq!(agree, successes);
    assert_eq!(k44_match, k44_trees);
}

/// Success rates of the staircase sweep, per column in multiplier order `1/4, 1/2, 1, 2, 4`.
const FROZEN_RATES: [[f64; 5]; 3] = [[0.0, 0.0, 0.0, 0.0, 0.9], [0.0, 0.0, 0.8, 1.0, 1.0], [0.0, 0.0, 0.7, 1.0, 1.0]];

#[test]
fn criterion_07_threshold_monotonicity() {
    let clock = Instant::now();
    let spec = SweepSpec {
        ns: vec![4096],
        deltas: ["n^0.34", "n^0.5", "n^0.67"].iter().map(|s| DeltaSpec::parse(s).unwrap()).collect(),
        p_mults: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        families: vec![HostFamily::TwoCliques],
        profiles: vec![ProfileKind::parse("heavy").unwrap()],
        trials: 10,
        seed: 1,
        overrides: desk_overrides(),
        embed: EmbedConfig { retries: 1, ..EmbedConfig::default() },
        timings: false,
    };
    let out = run_sweep(&spec);
    let columns = out.columns();
    let rates: Vec<Vec<f64>> = columns.values().map(|v| v.iter().map(|x| x.1).collect()).collect();
    let gaps = columns.values().filter(|v| v.last().unwrap().1 - v[0].1 >= 0.3).count();
    let secs = clock.elapsed().as_secs_f64();
    let frozen: Vec<Vec<f64>> = FROZEN_RATES.iter().map(|r| r.to_vec()).collect();
    let pass = out.monotone() && gaps >= 2 && rates == frozen;
    verdict(7, pass, &format!("rates={rates:?} monotone={} gap_columns={gaps} time={secs:.0}s", out.monotone()));
    assert!(out.monotone(), "{rates:?}");
    assert!(gaps >= 2, "{rates:?}");
    assert_eq!(rates, frozen, "rates drifted from the frozen regression");
}

#[test]
fn criterion_08_extremal_sharpness() {
    let clock = Instant::now();
    let spec = ExtremalSpec::auto(24, 1, 12, 0.01);
    assert_eq!(spec.regime, ExtremalRegime::LargeDelta);
    let budget = OracleBudget { time: Duration::from_secs(30), ..OracleBudget::default() };
    let bip = verify_nonembeddability(&spec, DenseHost::Bipartite, 20, budget, &mut Rng::new(1, 81)).unwrap();
    let comp = verify_nonembeddability(&spec, DenseHost::Complete, 20, budget, &mut Rng::new(1, 82)).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let pass = bip.complete() > 0 && bip.non_embedded() == bip.complete() && comp.embedded() == 20 && secs < 600.0;
    let detail = format!(
        "K12,12 non-embedded={}/{} complete; K24 embedded={}/20; time={secs:.1}s",
        bip.non_embedded(),
        bip.complete(),
        comp.embedded()
    );
    verdict(8, pass, &detail);
    assert!(bip.complete() > 0);
    assert_eq!(bip.non_embedded(), bip.complete());
    assert_eq!(comp.embedded(), 20);
    assert!(secs < 600.0);
}

#[test]
fn criterion_09_sampler_distribution() {
    let (u, v, samples) = (200usize, 400usize, 5000usize);
    let mut rng = Rng::new(9, 91);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let f: Vec<f64> = (0..u).map(|_| if rng.chance(0.3) { 0.0 } else { rng.unit() * 10.0 }).collect();
        let size = 40 + rng.below(200);
        let b = rng.sample_indices(v, size);
        // Each vertex of V is hit by a uniform injection with probability |U|/|V|
        // and then carries a uniformly random preimage, so the mean is |B| ||f||_1 / |V|.
        let expect = b.len() as f64 * f.iter().sum::<f64>() / v as f64;
        let rows = check_injection_distribution(u, v, &[f], &[1.0], &[b], 0.1, samples, &mut rng).unwrap();
        assert_eq!(rows.len(), 1);
        worst = worst.max((rows[0].mean - expect).abs() / expect);
    }
    let pass = worst <= 0.02;
    verdict(9, pass, &format!("max_relative_error={worst:.4}"));
    assert!(worst <= 0.02, "relative error {worst}");
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn run_cli(args: &[&str], out: &PathBuf) -> Vec<u8> {
    let _ = std::fs::remove_file(out);
    let status = Command::new(env!("CARGO_BIN_EXE_spantree"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SPANTREE_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success(), "spantree {args:?} failed");
    std::fs::read(out).unwrap()
}

#[test]
fn criterion_10_reproducibility() {
    let config = scratch("acceptance.conf");
    std::fs::write(&config, "# acceptance configuration\nslack = 4\nr_mult = 4\n").unwrap();
    let config = config.to_str().unwrap().to_string();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("sweep", vec!["sweep", "--n", "600", "--delta", "25", "--p-mult", "1,4", "--trials", "3", "--seed", "5", "--config", &config]),
        ("decompose", vec!["decompose", "--n", "3000", "--delta", "50", "--seed", "5", "--table", "edges", "--config", &config]),
        ("invariants", vec!["invariants", "--corpus", "path:300,heavy:1000,uniform:500", "--per-entry", "2", "--seed", "5", "--config", &config]),
    ];
    let mut identical = 0;
    for (name, args) in &cases {
        let a = run_cli(args, &scratch(&format!("{name}-a.csv")));
        let b = run_cli(args, &scratch(&format!("{name}-b.csv")));
        assert!(!a.is_empty());
        if a == b {
            identical += 1;
        }
    }
    let pass = identical == cases.len();
    verdict(10, pass, &format!("byte_identical={identical}/{}", cases.len()));
    assert_eq!(identical, cases.len());
}
