//! Property tests for the tree decomposition.

use proptest::prelude::*;
use spantree::decomposition::{decompose, verify_claims, ClaimStatus, Stratum};
use spantree::params::{derive_params, desk_overrides, ParamOverrides};
use spantree::rng::Rng;
use spantree::tree::{gen_random_tree, TreeProfile};

fn profile(kind: u8, delta: usize, thr: f64) -> TreeProfile {
    match kind % 4 {
        0 => TreeProfile::UniformPrufer,
        1 => TreeProfile::MaxDegreeCapped(delta),
        2 => TreeProfile::SpiderMix(delta),
        _ => TreeProfile::HeavyLeafRich { fraction: 0.5, delta, threshold: thr },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unconditional_claims_hold(n in 50usize..1500, kind in 0u8..4, seed in any::<u64>(), npp in 1.0f64..12.0, k in 1usize..3) {
        let delta = ((n as f64).sqrt() as usize).max(8);
        let ov = ParamOverrides { p_prime: Some(npp / n as f64), ..desk_overrides() };
        let ps = derive_params(n, k, delta, &ov).unwrap();
        let mut rng = Rng::new(seed, 0);
        let t = match gen_random_tree(n, &profile(kind, delta, ps.heavy_threshold()), &mut rng) {
            Ok(t) => t,
            Err(_) => return Ok(()),
        };
        let (ch, dec) = decompose(&t, &ps, &mut rng).unwrap();
        let rep = verify_claims(&t, &ch, &dec, &ps);
        for c in &rep.checks {
            if c.unconditional {
                prop_assert_eq!(c.status, ClaimStatus::Pass, "{} {:?}", c.name, c.witness);
            }
        }
        let total: usize = dec.stratum.iter().filter(|s| s.is_some()).count();
        prop_assert_eq!(total, n - 1);
        // Every heavy leaf edge lands in L_1 or Lambda or an F' stratum via its colour.
        for v in 0..n {
            if let Some(Stratum::F(i)) = dec.stratum[v] {
                prop_assert!(i >= 1 && i <= dec.levels + 1);
            }
        }
    }

    #[test]
    fn decomposition_is_deterministic(n in 30usize..400, seed in any::<u64>()) {
        let ps = derive_params(n, 1, 10, &ParamOverrides { p_prime: Some(3.0 / n as f64), ..desk_overrides() }).unwrap();
        let t = gen_random_tree(n, &TreeProfile::MaxDegreeCapped(10), &mut Rng::new(seed, 0)).unwrap();
        let a = decompose(&t, &ps, &mut Rng::new(1, 0)).unwrap();
        let b = decompose(&t, &ps, &mut Rng::new(2, 0)).unwrap();
        prop_assert_eq!(a, b);
    }
}
