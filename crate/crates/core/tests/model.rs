mod common;

use common::*;
use num_rational::BigRational;
use num_traits::{One, Zero};
use onetwo::hexlattice::{build_box, EdgeClass};
use onetwo::model::*;
use onetwo::rng;
use proptest::prelude::*;
use rand::Rng;

fn all_boundaries(n: usize) -> impl Iterator<Item = BoundaryCondition> {
    (0..1u32 << n).map(move |m| BoundaryCondition::new((0..n).map(|i| m >> i & 1 == 1).collect()))
}

#[test]
fn weights_reject_nonpositive() {
    assert!(Weights::new(0.0, 1.0, 1.0).is_err());
    assert!(Weights::new(1.0, -1.0, 1.0).is_err());
    assert!(Weights::new(1.0, 1.0, f64::NAN).is_err());
    let w = Weights::parse("1,2,3").unwrap();
    assert_eq!((w.a, w.b, w.c), (1.0, 2.0, 3.0));
    assert_eq!(w.param(EdgeClass::Horizontal), 1.0);
    assert_eq!(w.param(EdgeClass::Nwse), 2.0);
    assert_eq!(w.param(EdgeClass::Nesw), 3.0);
}

#[test]
fn enumeration_matches_brute_force() {
    let g = build_box(1, 2).unwrap();
    let free = g.internal.clone();
    for b in all_boundaries(g.boundary.len()).step_by(7) {
        let sp = enumerate_states(&g, &b).unwrap();
        let mut brute = Vec::new();
        for m in 0..1u32 << free.len() {
            let mut c = b.base_configuration(&g);
            for (i, &e) in free.iter().enumerate() {
                c.set(e, m >> i & 1 == 1);
            }
            if is_valid(&g, &c) {
                brute.push(c);
            }
        }
        brute.sort();
        let mut got = sp.states.clone();
        got.sort();
        assert_eq!(got, brute);
        assert_eq!(sp.states, enumerate_states(&g, &b).unwrap().states);
        assert_eq!(is_admissible(&g, &b), !sp.is_empty());
        for (i, s) in sp.states.iter().enumerate() {
            assert_eq!(sp.index_of(s), Some(i));
        }
    }
}

#[test]
fn guard_is_enforced() {
    let g = build_box(2, 3).unwrap();
    let b = random_admissible_boundary(&g, &mut rng::from_seed(0));
    assert!(enumerate_states(&g, &b).is_err());
    let (g, b) = seeded(2, 2, 0);
    let guard = EnumGuard { max_free_edges: 100, max_states: 3 };
    assert!(enumerate_states_guarded(&g, &b, guard).is_err());
}

#[test]
fn measure_sums_to_one_exactly() {
    for t in WEIGHTS {
        let w = weights(t);
        for seed in 0..3 {
            let (g, b) = seeded(1, 2, seed);
            let sp = enumerate_states(&g, &b).unwrap();
            let pi = measure_s::<BigRational>(&g, &w, &sp).unwrap();
            let total = pi.iter().fold(BigRational::zero(), |a, x| a + x);
            assert!(total.is_one());
            let f = measure(&g, &w, &sp).unwrap();
            assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn class_swap_symmetry_on_hexagon() {
    // a<->b with the reflection exchanging Horizontal and NWSE leaves the weight multiset fixed
    let g = build_box(1, 1).unwrap();
    let collect = |w: Weights| {
        let mut v: Vec<u64> = Vec::new();
        for b in all_boundaries(g.boundary.len()) {
            for s in enumerate_states(&g, &b).unwrap().states {
                v.push(config_weight(&g, &w, &s).round() as u64);
            }
        }
        v.sort();
        v
    };
    assert_eq!(collect(Weights::new(2.0, 3.0, 5.0).unwrap()), collect(Weights::new(3.0, 2.0, 5.0).unwrap()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_positive_iff_valid(seed in any::<u64>(), flips in 0usize..4) {
        let g = build_box(2, 2).unwrap();
        let w = Weights::new(1.0, 2.0, 3.0).unwrap();
        let mut r = rng::from_seed(seed);
        let mut c = random_configuration(&g, &mut r);
        prop_assert!(is_valid(&g, &c));
        for _ in 0..flips {
            let e = r.gen_range(0..g.n_edges());
            c.toggle(e);
        }
        prop_assert_eq!(config_weight(&g, &w, &c) > 0.0, is_valid(&g, &c));
    }

    #[test]
    fn local_weight_complement_invariant(seed in any::<u64>(), a in 0.1f64..10.0, b in 0.1f64..10.0, c in 0.1f64..10.0) {
        let g = build_box(2, 2).unwrap();
        let w = Weights::new(a, b, c).unwrap();
        let cfg = random_configuration(&g, &mut rng::from_seed(seed));
        let comp = cfg.complement();
        for v in 0..g.n_vertices() {
            prop_assert_eq!(distinguished_slot(&g, &cfg, v), distinguished_slot(&g, &comp, v));
            prop_assert_eq!(local_weight_at(&g, &w, &cfg, v), local_weight_at(&g, &w, &comp, v));
        }
    }

    #[test]
    fn random_boundaries_are_admissible(seed in any::<u64>(), k in 1u32..3, n in 1u32..3) {
        let g = build_box(k, n).unwrap();
        let b = random_admissible_boundary(&g, &mut rng::from_seed(seed));
        prop_assert!(is_admissible(&g, &b));
        prop_assert!(is_admissible(&g, &b.complement()));
    }
}
