mod common;

use common::*;
use driftlab::entropy_shadows::{
    ball_enumerate, convolve, entropy, shadow_contains, sphere_enumerate, ConvolutionTable, Shadow,
};
use driftlab::models::{distance, SearchConfig};
use driftlab::slopes::{farey_enumerate, intersection_number};
use driftlab::walk::Measure;
use driftlab::GroupElement;
use proptest::prelude::*;
use std::collections::BTreeSet;

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn busemann_cocycle_identity((m, a, b, xi) in (model(), element(), element(), direction())) {
        cocycle_identity(&m, &a, &b, &xi)?;
    }

    #[test]
    fn horofunction_equivariance((m, g, xi, x) in (model(), element(), direction(), element())) {
        equivariance(&m, &g, &xi, &x)?;
    }

    #[test]
    fn horofunction_is_one_lipschitz(((m, x, y), xi) in (model_and_points(), direction())) {
        one_lipschitz(&m, &x, &y, &xi)?;
    }

    #[test]
    fn horofunction_vanishes_at_base((m, xi) in (model(), direction())) {
        vanishes_at_base(&m, &xi)?;
    }

    #[test]
    fn distance_is_isometry_invariant(((_, x, y), g) in (model_and_points(), element())) {
        isometry_invariance(&x, &y, &g)?;
    }

    #[test]
    fn sup_search_is_monotone((_, x, y) in model_and_points()) {
        sup_monotonicity(&x, &y)?;
    }

    #[test]
    fn triangle_inequality(((_, x, y), g) in (model_and_points(), element())) {
        let cfg = SearchConfig::default();
        let z = x.act(&g);
        let xy = distance(&x, &y, &cfg).unwrap();
        let yz = distance(&y, &z, &cfg).unwrap();
        let xz = distance(&x, &z, &cfg).unwrap();
        prop_assert!(xz.log_sup <= xy.log_sup + yz.log_sup + 1e-9);
        prop_assert!(distance(&x, &x, &cfg).unwrap().log_sup.abs() <= 1e-12);
    }

    #[test]
    fn shadow_rotation_invariance(c in element(), xi in direction(), r in 0.05f64..3.0) {
        let s = GroupElement::new(0, -1, 1, 0).unwrap();
        let a = shadow_contains(&Shadow::new(c, r).unwrap(), &xi);
        let b = shadow_contains(&Shadow::new(s.mul(&c).unwrap(), r).unwrap(), &xi.act(&s));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn shadow_monotone_in_radius(c in element(), xi in direction(), r in 0.01f64..2.0, k in 1.0f64..3.0) {
        let small = shadow_contains(&Shadow::new(c, r).unwrap(), &xi);
        let big = shadow_contains(&Shadow::new(c, r * k).unwrap(), &xi);
        prop_assert!(!small || big);
    }

    #[test]
    fn entropy_left_invariance(g in element(), a in element(), b in element(), p in 0.05f64..0.95) {
        let mu = Measure::new(vec![(a, p), (b, 1.0 - p)]).unwrap();
        let base = ConvolutionTable::from_measure(&Measure::dirac(g));
        let t = convolve(&base, &mu).unwrap();
        prop_assert!((entropy(&t) - entropy(&ConvolutionTable::from_measure(&mu))).abs() < 1e-12);
        prop_assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intersection_is_invariant(g in element(), i in 0usize..40, j in 0usize..40) {
        let fs = farey_enumerate(6).unwrap();
        let (a, b) = (fs[i % fs.len()], fs[j % fs.len()]);
        let ga = driftlab::slopes::act(&g, a).unwrap();
        let gb = driftlab::slopes::act(&g, b).unwrap();
        prop_assert_eq!(intersection_number(a, b), intersection_number(ga, gb));
    }
}

#[test]
fn determinism_across_worker_counts() {
    let mut r = runner();
    r.run(&(any::<u64>(), element(), element()), |(s, g, h)| determinism(s, &g, &h)).unwrap();
}

#[test]
fn spheres_partition_the_ball() {
    let mut union = BTreeSet::new();
    for k in 0..=4 {
        for g in sphere_enumerate(k).unwrap() {
            assert!(union.insert(g), "{g} appears in two spheres");
        }
    }
    let ball: BTreeSet<_> = ball_enumerate(4).unwrap().into_iter().collect();
    assert_eq!(union, ball);
}
