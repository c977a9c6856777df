use std::f64::consts::PI;

use proptest::prelude::*;
use rsform::corpus::{plane_families, x_axis};
use rsform::reduction::{detect_rs, diffeo_form};
use rsform::sector::{diag_entries, dim2_classify, saddle_domain, well_placed, Dim2Case};
use rsform::{exp_field, inverse_map, Coeff, FormalMap, GaussRat, Jet};

#[test]
fn plane_families_meet_the_guaranteed_counts() {
    for (label, k, p, x) in plane_families(10) {
        let f = exp_field(&x).unwrap();
        let finv = inverse_map(&f).unwrap();
        let axis = x_axis(2, 10);
        let a = detect_rs(&f, &axis).unwrap();
        let b = detect_rs(&finv, &axis).unwrap();
        assert_eq!((a.k, a.p), (k, p), "{label}");
        let rep = dim2_classify(&a, &b).unwrap();
        assert!(rep.guarantee_met, "{label}: {rep:?}");
        let expected = match rep.case {
            Dim2Case::A => (k, k),
            Dim2Case::B | Dim2Case::D => (p, p),
            Dim2Case::C => (1, 1),
        };
        assert_eq!(rep.guaranteed, expected, "{label}");
        assert!(well_placed(&a).unwrap().overall || well_placed(&b).unwrap().overall, "{label}");
    }
}

fn sample_membership(d: &rsform::sector::AngularDomain) -> Vec<bool> {
    (0..720).map(|i| d.contains(PI * (i as f64 + 0.37) / 360.0, true)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Conjugating by x ↦ x + a x^{p+1} + b x^{p+2} leaves the saddle domain unchanged.
    #[test]
    fn saddle_domain_is_invariant(family in 0usize..32, a in -3i64..=3, b in -3i64..=3) {
        let t = 10;
        let (label, _, p, x) = plane_families(t).swap_remove(family);
        let f = exp_field(&x).unwrap();
        let e = (p + 1).max(2);
        let h = FormalMap::new(vec![
            Jet::from_exps(2, t, vec![(vec![1, 0], GaussRat::from_i64(1)), (vec![e, 0], GaussRat::from_i64(a)), (vec![e + 1, 0], GaussRat::from_i64(b))]),
            Jet::var(2, t, 1),
        ]).unwrap();
        let g = inverse_map(&h).unwrap().compose(&f.compose(&h).unwrap()).unwrap();
        let d0 = diffeo_form(&f).unwrap();
        let d1 = diffeo_form(&g).unwrap();
        prop_assert_eq!((d0.k, d0.p), (d1.k, d1.p));
        let s0 = saddle_domain(d0.lambda.to_c64(), &diag_entries(&d0), d0.p);
        let s1 = saddle_domain(d1.lambda.to_c64(), &diag_entries(&d1), d1.p);
        prop_assert_eq!(sample_membership(&s0), sample_membership(&s1), "{}", label);
    }
}
