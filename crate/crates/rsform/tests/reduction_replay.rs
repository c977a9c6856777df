use proptest::prelude::*;
use rsform::corpus::{euler_pair, plane_families, x_axis};
use rsform::reduction::{reduce_diffeo, restricted_order};
use rsform::transforms::{transform_curve, transform_map, CoordChange, TransformStep};
use rsform::{exp_field, Coeff, GaussRat, Series};

#[test]
fn euler_reduction_replays() {
    let (f, c) = euler_pair(12).unwrap();
    let red = reduce_diffeo(&f, &c).unwrap();
    assert_eq!(red.field.seq.apply_map(&f).unwrap(), red.map);
    assert_eq!(red.field.seq.apply_curve(&c).unwrap(), red.field.curve);
    assert_eq!((red.data.k, red.data.p), (1, 1));
    assert_eq!(restricted_order(&red.map, &red.field.curve).unwrap(), Some(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // A translation y = ỹ + q(x) hides the invariant axis; reduction finds
    // the same exponents and its certificate replays.
    #[test]
    fn hidden_axis_is_recovered(family in 0usize..32, q1 in -3i64..=3, q2 in -3i64..=3) {
        let k0 = plane_families(4).swap_remove(family).1;
        let t = 4 * (k0 + 2);
        let (label, k, p, x) = plane_families(t).swap_remove(family);
        let f = exp_field(&x).unwrap();
        let q = Series::from_coeffs(t, vec![GaussRat::from_i64(0), GaussRat::from_i64(q1), GaussRat::from_i64(q2)]);
        let step = TransformStep::coord(CoordChange::Translate(vec![q]));
        let g = transform_map(&f, &step).unwrap();
        let c = transform_curve(&x_axis(2, t), &step).unwrap();
        let red = reduce_diffeo(&g, &c).unwrap();
        prop_assert_eq!((red.data.k, red.data.p), (k, p), "{}", label);
        prop_assert_eq!(red.field.seq.apply_map(&g).unwrap(), red.map.clone(), "{}", label);
    }
}
