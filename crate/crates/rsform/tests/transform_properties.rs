use proptest::prelude::*;
use rsform::corpus::{random_permissible, rng};
use rsform::exp_field;
use rsform::transforms::{pushforward_holds, transform_curve, transform_field, transform_map};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn steps_commute_with_exp(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_permissible(8, &mut r);
        let mut x = inst.field.clone();
        let mut f = exp_field(&x).unwrap();
        let mut c = inst.curve.clone();
        for step in &inst.steps {
            let xt = transform_field(&x, step).unwrap();
            prop_assert!(pushforward_holds(&x, &xt, step).unwrap(), "{}", inst.label);
            prop_assert!(xt.multiplicity() >= x.multiplicity(), "{}", inst.label);
            let ft = transform_map(&f, step).unwrap();
            let t = ft.trunc().min(xt.trunc());
            prop_assert_eq!(exp_field(&xt.truncate(t)).unwrap(), ft.truncate(t), "{}", inst.label);
            c = transform_curve(&c, step).unwrap();
            x = xt;
            f = ft;
        }
        prop_assert!(c.is_graph() || c.multiplicity() == 1);
    }
}
