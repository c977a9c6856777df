use num_traits::Zero;
use rsform::corpus::turrittin_suite;
use rsform::turrittin::{apply_t, poincare_rank, rs_form, turrittin_reduce, TTransform};

#[test]
fn suite_reaches_principal_form_and_replays() {
    let suite = turrittin_suite(14, 3);
    assert!(suite.len() >= 20);
    for (name, sys) in suite {
        let out = turrittin_reduce(&sys).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut cur = poincare_rank(&sys).unwrap();
        for t in &out.transforms {
            let next = apply_t(&cur, t).unwrap();
            if matches!(t, TTransform::Shearing(_)) {
                assert!(next.rank <= cur.rank, "{name}: shearing raised the rank");
            }
            cur = next;
        }
        assert_eq!(cur, out.system, "{name}: replay differs");
        assert_eq!(rs_form(&cur).unwrap(), out.form, "{name}");
        let f = &out.form;
        if f.p == 0 {
            assert!(!f.c.is_zero());
        } else {
            assert!(f.d.iter().any(|d| !d.coeff(0).is_zero()), "{name}: D(0) = 0");
            assert!(f.d.iter().all(|d| d.trunc() + 1 == f.p));
        }
    }
}

#[test]
fn reduction_is_idempotent_on_its_output() {
    for (name, sys) in turrittin_suite(14, 5).into_iter().step_by(3) {
        let out = turrittin_reduce(&sys).unwrap();
        let again = turrittin_reduce(&out.system).unwrap();
        assert!(again.transforms.is_empty(), "{name}");
    }
}
