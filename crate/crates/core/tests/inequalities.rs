use approx::assert_relative_eq;
use fracp_core::inequalities::{
    brute_force_constant, check, constant_ratio, sweep, Budget, Exponents, InequalityId,
};
use proptest::prelude::*;

fn exps(id: InequalityId, p: f64, second: f64) -> Exponents {
    Exponents::new(id, p, second).unwrap()
}

#[test]
fn holder_constant_for_squares_is_two() {
    // ||a|a - |b|b| >= |a - b|²/C is tight at b = -a with C = 2.
    let e = exps(InequalityId::Holder, 2.0, 2.0);
    let est = brute_force_constant(
        InequalityId::Holder,
        e,
        Budget {
            samples: 1 << 14,
            rounds: 40,
        },
        5,
    )
    .unwrap();
    assert_relative_eq!(est.constant, 2.0, max_relative = 1e-6);
    assert!(est.constant <= 2.0 + 1e-12);
    assert_eq!(
        constant_ratio(InequalityId::Holder, e, &[1.5, -1.5]).unwrap(),
        Some(2.0)
    );
}

#[test]
fn coercive_constant_at_p_two_is_one() {
    let e = exps(InequalityId::Coercive, 2.0, 0.0);
    let est = brute_force_constant(
        InequalityId::Coercive,
        e,
        Budget {
            samples: 4096,
            rounds: 10,
        },
        1,
    )
    .unwrap();
    assert_relative_eq!(est.constant, 1.0, max_relative = 1e-12);
}

#[test]
fn constant_estimates_grow_with_the_budget() {
    for (id, p, second) in [
        (InequalityId::Holder, 3.0, 2.5),
        (InequalityId::Coercive, 3.5, 0.0),
        (InequalityId::MixedCoercive, 2.5, 2.0),
    ] {
        let e = exps(id, p, second);
        let mut last = 0.0;
        for (samples, rounds) in [(1 << 8, 5), (1 << 10, 5), (1 << 10, 20), (1 << 13, 20)] {
            let c = brute_force_constant(id, e, Budget { samples, rounds }, 9)
                .unwrap()
                .constant;
            assert!(c >= last, "{id}: {c} < {last}");
            last = c;
        }
    }
}

#[test]
fn sweeps_are_deterministic_and_sensitive() {
    let id = InequalityId::Holder;
    let e = exps(id, 2.0, 2.0);
    let a = sweep(id, e, 20_000, 42, Some(2.02)).unwrap();
    let b = sweep(id, e, 20_000, 42, Some(2.02)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.violations, 0);
    let tight = sweep(id, e, 20_000, 42, Some(1.5)).unwrap();
    assert!(tight.violations > 0);
}

#[test]
fn explicit_constants_need_no_input() {
    let e = exps(InequalityId::Monotone, 3.0, 2.0);
    assert!(
        check(InequalityId::Monotone, e, &[1.0, -2.0], None)
            .unwrap()
            .pass
    );
    let e = exps(InequalityId::Coercive, 3.0, 0.0);
    assert!(check(InequalityId::Coercive, e, &[1.0, -2.0], None).is_err());
    assert!(check(
        InequalityId::Lipschitz,
        exps(InequalityId::Lipschitz, 3.0, 0.0),
        &[1.0],
        None
    )
    .is_err());
}

proptest! {
    #[test]
    fn explicit_forms_hold(
        p in 2.0f64..4.0,
        second in 1.0f64..3.0,
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        c in -10.0f64..10.0,
        d in -10.0f64..10.0,
    ) {
        for id in [InequalityId::Monotone, InequalityId::Lipschitz] {
            prop_assert!(check(id, exps(id, p, second), &[a, b], None).unwrap().pass);
        }
        let id = InequalityId::MixedProduct;
        prop_assert!(check(id, exps(id, p, second), &[a, b, c, d], None).unwrap().pass);
    }

    #[test]
    fn lipschitz_form_on_the_diagonal(p in 2.0f64..4.0, a in 0.1f64..5.0) {
        // As b → a: lhs ≈ 2(p-1)|a|^{p-2}|a-b| and rhs ≈ (p-1)|a|^{p-2}|a-b|.
        let id = InequalityId::Lipschitz;
        let o = check(id, exps(id, p, 0.0), &[a, a * (1.0 + 1e-7)], None).unwrap();
        prop_assert!((o.lhs - 2.0 * o.rhs).abs() <= 1e-5 * o.lhs);
    }

    #[test]
    fn forms_are_odd_symmetric(p in 2.0f64..4.0, second in 1.0f64..3.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        for id in [InequalityId::Monotone, InequalityId::Holder, InequalityId::Coercive] {
            let e = exps(id, p, second);
            let x = constant_ratio(id, e, &[a, b]).unwrap();
            let y = constant_ratio(id, e, &[-a, -b]).unwrap();
            let z = constant_ratio(id, e, &[b, a]).unwrap();
            prop_assert_eq!(x.is_some(), y.is_some());
            if let (Some(x), Some(y), Some(z)) = (x, y, z) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
                prop_assert!((x - z).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }
    }
}
