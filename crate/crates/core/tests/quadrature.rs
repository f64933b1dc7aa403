mod common;

use approx::assert_relative_eq;
use fracp_core::grid::{sample_closed_form, sample_exact};
use fracp_core::quadrature::{
    apply_operator_grid, apply_operator_point, tail_power_law, tail_q_power, ClosedField,
    KernelTable, QuadControls,
};
use fracp_core::{Expr, FarField, Grid, GridFunction, Integrability, Params};
use proptest::prelude::*;

fn params(dim: usize, s: f64, p: f64) -> Params {
    Params::new(dim, s, p, Integrability::Infinite).unwrap()
}

fn bump_1d(grid: &Grid) -> GridFunction {
    let e: Expr = "bump:0.4".parse().unwrap();
    sample_closed_form(&e, grid, FarField::zero()).unwrap()
}

#[test]
fn constants_are_annihilated() {
    for (dim, nodes) in [(1, 65), (2, 17)] {
        let grid = Grid::symmetric(dim, 1.0, nodes).unwrap();
        let u = sample_exact(&"const:3.5".parse().unwrap(), &grid).unwrap();
        let table = KernelTable::new(&grid, &params(dim, 0.4, 3.0)).unwrap();
        let lu = apply_operator_grid(&u, &table).unwrap();
        assert!(lu.values().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn affine_functions_vanish_at_points() {
    let e: Expr = "affine:0.3:1.5:-0.7".parse().unwrap();
    // Linear growth is integrable only when sp > p - 1.
    let prm = params(2, 0.7, 2.5);
    for x in [[0.0, 0.0], [0.4, -0.2], [-1.3, 0.9]] {
        let v = apply_operator_point(&e, &x, &prm, &QuadControls::default()).unwrap();
        assert!(v.value.abs() < 1e-8, "{x:?}: {v:?}");
        assert!(!v.flagged);
    }
}

#[test]
fn point_values_for_power_profile_are_homogeneous() {
    // |x|^γ with γ = 0.175 in 2D, p = 3, s = 0.25: degree γ(p-1) - sp = -0.4.
    let e = Expr::sharpness(2, 0.25, 3.0, 4.0, 0.05).unwrap();
    let prm = Params::new(2, 0.25, 3.0, Integrability::Finite(4.0)).unwrap();
    let c = QuadControls::default();
    let base = apply_operator_point(&e, &[0.3, 0.0], &prm, &c).unwrap();
    for (x, scale) in [
        ([0.6, 0.0], 2.0),
        ([0.0, 0.15], 0.5),
        ([0.3 / 2f64.sqrt(), 0.3 / 2f64.sqrt()], 1.0),
    ] {
        let v = apply_operator_point(&e, &x, &prm, &c).unwrap();
        assert_relative_eq!(
            v.value,
            base.value * f64::powf(scale, -0.4),
            max_relative = 1e-6
        );
    }
}

#[test]
fn grid_operator_converges_to_point_values() {
    let prm = params(1, 0.5, 2.5);
    let e: Expr = "bump:0.4".parse().unwrap();
    let exact = apply_operator_point(&e, &[0.25], &prm, &QuadControls::default())
        .unwrap()
        .value;
    let mut errors = Vec::new();
    for nodes in [65, 129, 257] {
        let grid = Grid::symmetric(1, 2.0, nodes).unwrap();
        let u = bump_1d(&grid);
        let lu = apply_operator_grid(&u, &KernelTable::new(&grid, &prm).unwrap()).unwrap();
        errors.push((lu.evaluate(&[0.25]).unwrap() - exact).abs());
    }
    assert!(errors[2] < errors[0], "{errors:?}");
    assert!(errors[2] < 2e-2 * exact.abs(), "{errors:?} vs {exact}");
}

#[test]
fn tails_of_power_laws_match_closed_form() {
    for (dim, gamma, q, alpha, radius) in [(1, 0.3, 2.0, 1.5, 0.7), (2, 0.5, 1.5, 1.2, 1.3)] {
        let centre = vec![0.0; dim];
        let f = ClosedField::new(format!("power:{gamma}").parse().unwrap(), dim);
        let num = tail_q_power(&f, &centre, radius, q, alpha).unwrap();
        let exact = tail_power_law(1.0, gamma, dim, q, alpha, radius).unwrap();
        assert_relative_eq!(num, exact, max_relative = 1e-7);
    }
}

#[test]
fn sampled_tail_lemmas_hold() {
    let failures = common::tail_lemma_failures(60, 3);
    assert!(failures.is_empty(), "{failures:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_operator_is_odd_and_homogeneous(
        s in 0.1f64..0.9,
        p in 2.0f64..4.0,
        lambda in -3.0f64..3.0,
        amp in 0.2f64..2.0,
    ) {
        let grid = Grid::symmetric(1, 1.0, 33).unwrap();
        let table = KernelTable::new(&grid, &params(1, s, p)).unwrap();
        let u = bump_1d(&grid).map(|v| amp * v);
        let lu = apply_operator_grid(&u, &table).unwrap();
        let lscaled = apply_operator_grid(&u.map(|v| lambda * v), &table).unwrap();
        let lneg = apply_operator_grid(&u.map(|v| -v), &table).unwrap();
        let factor = lambda.abs().powf(p - 2.0) * lambda;
        let scale = lu.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..grid.len() {
            prop_assert!((lneg.values()[i] + lu.values()[i]).abs() <= 1e-12 * scale);
            prop_assert!((lscaled.values()[i] - factor * lu.values()[i]).abs() <= 1e-10 * scale * factor.abs().max(1.0));
        }
    }

    #[test]
    fn grid_operator_ignores_added_constants(s in 0.1f64..0.9, p in 2.0f64..4.0, c in -5.0f64..5.0) {
        let grid = Grid::symmetric(2, 1.0, 13).unwrap();
        let table = KernelTable::new(&grid, &params(2, s, p)).unwrap();
        let e: Expr = "bump:0.5:0.1:-0.2".parse().unwrap();
        let u = sample_closed_form(&e, &grid, FarField::zero()).unwrap();
        let shifted = u.map(|v| v + c).with_far_field(FarField::constant(c));
        let a = apply_operator_grid(&u, &table).unwrap();
        let b = apply_operator_grid(&shifted, &table).unwrap();
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn point_operator_is_translation_equivariant(shift in -1.0f64..1.0, x in -0.5f64..0.5) {
        let prm = params(1, 0.4, 3.0);
        let c = QuadControls::default();
        let a: Expr = "bump:0.6:0.0".parse().unwrap();
        let b: Expr = format!("bump:0.6:{shift}").parse().unwrap();
        let va = apply_operator_point(&a, &[x], &prm, &c).unwrap().value;
        let vb = apply_operator_point(&b, &[x + shift], &prm, &c).unwrap().value;
        prop_assert!((va - vb).abs() <= 1e-7 * va.abs().max(1.0), "{} vs {}", va, vb);
    }
}
