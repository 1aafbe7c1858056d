use proptest::prelude::*;

use pqk_core::analysis::{
    bound_sweep, korovkin_run, modulus_continuity, uniform_grid, BoundKind, ParamSequence,
};
use pqk_core::moments::central2_by_linearity;
use pqk_core::operators::{min_relative_width, MIN_RELATIVE_WIDTH};
use pqk_core::pq::{pq_binomial, pq_int, pq_integral_0a, pq_integral_ab, pq_rising_power};
use pqk_core::{
    alpha_n, basis_weights, kantorovich_apply, kantorovich_cells, moments_closed_form,
    FunctionSpec, IntegralOptions, KantorovichOperator, PQContext, PQParams,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Admissible `(p, q)` with `q/p <= 0.995` so integrals stay cheap.
fn params() -> impl Strategy<Value = PQParams> {
    (0.5f64..=1.0, 0.05f64..0.995).prop_map(|(p, r)| PQParams::new(p, p * r).unwrap())
}

fn opts() -> IntegralOptions {
    IntegralOptions::default()
}

/// Rounding error of a cell mean grows like eps / (relative cell width).
fn conditioned_tol(ctx: &PQContext, n: usize, base: f64) -> f64 {
    base + 64.0 * f64::EPSILON / min_relative_width(ctx, n).unwrap()
}

fn conditioned(ctx: &PQContext, n: usize) -> bool {
    min_relative_width(ctx, n).unwrap() >= MIN_RELATIVE_WIDTH
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_pair(pq in params(), n_max in 1usize..300) {
        let ctx = PQContext::new(pq, n_max).unwrap();
        let (p, q) = (pq.p(), pq.q());
        for k in 1..=n_max {
            let next = pq_int(&ctx, k + 1).unwrap();
            let ik = pq_int(&ctx, k).unwrap();
            prop_assert!(rel(next, p.powi(k as i32) + q * ik) < 1e-13);
            prop_assert!(rel(next, q.powi(k as i32) + p * ik) < 1e-13);
        }
    }

    #[test]
    fn binomial_symmetry(pq in params(), n in 0usize..120, frac in 0.0f64..=1.0) {
        let ctx = PQContext::new(pq, n.max(1)).unwrap();
        let k = (frac * n as f64).round() as i64;
        let a = pq_binomial(&ctx, n, k).unwrap();
        let b = pq_binomial(&ctx, n, n as i64 - k).unwrap();
        prop_assert!(rel(a, b) < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn monomial_integral(pq in params(), m in 0i32..=6, a in 0.01f64..2.0) {
        let ctx = PQContext::new(pq, 8).unwrap();
        let f = move |t: f64| t.powi(m);
        let got = pq_integral_0a(&f, a, pq, opts()).unwrap();
        let expected = a.powi(m + 1) / pq_int(&ctx, (m + 1) as usize).unwrap();
        prop_assert!(rel(got, expected) < 1e-10);
    }

    #[test]
    fn integral_is_linear(pq in params(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0, a in 0.1f64..1.5) {
        let f = |t: f64| (3.0 * t).sin();
        let g = |t: f64| (-t).exp();
        let h = move |t: f64| alpha * f(t) + beta * g(t);
        let lhs = pq_integral_0a(&h, a, pq, opts()).unwrap();
        let rhs = alpha * pq_integral_0a(&f, a, pq, opts()).unwrap()
            + beta * pq_integral_0a(&g, a, pq, opts()).unwrap();
        let scale = alpha.abs() + beta.abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(lhs.abs()));
    }

    #[test]
    fn interval_integrals_add(pq in params(), a in 0.0f64..0.5, b in 0.5f64..1.0, c in 1.0f64..1.5) {
        let f = |t: f64| 1.0 + t * t;
        let ab = pq_integral_ab(&f, a, b, pq, opts()).unwrap();
        let bc = pq_integral_ab(&f, b, c, pq, opts()).unwrap();
        let ac = pq_integral_ab(&f, a, c, pq, opts()).unwrap();
        prop_assert!(rel(ab + bc, ac) < 1e-12);
    }

    #[test]
    fn rising_power_product_form(pq in params(), x in -2.0f64..2.0, k in 0u32..=50) {
        let product: f64 = (0..k).map(|j| pq.p().powi(j as i32) * x).product();
        let got = pq_rising_power(x, k, pq);
        if product == 0.0 {
            prop_assert_eq!(got, 0.0);
        } else {
            prop_assert!(rel(got, product) < 1e-13, "{} vs {}", got, product);
        }
    }

    #[test]
    fn partition_of_unity(pq in params(), n in 1usize..=200, x in 0.0f64..=1.0) {
        let ctx = PQContext::new(pq, n).unwrap();
        let w = basis_weights(&ctx, n, x).unwrap();
        prop_assert!(w.w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cells_tile(pq in params(), n in 1usize..=200) {
        let ctx = PQContext::new(pq, n).unwrap();
        prop_assume!(conditioned(&ctx, n));
        let cells = kantorovich_cells(&ctx, n).unwrap();
        prop_assert_eq!(cells[0].lower, 0.0);
        for pair in cells.windows(2) {
            prop_assert_eq!(pair[0].upper.to_bits(), pair[1].lower.to_bits());
        }
        for c in &cells {
            prop_assert!(c.lower < c.upper);
        }
        let reach = pq_int(&ctx, n + 1).unwrap() / pq_int(&ctx, n).unwrap();
        prop_assert!(rel(cells[n].upper, reach) < 1e-15);
    }

    #[test]
    fn first_moment_shift_is_constant(pq in params(), n in 1usize..=200, x in 0.0f64..=1.0) {
        let ctx = PQContext::new(pq, n).unwrap();
        let m = moments_closed_form(&ctx, n, x).unwrap();
        prop_assert!(((m.m1 - x) - alpha_n(&ctx, n).unwrap()).abs() <= 1e-15);
        prop_assert!((m.central2 - central2_by_linearity(&m, x)).abs() < 1e-13);
    }

    #[test]
    fn operator_is_linear(pq in params(), n in 1usize..=40, x in 0.0f64..=1.0, alpha in -2.0f64..2.0) {
        let ctx = PQContext::new(pq, n).unwrap();
        prop_assume!(conditioned(&ctx, n));
        let tol = conditioned_tol(&ctx, n, 1e-11);
        let f = |t: f64| (5.0 * t).cos();
        let g = |t: f64| t * t * t;
        let h = move |t: f64| alpha * f(t) + g(t);
        let lhs = kantorovich_apply(&ctx, n, &h, x, opts()).unwrap();
        let rhs = alpha * kantorovich_apply(&ctx, n, &f, x, opts()).unwrap()
            + kantorovich_apply(&ctx, n, &g, x, opts()).unwrap();
        prop_assert!((lhs - rhs).abs() < tol);
    }

    #[test]
    fn operator_matches_moments(pq in params(), n in 1usize..=60, x in 0.0f64..=1.0) {
        let ctx = PQContext::new(pq, n).unwrap();
        prop_assume!(conditioned(&ctx, n));
        let tol = conditioned_tol(&ctx, n, 1e-9);
        let m = moments_closed_form(&ctx, n, x).unwrap();
        let one = kantorovich_apply(&ctx, n, &|_: f64| 1.0, x, opts()).unwrap();
        let t = kantorovich_apply(&ctx, n, &|t: f64| t, x, opts()).unwrap();
        let t2 = kantorovich_apply(&ctx, n, &|t: f64| t * t, x, opts()).unwrap();
        prop_assert!((one - m.m0).abs() < tol);
        prop_assert!((t - m.m1).abs() < tol);
        prop_assert!((t2 - m.m2).abs() < tol, "{} vs {}", t2, m.m2);
    }

    #[test]
    fn narrow_cells_are_rejected(pq in params(), n in 1usize..=200) {
        let ctx = PQContext::new(pq, n).unwrap();
        let built = KantorovichOperator::new(&ctx, n, &|t: f64| t, opts());
        if conditioned(&ctx, n) {
            prop_assert!(built.is_ok());
        } else {
            let rejected = matches!(built, Err(pqk_core::Error::IllConditioned { .. }));
            prop_assert!(rejected);
        }
    }

    #[test]
    fn value_at_zero_is_first_cell_mean(pq in params(), n in 1usize..=60) {
        let ctx = PQContext::new(pq, n).unwrap();
        prop_assume!(conditioned(&ctx, n));
        let f = |t: f64| (2.0 * t).exp();
        let upper = kantorovich_cells(&ctx, n).unwrap()[0].upper;
        let direct = pq_int(&ctx, n).unwrap() / pq.p().powi(n as i32)
            * pq_integral_0a(&f, upper, pq, opts()).unwrap();
        let got = kantorovich_apply(&ctx, n, &f, 0.0, opts()).unwrap();
        prop_assert!(rel(got, direct) < 1e-13);
    }

    #[test]
    fn omega_monotone_and_subadditive(delta in 0.005f64..0.2) {
        // A grid of step h under-reports omega(delta) by at most L h.
        let h = 1.0 / 2000.0;
        for (f, lip) in [
            (FunctionSpec::T, 1.0),
            (FunctionSpec::TSq, 2.0),
            (FunctionSpec::Sin7, 7.0),
            (FunctionSpec::AbsHalf, 1.0),
        ] {
            let ladder: Vec<f64> = (1..=10)
                .map(|i| modulus_continuity(&f, delta * i as f64 / 10.0, (0.0, 1.0), 2001).unwrap())
                .collect();
            prop_assert!(ladder.windows(2).all(|w| w[0] <= w[1]));
            let one = modulus_continuity(&f, delta, (0.0, 1.0), 2001).unwrap();
            let two = modulus_continuity(&f, 2.0 * delta, (0.0, 1.0), 2001).unwrap();
            prop_assert!(two <= 2.0 * one + 2.0 * lip * h);
        }
    }
}

#[test]
fn parallel_grid_matches_pointwise() {
    let params = PQParams::new(0.97, 0.9).unwrap();
    let ctx = PQContext::new(params, 40).unwrap();
    let f = FunctionSpec::Sin7;
    let op = KantorovichOperator::new(&ctx, 40, &f, opts()).unwrap();
    let xs = uniform_grid(301);
    let grid = op.eval_grid(&xs).unwrap();
    for (x, k) in grid {
        assert_eq!(k.to_bits(), op.apply(x).unwrap().to_bits());
    }
}

#[test]
fn central_moment_decays_along_default_sequence() {
    let seq = ParamSequence::Default;
    let xs = uniform_grid(101);
    let mut prev = f64::INFINITY;
    for n in [10usize, 25, 50, 100, 200] {
        let ctx = PQContext::new(seq.params_at(n).unwrap(), n).unwrap();
        let worst = xs
            .iter()
            .map(|&x| moments_closed_form(&ctx, n, x).unwrap().central2)
            .fold(0.0, f64::max);
        assert!(worst < prev, "n = {n}: {worst} >= {prev}");
        prev = worst;
    }
}

#[test]
fn modulus_bound_holds_for_catalog() {
    let seq = ParamSequence::Default;
    for f in [
        FunctionSpec::One,
        FunctionSpec::T,
        FunctionSpec::TSq,
        FunctionSpec::Sin7,
        FunctionSpec::AbsHalf,
    ] {
        for n in [5usize, 20] {
            let ctx = PQContext::new(seq.params_at(n).unwrap(), n).unwrap();
            let report =
                bound_sweep(&ctx, n, &f, BoundKind::Modulus, &uniform_grid(101), opts()).unwrap();
            assert!(
                report.min_slack() >= -1e-12,
                "{} n={n}: {}",
                f.name(),
                report.min_slack()
            );
        }
    }
}

#[test]
fn lipschitz_bound_holds_for_identity_away_from_right_edge() {
    let seq = ParamSequence::Default;
    for n in [10usize, 50] {
        let ctx = PQContext::new(seq.params_at(n).unwrap(), n).unwrap();
        let kind = BoundKind::Lipschitz { m: 1.0, alpha: 1.0 };
        let xs: Vec<f64> = uniform_grid(201)
            .into_iter()
            .filter(|&x| x <= 0.9)
            .collect();
        let report = bound_sweep(&ctx, n, &FunctionSpec::T, kind, &xs, opts()).unwrap();
        assert!(
            report.min_slack() >= -1e-12,
            "n={n}: {}",
            report.min_slack()
        );
    }
}

/// Cell means are not positive functionals, so `K(t^2) - K(t)^2` can be
/// negative. At `x = 1`, n = 10 on the default sequence the error of `f = t`
/// (always `alpha_n`) exceeds `delta_n(1)`. Exact rational values:
/// `alpha_n = 0.07482111816458055`, `delta_n(1) = 0.07209695116306356`.
#[test]
fn identity_error_exceeds_delta_at_right_edge() {
    let n = 10;
    let ctx = PQContext::new(ParamSequence::Default.params_at(n).unwrap(), n).unwrap();
    let alpha = alpha_n(&ctx, n).unwrap();
    let delta = pqk_core::delta_n(&ctx, n, 1.0).unwrap();
    assert!((alpha - 0.07482111816458055).abs() < 1e-14);
    assert!((delta - 0.07209695116306356).abs() < 1e-13);
    let t = kantorovich_apply(&ctx, n, &|t: f64| t, 1.0, opts()).unwrap();
    let t2 = kantorovich_apply(&ctx, n, &|t: f64| t * t, 1.0, opts()).unwrap();
    assert!(t2 - t * t < -3.9e-4);
}

#[test]
fn test_function_errors_shrink() {
    let report = korovkin_run(
        &ParamSequence::Default,
        &FunctionSpec::One,
        &[10, 25, 50, 100],
        &uniform_grid(101),
        opts(),
    )
    .unwrap();
    for pair in report.entries.windows(2) {
        assert!(pair[1].e1_error < pair[0].e1_error);
        assert!(pair[1].e2_error < pair[0].e2_error);
    }
    assert!(report.entries.iter().all(|e| e.e0_error <= 1e-12));
}
