//! Property tests for the structural invariants of the series engine and
//! the normalization iteration.

use moser_core::flow::{conjugacy_error, normalform_flow, IntegratorOpts};
use moser_core::lie::{exp_lie, lie_derivative, GeneratingFunction};
use moser_core::normalizer::{general_config, run, strong_config, DPolicy};
use moser_core::pqseries::{MoserHamiltonian, PQSeries, XSeries};
use moser_core::timecoeff::{ExpPoly, RateBasis, RateVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn basis() -> RateBasis {
    RateBasis::standard(1.0, 0.7)
}

/// Strategy for decaying-or-constant exponential polynomials: rates
/// `-i` with `i in 0..=3`, constants forced to power zero so sup bounds
/// exist.
fn exppoly_strategy() -> impl Strategy<Value = ExpPoly> {
    prop::collection::vec(
        (
            -2.0f64..2.0,
            -2.0f64..2.0,
            0u32..=3,
            0i32..=3,
        ),
        1..5,
    )
    .prop_map(|terms| {
        let b = basis();
        let mut acc = ExpPoly::zero(&b);
        for (re, im, tpow, i) in terms {
            let tpow = if i == 0 { 0 } else { tpow };
            let t =
                ExpPoly::term(&b, C64::new(re, im), tpow, RateVector::new(vec![i, 0])).unwrap();
            acc = acc.add(&t).unwrap();
        }
        acc
    })
}

/// Strictly decaying variant (every rate value <= -1).
fn decaying_strategy() -> impl Strategy<Value = ExpPoly> {
    prop::collection::vec(
        (
            -2.0f64..2.0,
            -2.0f64..2.0,
            0u32..=3,
            1i32..=3,
        ),
        1..5,
    )
    .prop_map(|terms| {
        let b = basis();
        let mut acc = ExpPoly::zero(&b);
        for (re, im, tpow, i) in terms {
            let t =
                ExpPoly::term(&b, C64::new(re, im), tpow, RateVector::new(vec![i, 0])).unwrap();
            acc = acc.add(&t).unwrap();
        }
        acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_of_integral_recovers_input(f in exppoly_strategy()) {
        let integral = f.integrate();
        prop_assert!(integral.eval(0.0).norm() <= 1e-14 * f.max_abs_amp().max(1.0));
        prop_assert!(integral.derivative().approx_eq(&f, 1e-12));
    }

    #[test]
    fn sup_bound_dominates_samples(f in exppoly_strategy()) {
        let sb = f.sup_bound().unwrap();
        let mut t = 0.0;
        while t <= 50.0 {
            prop_assert!(f.eval(t).norm() <= sb.certified * (1.0 + 1e-12));
            t += 0.05;
        }
        prop_assert!(sb.sampled <= sb.certified * (1.0 + 1e-12));
    }

    #[test]
    fn combine_is_commutative_and_associative(
        f in exppoly_strategy(),
        g in exppoly_strategy(),
        h in exppoly_strategy(),
    ) {
        prop_assert!(f.add(&g).unwrap().approx_eq(&g.add(&f).unwrap(), 1e-14));
        prop_assert!(f.mul(&g).unwrap().approx_eq(&g.mul(&f).unwrap(), 1e-14));
        let ab_c = f.mul(&g).unwrap().mul(&h).unwrap();
        let a_bc = f.mul(&g.mul(&h).unwrap()).unwrap();
        prop_assert!(ab_c.approx_eq(&a_bc, 1e-12));
    }

    #[test]
    fn decaying_functions_factor_an_exponential(f in decaying_strategy()) {
        // every rate <= -1, so |f(t)| e^{t/2} stays bounded and its late
        // tail falls below the early peak
        let mut early_peak = 0.0f64;
        let mut t = 0.0;
        while t <= 10.0 {
            early_peak = early_peak.max(f.eval(t).norm() * (0.5 * t).exp());
            t += 0.05;
        }
        while t <= 60.0 {
            let v = f.eval(t).norm() * (0.5 * t).exp();
            prop_assert!(v.is_finite());
            prop_assert!(v <= early_peak * (1.0 + 1e-9) + 1e-12);
            t += 0.05;
        }
    }

    #[test]
    fn taylor_norm_is_submultiplicative(
        c1 in exppoly_strategy(),
        c2 in exppoly_strategy(),
        c3 in exppoly_strategy(),
        c4 in exppoly_strategy(),
    ) {
        let b = basis();
        let trunc = 24;
        let mut f = PQSeries::zero(&b, trunc);
        f.insert_add((3, 0), c1);
        f.insert_add((1, 2), c2);
        let mut g = PQSeries::zero(&b, trunc);
        g.insert_add((0, 3), c3);
        g.insert_add((2, 2), c4);
        let r = 0.4;
        let lhs = f.mul(&g).unwrap().taylor_norm(r).unwrap();
        let rhs = f.taylor_norm(r).unwrap() * g.taylor_norm(r).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn split_and_recombine_is_identity(
        c1 in exppoly_strategy(),
        c2 in exppoly_strategy(),
        c3 in exppoly_strategy(),
    ) {
        let b = basis();
        let mut f = PQSeries::zero(&b, 10);
        f.insert_add((3, 1), c1);
        f.insert_add((2, 2), c2);
        f.insert_add((0, 4), c3);
        let (mixed, diag) = f.split_mixed_diagonal();
        for (alpha, _) in mixed.iter() {
            prop_assert!(alpha.0 != alpha.1);
        }
        let recombined = mixed.add(&diag.to_pq(10)).unwrap();
        prop_assert!(recombined.approx_eq(&f, 0.0));
    }

    #[test]
    fn xseries_exponential_inverts(c1 in exppoly_strategy(), c2 in exppoly_strategy()) {
        let b = basis();
        let mut s = XSeries::zero(&b, 5);
        s.insert_add(1, c1.scale(C64::new(0.3, 0.0)));
        s.insert_add(2, c2.scale(C64::new(0.2, 0.0)));
        let plus = s.exp().unwrap();
        let minus = s.scale(C64::new(-1.0, 0.0)).exp().unwrap();
        let prod = plus.mul(&minus).unwrap();
        let scale = prod.max_abs_amp().max(1.0);
        prop_assert!(prod.coeff(0).unwrap().approx_eq(&ExpPoly::real_constant(&b, 1.0), 1e-12));
        for k in 1..=5 {
            if let Some(ck) = prod.coeff(k) {
                prop_assert!(ck.max_abs_amp() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn lie_grading(
        s in 1u32..=3,
        amp in 0.1f64..1.0,
    ) {
        let b = basis();
        let trunc = 14;
        let mut chi_series = PQSeries::zero(&b, trunc);
        chi_series.insert_add((3, 1), ExpPoly::real_constant(&b, amp));
        let chi = GeneratingFunction::new(chi_series).unwrap();
        let g = PQSeries::monomial(trunc, (2, 1), ExpPoly::real_constant(&b, 1.0));
        let mut term = g.clone();
        for _ in 0..s {
            term = lie_derivative(&term, &chi).unwrap();
        }
        if let Some(d) = term.min_degree() {
            prop_assert!(d >= 3 + s * 2); // min_degree(chi) - 2 = 2 per application
        }
    }
}

#[test]
fn normal_form_flow_conserves_x_exactly() {
    let b = basis();
    let mut j = XSeries::monomial(5, 1, ExpPoly::real_constant(&b, 0.7));
    j.insert_add(
        2,
        ExpPoly::term(&b, C64::new(0.2, 0.0), 1, RateVector::new(vec![1, 0])).unwrap(),
    );
    j.insert_add(3, ExpPoly::real_constant(&b, -0.1));
    let start = [C64::new(0.07, 0.0), C64::new(-0.04, 0.0), C64::new(0.2, 0.0)];
    let times: Vec<f64> = (1..=40).map(|i| 0.2 * i as f64).collect();
    let traj = normalform_flow(&j, start, &times);
    let x0 = start[0] * start[1];
    for (k, _) in traj.times.iter().enumerate() {
        let x = traj.states[k][0] * traj.states[k][1];
        assert!((x - x0).norm() <= 1e-15 * x0.norm());
    }
}

#[test]
fn general_mode_frequency_drift_is_bounded() {
    // measured Re g decreases by at most eps_j (R* d_j)^-2 per step
    let b = RateBasis::standard(1.0, 1.0);
    let mut f = PQSeries::zero(&b, 8);
    f.insert_add((2, 2), decay_term(&b, 0.002, 1));
    f.insert_add((0, 3), decay_term(&b, 0.003, 1));
    f.insert_add((3, 3), ExpPoly::real_constant(&b, 0.001));
    f.insert_add((4, 1), decay_term(&b, -0.002, 2));
    let h = MoserHamiltonian::initial(1.0, f).unwrap();
    let cfg = general_config(&b, 0.1, 8, DPolicy::Empirical(0.1));
    let result = run(&h, &cfg).unwrap();
    assert!(result.converged);
    let r_star = 0.05;
    let rows = &result.ledger.rows;
    for w in rows.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let (Some(m_prev), Some(m_next)) = (prev.g_re_min, next.g_re_min) else {
            panic!("general-mode rows must carry g bounds")
        };
        let allowance = prev.eps_full / (r_star * prev.d_j).powi(2);
        assert!(
            m_next >= m_prev - allowance,
            "step {}: Re g dropped from {m_prev} to {m_next}, allowance {allowance}",
            next.j
        );
    }
}

#[test]
fn step_map_displacements_shrink_and_respect_the_paper_bound() {
    // smallness regime: the p-image moves by at most R0^3 d_j^2 / 4 and the
    // per-step displacement decreases
    let b = RateBasis::standard(1.0, 1.0);
    let mut f = PQSeries::zero(&b, 10);
    for alpha in [(3, 0), (0, 3), (2, 1)] {
        f.insert_add(alpha, decay_term(&b, 1e-8, 1));
    }
    let h = MoserHamiltonian::initial(1.0, f).unwrap();
    let r0 = 0.1;
    let cfg = strong_config(&b, 1.0, r0, 8, DPolicy::Empirical(0.1));
    let result = run(&h, &cfg).unwrap();
    assert!(result.converged);
    let p = PQSeries::monomial(10, (1, 0), ExpPoly::real_constant(&b, 1.0));
    let mut prev = f64::INFINITY;
    for (j, chi) in result.chis.iter().enumerate() {
        let row = &result.ledger.rows[j];
        assert!(row.smallness_holds, "fixture must stay in the smallness regime");
        let image = exp_lie(&p, chi).unwrap();
        let displacement = image.sub(&p).unwrap().taylor_norm(row.r_next).unwrap();
        let bound = r0.powi(3) * row.d_j * row.d_j / 4.0;
        assert!(
            displacement <= bound,
            "step {j}: displacement {displacement} > {bound}"
        );
        assert!(displacement < prev, "step {j}: displacement did not shrink");
        prev = displacement;
    }
}

#[test]
fn conjugacy_error_decreases_with_truncation_degree() {
    // a desk-style case in the regime where the truncation error dominates
    // the integrator floor
    let b = RateBasis::standard(1.0, 1.0);
    let mut errs = Vec::new();
    for &n in &[6u32, 8, 10] {
        let mut f = PQSeries::zero(&b, n);
        for alpha in [(3, 0), (0, 3), (2, 1)] {
            f.insert_add(alpha, decay_term(&b, 0.3, 1));
        }
        let h = MoserHamiltonian::initial(1.0, f).unwrap();
        let cfg = strong_config(&b, 1.0, 0.3, 8, DPolicy::Empirical(0.1));
        let result = run(&h, &cfg).unwrap();
        let opts = IntegratorOpts { tol: 1e-12, escape_radius: 4.0, ..Default::default() };
        let start = [C64::new(0.1, 0.0), C64::new(0.1, 0.0), C64::new(0.0, 0.0)];
        let rep = conjugacy_error(&result, &h, start, 2.0, 25, &opts).unwrap();
        errs.push(rep.max_error);
    }
    assert!(
        errs[0] > errs[1] && errs[1] > errs[2],
        "errors not monotone in N: {errs:?}"
    );
}

#[test]
fn hypothesis_violation_aborts_with_diagnostic() {
    // a diagonal term large enough to push Re g below omega/2 on the grid
    let b = RateBasis::standard(1.0, 1.0);
    let mut f = PQSeries::zero(&b, 8);
    f.insert_add((2, 2), ExpPoly::real_constant(&b, -80.0));
    f.insert_add((0, 3), decay_term(&b, 0.01, 1));
    let h = MoserHamiltonian::initial(1.0, f).unwrap();
    let cfg = general_config(&b, 0.5, 4, DPolicy::Empirical(0.1));
    match run(&h, &cfg) {
        Err(moser_core::Error::HypothesisViolation(msg)) => {
            assert!(msg.contains("Re g"), "diagnostic missing: {msg}");
        }
        other => panic!("expected a hypothesis violation, got {other:?}"),
    }
}

fn decay_term(b: &RateBasis, amp: f64, i: i32) -> ExpPoly {
    ExpPoly::term(b, C64::new(amp, 0.0), 0, RateVector::new(vec![i, 0])).unwrap()
}

#[test]
fn residual_norms_measure_zero_generator_as_order_one() {
    use moser_core::homological::residual;
    use rand::SeedableRng;
    let b = RateBasis::standard(1.0, 1.0);
    let f = PQSeries::monomial(10, (0, 3), decay_term(&b, 0.5, 1));
    let g = XSeries::constant(&b, 5, C64::new(1.0, 0.0));
    let chi = GeneratingFunction::zero(&b, 10);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
    let rep = residual(&chi, &g, &f, 0.05, 10.0, 200, &mut rng).unwrap();
    assert!(rep.normalized > 0.05 && rep.normalized <= 1.0 + 1e-12);
}
