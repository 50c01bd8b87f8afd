use approx::assert_relative_eq;
use ndarray::{array, Array1};
use proptest::prelude::*;

use proxthresh::prox::{
    admissible_alpha, oracle_minimum, power_bracket, prox_objective, prox_oracle, prox_power, prox_power_derivative,
    prox_scalar_exact, prox_scalar_inexact, prox_separable, soft_threshold, validate_family, FamilyConfig, FnPenalty,
    Interval, Perturbation, PowerPenalty, ScalarRegularizer, SeparableRegularizer, ViolationKind,
};
use proxthresh::Error;

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn symmetric(r: f64) -> ScalarRegularizer {
    ScalarRegularizer::new(Interval::real_line(), iv(-1.0, 1.0), PowerPenalty::new(0.9, r).unwrap())
}

fn capped() -> ScalarRegularizer {
    ScalarRegularizer::new(iv(f64::NEG_INFINITY, 1.2), iv(0.0, 2.0), PowerPenalty::new(0.9, 4.0 / 3.0).unwrap())
}

/// Objective excess of `v` over the oracle minimum, compared with `delta^2/2`.
fn certificate_slack(reg: &ScalarRegularizer, gamma: f64, x: f64, v: f64, delta: f64) -> f64 {
    oracle_minimum(reg, gamma, x, 1e-12) + 0.5 * delta * delta - prox_objective(reg, gamma, x, v)
}

#[test]
fn soft_threshold_examples() {
    let d = iv(-1.0, 2.0);
    assert_eq!(soft_threshold(&d, 1.0, 3.0).unwrap(), 1.0);
    assert_eq!(soft_threshold(&d, 1.0, 0.5).unwrap(), 0.0);
    assert_eq!(soft_threshold(&d, 2.0, -3.0).unwrap(), -1.0);
}

#[test]
fn soft_threshold_matches_grid_minimization() {
    // minimize 2 sigma_D(v) + (v + 3)^2 / 2 on a fine grid
    let d = iv(-1.0, 2.0);
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for i in 0..=200_000 {
        let v = -5.0 + i as f64 * 1e-4;
        let f = 2.0 * d.support(v) + 0.5 * (v + 3.0) * (v + 3.0);
        if f < best {
            best = f;
            arg = v;
        }
    }
    assert!((arg - soft_threshold(&d, 2.0, -3.0).unwrap()).abs() < 1e-4);
}

#[test]
fn soft_threshold_needs_bounded_interval() {
    let err = soft_threshold(&iv(-1.0, f64::INFINITY), 1.0, 0.0).unwrap_err();
    assert!(err.is_config_error());
}

#[test]
fn degenerate_interval_translates() {
    let d = iv(0.7, 0.7);
    for x in [-3.0, 0.0, 0.7, 5.0] {
        assert_relative_eq!(soft_threshold(&d, 1.5, x).unwrap(), x - 1.05, epsilon = 1e-15);
    }
}

#[test]
fn prox_power_examples() {
    assert_relative_eq!(prox_power(1.0, 1.0, 1.5, 10.0).unwrap(), 6.25, epsilon = 1e-13);
    assert_relative_eq!(6.25 + 1.5 * 2.5, 10.0);
    assert_relative_eq!(prox_power(1.0, 0.9, 2.0, 2.8).unwrap(), 1.0, epsilon = 1e-15);
    for r in [1.2, 4.0 / 3.0, 1.5, 2.0] {
        assert_eq!(prox_power(0.4, 2.5, r, 0.0).unwrap(), 0.0);
    }
}

#[test]
fn prox_power_derivative_examples() {
    assert_relative_eq!(prox_power_derivative(1.0, 1.0, 1.5, 10.0).unwrap(), 0.769231, epsilon = 1e-6);
    for mu in [-4.0, 0.01, 3.3] {
        assert_relative_eq!(prox_power_derivative(1.0, 0.9, 2.0, mu).unwrap(), 1.0 / 2.8, epsilon = 1e-15);
    }
    assert_eq!(prox_power_derivative(1.0, 1.0, 1.5, 0.0).unwrap(), 0.0);
}

#[test]
fn prox_scalar_exact_reference_values() {
    assert_eq!(prox_scalar_exact(&capped(), 1.0, 1.0).unwrap(), 0.0);
    assert_eq!(prox_scalar_exact(&capped(), 1.0, 5.5).unwrap(), 1.2);
    assert_relative_eq!(prox_scalar_exact(&symmetric(2.0), 1.0, 3.8).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn inexact_alpha_bound_example() {
    // chi = 0, h = |.|^2, xi = 1.7: bound 1.7 / (4 h(2) + 1) = 0.1
    let reg = ScalarRegularizer::new(Interval::real_line(), iv(-1.0, 1.0), PowerPenalty::new(1.0, 2.0).unwrap());
    assert_relative_eq!(admissible_alpha(&reg, 1.0, 0.5, 1.7).unwrap(), 0.1, epsilon = 1e-15);
    assert!(prox_scalar_inexact(&reg, 1.0, 0.5, 0.1, 1.7).is_ok());
    let err = prox_scalar_inexact(&reg, 1.0, 0.5, 0.11, 1.7).unwrap_err();
    match err {
        Error::InadmissiblePerturbation { alpha, bound, .. } => {
            assert_eq!(alpha, 0.11);
            assert_relative_eq!(bound, 0.1, epsilon = 1e-15);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn inexact_with_zero_alpha_is_exact() {
    let reg = capped();
    for x in [-3.0, 0.5, 2.5, 7.0] {
        let cert = prox_scalar_inexact(&reg, 0.8, x, 0.0, 0.3).unwrap();
        assert_eq!(cert.delta, 0.0);
        assert_eq!(cert.value, prox_scalar_exact(&reg, 0.8, x).unwrap());
    }
}

#[test]
fn inexact_example_certifies_against_oracle() {
    let reg = symmetric(2.0);
    let cert = prox_scalar_inexact(&reg, 1.0, 3.8, 0.01, 1.0).unwrap();
    assert_relative_eq!(cert.value, 1.01, epsilon = 1e-14);
    assert!(certificate_slack(&reg, 1.0, 3.8, cert.value, cert.delta) >= 0.0);
    assert!(cert.delta.powi(2) <= 1.0);
}

#[test]
fn separable_examples() {
    let reg = SeparableRegularizer::new(vec![symmetric(4.0 / 3.0), symmetric(4.0 / 3.0), capped()]).unwrap();
    let w = array![3.0, -2.5, 6.0];
    let exact: Array1<f64> = w.iter().enumerate().map(|(k, &x)| prox_scalar_exact(&reg.coords()[k], 0.9, x).unwrap()).collect();
    let zero = prox_separable(&reg, 0.9, &w, &[0.0; 3], Perturbation::None).unwrap();
    assert_eq!(zero.value, exact);
    assert_eq!(zero.delta, 0.0);

    let budget = [0.01, 0.04, 0.04];
    let cert = prox_separable(&reg, 0.9, &w, &budget, Perturbation::FractionOfBound(&[1.0, -1.0, 1.0])).unwrap();
    assert_relative_eq!(cert.delta_budget, 0.3, epsilon = 1e-15);
    let achieved: f64 = (0..3).map(|k| prox_objective(&reg.coords()[k], 0.9, w[k], cert.value[k])).sum();
    let best: f64 = (0..3).map(|k| oracle_minimum(&reg.coords()[k], 0.9, w[k], 1e-12)).sum();
    assert!(achieved <= best + 0.5 * cert.delta * cert.delta);

    let origin = prox_separable(&reg, 0.9, &Array1::zeros(3), &[0.0; 3], Perturbation::None).unwrap();
    assert!(origin.value.iter().all(|&v| v == 0.0));
}

#[test]
fn oracle_examples() {
    assert!((prox_oracle(&symmetric(2.0), 1.0, 3.8, 1e-8) - 1.0).abs() <= 1e-6);
    assert!(prox_oracle(&symmetric(1.5), 1.0, 0.0, 1e-8).abs() <= 1e-8);
    let pure = ScalarRegularizer::new(Interval::real_line(), iv(0.0, 0.0), PowerPenalty::new(1.0, 1.5).unwrap());
    assert!((prox_oracle(&pure, 1.0, 10.0, 1e-10) - 6.25).abs() <= 1e-6);
}

#[test]
fn oracle_handles_sparsity_interval_away_from_zero() {
    // D = [1, 2]: the minimizer can sit farther than |x| + 1 from x
    let reg = ScalarRegularizer::new(Interval::real_line(), iv(1.0, 2.0), PowerPenalty::new(0.5, 2.0).unwrap());
    for x in [-1.0, 0.0, 0.5, 3.0] {
        let exact = prox_scalar_exact(&reg, 3.0, x).unwrap();
        let oracle = prox_oracle(&reg, 3.0, x, 1e-11);
        assert!((oracle - exact).abs() < 1e-6, "x = {x}: {exact} vs {oracle}");
    }
}

#[test]
fn validate_family_examples() {
    let net = SeparableRegularizer::new((1..=6).map(|k| ScalarRegularizer::elastic_net(0.1 * k as f64, 0.7, 2.0).unwrap()).collect())
        .unwrap();
    let cert = validate_family(&net).unwrap();
    assert_eq!((cert.lower_tail_sum, cert.upper_tail_sum), (0.0, 0.0));
    assert_relative_eq!(cert.m_constant, 0.145833, epsilon = 1e-6);

    let mut coords = net.coords().to_vec();
    coords[4].c = iv(1.0, 2.0);
    let violations = validate_family(&SeparableRegularizer::new(coords).unwrap()).unwrap_err();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].index, Some(4));
    assert_eq!(violations[0].kind, ViolationKind::ConstraintExcludesZero);
}

#[test]
fn extra_penalty_is_certified() {
    // h = 0.5 |t|^1.5 + 0.3 t^2 via the pluggable extra term
    let h = PowerPenalty::new(0.5, 1.5).unwrap().with_extra(std::sync::Arc::new(FnPenalty(|t: f64| 0.3 * t * t))).unwrap();
    let reg = ScalarRegularizer::new(iv(-2.0, 4.0), iv(-0.2, 0.4), h);
    for x in [-6.0, -0.1, 1.0, 3.0, 9.0] {
        let exact = prox_scalar_exact(&reg, 0.7, x).unwrap();
        assert!((exact - prox_oracle(&reg, 0.7, x, 1e-11)).abs() < 1e-6);
        let cert = prox_scalar_inexact(&reg, 0.7, x, 0.0, 1e-4).unwrap();
        assert!(cert.delta <= cert.delta_budget);
        assert!(certificate_slack(&reg, 0.7, x, cert.value, cert.delta) >= -1e-12);
    }
}

#[test]
fn family_config_round_trip() {
    let text = r#"
dimension = 4
tail_bound = 0.5

[default]
c_lower = -inf
c_upper = inf
d_lower = -0.3
d_upper = 0.3
eta = 0.9
r = 1.5

[[coord]]
index = 1
c_lower = -1.0
c_upper = 1.0

[[coord]]
index = 3
eta = 2.0
"#;
    let cfg = FamilyConfig::from_toml(text).unwrap();
    let reg = cfg.build().unwrap();
    assert_eq!(reg.tail_bound, 0.5);
    let again = FamilyConfig::from_toml(&FamilyConfig::from_regularizer(&reg).to_toml().unwrap()).unwrap();
    assert_eq!(again.build().unwrap(), reg);
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.1), Just(4.0 / 3.0), Just(1.5), Just(1.9), Just(2.0), 1.01f64..2.0]
}

fn scalar_reg() -> impl Strategy<Value = ScalarRegularizer> {
    (
        prop_oneof![Just(f64::NEG_INFINITY), -3.0f64..=0.0],
        prop_oneof![Just(f64::INFINITY), 0.0f64..3.0],
        -2.0f64..2.0,
        0.0f64..2.0,
        0.05f64..3.0,
        exponent(),
    )
        .prop_map(|(cl, cu, dl, dw, eta, r)| {
            ScalarRegularizer::new(iv(cl, cu), iv(dl, dl + dw), PowerPenalty::new(eta, r).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_prox_matches_oracle(reg in scalar_reg(), gamma in 0.05f64..3.0, x in -10.0f64..10.0) {
        let exact = prox_scalar_exact(&reg, gamma, x).unwrap();
        let oracle = prox_oracle(&reg, gamma, x, 1e-11);
        prop_assert!((exact - oracle).abs() <= 1e-6 * (1.0 + x.abs()));
    }

    #[test]
    fn sign_agrees_with_thresholded_input(reg in scalar_reg(), gamma in 0.05f64..3.0, x in -10.0f64..10.0) {
        let p = prox_scalar_exact(&reg, gamma, x).unwrap();
        prop_assert!(p * soft_threshold(&reg.d, gamma, x).unwrap() >= 0.0);
    }

    #[test]
    fn certificates_hold_at_the_bound(
        reg in scalar_reg(),
        gamma in 0.05f64..3.0,
        x in -10.0f64..10.0,
        log_xi in -6.0f64..0.0,
        sign in prop_oneof![Just(-1.0), Just(1.0)],
    ) {
        let xi = 10f64.powf(log_xi);
        let alpha = sign * admissible_alpha(&reg, gamma, x, xi).unwrap();
        let cert = prox_scalar_inexact(&reg, gamma, x, alpha, xi).unwrap();
        prop_assert!(cert.delta * cert.delta <= xi * (1.0 + 1e-12));
        prop_assert!(certificate_slack(&reg, gamma, x, cert.value, cert.delta) >= 0.0);
    }

    #[test]
    fn power_prox_bracket_and_bounds(g in 0.05f64..3.0, e in 0.05f64..3.0, r in exponent(), mu in -50.0f64..50.0) {
        let p = prox_power(g, e, r, mu).unwrap();
        let (lo, hi) = power_bracket(g, e, r, mu);
        prop_assert!(lo * (1.0 - 1e-12) <= p.abs() && p.abs() <= hi * (1.0 + 1e-12));
        prop_assert_eq!(prox_power(g, e, r, -mu).unwrap(), -p);
        let a = g * e;
        if mu.abs() > 1.0 + r * a {
            prop_assert!(mu.abs() / (1.0 + r * a) <= p.abs() * (1.0 + 1e-12));
            prop_assert!(p.abs() < mu.abs() - a);
        }
    }

    #[test]
    fn power_prox_is_monotone_and_nonexpansive(
        g in 0.05f64..3.0, e in 0.05f64..3.0, r in exponent(), x in -20.0f64..20.0, y in -20.0f64..20.0,
    ) {
        prop_assume!(x < y);
        let (px, py) = (prox_power(g, e, r, x).unwrap(), prox_power(g, e, r, y).unwrap());
        prop_assert!(px < py);
        prop_assert!(py - px <= (y - x) * (1.0 + 1e-12));
    }

    #[test]
    fn larger_exponent_shrinks_more(g in 0.05f64..3.0, e in 0.05f64..3.0, r1 in 1.02f64..1.98, dr in 0.01f64..1.0, scale in 1.001f64..5.0) {
        let r2 = (r1 + dr).min(2.0);
        let mu = (1.0 + r2 * g * e) * scale;
        prop_assert!(prox_power(g, e, r2, mu).unwrap().abs() < prox_power(g, e, r1, mu).unwrap().abs());
    }

    #[test]
    fn derivative_matches_finite_differences(g in 0.05f64..3.0, e in 0.05f64..3.0, r in exponent(), mu in 0.1f64..20.0) {
        let h = 1e-5 * (1.0 + mu);
        let fd = (prox_power(g, e, r, mu + h).unwrap() - prox_power(g, e, r, mu - h).unwrap()) / (2.0 * h);
        let d = prox_power_derivative(g, e, r, mu).unwrap();
        prop_assert!((fd - d).abs() <= 1e-5 * d);
    }
}
