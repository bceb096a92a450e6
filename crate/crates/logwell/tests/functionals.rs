//! Energy/Nehari functional checks: closed forms, the quadrature oracle, the
//! algebraic decomposition, and the logarithmic growth estimate.

mod support;

use logwell::functionals::{log_source_value, potential_from, LOG_FLOOR};
use logwell::sampling::random_field;
use logwell::{
    identity_residual, log_integral, log_power_bound_check, log_source, nehari, nehari_delta,
    potential, potential_delta, DomainSpec, EnergyParts, Field, ModelParams,
};
use support::*;

#[test]
fn params_validate_power_index() {
    assert!(ModelParams::new(0.5).is_err());
    assert!(ModelParams::new(1.0).is_err());
    assert!(ModelParams::new(f64::NAN).is_err());
    assert!(ModelParams::new(f64::INFINITY).is_err());
    assert!(ModelParams::new(3.0).is_ok());

    let p3 = ModelParams::new(3.0).unwrap();
    assert!((p3.gamma() - 8.0 / 7.0).abs() <= 1e-15);
    assert!(p3.admissible_for_dim(1) && p3.admissible_for_dim(2));
    // The dimension restriction p < 4/(dim−2) only bites for dim ≥ 3:
    // 4/(3−2) = 4 admits p = 3 but not p = 5.
    assert!(p3.admissible_for_dim(3));
    assert!(!ModelParams::new(5.0).unwrap().admissible_for_dim(3));
    assert!(ModelParams::new(1.5).unwrap().admissible_for_dim(4));
}

#[test]
fn log_source_pointwise_values() {
    assert_eq!(log_source_value(0.0, 2.0), 0.0);
    assert_eq!(log_source_value(1.0, 2.0), 0.0);
    assert_eq!(log_source_value(-1.0, 2.0), 0.0);
    // v = e, p = 2 → e·e·1 = e².
    let e = std::f64::consts::E;
    assert!(rel_err(log_source_value(e, 2.0), e * e) <= 1e-14);
    // Below the floor maps to exact zero.
    assert_eq!(log_source_value(1e-305, 2.0), 0.0);
    assert!(1e-305 < LOG_FLOOR);
}

#[test]
fn log_source_is_odd_and_vanishes_at_zero() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(2.5).unwrap();

    let zero = Field::zeros(&domain);
    assert!(log_source(&zero, &params).values().iter().all(|&v| v == 0.0));

    let f = random_field_with_grad(&domain, 17, 3.0);
    let pos = log_source(&f, &params);
    let neg = log_source(&f.scaled(-1.0), &params);
    for (a, b) in pos.values().iter().zip(neg.values()) {
        assert_eq!(*a, -*b);
    }
}

#[test]
fn log_integral_sign_and_oracle_agreement() {
    let domain = DomainSpec::line(1.0, 128).unwrap();
    let params = ModelParams::new(3.0).unwrap();

    // |f| ≤ 1 pointwise ⇒ the integrand is ≤ 0 everywhere.
    let small = Field::single_mode(&domain, &[1], 0.7).unwrap();
    assert!(log_integral(&small, &params) <= 0.0);

    // f = sin(πx): ∫ sin⁴(πx) ln sin(πx) dx, a negative number, against the oracle.
    let f = Field::single_mode(&domain, &[1], 1.0).unwrap();
    let value = log_integral(&f, &params);
    let oracle = oracle_log_integral(&domain, &f.to_spectral(), 3.0);
    assert!(value < 0.0);
    assert!(
        rel_err(value, oracle) <= 1e-8,
        "log integral {value} vs oracle {oracle}"
    );
}

#[test]
fn functionals_vanish_at_zero_and_match_oracle_on_modes() {
    let domain = DomainSpec::line(1.0, 128).unwrap();
    let params = ModelParams::new(3.0).unwrap();

    let zero = Field::zeros(&domain);
    assert_eq!(potential(&zero, &params), 0.0);
    assert_eq!(nehari(&zero, &params), 0.0);

    // |f| ≤ 1 with nonzero gradient ⇒ I(f) ≥ ‖∇f‖² > 0.
    let small = Field::single_mode(&domain, &[2], 0.9).unwrap();
    let grad_sq = small.norm_h10().powi(2);
    assert!(nehari(&small, &params) >= grad_sq);

    // J and I on sin(πx) against the independent oracle.
    let f = Field::single_mode(&domain, &[1], 1.0).unwrap();
    let c = f.to_spectral();
    let p1 = 4.0;
    let g_o = oracle_grad_sq(&domain, &c);
    let p_o = oracle_lq_pow(&domain, &c, p1);
    let l_o = oracle_log_integral(&domain, &c, 3.0);
    let j_o = 0.5 * g_o - l_o / p1 + p_o / (p1 * p1);
    let i_o = g_o - l_o;
    assert!(rel_err(potential(&f, &params), j_o) <= 1e-8);
    assert!(rel_err(nehari(&f, &params), i_o) <= 1e-8);
}

#[test]
fn decomposition_identity_holds_for_random_fields() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let mut seed = 100u64;
    for p in [1.5, 2.0, 3.0, 5.0] {
        let params = ModelParams::new(p).unwrap();
        for _ in 0..25 {
            seed += 1;
            let f = random_field_with_grad(&domain, seed, 1.5);
            let residual = identity_residual(&f, &params);
            let scale = 1.0 + potential(&f, &params).abs();
            assert!(
                residual <= 1e-10 * scale,
                "p = {p}, seed = {seed}: residual {residual}"
            );
        }
    }
}

#[test]
fn decomposition_identity_on_fixed_two_mode_field() {
    let domain = DomainSpec::line(1.0, 128).unwrap();
    let params = ModelParams::new(2.0).unwrap();
    let mut coeffs = vec![0.0; domain.mode_count()];
    coeffs[0] = 1.0;
    coeffs[1] = 0.3;
    let f = Field::from_spectral(&domain, &coeffs).unwrap();
    let scale = 1.0 + potential(&f, &params).abs();
    assert!(identity_residual(&f, &params) <= 1e-10 * scale);
    assert_eq!(identity_residual(&Field::zeros(&domain), &params), 0.0);
}

#[test]
fn delta_family_reduces_to_plain_functionals_at_one() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let f = random_field_with_grad(&domain, 7, 2.0);

    assert_eq!(
        potential_delta(&f, 1.0, &params).unwrap(),
        potential(&f, &params)
    );
    assert_eq!(nehari_delta(&f, 1.0, &params).unwrap(), nehari(&f, &params));

    // I_δ(f) = I(f) + (δ−1)‖∇f‖².
    let grad_sq = f.norm_h10().powi(2);
    let i = nehari(&f, &params);
    for delta in [0.25, 0.5, 1.5, 2.0] {
        let i_delta = nehari_delta(&f, delta, &params).unwrap();
        assert!(rel_err(i_delta, i + (delta - 1.0) * grad_sq) <= 1e-10);
    }

    assert!(nehari_delta(&f, 0.0, &params).is_err());
    assert!(potential_delta(&f, -1.0, &params).is_err());
}

#[test]
fn log_power_bound_holds_on_random_fields() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let mut seed = 500u64;
    for p in [1.5, 3.0, 5.0] {
        let params = ModelParams::new(p).unwrap();
        for _ in 0..34 {
            seed += 1;
            let f = random_field_with_grad(&domain, seed, 4.0);
            let bound = log_power_bound_check(&f, &params);
            assert!(
                bound.holds,
                "p = {p}, seed = {seed}: lhs {} > rhs {}",
                bound.lhs, bound.rhs
            );
        }
    }
}

#[test]
fn log_power_bound_edge_cases() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let gamma = params.gamma();

    let zero = Field::zeros(&domain);
    let b0 = log_power_bound_check(&zero, &params);
    assert_eq!(b0.lhs, 0.0);
    let sub_unit_cap = (std::f64::consts::E * 3.0).powf(-gamma) * domain.measure();
    assert!(rel_err(b0.rhs, sub_unit_cap) <= 1e-12);
    assert!(b0.holds);

    // Fields capped at magnitude 1 stay within the sub-unit branch alone.
    let f = random_field_with_grad(&domain, 9, 2.0);
    let max = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let capped = f.scaled(1.0 / max);
    let b1 = log_power_bound_check(&capped, &params);
    assert!(b1.lhs <= sub_unit_cap * (1.0 + 1e-10));
    assert!(b1.holds);
}

#[test]
fn a_priori_bounds_follow_from_nonnegative_nehari() {
    // Whenever I(f) ≥ 0: ‖f‖_{1+p}^{1+p} ≤ (1+p)²·J(f) and
    // (p−1)/(2(1+p))·‖∇f‖² ≤ J(f) — direct consequences of the decomposition.
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let mut r = rng(42);
    let mut checked = 0;
    while checked < 50 {
        let f = random_field(&domain, &mut r).scaled(2.0);
        let parts = EnergyParts::of(&f, &params);
        let i = parts.grad_sq - parts.log_int;
        if i < 0.0 {
            continue;
        }
        checked += 1;
        let j = potential_from(&parts, &params);
        let p1 = 1.0 + params.p();
        assert!(parts.lp_pow <= p1 * p1 * j * (1.0 + 1e-10));
        assert!((params.p() - 1.0) / (2.0 * p1) * parts.grad_sq <= j * (1.0 + 1e-10));
    }
}
