//! Ray-map checks: closed form vs direct evaluation, the Nehari projection
//! root, a dense-scan argmax oracle, and the sign pattern around β*.

mod support;

use logwell::{
    beta_star, i_on_ray, j_on_ray, nehari, nehari_projection, potential, DomainSpec, Field,
    ModelParams, RaySummary,
};
use support::*;

#[test]
fn ray_at_unit_beta_reproduces_functionals() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let f = random_field_with_grad(&domain, 2, 2.5);
    let s = RaySummary::of(&f, &params);
    assert!(rel_err(j_on_ray(&s, 1.0, &params).unwrap(), potential(&f, &params)) <= 1e-14);
    assert!(rel_err(i_on_ray(&s, 1.0, &params).unwrap(), nehari(&f, &params)) <= 1e-14);
}

#[test]
fn ray_matches_functionals_of_scaled_fields() {
    // The closed form must agree with evaluating J and I on β·v directly.
    let domain = DomainSpec::line(1.0, 96).unwrap();
    let params = ModelParams::new(2.0).unwrap();
    let f = random_field_with_grad(&domain, 23, 1.8);
    let s = RaySummary::of(&f, &params);
    for beta in [0.2, 0.7, 1.3, 3.1] {
        let scaled = f.scaled(beta);
        assert!(
            rel_err(j_on_ray(&s, beta, &params).unwrap(), potential(&scaled, &params)) <= 1e-10
        );
        assert!(rel_err(i_on_ray(&s, beta, &params).unwrap(), nehari(&scaled, &params)) <= 1e-10);
    }
}

#[test]
fn ray_energy_vanishes_at_origin_and_drops_far_out() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(2.0).unwrap();
    let f = random_field_with_grad(&domain, 4, 2.0);
    let s = RaySummary::of(&f, &params);

    // J(βv) → 0 from above, monotonically, as β → 0.
    let j6 = j_on_ray(&s, 1e-6, &params).unwrap();
    let j5 = j_on_ray(&s, 1e-5, &params).unwrap();
    let j4 = j_on_ray(&s, 1e-4, &params).unwrap();
    assert!(0.0 < j6 && j6 < j5 && j5 < j4);

    // J(βv) < 0 far along every ray.
    assert!(j_on_ray(&s, 1e3, &params).unwrap() < 0.0);

    assert!(j_on_ray(&s, 0.0, &params).is_err());
    assert!(i_on_ray(&s, -1.0, &params).is_err());
}

#[test]
fn beta_star_is_one_when_nehari_vanishes() {
    let params = ModelParams::new(3.0).unwrap();
    // Synthetic summary with I(v) = G − L = 0 exactly.
    let s = RaySummary {
        grad_sq: 2.0,
        lp_pow: 1.0,
        log_int: 2.0,
    };
    assert_eq!(beta_star(&s, &params).unwrap(), 1.0);
}

#[test]
fn beta_star_satisfies_substitution_law() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let f = random_field_with_grad(&domain, 31, 2.0);
    let base = beta_star(&RaySummary::of(&f, &params), &params).unwrap();
    for c in [0.5, 2.0] {
        let scaled = beta_star(&RaySummary::of(&f.scaled(c), &params), &params).unwrap();
        assert!(
            rel_err(scaled * c, base) <= 1e-9,
            "c = {c}: {scaled} vs {base}"
        );
    }
}

#[test]
fn beta_star_root_quality_and_sign_pattern() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let mut seed = 300u64;
    for p in [1.5, 2.0, 3.0] {
        let params = ModelParams::new(p).unwrap();
        for _ in 0..34 {
            seed += 1;
            let f = random_field_with_grad(&domain, seed, 2.0);
            let s = RaySummary::of(&f, &params);
            let bs = beta_star(&s, &params).unwrap();
            let tol = 1e-10 * s.grad_sq.max(bs * bs * s.grad_sq);
            let at_root = i_on_ray(&s, bs, &params).unwrap();
            assert!(at_root.abs() <= tol, "p = {p}, seed = {seed}: I(β*v) = {at_root}");

            // I > 0 below the projection, < 0 above it.
            assert!(i_on_ray(&s, 0.9 * bs, &params).unwrap() > 0.0);
            assert!(i_on_ray(&s, 1.1 * bs, &params).unwrap() < 0.0);
        }
    }
}

#[test]
fn dense_scan_confirms_beta_star_as_global_argmax() {
    let domain = DomainSpec::line(1.0, 128).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let f = Field::single_mode(&domain, &[1], 1.0).unwrap();
    let s = RaySummary::of(&f, &params);
    let bs = beta_star(&s, &params).unwrap();
    let j_star = j_on_ray(&s, bs, &params).unwrap();

    // Log-spaced scan over [1e−3, 1e3]; the scan maximum must sit at β* and
    // never beat the mountain-pass value.
    let count = 200_000;
    let (lo, hi) = (1e-3f64, 1e3f64);
    let ratio = (hi / lo).ln() / (count as f64 - 1.0);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..count {
        let beta = lo * ((i as f64) * ratio).exp();
        let j = j_on_ray(&s, beta, &params).unwrap();
        assert!(j <= j_star * (1.0 + 1e-12) + 1e-14);
        if j > best.0 {
            best = (j, beta);
        }
    }
    assert!(
        (best.1 - bs).abs() <= 1e-4 * bs.max(1.0),
        "scan argmax {} vs β* {bs}",
        best.1
    );
}

#[test]
fn projection_rejects_degenerate_directions() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let zero = RaySummary::of(&Field::zeros(&domain), &params);
    assert!(beta_star(&zero, &params).is_err());
}

#[test]
fn nehari_projection_returns_mountain_pass_value() {
    let domain = DomainSpec::line(1.0, 64).unwrap();
    let params = ModelParams::new(3.0).unwrap();
    let f = Field::single_mode(&domain, &[1], 1.0).unwrap();
    let s = RaySummary::of(&f, &params);
    let (beta, j) = nehari_projection(&f, &params).unwrap();
    assert_eq!(beta, beta_star(&s, &params).unwrap());
    assert!(rel_err(j, j_on_ray(&s, beta, &params).unwrap()) <= 1e-15);
    // The projected point sits on the manifold: I(β*v) ≈ 0, J there > 0.
    assert!(j > 0.0);
}
