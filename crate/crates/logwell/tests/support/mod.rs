//! Shared test utilities: an independent composite Gauss–Legendre oracle
//! evaluated on the sine interpolant, plus seeded field generators.
//!
//! The oracle never calls the crate's quadrature: it sums the sine series
//! directly at Gauss nodes and integrates panel by panel, so agreement with
//! the library values is evidence, not circularity.

#![allow(dead_code)]

use logwell::{DomainSpec, Field};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 8-point Gauss–Legendre nodes on [−1, 1].
pub const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// Matching 8-point Gauss–Legendre weights.
pub const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Default panel count: ample for 1e−10 accuracy on |v|^q-type integrands
/// whose only non-smooth points are the zeros of v.
pub const GL_PANELS: usize = 4096;

/// Composite 8-point Gauss–Legendre integral of `f` over `[a, b]`.
pub fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let left = a + i as f64 * h;
        let mid = left + 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Direct sine-series evaluation `v(x) = Σ c_k sin(kπx/L)` (1-D domains).
pub fn eval_interpolant(domain: &DomainSpec, coeffs: &[f64], x: f64) -> f64 {
    let l = domain.lengths()[0];
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * ((i as f64 + 1.0) * std::f64::consts::PI * x / l).sin())
        .sum()
}

/// Direct derivative evaluation `v'(x) = Σ c_k (kπ/L) cos(kπx/L)` (1-D).
pub fn eval_interpolant_deriv(domain: &DomainSpec, coeffs: &[f64], x: f64) -> f64 {
    let l = domain.lengths()[0];
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let kw = (i as f64 + 1.0) * std::f64::consts::PI / l;
            c * kw * (kw * x).cos()
        })
        .sum()
}

/// Oracle `‖v‖_q^q = ∫ |v|^q` for a 1-D field given by coefficients.
pub fn oracle_lq_pow(domain: &DomainSpec, coeffs: &[f64], q: f64) -> f64 {
    let l = domain.lengths()[0];
    gl_integrate(
        |x| eval_interpolant(domain, coeffs, x).abs().powf(q),
        0.0,
        l,
        GL_PANELS,
    )
}

/// Oracle `∫ |v|^{1+p} log|v|` for a 1-D field.
pub fn oracle_log_integral(domain: &DomainSpec, coeffs: &[f64], p: f64) -> f64 {
    let l = domain.lengths()[0];
    gl_integrate(
        |x| {
            let a = eval_interpolant(domain, coeffs, x).abs();
            if a < 1e-300 {
                0.0
            } else {
                a.powf(1.0 + p) * a.ln()
            }
        },
        0.0,
        l,
        GL_PANELS,
    )
}

/// Oracle `‖∇v‖² = ∫ v'²` for a 1-D field, via the cosine series.
pub fn oracle_grad_sq(domain: &DomainSpec, coeffs: &[f64]) -> f64 {
    let l = domain.lengths()[0];
    gl_integrate(
        |x| eval_interpolant_deriv(domain, coeffs, x).powi(2),
        0.0,
        l,
        GL_PANELS,
    )
}

/// Oracle sine coefficient of the source: `(2/L) ∫ f(v(x)) sin(kπx/L) dx`
/// with `f(v) = v|v|^{p−1} log|v|` and 1-based mode index `k`.
pub fn oracle_source_coeff(domain: &DomainSpec, coeffs: &[f64], p: f64, k: usize) -> f64 {
    let l = domain.lengths()[0];
    let kw = k as f64 * std::f64::consts::PI / l;
    2.0 / l
        * gl_integrate(
            |x| {
                let v = eval_interpolant(domain, coeffs, x);
                let a = v.abs();
                let fv = if a < 1e-300 {
                    0.0
                } else {
                    v.signum() * a.powf(p) * a.ln()
                };
                fv * (kw * x).sin()
            },
            0.0,
            l,
            GL_PANELS,
        )
}

/// Deterministic test RNG.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A smooth random field with mode amplitudes `ξ_k/(1+λ_k)`, scaled to the
/// requested gradient norm (useful for keeping nonlinear terms in range).
pub fn random_field_with_grad(domain: &DomainSpec, seed: u64, grad_norm: f64) -> Field {
    let f = logwell::sampling::random_field(domain, &mut rng(seed));
    let g = f.norm_h10();
    assert!(g > 0.0, "random field degenerate");
    f.scaled(grad_norm / g)
}

/// Relative error |a − b| / max(1, |b|)-style with an absolute floor.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-30)
}
