//! Seeded random and structured sample fields used by estimators and tests.
//!
//! Random directions are drawn in coefficient space as `c_k ∝ ξ_k/(1+λ_k)`
//! with standard-normal `ξ_k`: the `H¹`-weighted damping keeps the samples
//! regular enough that Nehari projections behave robustly. Gaussian bumps
//! provide localized directions that the eigenmode/random families miss on
//! large domains, where the Nehari minimizer concentrates on an `O(1)` core.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::{DomainSpec, Field};

/// Low-mode-biased random coefficients `c_k = ξ_k/(1+λ_k)`.
pub fn low_mode_coeffs<R: Rng + ?Sized>(domain: &DomainSpec, rng: &mut R) -> Vec<f64> {
    let eig = domain.spectrum();
    eig.eigenvalues()
        .iter()
        .map(|&l| {
            let xi: f64 = rng.sample(StandardNormal);
            xi / (1.0 + l)
        })
        .collect()
}

/// A random field with low-mode-biased spectrum.
pub fn random_field<R: Rng + ?Sized>(domain: &DomainSpec, rng: &mut R) -> Field {
    Field::from_spectral(domain, &low_mode_coeffs(domain, rng))
        .expect("generated coefficients are finite and well-shaped")
}

/// Nodal values of a centered Gaussian bump `exp(−Σ (x_i − L_i/2)²/(2w²))`,
/// as a boundary-compatible field (values near the boundary are already
/// exponentially small for the widths used).
pub fn gaussian_bump(domain: &DomainSpec, width: f64) -> Field {
    let inv = 1.0 / (2.0 * width * width);
    let values = match domain.dim() {
        1 => {
            let xs = domain.grid_coords(0);
            let c = domain.lengths()[0] / 2.0;
            xs.iter().map(|&x| (-(x - c) * (x - c) * inv).exp()).collect()
        }
        2 => {
            let xs = domain.grid_coords(0);
            let ys = domain.grid_coords(1);
            let (cx, cy) = (domain.lengths()[0] / 2.0, domain.lengths()[1] / 2.0);
            let mut values = Vec::with_capacity(xs.len() * ys.len());
            for &x in &xs {
                let dx = (x - cx) * (x - cx);
                for &y in &ys {
                    let dy = (y - cy) * (y - cy);
                    values.push((-(dx + dy) * inv).exp());
                }
            }
            values
        }
        _ => unreachable!("dimension validated at construction"),
    };
    Field::from_values(domain, values).expect("bump values are finite")
}
