//! The fibering map `β ↦ J(βv)` along rays from the origin, in closed form.
//!
//! Because the nonlinearity is a power times a logarithm, scaling a field by
//! `β > 0` acts on the three integral ingredients explicitly:
//!
//! ```text
//! ‖∇(βv)‖²              = β² G
//! ‖βv‖_{1+p}^{1+p}      = β^{1+p} P
//! ∫|βv|^{1+p} log|βv|   = β^{1+p} (L + P ln β)
//! ```
//!
//! so the whole ray is determined by the scalar triple `(G, P, L)` captured in
//! a [`RaySummary`]. The ray energy and its radial derivative are
//!
//! ```text
//! J(βv) = (β²/2)G − (β^{1+p}/(1+p))(L + P ln β) + (β^{1+p}/(1+p)²)P
//! I(βv) = β²G − β^{1+p}(L + P ln β) = β · d/dβ J(βv)
//! ```
//!
//! `J(βv)` rises from 0, attains a unique maximum at the Nehari projection
//! parameter `β*` (where `I(β*v) = 0`), and decreases to −∞. [`beta_star`]
//! locates `β*` by geometric bracketing of the sign change of `I`, bisection,
//! and a Newton polish.

use serde::{Deserialize, Serialize};

use crate::domain::Field;
use crate::error::{Error, Result};
use crate::functionals::{EnergyParts, ModelParams};

/// The scalar triple `(G, P, L)` determining `J` and `I` along the ray `βv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySummary {
    /// `G = ‖∇v‖²`.
    pub grad_sq: f64,
    /// `P = ‖v‖_{1+p}^{1+p}`.
    pub lp_pow: f64,
    /// `L = ∫ |v|^{1+p} log|v|`.
    pub log_int: f64,
}

impl RaySummary {
    /// Captures the ray data of a field.
    pub fn of(f: &Field, params: &ModelParams) -> Self {
        EnergyParts::of(f, params).into()
    }

    /// The summary of the same direction with the gradient term weighted by
    /// `δ` — the δ-family fibering used by the well module.
    pub fn with_gradient_weight(&self, delta: f64) -> Self {
        Self {
            grad_sq: delta * self.grad_sq,
            ..*self
        }
    }
}

impl From<EnergyParts> for RaySummary {
    fn from(parts: EnergyParts) -> Self {
        Self {
            grad_sq: parts.grad_sq,
            lp_pow: parts.lp_pow,
            log_int: parts.log_int,
        }
    }
}

/// `J(βv)` from the ray summary of `v`.
pub fn j_on_ray(summary: &RaySummary, beta: f64, params: &ModelParams) -> Result<f64> {
    check_beta(beta)?;
    let p1 = 1.0 + params.p();
    let bp = beta.powf(p1);
    Ok(0.5 * beta * beta * summary.grad_sq
        - bp / p1 * (summary.log_int + summary.lp_pow * beta.ln())
        + bp / (p1 * p1) * summary.lp_pow)
}

/// `I(βv) = β·(d/dβ)J(βv)` from the ray summary of `v`.
pub fn i_on_ray(summary: &RaySummary, beta: f64, params: &ModelParams) -> Result<f64> {
    check_beta(beta)?;
    Ok(i_unchecked(summary, beta, params.p()))
}

#[inline]
fn i_unchecked(summary: &RaySummary, beta: f64, p: f64) -> f64 {
    let bp = beta.powf(1.0 + p);
    beta * beta * summary.grad_sq - bp * (summary.log_int + summary.lp_pow * beta.ln())
}

/// `d/dβ I(βv)`, used for the Newton polish.
#[inline]
fn di_dbeta(summary: &RaySummary, beta: f64, p: f64) -> f64 {
    let p1 = 1.0 + p;
    let bp = beta.powf(p);
    2.0 * beta * summary.grad_sq
        - bp * (p1 * (summary.log_int + summary.lp_pow * beta.ln()) + summary.lp_pow)
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ray parameter beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

/// Cap on geometric bracket expansion: `2^1000` exhausts the double range, so
/// hitting the cap means the input is numerically degenerate, not unlucky.
const MAX_DOUBLINGS: usize = 1000;

/// The Nehari projection parameter `β* > 0` with `I(β*v) = 0`.
///
/// `I(βv) > 0` for small `β` (the `β²G` term dominates) and `< 0` for large
/// `β`; the sign change is unique. Bracketing expands geometrically from
/// `β = 1` in the direction indicated by the sign of `I(v)`, then bisects to
/// near round-off and finishes with a few Newton steps.
pub fn beta_star(summary: &RaySummary, params: &ModelParams) -> Result<f64> {
    if !(summary.grad_sq > 0.0) || !(summary.lp_pow > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Nehari projection requires G > 0 and P > 0, got G = {}, P = {}",
            summary.grad_sq, summary.lp_pow
        )));
    }
    let p = params.p();

    // Establish lo with I > 0 and hi with I < 0.
    let (mut lo, mut hi);
    let at_one = i_unchecked(summary, 1.0, p);
    if at_one > 0.0 {
        lo = 1.0;
        hi = 2.0;
        let mut n = 0;
        while i_unchecked(summary, hi, p) >= 0.0 {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::BracketFailure(
                    "I(beta v) stayed nonnegative through the expansion cap".into(),
                ));
            }
        }
    } else if at_one < 0.0 {
        hi = 1.0;
        lo = 0.5;
        let mut n = 0;
        while i_unchecked(summary, lo, p) <= 0.0 {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > MAX_DOUBLINGS || lo == 0.0 {
                return Err(Error::BracketFailure(
                    "I(beta v) stayed nonpositive down to underflow".into(),
                ));
            }
        }
    } else {
        return Ok(1.0);
    }

    // Bisection: ~100 halvings take the bracket to relative round-off.
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if i_unchecked(summary, mid, p) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Newton polish from the bracket midpoint, kept inside the bracket.
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..4 {
        let fi = i_unchecked(summary, beta, p);
        let di = di_dbeta(summary, beta, p);
        if di == 0.0 {
            break;
        }
        let next = beta - fi / di;
        if !(next > lo && next < hi) || !next.is_finite() {
            break;
        }
        beta = next;
    }
    Ok(beta)
}

/// Projects a field onto the Nehari manifold: returns `(β*, J(β* v))`.
pub fn nehari_projection(f: &Field, params: &ModelParams) -> Result<(f64, f64)> {
    let summary = RaySummary::of(f, params);
    let beta = beta_star(&summary, params)?;
    Ok((beta, j_on_ray(&summary, beta, params)?))
}
