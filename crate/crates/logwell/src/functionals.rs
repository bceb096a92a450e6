//! Energy and Nehari functionals for the logarithmic-power nonlinearity.
//!
//! For the source term `f(v) = v|v|^{p−1} log|v|` the potential energy and
//! Nehari functionals are
//!
//! ```text
//! J(v) = ½‖∇v‖² − (1/(1+p)) ∫ |v|^{1+p} log|v| + (1/(1+p)²) ‖v‖_{1+p}^{1+p}
//! I(v) = ‖∇v‖² − ∫ |v|^{1+p} log|v|
//! ```
//!
//! together with the δ-family `J_δ`, `I_δ` obtained by weighting the gradient
//! term, and the algebraic decomposition
//!
//! ```text
//! J(v) = (p−1)/(2(1+p)) ‖∇v‖² + (1/(1+p)²) ‖v‖_{1+p}^{1+p} + I(v)/(1+p)
//! ```
//!
//! which holds identically and is exposed as a residual for self-checks.
//! Integrals of the non-band-limited terms use the oversampled nodal rule from
//! [`crate::domain`]; the gradient term is spectral and exact on the grid.

use serde::{Deserialize, Serialize};

use crate::domain::{fine_cell, Field, ANALYSIS_OVERSAMPLE};
use crate::error::{Error, Result};

/// Magnitudes below this floor are treated as exact zeros before taking logs,
/// so denormals cannot produce −∞; no integral changes at tolerance.
pub const LOG_FLOOR: f64 = 1e-300;

/// Upper cap on the power index; beyond this, `|v|^{1+p}` overflows for any
/// field of interesting amplitude long before theory becomes the constraint.
pub const MAX_P: f64 = 64.0;

/// Model parameters: the power index of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    p: f64,
}

impl ModelParams {
    /// Validates `p > 1` (finite, below the numerical cap).
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 || p > MAX_P {
            return Err(Error::InvalidParameter(format!(
                "power index p must satisfy 1 < p <= {MAX_P}, got {p}"
            )));
        }
        Ok(Self { p })
    }

    /// The power index.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Hölder-type exponent `γ = (2p+2)/(2p+1)` of the logarithmic estimate.
    pub fn gamma(&self) -> f64 {
        (2.0 * self.p + 2.0) / (2.0 * self.p + 1.0)
    }

    /// Whether `p` lies in the admissible range for the given dimension:
    /// unrestricted for `dim ≤ 2`, `p < 4/(dim−2)` for `3 ≤ dim ≤ 5`.
    pub fn admissible_for_dim(&self, dim: usize) -> bool {
        match dim {
            0 => false,
            1 | 2 => true,
            3..=5 => self.p < 4.0 / (dim as f64 - 2.0),
            _ => false,
        }
    }
}

/// Pointwise source value `f(v) = v|v|^{p−1} log|v|`, extended by 0 at `v = 0`.
#[inline]
pub fn log_source_value(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if a < LOG_FLOOR {
        return 0.0;
    }
    v.signum() * a.powf(p) * a.ln()
}

/// Pointwise application of the source term to a field.
pub fn log_source(f: &Field, params: &ModelParams) -> Field {
    let p = params.p();
    let values = f.values().iter().map(|&v| log_source_value(v, p)).collect();
    Field::from_values(f.domain(), values).expect("source of a finite field is finite")
}

/// The three integral ingredients of `J` and `I`, computed in one pass:
/// `grad_sq = ‖∇v‖²` (spectral, exact), `lp_pow = ‖v‖_{1+p}^{1+p}` and
/// `log_int = ∫|v|^{1+p} log|v|` (oversampled nodal rule on a shared fine grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub grad_sq: f64,
    pub lp_pow: f64,
    pub log_int: f64,
}

impl EnergyParts {
    /// Evaluates the parts with the default analysis oversampling.
    pub fn of(f: &Field, params: &ModelParams) -> Self {
        Self::with_oversample(f, params, ANALYSIS_OVERSAMPLE)
    }

    /// Evaluates the parts with an explicit oversampling factor.
    pub fn with_oversample(f: &Field, params: &ModelParams, oversample: usize) -> Self {
        let coeffs = f.to_spectral();
        let eig = f.domain().spectrum();
        let grad_sq: f64 = f.domain().spectral_scale()
            * coeffs
                .iter()
                .zip(eig.eigenvalues())
                .map(|(c, l)| l * c * c)
                .sum::<f64>();

        let fine = if oversample <= 1 {
            f.values().to_vec()
        } else {
            crate::domain::synthesize(f.domain(), &coeffs, oversample)
        };
        let (lp_sum, log_sum) = power_log_sums(&fine, params.p());
        let cell = fine_cell(f.domain(), oversample);
        Self {
            grad_sq,
            lp_pow: cell * lp_sum,
            log_int: cell * log_sum,
        }
    }
}

/// Accumulates `Σ |v|^{1+p}` and `Σ |v|^{1+p} log|v|` over nodal values.
pub(crate) fn power_log_sums(values: &[f64], p: f64) -> (f64, f64) {
    let mut lp = 0.0;
    let mut lg = 0.0;
    for &v in values {
        let a = v.abs();
        if a < LOG_FLOOR {
            continue;
        }
        let pw = a.powf(1.0 + p);
        lp += pw;
        lg += pw * a.ln();
    }
    (lp, lg)
}

/// `∫_U |v|^{1+p} log|v| dx` by the oversampled nodal rule.
pub fn log_integral(f: &Field, params: &ModelParams) -> f64 {
    EnergyParts::of(f, params).log_int
}

/// Potential energy `J(v)`.
pub fn potential(f: &Field, params: &ModelParams) -> f64 {
    potential_from(&EnergyParts::of(f, params), params)
}

/// Nehari functional `I(v)`.
pub fn nehari(f: &Field, params: &ModelParams) -> f64 {
    nehari_from(&EnergyParts::of(f, params))
}

/// δ-weighted potential `J_δ(v)` (gradient term weighted by `δ`).
pub fn potential_delta(f: &Field, delta: f64, params: &ModelParams) -> Result<f64> {
    check_delta(delta)?;
    let parts = EnergyParts::of(f, params);
    let p1 = 1.0 + params.p();
    Ok(0.5 * delta * parts.grad_sq - parts.log_int / p1 + parts.lp_pow / (p1 * p1))
}

/// δ-weighted Nehari functional `I_δ(v) = δ‖∇v‖² − ∫|v|^{1+p} log|v|`.
pub fn nehari_delta(f: &Field, delta: f64, params: &ModelParams) -> Result<f64> {
    check_delta(delta)?;
    let parts = EnergyParts::of(f, params);
    Ok(delta * parts.grad_sq - parts.log_int)
}

fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(())
}

/// `J` assembled from precomputed parts.
pub fn potential_from(parts: &EnergyParts, params: &ModelParams) -> f64 {
    let p1 = 1.0 + params.p();
    0.5 * parts.grad_sq - parts.log_int / p1 + parts.lp_pow / (p1 * p1)
}

/// `I` assembled from precomputed parts.
pub fn nehari_from(parts: &EnergyParts) -> f64 {
    parts.grad_sq - parts.log_int
}

/// Residual of the algebraic decomposition
/// `J = (p−1)/(2(1+p))‖∇v‖² + ‖v‖_{1+p}^{1+p}/(1+p)² + I/(1+p)`,
/// which vanishes identically; the computed value is pure round-off.
pub fn identity_residual(f: &Field, params: &ModelParams) -> f64 {
    let parts = EnergyParts::of(f, params);
    let p = params.p();
    let p1 = 1.0 + p;
    let j = potential_from(&parts, params);
    let combo = (p - 1.0) / (2.0 * p1) * parts.grad_sq
        + parts.lp_pow / (p1 * p1)
        + nehari_from(&parts) / p1;
    (j - combo).abs()
}

/// Two sides of the logarithmic growth estimate with `γ = (2p+2)/(2p+1)`:
/// `∫ (|v|^p |log|v||)^γ ≤ (ep)^{−γ}|U| + 2^γ ‖v‖_{1+p}^{1+p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPowerBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the logarithmic growth estimate on a field.
///
/// The split behind the bound: where `|v| ≤ 1`, `|v|^p |log|v|| ≤ (ep)^{−1}`
/// (the maximum of `x^p |log x|` on `(0,1]`); where `|v| > 1`,
/// `(|v|^p log|v|)^γ ≤ 2|v|^{1+p}` with the stated `γ`. Both bounds are
/// inequalities, so `holds` is expected true on every input.
pub fn log_power_bound_check(f: &Field, params: &ModelParams) -> LogPowerBound {
    let p = params.p();
    let gamma = params.gamma();
    let fine = f.values_fine(ANALYSIS_OVERSAMPLE);
    let cell = fine_cell(f.domain(), ANALYSIS_OVERSAMPLE);

    let mut lhs_sum = 0.0;
    let mut lp_sum = 0.0;
    for &v in &fine {
        let a = v.abs();
        if a < LOG_FLOOR {
            continue;
        }
        lhs_sum += (a.powf(p) * a.ln().abs()).powf(gamma);
        lp_sum += a.powf(1.0 + p);
    }
    let lhs = cell * lhs_sum;
    let rhs = (std::f64::consts::E * p).powf(-gamma) * f.domain().measure()
        + 2.0_f64.powf(gamma) * cell * lp_sum;
    LogPowerBound {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-10),
    }
}
