//! Potential-well constants, the depth curve `d(δ)`, and regime classification.
//!
//! Two estimators with opposite biases do the quantitative work:
//!
//! - the Sobolev constant `C = sup ‖v‖_{p+2}/‖∇v‖` is a supremum estimated
//!   **from below** by multi-start preconditioned gradient ascent; a safety
//!   factor `s ≥ 1` multiplies the estimate wherever `C` enters a sufficient
//!   condition (`r(δ)`, the `Λ_α` lower bound), keeping those conditions
//!   conservative;
//! - the well depth `d = inf_{I(v)=0} J(v)` is an infimum estimated **from
//!   above** ([`estimate_well_depth`]) by projecting a pool of directions onto
//!   the Nehari manifold and refining the best few by coordinate descent.
//!
//! The direction pool mixes every single eigenmode, low-mode-biased random
//! draws, and centered Gaussian bumps at log-spaced widths. The bumps matter
//! on large domains: the Nehari minimizer concentrates on an `O(1)` core
//! regardless of `L`, which neither eigenmodes nor low-mode noise capture.
//!
//! Along each direction the δ-projection is scalar work on its
//! [`RaySummary`]: `I_δ` weights the gradient by `δ`, so the projection root
//! comes from [`beta_star`] with `G ↦ δG`, and `J` is then evaluated with the
//! original `G`. On the Nehari-δ manifold the closed form
//! `J = (1/2 − δ/(1+p)) β² G + β^{1+p} P/(1+p)²` shows `d̂(δ) > 0` strictly
//! for `δ < (1+p)/2` and forces the zero crossing `δ₀` past `(1+p)/2`.
//! Each per-direction curve `δ ↦ J(β_δ(v) v)` is maximal exactly at `δ = 1`
//! (its δ-derivative is `(1−δ) β_δ G β_δ'`), so the sampled depth curve peaks
//! exactly at the grid point `1.0`, which the grid therefore always contains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{self, DomainSpec, Field, SpectrumInfo, ANALYSIS_OVERSAMPLE};
use crate::error::{Error, Result};
use crate::fibering::{beta_star, j_on_ray, RaySummary};
use crate::functionals::{self, nehari_from, potential_from, EnergyParts, ModelParams};
use crate::sampling;

/// Oversampling used inside sampling/ascent loops; cheaper than the analysis
/// default and still two orders below the 1e−6 agreement budgets used here.
const WELL_OVERSAMPLE: usize = 4;

/// Relative width of the near-critical band around `d̂` in which
/// classification is advisory only.
pub const NEAR_CRITICAL_BAND: f64 = 0.05;

/// Default safety factor applied to the Sobolev-constant estimate.
pub const DEFAULT_SAFETY_FACTOR: f64 = 1.05;

/// Cap on the number of single-eigenmode seed directions in the pool.
const MAX_EIGENMODE_SEEDS: usize = 512;

/// Number of Gaussian-bump seed directions (log-spaced widths).
const BUMP_SEEDS: usize = 12;

/// Work limits for the stochastic estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBudget {
    /// Gradient-ascent restarts for the Sobolev constant.
    pub ascent_starts: usize,
    /// Iteration cap per ascent start.
    pub ascent_iters: usize,
    /// Random directions in the well-depth pool.
    pub directions: usize,
    /// Coordinate-descent sweeps when refining the best directions.
    pub refine_passes: usize,
    /// How many of the best directions get refined.
    pub refine_top: usize,
    /// Number of δ-grid points for the well curve.
    pub delta_grid: usize,
}

impl Default for AnalysisBudget {
    fn default() -> Self {
        Self {
            ascent_starts: 12,
            ascent_iters: 600,
            directions: 600,
            refine_passes: 24,
            refine_top: 2,
            delta_grid: 201,
        }
    }
}

impl AnalysisBudget {
    fn validate(&self) -> Result<()> {
        if self.ascent_starts == 0
            || self.ascent_iters == 0
            || self.directions == 0
            || self.delta_grid < 16
        {
            return Err(Error::InvalidParameter(
                "analysis budget fields must be positive (delta_grid >= 16)".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Coefficient-space evaluation helpers (hot paths avoid Field roundtrips)
// ---------------------------------------------------------------------------

/// `(RaySummary, ‖v‖²_{H¹})` of a coefficient vector at the given oversampling.
fn summary_of_coeffs(
    domain: &DomainSpec,
    eig: &SpectrumInfo,
    params: &ModelParams,
    coeffs: &[f64],
    oversample: usize,
) -> (RaySummary, f64) {
    let scale = domain.spectral_scale();
    let mut grad_sq = 0.0;
    let mut h1 = 0.0;
    for (c, l) in coeffs.iter().zip(eig.eigenvalues()) {
        grad_sq += l * c * c;
        h1 += (1.0 + l) * c * c;
    }
    let fine = domain::synthesize(domain, coeffs, oversample);
    let (lp, lg) = functionals::power_log_sums(&fine, params.p());
    let cell = domain::fine_cell(domain, oversample);
    (
        RaySummary {
            grad_sq: scale * grad_sq,
            lp_pow: cell * lp,
            log_int: cell * lg,
        },
        scale * h1,
    )
}

/// Projects a direction onto the Nehari-δ manifold and evaluates `J` there.
/// Returns `(β_δ, J(β_δ v))`.
fn project_onto_delta_manifold(
    summary: &RaySummary,
    delta: f64,
    params: &ModelParams,
) -> Result<(f64, f64)> {
    let beta = beta_star(&summary.with_gradient_weight(delta), params)?;
    Ok((beta, j_on_ray(summary, beta, params)?))
}

// ---------------------------------------------------------------------------
// Sobolev constant
// ---------------------------------------------------------------------------

/// Result of the multi-start ascent for `C = sup ‖v‖_{p+2}/‖∇v‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    /// Best quotient found, re-evaluated at analysis-grade quadrature.
    pub value: f64,
    /// Final quotient of each start (diagnostic for multi-start agreement).
    pub per_start: Vec<f64>,
    /// Total accepted ascent iterations over all starts.
    pub iterations: usize,
    /// True when every start stalled (reached stationarity) before its cap.
    pub converged: bool,
}

/// Log-quotient `ln ‖v‖_{p+2} − ln ‖∇v‖` of a coefficient vector, plus the
/// ingredients needed by the gradient: `(ln Q, T = ∫|v|^{p+2}, G)`.
fn log_quotient(
    domain: &DomainSpec,
    eig: &SpectrumInfo,
    q: f64,
    coeffs: &[f64],
    oversample: usize,
) -> Option<(f64, f64, f64)> {
    let scale = domain.spectral_scale();
    let g: f64 = scale
        * coeffs
            .iter()
            .zip(eig.eigenvalues())
            .map(|(c, l)| l * c * c)
            .sum::<f64>();
    if !(g > 0.0) {
        return None;
    }
    let fine = domain::synthesize(domain, coeffs, oversample);
    let t: f64 = domain::fine_cell(domain, oversample)
        * fine.iter().map(|v| v.abs().powf(q)).sum::<f64>();
    if !(t > 0.0) || !t.is_finite() {
        return None;
    }
    Some((t.ln() / q - 0.5 * g.ln(), t, g))
}

/// Estimates the embedding constant `C = sup ‖v‖_{p+2}/‖∇v‖` from below by
/// projected gradient ascent on spectral coefficients, preconditioned with
/// `diag(1/(1+λ_k))`, restarted from one eigenmode and `ascent_starts − 1`
/// random low-mode directions.
pub fn estimate_sobolev_constant(
    domain: &DomainSpec,
    params: &ModelParams,
    budget: &AnalysisBudget,
    seed: u64,
) -> Result<SobolevEstimate> {
    budget.validate()?;
    let eig = domain.spectrum();
    let q = params.p() + 2.0;
    let n = domain.mode_count();
    let scale = domain.spectral_scale();

    let starts: Vec<Vec<f64>> = (0..budget.ascent_starts)
        .map(|s| {
            if s == 0 {
                let mut c = vec![0.0; n];
                c[0] = 1.0;
                c
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
                sampling::low_mode_coeffs(domain, &mut rng)
            }
        })
        .collect();

    let runs: Vec<(Vec<f64>, f64, usize, bool)> = starts
        .into_par_iter()
        .map(|mut c| {
            // Normalize to G = 1 so step sizes are comparable across starts.
            let mut state = log_quotient(domain, &eig, q, &c, WELL_OVERSAMPLE)
                .expect("seed directions are nondegenerate");
            let norm = state.2.sqrt();
            for x in c.iter_mut() {
                *x /= norm;
            }
            state.2 = 1.0;

            let mut eta = 0.1;
            let mut iters = 0usize;
            let mut stalled = 0usize;
            let mut converged = false;
            while iters < budget.ascent_iters {
                // Ascent direction of ln Q, preconditioned by the H¹ metric:
                // ∂ lnQ/∂c_k ∝ a_k/T − λ_k c_k/G with a_k the sine
                // coefficients of |v|^{q−1} sgn(v).
                let fine = domain::synthesize(domain, &c, WELL_OVERSAMPLE);
                let w: Vec<f64> = fine
                    .iter()
                    .map(|&v| v.signum() * v.abs().powf(q - 1.0))
                    .collect();
                let a = domain::analyze_values(domain, &w, WELL_OVERSAMPLE);
                let (lnq, t, g) = state;
                let dir: Vec<f64> = a
                    .iter()
                    .zip(c.iter())
                    .zip(eig.eigenvalues())
                    .map(|((ak, ck), l)| (scale * ak / t - l * ck / g) / (1.0 + l))
                    .collect();

                // Backtracking line search on ln Q, renormalizing each trial.
                let mut accepted = false;
                for _ in 0..30 {
                    let mut trial: Vec<f64> =
                        c.iter().zip(&dir).map(|(ck, dk)| ck + eta * dk).collect();
                    if let Some((lnq_t, t_t, g_t)) =
                        log_quotient(domain, &eig, q, &trial, WELL_OVERSAMPLE)
                    {
                        if lnq_t > lnq {
                            let norm = g_t.sqrt();
                            for x in trial.iter_mut() {
                                *x /= norm;
                            }
                            if lnq_t - lnq < 1e-15 * lnq.abs().max(1.0) {
                                stalled += 1;
                            } else {
                                stalled = 0;
                            }
                            c = trial;
                            state = (lnq_t, t_t / g_t.powf(q / 2.0), 1.0);
                            eta = (eta * 1.3).min(1.0);
                            accepted = true;
                            break;
                        }
                    }
                    eta *= 0.4;
                }
                iters += 1;
                if !accepted || stalled >= 25 {
                    converged = true;
                    break;
                }
            }
            let quotient = log_quotient(domain, &eig, q, &c, ANALYSIS_OVERSAMPLE)
                .map(|(lnq, _, _)| lnq.exp())
                .unwrap_or(0.0);
            (c, quotient, iters, converged)
        })
        .collect();

    let per_start: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let iterations = runs.iter().map(|r| r.2).sum();
    let converged = runs.iter().all(|r| r.3);
    let value = per_start.iter().copied().fold(0.0, f64::max);
    if !(value > 0.0) {
        return Err(Error::EstimationFailure(
            "Sobolev ascent produced no positive quotient".into(),
        ));
    }
    Ok(SobolevEstimate {
        value,
        per_start,
        iterations,
        converged,
    })
}

// ---------------------------------------------------------------------------
// Well constants and curve
// ---------------------------------------------------------------------------

/// The scalar constants of the potential-well geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellConstants {
    pub domain: DomainSpec,
    pub params: ModelParams,
    /// Raw supremum estimate of `C` (no safety factor).
    pub sobolev_c: f64,
    /// Estimation method tag.
    pub sobolev_method: String,
    /// Total ascent iterations behind `sobolev_c`.
    pub sobolev_iterations: usize,
    /// Whether every ascent start reached stationarity.
    pub sobolev_converged: bool,
    /// Safety factor `s ≥ 1`; `C_eff = s · sobolev_c` in sufficient conditions.
    pub safety_factor: f64,
    /// Poincaré constant `λ₁`.
    pub lambda1: f64,
    /// Sampled Nehari infimum `d̂ = d̂(1)` (upper estimate of the depth).
    pub d_hat: f64,
    /// Closed-form value `d_formula(1) = (1/2 − 1/(1+p)) r(1)²`.
    pub d_formula_at_1: f64,
    /// Zero crossing of the sampled depth curve, `δ₀ > (1+p)/2`.
    pub delta0: f64,
}

impl WellConstants {
    /// Safety-adjusted constant used in every sufficient condition.
    pub fn c_eff(&self) -> f64 {
        self.safety_factor * self.sobolev_c
    }
}

/// `r(δ) = (δ / C_eff^{p+2})^{1/p}`, the gradient-norm radius below which
/// `I_δ > 0` is guaranteed.
pub fn r_of_delta(delta: f64, constants: &WellConstants) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "r(delta) requires delta > 0, got {delta}"
        )));
    }
    let p = constants.params.p();
    Ok((delta / constants.c_eff().powf(p + 2.0)).powf(1.0 / p))
}

/// Closed-form depth bound `d(δ) = (1/2 − δ/(1+p)) r(δ)²` on `0 < δ < (1+p)/2`.
pub fn d_formula(delta: f64, constants: &WellConstants) -> Result<f64> {
    let p = constants.params.p();
    if !(delta > 0.0 && delta < (1.0 + p) / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "d_formula domain is 0 < delta < (1+p)/2, got {delta}"
        )));
    }
    let r = r_of_delta(delta, constants)?;
    Ok((0.5 - delta / (1.0 + p)) * r * r)
}

/// The sampled well curve on the δ-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellCurve {
    /// Log-spaced grid on `(0.01, δ₀]` with `1.0` inserted exactly.
    pub delta_grid: Vec<f64>,
    /// `r(δ)` with the safety-adjusted constant.
    pub r_values: Vec<f64>,
    /// `d_formula(δ)` where defined (`δ < (1+p)/2`).
    pub d_formula_values: Vec<Option<f64>>,
    /// Sampled Nehari depth `d̂(δ)`.
    pub d_nehari_values: Vec<f64>,
}

/// One direction of the sampling pool with its cached ray data.
#[derive(Debug, Clone)]
struct PoolEntry {
    coeffs: Vec<f64>,
    summary: RaySummary,
    /// `‖v‖²_{H¹}` of the direction (for `Λ_α` norms of projected points).
    h1sq: f64,
}

/// The direction pool shared by the depth curve, `δ`-roots, and `Λ_α`.
#[derive(Debug, Clone)]
pub(crate) struct DirectionPool {
    entries: Vec<PoolEntry>,
}

impl DirectionPool {
    /// Builds the pool: all single eigenmodes (capped), `directions` random
    /// low-mode draws from a single seeded stream (so budgets are nested
    /// prefixes), and Gaussian bumps at log-spaced widths.
    fn build(
        domain: &DomainSpec,
        eig: &SpectrumInfo,
        params: &ModelParams,
        directions: usize,
        seed: u64,
    ) -> Self {
        let n = domain.mode_count();
        let mut raw: Vec<Vec<f64>> = Vec::new();

        for k in 0..n.min(MAX_EIGENMODE_SEEDS) {
            let mut c = vec![0.0; n];
            c[k] = 1.0;
            raw.push(c);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..directions {
            raw.push(sampling::low_mode_coeffs(domain, &mut rng));
        }

        let l_min = domain
            .lengths()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let (w_lo, w_hi) = (l_min / 32.0, l_min / 3.0);
        for i in 0..BUMP_SEEDS {
            let t = i as f64 / (BUMP_SEEDS as f64 - 1.0);
            let width = w_lo * (w_hi / w_lo).powf(t);
            raw.push(sampling::gaussian_bump(domain, width).to_spectral());
        }

        let entries = raw
            .into_par_iter()
            .filter_map(|coeffs| {
                let (summary, h1sq) =
                    summary_of_coeffs(domain, eig, params, &coeffs, WELL_OVERSAMPLE);
                (summary.grad_sq > 0.0 && summary.lp_pow > 0.0).then_some(PoolEntry {
                    coeffs,
                    summary,
                    h1sq,
                })
            })
            .collect();
        Self { entries }
    }

    /// `d̂(δ)`: minimum of `J` over the δ-projections of all pool directions.
    fn depth_at(&self, delta: f64, params: &ModelParams) -> Result<f64> {
        let best = self
            .entries
            .par_iter()
            .filter_map(|e| {
                project_onto_delta_manifold(&e.summary, delta, params)
                    .ok()
                    .map(|(_, j)| j)
            })
            .reduce(|| f64::INFINITY, f64::min);
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::EstimationFailure(format!(
                "no direction admitted a Nehari-delta projection at delta = {delta}"
            )))
        }
    }

    /// Indices of the `count` entries with smallest projected `J` at `δ`.
    fn best_indices(&self, delta: f64, params: &ModelParams, count: usize) -> Vec<usize> {
        let mut scored: Vec<(usize, f64)> = self
            .entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                project_onto_delta_manifold(&e.summary, delta, params)
                    .ok()
                    .map(|(_, j)| (i, j))
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        scored.truncate(count);
        scored.into_iter().map(|(i, _)| i).collect()
    }
}

/// Refines one direction by coordinate descent on its spectral coefficients,
/// re-projecting onto the Nehari-δ manifold after every move.
fn refine_direction(
    domain: &DomainSpec,
    eig: &SpectrumInfo,
    params: &ModelParams,
    delta: f64,
    start: &[f64],
    passes: usize,
) -> Option<(Vec<f64>, f64)> {
    let project = |c: &[f64]| -> Option<f64> {
        let (summary, _) = summary_of_coeffs(domain, eig, params, c, WELL_OVERSAMPLE);
        if !(summary.grad_sq > 0.0 && summary.lp_pow > 0.0) {
            return None;
        }
        project_onto_delta_manifold(&summary, delta, params)
            .ok()
            .map(|(_, j)| j)
    };

    let mut best_c = start.to_vec();
    let mut best_j = project(&best_c)?;
    let amp = best_c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut step = 0.25 * amp;
    for _ in 0..passes {
        let mut improved = false;
        for k in 0..best_c.len() {
            for s in [step, -step] {
                let saved = best_c[k];
                best_c[k] = saved + s;
                match project(&best_c) {
                    Some(j) if j < best_j * (1.0 - 1e-13) => {
                        best_j = j;
                        improved = true;
                    }
                    _ => best_c[k] = saved,
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-7 * amp {
                break;
            }
        }
    }
    Some((best_c, best_j))
}

/// Everything the classifier needs: constants, the sampled curve, and the
/// direction pool that produced it.
#[derive(Debug, Clone)]
pub struct WellAnalysis {
    constants: WellConstants,
    curve: WellCurve,
    pool: DirectionPool,
}

/// Runs the full well analysis: Sobolev ascent, direction pool, refinement at
/// `δ = 1`, the zero crossing `δ₀`, and the sampled curve.
pub fn analyze_well(
    domain: &DomainSpec,
    params: &ModelParams,
    budget: &AnalysisBudget,
    seed: u64,
    safety_factor: f64,
) -> Result<WellAnalysis> {
    budget.validate()?;
    if !(safety_factor >= 1.0) || !safety_factor.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "safety factor must be >= 1, got {safety_factor}"
        )));
    }
    let eig = domain.spectrum();
    let sobolev = estimate_sobolev_constant(domain, params, budget, seed)?;

    let mut pool = DirectionPool::build(domain, &eig, params, budget.directions, seed);

    // Refine the best directions at δ = 1 and fold the results back into the
    // pool, so the reported curve and d̂ come from one direction set.
    for idx in pool.best_indices(1.0, params, budget.refine_top.max(1)) {
        let start = pool.entries[idx].coeffs.clone();
        if let Some((coeffs, _)) =
            refine_direction(domain, &eig, params, 1.0, &start, budget.refine_passes)
        {
            let (summary, h1sq) =
                summary_of_coeffs(domain, &eig, params, &coeffs, WELL_OVERSAMPLE);
            if summary.grad_sq > 0.0 && summary.lp_pow > 0.0 {
                pool.entries.push(PoolEntry {
                    coeffs,
                    summary,
                    h1sq,
                });
            }
        }
    }

    let d_hat = pool.depth_at(1.0, params)?;
    if !(d_hat > 0.0) {
        return Err(Error::EstimationFailure(format!(
            "sampled well depth is not positive: {d_hat}"
        )));
    }

    // Zero crossing of the depth curve: guaranteed past (1+p)/2.
    let mut lo = (1.0 + params.p()) / 2.0;
    let mut hi = lo * 1.25;
    let mut expansions = 0;
    while pool.depth_at(hi, params)? > 0.0 {
        lo = hi;
        hi *= 1.25;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::BracketFailure(
                "depth curve failed to cross zero past (1+p)/2".into(),
            ));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pool.depth_at(mid, params)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta0 = 0.5 * (lo + hi);

    // Log-spaced δ-grid on (0.01, δ₀] with 1.0 inserted exactly: every
    // per-direction curve peaks exactly there, so the sampled curve does too.
    let mut delta_grid: Vec<f64> = Vec::with_capacity(budget.delta_grid + 1);
    let (g_lo, g_hi) = (0.01f64, delta0);
    for i in 0..budget.delta_grid {
        let t = i as f64 / (budget.delta_grid as f64 - 1.0);
        delta_grid.push(g_lo * (g_hi / g_lo).powf(t));
    }
    delta_grid.push(1.0);
    delta_grid.sort_by(f64::total_cmp);
    delta_grid.dedup();

    let mut constants = WellConstants {
        domain: domain.clone(),
        params: *params,
        sobolev_c: sobolev.value,
        sobolev_method: "preconditioned multi-start gradient ascent".into(),
        sobolev_iterations: sobolev.iterations,
        sobolev_converged: sobolev.converged,
        safety_factor,
        lambda1: eig.lambda1(),
        d_hat,
        d_formula_at_1: 0.0,
        delta0,
    };
    constants.d_formula_at_1 = d_formula(1.0, &constants)?;

    let mut r_values = Vec::with_capacity(delta_grid.len());
    let mut d_formula_values = Vec::with_capacity(delta_grid.len());
    let mut d_nehari_values = Vec::with_capacity(delta_grid.len());
    for &delta in &delta_grid {
        r_values.push(r_of_delta(delta, &constants)?);
        d_formula_values.push(d_formula(delta, &constants).ok());
        d_nehari_values.push(pool.depth_at(delta, params)?);
    }

    Ok(WellAnalysis {
        constants,
        curve: WellCurve {
            delta_grid,
            r_values,
            d_formula_values,
            d_nehari_values,
        },
        pool,
    })
}

impl WellAnalysis {
    /// The scalar constants.
    pub fn constants(&self) -> &WellConstants {
        &self.constants
    }

    /// The sampled curve on the δ-grid.
    pub fn curve(&self) -> &WellCurve {
        &self.curve
    }

    /// `d̂(δ)` evaluated on the full pool (not interpolated from the grid).
    pub fn depth_at(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "depth requires delta > 0, got {delta}"
            )));
        }
        self.pool.depth_at(delta, &self.constants.params)
    }

    /// Both roots of `d̂(δ) = η` around the peak, `δ₁ ≤ 1 ≤ δ₂`.
    ///
    /// The sampled curve has a positive limit as `δ → 0`: the δ-projection
    /// of a fixed direction tends to the field whose log-power integral
    /// vanishes, and that field's energy is bounded away from zero on a
    /// bounded domain. When `η` lies below that floor the level is never
    /// crossed on the left and `δ₁ = 0` is returned (the well constraint is
    /// vacuous there), keeping the associated decay rate continuous in `η`.
    pub fn delta_roots(&self, eta: f64) -> Result<(f64, f64)> {
        let d_hat = self.constants.d_hat;
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta roots require 0 < eta <= d_hat, got eta = {eta}"
            )));
        }
        if eta >= d_hat {
            // The curve peaks at δ = 1 with value d̂; at (or within round-off
            // above) the peak both roots coincide there.
            if eta <= d_hat * (1.0 + 1e-9) {
                return Ok((1.0, 1.0));
            }
            return Err(Error::InvalidParameter(format!(
                "delta roots require eta <= d_hat = {d_hat}, got {eta}"
            )));
        }
        let params = &self.constants.params;

        // Left root: expand down from 1 until the depth drops below η; when
        // it never does, η is below the curve's δ → 0 floor and δ₁ = 0.
        let mut hi = 1.0;
        let mut lo = 0.5;
        let mut n = 0;
        let mut bracketed = true;
        while self.pool.depth_at(lo, params)? >= eta {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > 60 {
                bracketed = false;
                break;
            }
        }
        let delta1 = if bracketed {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if self.pool.depth_at(mid, params)? >= eta {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            0.0
        };

        // Right root: between 1 and δ₀ (depth falls to 0 there).
        let mut lo = 1.0;
        let mut hi = self.constants.delta0;
        if self.pool.depth_at(hi, params)? >= eta {
            // η below the curve even at δ₀ (possible only through estimation
            // noise right at the crossing); report the crossing itself.
            return Ok((delta1, hi));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.pool.depth_at(mid, params)? >= eta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((delta1, 0.5 * (lo + hi)))
    }

    /// Lower bound and sampled estimate of `Λ_α = inf {‖v‖²_{H¹} : I(v) = 0,
    /// J(v) < α}`.
    pub fn lambda_alpha(&self, alpha: f64) -> Result<LambdaAlpha> {
        if !(alpha > self.constants.d_hat) {
            return Err(Error::InvalidParameter(format!(
                "lambda_alpha requires alpha > d_hat = {}, got {alpha}",
                self.constants.d_hat
            )));
        }
        let params = &self.constants.params;
        let p = params.p();
        let lower_bound = self.constants.c_eff().powf(-2.0 / p);
        let estimate = self
            .pool
            .entries
            .par_iter()
            .filter_map(|e| {
                let (beta, j) = project_onto_delta_manifold(&e.summary, 1.0, params).ok()?;
                (j < alpha).then_some(beta * beta * e.h1sq)
            })
            .reduce(|| f64::INFINITY, f64::min);
        Ok(LambdaAlpha {
            alpha,
            lower_bound,
            estimate: estimate.is_finite().then_some(estimate),
        })
    }

    /// Classifies initial data against the theorem hypotheses.
    pub fn classify(&self, v0: &Field, alpha: Option<f64>) -> Result<RegimeReport> {
        classify_initial(v0, self, alpha)
    }
}

/// `Λ_α` data: the provable lower bound and the sampled infimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaAlpha {
    pub alpha: f64,
    /// `(1/C_eff)^{2/p}` — positive for every α.
    pub lower_bound: f64,
    /// Minimum `‖·‖²_{H¹}` over sampled Nehari points with `J < α`, when any.
    pub estimate: Option<f64>,
}

/// One-shot depth estimate at a single `δ`, building a fresh pool (with
/// refinement at that `δ`). Budgets with a common seed are nested, so the
/// estimate is nonincreasing in `budget.directions`.
pub fn estimate_well_depth(
    domain: &DomainSpec,
    params: &ModelParams,
    delta: f64,
    budget: &AnalysisBudget,
    seed: u64,
) -> Result<f64> {
    budget.validate()?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "depth requires delta > 0, got {delta}"
        )));
    }
    let eig = domain.spectrum();
    let mut pool = DirectionPool::build(domain, &eig, params, budget.directions, seed);
    for idx in pool.best_indices(delta, params, budget.refine_top.max(1)) {
        let start = pool.entries[idx].coeffs.clone();
        if let Some((coeffs, _)) =
            refine_direction(domain, &eig, params, delta, &start, budget.refine_passes)
        {
            let (summary, h1sq) = summary_of_coeffs(domain, &eig, params, &coeffs, WELL_OVERSAMPLE);
            if summary.grad_sq > 0.0 && summary.lp_pow > 0.0 {
                pool.entries.push(PoolEntry {
                    coeffs,
                    summary,
                    h1sq,
                });
            }
        }
    }
    pool.depth_at(delta, params)
}

/// The zero crossing `δ₀` of the sampled depth curve.
pub fn delta_zero(analysis: &WellAnalysis) -> f64 {
    analysis.constants().delta0
}

/// Roots `(δ₁, δ₂)` of `d̂(δ) = η` ([`WellAnalysis::delta_roots`]).
pub fn delta_roots(eta: f64, analysis: &WellAnalysis) -> Result<(f64, f64)> {
    analysis.delta_roots(eta)
}

/// `Λ_α` lower bound and sampled estimate ([`WellAnalysis::lambda_alpha`]).
pub fn lambda_alpha(alpha: f64, analysis: &WellAnalysis) -> Result<LambdaAlpha> {
    analysis.lambda_alpha(alpha)
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Predicted qualitative behaviour of a run from its initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `I₀ > 0`, `J₀ < d̂`: inside the well; global existence with decay.
    GlobalDecay,
    /// `I₀ < 0`, `J₀ < d̂`: outer well; finite-time blow-up.
    Blowup,
    /// `|J₀ − d̂|` within the near-critical band, `I₀ ≥ 0`.
    CriticalGlobal,
    /// `|J₀ − d̂|` within the near-critical band, `I₀ < 0`.
    CriticalBlowup,
    /// Above the well with the high-energy triple satisfied.
    HighEnergyBlowup,
    /// `d̂ < J₀ < α` with `I₀ > 0` and `‖v₀‖²_{H¹}` below the `Λ_α` bound.
    SupercriticalGlobal,
    /// No theorem hypothesis applies (includes `v₀ = 0`).
    Indeterminate,
}

/// The three conditions of the high-energy blow-up criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighEnergyChecks {
    /// (i) `J(v₀) > 0`.
    pub positive_energy: bool,
    /// (ii) `‖v₀‖²_{H¹} > 2(λ₁+1)(1+p)/(λ₁(p−1)) · J(v₀)`.
    pub norm_above_threshold: bool,
    /// (iii) `I(v₀) < 0`.
    pub negative_nehari: bool,
}

/// Classification of initial data against every theorem hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub j0: f64,
    pub i0: f64,
    /// `‖v₀‖²_{H¹}`.
    pub norm_h1sq: f64,
    pub d_hat: f64,
    pub d_formula_at_1: f64,
    /// Inside the well `W = {J < d̂, I > 0} ∪ {0}`.
    pub in_w: bool,
    /// Inside the outer well `V = {J < d̂, I < 0}`.
    pub in_v: bool,
    /// `|J₀ − d̂| < 0.05·d̂`: estimator bias makes the call advisory.
    pub near_critical: bool,
    /// Membership in `W_δ` at each δ-grid point.
    pub w_delta: Vec<bool>,
    /// Membership in `V_δ` at each δ-grid point.
    pub v_delta: Vec<bool>,
    /// Roots of `d̂(δ) = J₀` when `0 < J₀ < d̂`.
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub regime: Regime,
    /// Predicted decay rate `(1−δ₁)·λ₁/(1+λ₁)` when applicable, else 0.
    pub mu_pred: f64,
    pub high_energy: HighEnergyChecks,
    /// `Λ_α` lower bound when `α` was supplied and exceeds `d̂`.
    pub lambda_alpha_lower: Option<f64>,
    pub alpha: Option<f64>,
}

/// Evaluates all membership flags and the predicted regime for `v0`.
pub fn classify_initial(
    v0: &Field,
    analysis: &WellAnalysis,
    alpha: Option<f64>,
) -> Result<RegimeReport> {
    let constants = analysis.constants();
    if v0.domain() != &constants.domain {
        return Err(Error::InvalidInput(
            "initial data domain differs from the analysis domain".into(),
        ));
    }
    let params = &constants.params;
    let parts = EnergyParts::of(v0, params);
    let j0 = potential_from(&parts, params);
    let i0 = nehari_from(&parts);
    let norm_h1sq = v0.norm_h1sq();
    let d_hat = constants.d_hat;
    let lambda1 = constants.lambda1;
    let p = params.p();

    let is_zero = v0.values().iter().all(|&v| v == 0.0);
    let near_critical = !is_zero && (j0 - d_hat).abs() < NEAR_CRITICAL_BAND * d_hat;

    let in_w = is_zero || (i0 > 0.0 && j0 < d_hat);
    let in_v = !is_zero && i0 < 0.0 && j0 < d_hat;

    let curve = analysis.curve();
    let mut w_delta = Vec::with_capacity(curve.delta_grid.len());
    let mut v_delta = Vec::with_capacity(curve.delta_grid.len());
    for (&delta, &depth) in curve.delta_grid.iter().zip(&curve.d_nehari_values) {
        let i_delta = i0 + (delta - 1.0) * parts.grad_sq;
        w_delta.push(is_zero || (i_delta > 0.0 && j0 < depth));
        v_delta.push(!is_zero && i_delta < 0.0 && j0 < depth);
    }

    let (delta1, delta2) = if !is_zero && j0 > 0.0 && j0 < d_hat {
        let (a, b) = analysis.delta_roots(j0)?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };

    let mu_pred = match delta1 {
        Some(d1) if i0 > 0.0 => (1.0 - d1) * lambda1 / (1.0 + lambda1),
        _ => 0.0,
    };

    let high_energy = HighEnergyChecks {
        positive_energy: j0 > 0.0,
        norm_above_threshold: norm_h1sq
            > 2.0 * (lambda1 + 1.0) * (1.0 + p) / (lambda1 * (p - 1.0)) * j0,
        negative_nehari: i0 < 0.0,
    };

    let lambda_alpha_lower = match alpha {
        Some(a) if a > d_hat => Some(analysis.lambda_alpha(a)?.lower_bound),
        _ => None,
    };

    let regime = if is_zero {
        Regime::Indeterminate
    } else if near_critical {
        if i0 >= 0.0 {
            Regime::CriticalGlobal
        } else {
            Regime::CriticalBlowup
        }
    } else if j0 < d_hat {
        if i0 > 0.0 {
            Regime::GlobalDecay
        } else if i0 < 0.0 {
            Regime::Blowup
        } else {
            Regime::Indeterminate
        }
    } else if high_energy.positive_energy
        && high_energy.norm_above_threshold
        && high_energy.negative_nehari
    {
        Regime::HighEnergyBlowup
    } else if let (Some(a), Some(lower)) = (alpha, lambda_alpha_lower) {
        if i0 > 0.0 && j0 < a && norm_h1sq < lower {
            Regime::SupercriticalGlobal
        } else {
            Regime::Indeterminate
        }
    } else {
        Regime::Indeterminate
    };

    Ok(RegimeReport {
        j0,
        i0,
        norm_h1sq,
        d_hat,
        d_formula_at_1: constants.d_formula_at_1,
        in_w,
        in_v,
        near_critical,
        w_delta,
        v_delta,
        delta1,
        delta2,
        regime,
        mu_pred,
        high_energy,
        lambda_alpha_lower,
        alpha,
    })
}
