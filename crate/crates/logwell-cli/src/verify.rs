//! The `verify` subcommand: randomized property suites with machine-readable
//! verdicts.
//!
//! Each suite draws its own deterministic stream (`ChaCha8` keyed by the
//! configured seed and a per-suite tag), so the same seed always yields the
//! same verdicts — byte-identical report included. The fault-injection flag
//! flips the sign of the log-integral inside the combination-identity
//! recombination; a correct implementation then fails that suite and the
//! process exits nonzero, which is the self-test of the harness.

use std::path::Path;

use logwell::domain::Field;
use logwell::fibering::{beta_star, i_on_ray, j_on_ray, RaySummary};
use logwell::functionals::{
    log_power_bound_check, nehari_delta, potential_from, EnergyParts,
};
use logwell::sampling::random_field;
use logwell::solver::{energy_residual, integrate, sign_persistence_check, SolverConfig};
use logwell::wells::{r_of_delta, WellAnalysis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands;
use crate::config::ExperimentConfig;
use crate::CliError;

/// Verdict of one property suite.
#[derive(Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    /// Cases examined.
    pub cases: usize,
    /// Cases that violated the property.
    pub failures: usize,
    /// First failure (or a summary statistic) for diagnosis.
    pub detail: String,
}

/// Full verify report, serialized as `verify.json` and printed to stdout.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub inject_fault: bool,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

fn rng_for(seed: u64, suite: u64) -> ChaCha8Rng {
    // Distinct streams per suite so adding cases to one suite never
    // perturbs another.
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ suite)
}

struct Suite {
    name: &'static str,
    cases: usize,
    failures: usize,
    detail: String,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            detail: String::new(),
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.detail.is_empty() {
                self.detail = detail();
            }
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name.to_string(),
            passed: self.failures == 0,
            cases: self.cases,
            failures: self.failures,
            detail: self.detail,
        }
    }
}

/// Runs every suite against the configured domain and parameters and writes
/// `verify.json`. Returns the report; the caller decides the exit code from
/// `report.passed`.
pub fn run_verify(
    config: &ExperimentConfig,
    analysis: &WellAnalysis,
    inject_fault: bool,
    out: &Path,
) -> Result<VerifyReport, CliError> {
    let seed = config.analysis.seed;
    let properties = vec![
        combination_identity(config, seed, inject_fault),
        fibering_signs(config, seed)?,
        well_radius(config, analysis, seed)?,
        curve_shape(analysis),
        gamma_bound(config, seed),
        sign_persistence(config)?,
        energy_identity(config)?,
    ];
    let report = VerifyReport {
        seed,
        inject_fault,
        passed: properties.iter().all(|p| p.passed),
        properties,
    };
    commands::write_json(out, "verify.json", &report)?;
    Ok(report)
}

/// `J = (p−1)/(2(1+p)) G + P/(1+p)² + I/(1+p)` on random fields. The fault
/// flag builds `I` with the log-integral sign flipped, which any correct
/// functional evaluation rejects.
fn combination_identity(config: &ExperimentConfig, seed: u64, inject_fault: bool) -> PropertyResult {
    let mut suite = Suite::new("combination_identity");
    let mut rng = rng_for(seed, 1);
    let p = config.params.p();
    let p1 = 1.0 + p;
    for _ in 0..100 {
        let amp = rng.random_range(0.2..3.0);
        let v = random_field(&config.domain, &mut rng).scaled(amp);
        let parts = EnergyParts::of(&v, &config.params);
        let j = potential_from(&parts, &config.params);
        let log_int = if inject_fault {
            -parts.log_int
        } else {
            parts.log_int
        };
        let i = parts.grad_sq - log_int;
        let combo = (p - 1.0) / (2.0 * p1) * parts.grad_sq + parts.lp_pow / (p1 * p1) + i / p1;
        let residual = (j - combo).abs();
        let tol = 1e-10 * (1.0 + j.abs());
        suite.record(residual <= tol, || {
            format!("residual {residual:.3e} exceeds {tol:.3e} (J = {j:.6})")
        });
    }
    suite.finish()
}

/// Fibering-map structure on random rays: `I(β*v) = 0`, `I > 0` before the
/// critical scale and `I < 0` after, `J` peaks at `β*`, and for `p ≥ 2` the
/// far end of the ray has negative energy.
fn fibering_signs(config: &ExperimentConfig, seed: u64) -> Result<PropertyResult, CliError> {
    let mut suite = Suite::new("fibering_signs");
    let mut rng = rng_for(seed, 2);
    let params = &config.params;
    for _ in 0..40 {
        let v = random_field(&config.domain, &mut rng);
        let summary = RaySummary::of(&v, params);
        let beta = beta_star(&summary, params)?;
        let scale = beta * beta * summary.grad_sq
            + beta.powf(1.0 + params.p()) * (summary.log_int.abs() + summary.lp_pow);
        let at_star = i_on_ray(&summary, beta, params)?;
        suite.record(at_star.abs() <= 1e-10 * scale, || {
            format!("I(β*v) = {at_star:.3e} not zero at β* = {beta:.6}")
        });
        for factor in [0.25, 0.5, 0.8] {
            let i = i_on_ray(&summary, factor * beta, params)?;
            suite.record(i > 0.0, || {
                format!("I({factor}β* v) = {i:.3e} not positive")
            });
        }
        for factor in [1.25, 2.0, 4.0] {
            let i = i_on_ray(&summary, factor * beta, params)?;
            suite.record(i < 0.0, || {
                format!("I({factor}β* v) = {i:.3e} not negative")
            });
        }
        let peak = j_on_ray(&summary, beta, params)?;
        for factor in [0.9, 1.1] {
            let j = j_on_ray(&summary, factor * beta, params)?;
            suite.record(j <= peak, || {
                format!("J({factor}β* v) = {j:.6} exceeds peak {peak:.6}")
            });
        }
        if params.p() >= 2.0 {
            let far = j_on_ray(&summary, 1e3, params)?;
            suite.record(far < 0.0, || format!("J(10³v) = {far:.3e} not negative"));
        }
    }
    Ok(suite.finish())
}

/// Fields with `‖∇v‖ = 0.99 r(δ)` satisfy `I_δ(v) > 0` for δ below, at, and
/// above 1 — the radius is a sound inner bound on the δ-well.
fn well_radius(
    config: &ExperimentConfig,
    analysis: &WellAnalysis,
    seed: u64,
) -> Result<PropertyResult, CliError> {
    let mut suite = Suite::new("well_radius_soundness");
    let mut rng = rng_for(seed, 3);
    let constants = analysis.constants();
    for delta in [0.5, 1.0, 1.5] {
        let r = r_of_delta(delta, constants)?;
        for _ in 0..20 {
            let v = random_field(&config.domain, &mut rng);
            let grad = EnergyParts::of(&v, &config.params).grad_sq.sqrt();
            let scaled = v.scaled(0.99 * r / grad);
            let i_delta = nehari_delta(&scaled, delta, &config.params)?;
            suite.record(i_delta > 0.0, || {
                format!("I_δ = {i_delta:.3e} not positive at δ = {delta}, r(δ) = {r:.6}")
            });
        }
    }
    Ok(suite.finish())
}

/// Shape of the sampled depth curve: positive inside `(0, δ₀)`, peak at the
/// δ = 1 grid point, and collapse to ≤ 10⁻³·d̂(1) at the crossing δ₀.
fn curve_shape(analysis: &WellAnalysis) -> PropertyResult {
    let mut suite = Suite::new("curve_shape");
    let curve = analysis.curve();
    let d_hat = analysis.constants().d_hat;
    let last = curve.delta_grid.len() - 1;
    for i in 0..last {
        let (delta, d) = (curve.delta_grid[i], curve.d_nehari_values[i]);
        suite.record(d > 0.0, || {
            format!("d̂({delta:.4}) = {d:.3e} not positive inside the well interval")
        });
    }
    let peak_idx = (0..curve.d_nehari_values.len())
        .max_by(|&a, &b| curve.d_nehari_values[a].total_cmp(&curve.d_nehari_values[b]))
        .unwrap_or(0);
    let peak_delta = curve.delta_grid[peak_idx];
    suite.record((peak_delta - 1.0).abs() <= 1e-2, || {
        format!("curve peaks at δ = {peak_delta:.4}, not 1")
    });
    let tail = curve.d_nehari_values[last];
    suite.record(tail <= 1e-3 * d_hat, || {
        format!("d̂(δ₀) = {tail:.3e} has not collapsed below 1e-3·d̂(1) = {:.3e}", 1e-3 * d_hat)
    });
    suite.finish()
}

/// The logarithmic growth estimate with `γ = (2p+2)/(2p+1)` holds on random
/// fields across two decades of amplitude.
fn gamma_bound(config: &ExperimentConfig, seed: u64) -> PropertyResult {
    let mut suite = Suite::new("gamma_bound");
    let mut rng = rng_for(seed, 4);
    for _ in 0..100 {
        let amp = 10f64.powf(rng.random_range(-1.0..1.0));
        let v = random_field(&config.domain, &mut rng).scaled(amp);
        let bound = log_power_bound_check(&v, &config.params);
        suite.record(bound.holds, || {
            format!("lhs {:.6e} exceeds rhs {:.6e}", bound.lhs, bound.rhs)
        });
    }
    suite.finish()
}

/// Short runs from either side of the Nehari manifold keep the sign of `I`:
/// one run starts inside the well (`I > 0`), one outside (`I < 0`).
fn sign_persistence(config: &ExperimentConfig) -> Result<PropertyResult, CliError> {
    let mut suite = Suite::new("sign_persistence");
    let lowest = Field::single_mode(&config.domain, &vec![1; config.domain.dim()], 1.0)?;
    let summary = RaySummary::of(&lowest, &config.params);
    let beta = beta_star(&summary, &config.params)?;
    let solver = SolverConfig {
        t_end: 0.05,
        ..SolverConfig::default()
    };
    for factor in [0.5, 1.5] {
        let v0 = lowest.scaled(factor * beta);
        let run = integrate(&config.domain, &config.params, &solver, &v0)?;
        let ok = sign_persistence_check(&run.rows);
        suite.record(ok, || {
            format!("Nehari sign flipped on the run started at {factor}·β*")
        });
    }
    Ok(suite.finish())
}

/// A moderate run satisfies the energy identity to within 10⁻⁶ relative to
/// `max(1, |J(v₀)|)` at the default tolerances.
fn energy_identity(config: &ExperimentConfig) -> Result<PropertyResult, CliError> {
    let mut suite = Suite::new("energy_identity");
    let lowest = Field::single_mode(&config.domain, &vec![1; config.domain.dim()], 0.5)?;
    let solver = SolverConfig {
        t_end: 1.0,
        ..SolverConfig::default()
    };
    let run = integrate(&config.domain, &config.params, &solver, &lowest)?;
    let residual = energy_residual(&run.rows);
    suite.record(residual <= 1e-6, || {
        format!("max energy residual {residual:.3e} exceeds 1e-6")
    });
    Ok(suite.finish())
}
