//! Spectral-Galerkin simulation and potential-well analysis for the
//! pseudo-parabolic equation
//!
//! ```text
//! v_t − Δv_t − Δv = v|v|^{p−1} log|v|      in U × (0, T),
//! v = 0                                     on ∂U,
//! ```
//!
//! on box domains `U = ∏ (0, L_i)` (1-D and 2-D). The Dirichlet Laplacian is
//! diagonal in the sine eigenbasis, so the Galerkin system is a diagonal ODE
//! in coefficient space with a pseudo-spectral nonlinear term — no linear
//! solves anywhere.
//!
//! The crate is organised in layers:
//!
//! - [`domain`]: box domains, sine transforms, spectra, norms.
//! - [`functionals`]: the energy `J`, the Nehari functional `I`, their
//!   δ-family, and the logarithmic growth estimate.
//! - [`fibering`]: the ray map `β ↦ J(βv)` in closed form and the Nehari
//!   projection `β*`.
//! - [`wells`]: Sobolev-constant and well-depth estimation, the `d(δ)` curve,
//!   `δ`-roots, `Λ_α`, and classification of initial data into predicted
//!   regimes (decay / blow-up / critical / high-energy / supercritical).
//! - [`solver`]: adaptive integrating-factor Runge–Kutta time integration of
//!   the Galerkin system, with an energy ledger and decay/blow-up monitors.
//! - [`sampling`]: seeded random and structured direction generators.

pub mod domain;
pub mod error;
pub mod fibering;
pub mod functionals;
pub mod sampling;
pub mod solver;
pub mod wells;

pub use domain::{
    from_spectral, laplacian_spectrum, to_spectral, DomainSpec, Field, SpectrumInfo,
    ANALYSIS_OVERSAMPLE,
};
pub use error::{Error, Result};
pub use fibering::{beta_star, i_on_ray, j_on_ray, nehari_projection, RaySummary};
pub use functionals::{
    identity_residual, log_integral, log_power_bound_check, log_source, nehari, nehari_delta,
    potential, potential_delta, EnergyParts, LogPowerBound, ModelParams,
};
pub use solver::{
    blowup_monitor, decay_monitor, energy_residual, integrate, rhs, sign_persistence_check, step,
    BlowupCheck, BlowupReason, DecayCheck, RunOutcome, RunResult, SolverConfig, SpectralState,
    TrajectoryRecord,
};
pub use wells::{
    analyze_well, classify_initial, d_formula, delta_roots, delta_zero, estimate_sobolev_constant,
    estimate_well_depth, lambda_alpha, r_of_delta, AnalysisBudget, HighEnergyChecks, LambdaAlpha,
    Regime, RegimeReport, SobolevEstimate, WellAnalysis, WellConstants, WellCurve,
};
