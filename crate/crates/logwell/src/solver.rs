//! Adaptive time integration of the Galerkin system and runtime monitors.
//!
//! In the sine eigenbasis the equation reduces to the diagonal semilinear
//! system
//!
//! ```text
//! (1 + λ_k) q̇_k + λ_k q_k = f̂_k(q),      a_k := λ_k/(1+λ_k) ∈ [0, 1),
//! ```
//!
//! so the stiff linear part is a known scalar decay per mode and never needs
//! a linear solve. The integrator is an integrating-factor Dormand–Prince
//! 5(4) pair: substituting `q(t) = e^{−A(t−t_n)} u(t)` turns the system into
//! a nonstiff ODE for `u`, and running the classical tableau on `u` gives
//! stages
//!
//! ```text
//! Q_i = e^{−A c_i h} q_n + h Σ_j a_ij e^{−A(c_i−c_j)h} G_j,     G_j = g(Q_j),
//! ```
//!
//! with `g` the nonlinear term alone. The linear flow is reproduced exactly
//! (machine-precision per mode when the source is off), the error estimate is
//! the embedded 4th-order difference, rejected steps halve `dt`, and the
//! first-same-as-last property makes the final stage's source evaluation free
//! for the next step — and for the trajectory row written at the accepted
//! state, whose `J` and `I` therefore live on the solver's own collocation
//! grid. The energy ledger `∫‖v_t‖²_{H¹}` and the concavity functional
//! `N(t) = ∫‖v‖²_{H¹}` ride along as two extra state components integrated
//! over the same stages with the 5th-order `b`-weights, and their embedded
//! `b − b̂` differences enter the step-error norm alongside the modal ones.
//! Without that, the exactness of the integrating factor on gentle runs lets
//! the controller take steps whose ledger quadrature error dwarfs the modal
//! error, and the energy-identity residual stops responding to `rel_tol`.
//! Their error components are measured relative to `1 + |value|`, matching
//! the `max(1, |J(v₀)|)` normalization of the energy-identity residual.

use serde::{Deserialize, Serialize};

use crate::domain::{self, DomainSpec, Field};
use crate::error::{Error, Result};
use crate::functionals::ModelParams;
use crate::wells::RegimeReport;

/// Hard cap on consecutive rejected steps before giving up.
const MAX_CONSECUTIVE_REJECTIONS: usize = 60;

/// Magnitude floor under which the logarithm factor is treated as zero.
const LOG_FLOOR: f64 = 1e-300;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ error weights of the embedded 4th-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Time-integration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Integration horizon.
    pub t_end: f64,
    /// First attempted step.
    pub dt_init: f64,
    /// Smallest admissible step; `0` selects `1e−12 · t_end`.
    pub dt_min: f64,
    /// Largest admissible step.
    pub dt_max: f64,
    /// Relative step-error tolerance.
    pub rel_tol: f64,
    /// Absolute step-error tolerance.
    pub abs_tol: f64,
    /// Blow-up declaration threshold on `‖v‖_{H¹}`.
    pub blowup_threshold: f64,
    /// Collocation oversampling for the nonlinear term.
    pub oversample: usize,
    /// Record a trajectory row every this many accepted steps.
    pub record_stride: usize,
    /// Drop the nonlinear source (pure-linear runs for oracle checks).
    pub disable_source: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_end: 5.0,
            dt_init: 1e-4,
            dt_min: 0.0,
            dt_max: 0.5,
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            blowup_threshold: 1e6,
            oversample: 2,
            record_stride: 1,
            disable_source: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_end", self.t_end),
            ("dt_init", self.dt_init),
            ("dt_max", self.dt_max),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("blowup_threshold", self.blowup_threshold),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "solver {name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.dt_min < 0.0 || !self.dt_min.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "solver dt_min must be nonnegative, got {}",
                self.dt_min
            )));
        }
        if self.dt_init > self.dt_max {
            return Err(Error::InvalidParameter(format!(
                "dt_init = {} exceeds dt_max = {}",
                self.dt_init, self.dt_max
            )));
        }
        if self.dt_min > 0.0 && self.dt_min >= self.dt_init {
            return Err(Error::InvalidParameter(format!(
                "dt_min = {} must stay below dt_init = {}",
                self.dt_min, self.dt_init
            )));
        }
        if self.oversample == 0 || self.oversample > 16 {
            return Err(Error::InvalidParameter(format!(
                "oversample must lie in 1..=16, got {}",
                self.oversample
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter(
                "record_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn dt_floor(&self) -> f64 {
        if self.dt_min > 0.0 {
            self.dt_min
        } else {
            1e-12 * self.t_end
        }
    }
}

/// Integrator state: time, spectral coefficients, current step proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub t: f64,
    pub coeffs: Vec<f64>,
    pub dt: f64,
}

/// One recorded trajectory row. Column order is frozen (CSV contract).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// `‖v‖_{L²}`.
    pub norm_l2: f64,
    /// `‖∇v‖_{L²}`.
    pub norm_h10: f64,
    /// `‖v‖²_{H¹} = ‖v‖² + ‖∇v‖²`.
    pub norm_h1sq: f64,
    /// `‖v‖_{1+p}^{1+p}`.
    pub lp_pow: f64,
    /// `J(v)`.
    pub potential: f64,
    /// `I(v)`.
    pub nehari: f64,
    /// `∫₀ᵗ ‖v_s‖²_{H¹} ds` (dissipation ledger).
    pub ledger: f64,
    /// `|ledger + J − J(v₀)| / max(1, |J(v₀)|)`.
    pub energy_residual: f64,
    /// Concavity functional `N(t) = ∫₀ᵗ ‖v‖²_{H¹} ds`.
    pub n: f64,
    /// `Ṅ = ‖v‖²_{H¹}` (row-consistent with `norm_h1sq`).
    pub ndot: f64,
    /// `N̈ = −2 I(v)` (row-consistent with `nehari`).
    pub nddot: f64,
    /// `N N̈ − ((1+p)/2) Ṅ²`.
    pub concavity_margin: f64,
    /// Step size that produced this state (0 for the initial row).
    pub dt: f64,
}

/// Why a run was declared blown up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowupReason {
    /// `‖v‖_{H¹}` crossed the configured threshold.
    NormThreshold,
    /// The error controller drove `dt` below its floor.
    StepCollapse,
}

/// Terminal status of an integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunOutcome {
    Completed,
    BlownUp { t_est: f64, reason: BlowupReason },
    ToleranceFailure { t: f64, detail: String },
}

/// Everything produced by [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub final_state: SpectralState,
    pub rows: Vec<TrajectoryRecord>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// `J(v₀)` on the solver's collocation grid (residual reference).
    pub initial_potential: f64,
}

/// Nonlinear source in coefficient space plus the integrand sums evaluated
/// as byproducts on the same collocation grid.
struct SourceEval {
    /// `f̂_k / (1 + λ_k)` (zeroed when the source is disabled).
    g: Vec<f64>,
    /// `∫ |v|^{1+p}`.
    lp_pow: f64,
    /// `∫ |v|^{1+p} ln |v|`.
    log_int: f64,
    finite: bool,
}

/// Shared per-run tables: eigenvalues, decay rates, layout constants.
struct Engine<'a> {
    domain: &'a DomainSpec,
    params: &'a ModelParams,
    config: &'a SolverConfig,
    eigenvalues: Vec<f64>,
    /// `a_k = λ_k / (1 + λ_k)`.
    decay: Vec<f64>,
    scale: f64,
}

/// Result of one attempted step at a fixed `h`.
struct StepAttempt {
    q_next: Vec<f64>,
    source_next: SourceEval,
    err_norm: f64,
    /// `Σ b_i ‖q̇(Q_i)‖²_{H¹}` (ledger increment per unit step).
    ledger_rate: f64,
    /// `Σ b_i ‖Q_i‖²_{H¹}` (concavity-functional increment per unit step).
    levine_rate: f64,
}

/// Weighted square of one embedded-error component.
fn err_component(err: f64, abs_tol: f64, rel_tol: f64, scale: f64) -> f64 {
    let tol = abs_tol + rel_tol * scale;
    (err / tol) * (err / tol)
}

impl<'a> Engine<'a> {
    fn new(domain: &'a DomainSpec, params: &'a ModelParams, config: &'a SolverConfig) -> Self {
        let eigenvalues = domain.spectrum().eigenvalues().to_vec();
        let decay = eigenvalues.iter().map(|l| l / (1.0 + l)).collect();
        Self {
            domain,
            params,
            config,
            eigenvalues,
            decay,
            scale: domain.spectral_scale(),
        }
    }

    /// Evaluates the nonlinear source pseudo-spectrally and accumulates the
    /// two nonlinear integrals in the same pass over the fine grid.
    fn eval_source(&self, q: &[f64]) -> SourceEval {
        let m = self.config.oversample;
        let fine = domain::synthesize(self.domain, q, m);
        let cell = domain::fine_cell(self.domain, m);
        let p = self.params.p();
        let mut w = vec![0.0; fine.len()];
        let mut lp = 0.0;
        let mut lg = 0.0;
        for (dst, &v) in w.iter_mut().zip(&fine) {
            let av = v.abs();
            if av > LOG_FLOOR {
                let pw = av.powf(p);
                let lnv = av.ln();
                *dst = v.signum() * pw * lnv;
                lp += av * pw;
                lg += av * pw * lnv;
            }
        }
        let lp_pow = cell * lp;
        let log_int = cell * lg;
        let mut g = if self.config.disable_source {
            vec![0.0; q.len()]
        } else {
            let mut g = domain::analyze_values(self.domain, &w, m);
            for (gk, l) in g.iter_mut().zip(&self.eigenvalues) {
                *gk /= 1.0 + l;
            }
            g
        };
        let mut finite = lp_pow.is_finite() && log_int.is_finite();
        for gk in &mut g {
            if !gk.is_finite() {
                finite = false;
                *gk = 0.0;
            }
        }
        SourceEval {
            g,
            lp_pow,
            log_int,
            finite,
        }
    }

    /// `exp(−a_k · θ · h)` as a vector.
    fn propagator(&self, theta: f64, h: f64) -> Vec<f64> {
        self.decay.iter().map(|a| (-a * theta * h).exp()).collect()
    }

    /// `‖q̇‖²_{H¹}` at a stage: `q̇ = −a ∘ Q + G`.
    fn stage_dissipation(&self, q_stage: &[f64], g_stage: &[f64]) -> f64 {
        let mut sum = 0.0;
        for k in 0..q_stage.len() {
            let qdot = -self.decay[k] * q_stage[k] + g_stage[k];
            sum += (1.0 + self.eigenvalues[k]) * qdot * qdot;
        }
        self.scale * sum
    }

    /// `‖Q‖²_{H¹}` at a stage.
    fn stage_h1sq(&self, q_stage: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (qk, l) in q_stage.iter().zip(&self.eigenvalues) {
            sum += (1.0 + l) * qk * qk;
        }
        self.scale * sum
    }

    /// One integrating-factor Dormand–Prince attempt from `q` with the
    /// already-known source `g1 = g(q)` (first-same-as-last input); `ledger`
    /// and `levine` are the current passenger values, used only to scale
    /// their error components.
    fn attempt(&self, q: &[f64], g1: &SourceEval, h: f64, ledger: f64, levine: f64) -> StepAttempt {
        let n = q.len();
        // Stage-offset propagators; each θ is a fixed tableau fraction.
        let e_c2 = self.propagator(C2, h);
        let e_c3 = self.propagator(C3, h);
        let e_110 = self.propagator(0.1, h);
        let e_c4 = self.propagator(C4, h);
        let e_35 = self.propagator(0.6, h);
        let e_12 = self.propagator(0.5, h);
        let e_c5 = self.propagator(C5, h);
        let e_3145 = self.propagator(31.0 / 45.0, h);
        let e_5390 = self.propagator(53.0 / 90.0, h);
        let e_445 = self.propagator(4.0 / 45.0, h);
        let e_1 = self.propagator(1.0, h);
        let e_710 = self.propagator(0.7, h);
        let e_19 = self.propagator(1.0 / 9.0, h);

        let mut q2 = vec![0.0; n];
        for k in 0..n {
            q2[k] = e_c2[k] * (q[k] + h * A21 * g1.g[k]);
        }
        let g2 = self.eval_source(&q2);

        let mut q3 = vec![0.0; n];
        for k in 0..n {
            q3[k] = e_c3[k] * q[k] + h * (A31 * e_c3[k] * g1.g[k] + A32 * e_110[k] * g2.g[k]);
        }
        let g3 = self.eval_source(&q3);

        let mut q4 = vec![0.0; n];
        for k in 0..n {
            q4[k] = e_c4[k] * q[k]
                + h * (A41 * e_c4[k] * g1.g[k]
                    + A42 * e_35[k] * g2.g[k]
                    + A43 * e_12[k] * g3.g[k]);
        }
        let g4 = self.eval_source(&q4);

        let mut q5 = vec![0.0; n];
        for k in 0..n {
            q5[k] = e_c5[k] * q[k]
                + h * (A51 * e_c5[k] * g1.g[k]
                    + A52 * e_3145[k] * g2.g[k]
                    + A53 * e_5390[k] * g3.g[k]
                    + A54 * e_445[k] * g4.g[k]);
        }
        let g5 = self.eval_source(&q5);

        let mut q6 = vec![0.0; n];
        for k in 0..n {
            q6[k] = e_1[k] * q[k]
                + h * (A61 * e_1[k] * g1.g[k]
                    + A62 * e_c4[k] * g2.g[k]
                    + A63 * e_710[k] * g3.g[k]
                    + A64 * e_c2[k] * g4.g[k]
                    + A65 * e_19[k] * g5.g[k]);
        }
        let g6 = self.eval_source(&q6);

        // The b-row is the seventh stage: 5th-order solution, whose source
        // evaluation is reused as the next step's g1 and for the row.
        let mut q_next = vec![0.0; n];
        for k in 0..n {
            q_next[k] = e_1[k] * q[k]
                + h * (B1 * e_1[k] * g1.g[k]
                    + B3 * e_710[k] * g3.g[k]
                    + B4 * e_c2[k] * g4.g[k]
                    + B5 * e_19[k] * g5.g[k]
                    + B6 * g6.g[k]);
        }
        let source_next = self.eval_source(&q_next);

        let mut err_sq = 0.0;
        let mut finite = g1.finite
            && g2.finite
            && g3.finite
            && g4.finite
            && g5.finite
            && g6.finite
            && source_next.finite;
        for k in 0..n {
            let err = h
                * (E1 * e_1[k] * g1.g[k]
                    + E3 * e_710[k] * g3.g[k]
                    + E4 * e_c2[k] * g4.g[k]
                    + E5 * e_19[k] * g5.g[k]
                    + E6 * g6.g[k]
                    + E7 * source_next.g[k]);
            err_sq += err_component(
                err,
                self.config.abs_tol,
                self.config.rel_tol,
                q[k].abs().max(q_next[k].abs()),
            );
            if !q_next[k].is_finite() {
                finite = false;
            }
        }

        // Passenger quadratures with the same 5th-order weights (b2 = b7 = 0)
        // and their embedded-difference error estimates (all seven stages).
        let phi = [
            self.stage_dissipation(q, &g1.g),
            self.stage_dissipation(&q3, &g3.g),
            self.stage_dissipation(&q4, &g4.g),
            self.stage_dissipation(&q5, &g5.g),
            self.stage_dissipation(&q6, &g6.g),
            self.stage_dissipation(&q_next, &source_next.g),
        ];
        let psi = [
            self.stage_h1sq(q),
            self.stage_h1sq(&q3),
            self.stage_h1sq(&q4),
            self.stage_h1sq(&q5),
            self.stage_h1sq(&q6),
            self.stage_h1sq(&q_next),
        ];
        let ledger_rate = B1 * phi[0] + B3 * phi[1] + B4 * phi[2] + B5 * phi[3] + B6 * phi[4];
        let levine_rate = B1 * psi[0] + B3 * psi[1] + B4 * psi[2] + B5 * psi[3] + B6 * psi[4];
        let embedded = |v: &[f64; 6]| {
            h * (E1 * v[0] + E3 * v[1] + E4 * v[2] + E5 * v[3] + E6 * v[4] + E7 * v[5])
        };
        err_sq += err_component(
            embedded(&phi),
            self.config.abs_tol,
            self.config.rel_tol,
            1.0 + ledger.abs().max((ledger + h * ledger_rate).abs()),
        );
        err_sq += err_component(
            embedded(&psi),
            self.config.abs_tol,
            self.config.rel_tol,
            1.0 + levine.abs().max((levine + h * levine_rate).abs()),
        );
        if !(ledger_rate.is_finite() && levine_rate.is_finite()) {
            finite = false;
        }

        let err_norm = if finite {
            (err_sq / (n + 2) as f64).sqrt()
        } else {
            f64::INFINITY
        };

        StepAttempt {
            q_next,
            source_next,
            err_norm,
            ledger_rate,
            levine_rate,
        }
    }

    /// Assembles a trajectory row at the current state from the cached
    /// source byproducts (same collocation grid as the step itself).
    #[allow(clippy::too_many_arguments)]
    fn make_row(
        &self,
        t: f64,
        q: &[f64],
        source: &SourceEval,
        ledger: f64,
        levine: f64,
        initial_potential: f64,
        dt: f64,
    ) -> TrajectoryRecord {
        let p1 = 1.0 + self.params.p();
        let mut l2 = 0.0;
        let mut grad = 0.0;
        for (qk, l) in q.iter().zip(&self.eigenvalues) {
            l2 += qk * qk;
            grad += l * qk * qk;
        }
        let l2sq = self.scale * l2;
        let grad_sq = self.scale * grad;
        let norm_h1sq = l2sq + grad_sq;
        let potential =
            0.5 * grad_sq - source.log_int / p1 + source.lp_pow / (p1 * p1);
        let nehari = grad_sq - source.log_int;
        let nddot = -2.0 * nehari;
        TrajectoryRecord {
            t,
            norm_l2: l2sq.sqrt(),
            norm_h10: grad_sq.sqrt(),
            norm_h1sq,
            lp_pow: source.lp_pow,
            potential,
            nehari,
            ledger,
            energy_residual: (ledger + potential - initial_potential).abs()
                / initial_potential.abs().max(1.0),
            n: levine,
            ndot: norm_h1sq,
            nddot,
            concavity_margin: levine * nddot - 0.5 * p1 * norm_h1sq * norm_h1sq,
            dt,
        }
    }
}

/// Right-hand side `q̇_k = (−λ_k q_k + f̂_k)/(1+λ_k)` of the Galerkin system.
pub fn rhs(
    domain: &DomainSpec,
    params: &ModelParams,
    config: &SolverConfig,
    q: &[f64],
) -> Result<Vec<f64>> {
    if q.len() != domain.mode_count() {
        return Err(Error::ShapeMismatch {
            expected: domain.mode_count(),
            got: q.len(),
        });
    }
    config.validate()?;
    let engine = Engine::new(domain, params, config);
    let source = engine.eval_source(q);
    if !source.finite {
        return Err(Error::NonFinite("nonlinear source evaluation"));
    }
    Ok(q.iter()
        .zip(&engine.decay)
        .zip(&source.g)
        .map(|((qk, a), gk)| -a * qk + gk)
        .collect())
}

/// One accepted adaptive step from `state` (retries with halved `dt` on
/// rejection; errors once `dt` falls below the configured floor).
pub fn step(
    domain: &DomainSpec,
    params: &ModelParams,
    config: &SolverConfig,
    state: &SpectralState,
) -> Result<SpectralState> {
    if state.coeffs.len() != domain.mode_count() {
        return Err(Error::ShapeMismatch {
            expected: domain.mode_count(),
            got: state.coeffs.len(),
        });
    }
    config.validate()?;
    let engine = Engine::new(domain, params, config);
    let g1 = engine.eval_source(&state.coeffs);
    let mut dt = state.dt.min(config.dt_max).max(engine.config.dt_floor());
    for _ in 0..MAX_CONSECUTIVE_REJECTIONS {
        let attempt = engine.attempt(&state.coeffs, &g1, dt, 0.0, 0.0);
        if attempt.err_norm <= 1.0 {
            let grow = (0.9 * attempt.err_norm.powf(-0.2)).clamp(0.2, 5.0);
            return Ok(SpectralState {
                t: state.t + dt,
                coeffs: attempt.q_next,
                dt: (dt * grow).min(config.dt_max),
            });
        }
        dt *= 0.5;
        if dt < config.dt_floor() {
            return Err(Error::EstimationFailure(format!(
                "step size collapsed below {} at t = {}",
                config.dt_floor(),
                state.t
            )));
        }
    }
    Err(Error::EstimationFailure(format!(
        "{MAX_CONSECUTIVE_REJECTIONS} consecutive rejected steps at t = {}",
        state.t
    )))
}

/// Integrates the Galerkin system from `v0` until `t_end`, a blow-up
/// declaration, or breakdown of the error controller.
pub fn integrate(
    domain: &DomainSpec,
    params: &ModelParams,
    config: &SolverConfig,
    v0: &Field,
) -> Result<RunResult> {
    if v0.domain() != domain {
        return Err(Error::InvalidInput(
            "initial data domain differs from the integration domain".into(),
        ));
    }
    config.validate()?;
    let engine = Engine::new(domain, params, config);

    let mut q = v0.to_spectral();
    let mut t = 0.0;
    let mut ledger = 0.0;
    let mut levine = 0.0;
    let mut dt = config.dt_init.min(config.dt_max).min(config.t_end);
    let mut source = engine.eval_source(&q);
    if !source.finite {
        return Err(Error::NonFinite("nonlinear source at the initial data"));
    }
    let row0 = engine.make_row(t, &q, &source, 0.0, 0.0, f64::NAN, 0.0);
    let initial_potential = row0.potential;
    let mut rows = vec![TrajectoryRecord {
        energy_residual: 0.0,
        ..row0
    }];
    let mut steps_accepted = 0usize;
    let mut steps_rejected = 0usize;
    let mut consecutive_rejections = 0usize;
    let mut since_record = 0usize;
    let mut last_recorded_t = 0.0f64;

    let outcome = loop {
        if t >= config.t_end {
            break RunOutcome::Completed;
        }
        let h = dt.min(config.t_end - t);
        if h <= f64::EPSILON * config.t_end {
            // Remaining gap is below resolution; a step could no longer
            // advance `t`.
            break RunOutcome::Completed;
        }
        let attempt = engine.attempt(&q, &source, h, ledger, levine);

        if attempt.err_norm <= 1.0 {
            t += h;
            q = attempt.q_next;
            source = attempt.source_next;
            ledger += h * attempt.ledger_rate;
            levine += h * attempt.levine_rate;
            steps_accepted += 1;
            consecutive_rejections = 0;
            since_record += 1;

            let row = engine.make_row(t, &q, &source, ledger, levine, initial_potential, h);
            let blown_up = row.norm_h1sq.sqrt() > config.blowup_threshold;
            if since_record >= config.record_stride || t >= config.t_end || blown_up {
                rows.push(row);
                since_record = 0;
                last_recorded_t = t;
            }
            if blown_up {
                break RunOutcome::BlownUp {
                    t_est: extrapolated_blowup_time(&rows, params).unwrap_or(t),
                    reason: BlowupReason::NormThreshold,
                };
            }
            let grow = (0.9 * attempt.err_norm.powf(-0.2)).clamp(0.2, 5.0);
            // The floor binds here too: without it a blow-up run would keep
            // shrinking accepted steps geometrically and never trip the
            // collapse branch below.
            dt = (h * grow).min(config.dt_max).max(config.dt_floor());
        } else {
            steps_rejected += 1;
            consecutive_rejections += 1;
            dt = h * 0.5;
            if dt < config.dt_floor() {
                if last_recorded_t < t {
                    rows.push(engine.make_row(
                        t,
                        &q,
                        &source,
                        ledger,
                        levine,
                        initial_potential,
                        h,
                    ));
                    last_recorded_t = t;
                }
                break RunOutcome::BlownUp {
                    t_est: extrapolated_blowup_time(&rows, params).unwrap_or(t),
                    reason: BlowupReason::StepCollapse,
                };
            }
            if consecutive_rejections >= MAX_CONSECUTIVE_REJECTIONS {
                break RunOutcome::ToleranceFailure {
                    t,
                    detail: format!(
                        "{consecutive_rejections} consecutive rejected steps"
                    ),
                };
            }
        }
    };

    if last_recorded_t < t && t > 0.0 {
        rows.push(engine.make_row(t, &q, &source, ledger, levine, initial_potential, dt));
    }

    Ok(RunResult {
        outcome,
        final_state: SpectralState { t, coeffs: q, dt },
        rows,
        steps_accepted,
        steps_rejected,
        initial_potential,
    })
}

/// Maximum relative energy-identity residual over the recorded rows.
pub fn energy_residual(rows: &[TrajectoryRecord]) -> f64 {
    rows.iter()
        .map(|r| r.energy_residual)
        .fold(0.0, f64::max)
}

/// Decay-bound verdict for runs classified as decaying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    /// `‖v(t)‖_{H¹} ≤ ‖v₀‖_{H¹} e^{−μt} (1 + 1e−3)` on every row.
    pub bound_holds: bool,
    /// Minus the least-squares slope of `ln ‖v‖_{H¹}` over the final half.
    pub fitted_rate: f64,
    /// The rate the classification predicted.
    pub mu_pred: f64,
}

/// Least-squares slope and intercept of `y` against `x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Checks the exponential decay bound with the predicted rate and fits the
/// observed asymptotic rate over the final half of the run.
pub fn decay_monitor(rows: &[TrajectoryRecord], report: &RegimeReport) -> Result<DecayCheck> {
    if rows.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 10 rows, got {}",
            rows.len()
        )));
    }
    let mu = report.mu_pred;
    let norm0 = rows[0].norm_h1sq.sqrt();
    let bound_holds = rows
        .iter()
        .all(|r| r.norm_h1sq.sqrt() <= norm0 * (-mu * r.t).exp() * (1.0 + 1e-3));

    let tail = &rows[rows.len() / 2..];
    let x: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let y: Vec<f64> = tail.iter().map(|r| 0.5 * r.norm_h1sq.ln()).collect();
    let (slope, _) = linear_fit(&x, &y);
    Ok(DecayCheck {
        bound_holds,
        fitted_rate: -slope,
        mu_pred: mu,
    })
}

/// Blow-up signature extracted from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupCheck {
    /// First `t` from which the concavity margin stays positive to the end.
    pub concavity_onset: Option<f64>,
    /// Zero crossing of the least-squares line through `N^{−(p−1)/2}` over
    /// the final quarter of the run.
    pub t_est: Option<f64>,
    /// Fit quality of that line.
    pub tail_linearity_r2: Option<f64>,
    /// Row-wise `N̈ ≥ −2(1+p)J + (p−1)(λ₁/(1+λ₁))Ṅ` (up to round-off).
    pub mdd_consistent: bool,
}

/// Least-squares extrapolation of the blow-up time from the tail of
/// `N^{−(p−1)/2}`; `None` without a decreasing, usable tail.
fn extrapolated_blowup_time(rows: &[TrajectoryRecord], params: &ModelParams) -> Option<f64> {
    let tail = blowup_tail(rows, params)?;
    let (slope, intercept) = linear_fit(&tail.0, &tail.1);
    (slope < 0.0).then(|| -intercept / slope)
}

/// `(t, N^{−(p−1)/2})` over the final quarter of the rows with `N > 0`.
fn blowup_tail(rows: &[TrajectoryRecord], params: &ModelParams) -> Option<(Vec<f64>, Vec<f64>)> {
    let usable: Vec<&TrajectoryRecord> = rows.iter().filter(|r| r.n > 0.0).collect();
    if usable.len() < 4 {
        return None;
    }
    let start = usable.len() - (usable.len() / 4).max(4);
    let exponent = -(params.p() - 1.0) / 2.0;
    let x: Vec<f64> = usable[start..].iter().map(|r| r.t).collect();
    let y: Vec<f64> = usable[start..].iter().map(|r| r.n.powf(exponent)).collect();
    Some((x, y))
}

/// Extracts concavity onset, extrapolated blow-up time, tail fit quality,
/// and the row-wise differential-inequality consistency check.
pub fn blowup_monitor(
    rows: &[TrajectoryRecord],
    params: &ModelParams,
    lambda1: f64,
) -> BlowupCheck {
    let concavity_onset = {
        let mut onset = None;
        for row in rows.iter().rev() {
            if row.concavity_margin > 0.0 {
                onset = Some(row.t);
            } else {
                break;
            }
        }
        onset
    };

    let (t_est, tail_linearity_r2) = match blowup_tail(rows, params) {
        Some((x, y)) => {
            let (slope, intercept) = linear_fit(&x, &y);
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let ss_tot: f64 = y.iter().map(|yi| (yi - my) * (yi - my)).sum();
            let ss_res: f64 = x
                .iter()
                .zip(&y)
                .map(|(xi, yi)| {
                    let e = yi - (slope * xi + intercept);
                    e * e
                })
                .sum();
            let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
            let t_est = (slope < 0.0).then(|| -intercept / slope);
            (t_est, r2)
        }
        None => (None, None),
    };

    let p = params.p();
    let ratio = lambda1 / (1.0 + lambda1);
    let mdd_consistent = rows.iter().all(|r| {
        let lhs = r.nddot;
        let rhs = -2.0 * (1.0 + p) * r.potential + (p - 1.0) * ratio * r.ndot;
        let slack = 1e-9 * (1.0 + lhs.abs() + rhs.abs());
        lhs >= rhs - slack
    });

    BlowupCheck {
        concavity_onset,
        t_est,
        tail_linearity_r2,
        mdd_consistent,
    }
}

/// True when `sign(I)` matches `sign(I(v₀))` on every recorded row, with a
/// round-off floor so vanishing tails do not flip the verdict.
pub fn sign_persistence_check(rows: &[TrajectoryRecord]) -> bool {
    let Some(first) = rows.first() else {
        return true;
    };
    let floor = 1e-12 * (1.0 + first.nehari.abs());
    let reference = first.nehari;
    rows.iter().all(|r| {
        r.nehari.abs() <= floor
            || reference.abs() <= floor
            || (r.nehari > 0.0) == (reference > 0.0)
    })
}
