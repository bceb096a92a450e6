//! Subcommand implementations and their file outputs.
//!
//! Every command writes plain CSV/JSON under `--out`. Floats in CSV are
//! printed with 17 significant decimal digits (`{:.16e}`), enough to
//! round-trip binary64 losslessly, so reruns with identical inputs produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use logwell::solver::{
    blowup_monitor, decay_monitor, energy_residual, integrate, BlowupCheck, BlowupReason,
    DecayCheck, RunOutcome, RunResult,
};
use logwell::wells::{analyze_well, Regime, RegimeReport, WellAnalysis};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Lossless decimal rendering of a binary64 value for CSV cells.
fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_out(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(out: &Path, name: &str, doc: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    write_out(out, name, &text)
}

/// Runs the potential-well analysis of a configuration.
pub fn analyze(config: &ExperimentConfig) -> Result<WellAnalysis, CliError> {
    Ok(analyze_well(
        &config.domain,
        &config.params,
        &config.analysis.budget,
        config.analysis.seed,
        config.analysis.safety_factor,
    )?)
}

/// The scalar constants written by `analyze` as `constants.json`.
#[derive(Debug, Serialize)]
pub struct ConstantsDoc {
    pub p: f64,
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub resolution: Vec<usize>,
    pub seed: u64,
    pub safety_factor: f64,
    pub sobolev_c: f64,
    pub sobolev_converged: bool,
    pub c_eff: f64,
    pub lambda1: f64,
    pub d_hat: f64,
    pub d_formula_at_1: f64,
    /// `d̂(1) / d_formula(1)` — logged, never asserted: the closed form
    /// bounds a different variational problem than the sampled infimum.
    pub sampled_to_formula_ratio: f64,
    pub delta0: f64,
}

/// `analyze`: writes `constants.json` and `well_curve.csv`
/// (columns `delta,r,d_formula,d_nehari`; `d_formula` is empty where the
/// closed form is undefined, at `δ ≥ (1+p)/2`).
pub fn run_analyze(
    config: &ExperimentConfig,
    analysis: &WellAnalysis,
    out: &Path,
) -> Result<ConstantsDoc, CliError> {
    let constants = analysis.constants();
    let doc = ConstantsDoc {
        p: config.params.p(),
        dim: config.domain.dim(),
        lengths: config.domain.lengths().to_vec(),
        resolution: config.domain.resolution().to_vec(),
        seed: config.analysis.seed,
        safety_factor: config.analysis.safety_factor,
        sobolev_c: constants.sobolev_c,
        sobolev_converged: constants.sobolev_converged,
        c_eff: constants.c_eff(),
        lambda1: constants.lambda1,
        d_hat: constants.d_hat,
        d_formula_at_1: constants.d_formula_at_1,
        sampled_to_formula_ratio: constants.d_hat / constants.d_formula_at_1,
        delta0: constants.delta0,
    };
    write_json(out, "constants.json", &doc)?;

    let curve = analysis.curve();
    let mut csv = String::from("delta,r,d_formula,d_nehari\n");
    for (i, &delta) in curve.delta_grid.iter().enumerate() {
        let formula = curve.d_formula_values[i]
            .map(csv_float)
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_float(delta),
            csv_float(curve.r_values[i]),
            formula,
            csv_float(curve.d_nehari_values[i]),
        ));
    }
    write_out(out, "well_curve.csv", &csv)?;
    Ok(doc)
}

/// The run digest written by `simulate` as `summary.json`.
#[derive(Debug, Serialize)]
pub struct RunSummaryDoc {
    /// `completed`, `blown_up`, or `tolerance_failure`.
    pub outcome: String,
    /// Blow-up declaration detail, when declared.
    pub reason: Option<String>,
    pub t_est: Option<f64>,
    pub t_last: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub max_energy_residual: f64,
    pub regime: String,
    pub j0: f64,
    pub i0: f64,
    pub d_hat: f64,
    pub mu_pred: f64,
    /// Decay-bound verdict, for runs classified as decaying.
    pub decay: Option<DecayCheck>,
    /// Blow-up monitor output, when the run declared blow-up.
    pub blowup: Option<BlowupCheck>,
}

/// The 14 trajectory columns, in record order.
const TRAJECTORY_HEADER: &str =
    "t,norm_l2,norm_h10,norm_h1sq,lp_pow,potential,nehari,ledger,energy_residual,n,ndot,nddot,concavity_margin,dt";

fn trajectory_csv(run: &RunResult) -> String {
    let mut csv = String::from(TRAJECTORY_HEADER);
    csv.push('\n');
    for r in &run.rows {
        let cells = [
            r.t,
            r.norm_l2,
            r.norm_h10,
            r.norm_h1sq,
            r.lp_pow,
            r.potential,
            r.nehari,
            r.ledger,
            r.energy_residual,
            r.n,
            r.ndot,
            r.nddot,
            r.concavity_margin,
            r.dt,
        ];
        let row: Vec<String> = cells.iter().map(|&x| csv_float(x)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    csv
}

/// `simulate`: integrates the configured data and writes `trajectory.csv`
/// plus `summary.json`. The classification runs first (computing the well
/// analysis inline) so the summary can report the predicted regime, the
/// decay verdict when one applies, and the blow-up monitor when the run
/// declared blow-up. A `ToleranceFailure` outcome is still written out,
/// then surfaced as a numerical error.
pub fn run_simulate(
    config: &ExperimentConfig,
    analysis: &WellAnalysis,
    out: &Path,
) -> Result<RunSummaryDoc, CliError> {
    let v0 = config.initial.build(&config.domain)?;
    let report = analysis.classify(&v0, config.analysis.alpha)?;
    let run = integrate(&config.domain, &config.params, &config.solver, &v0)?;
    write_out(out, "trajectory.csv", &trajectory_csv(&run))?;

    let doc = summarize(&run, &report, analysis);
    write_json(out, "summary.json", &doc)?;
    if let RunOutcome::ToleranceFailure { t, ref detail } = run.outcome {
        return Err(CliError::Numerical(format!(
            "integration broke down at t = {t}: {detail}"
        )));
    }
    Ok(doc)
}

/// Builds the run digest: outcome fields plus the applicable monitors.
fn summarize(run: &RunResult, report: &RegimeReport, analysis: &WellAnalysis) -> RunSummaryDoc {
    let (outcome, reason, t_est) = match run.outcome {
        RunOutcome::Completed => ("completed".to_string(), None, None),
        RunOutcome::BlownUp { t_est, reason } => (
            "blown_up".to_string(),
            Some(
                match reason {
                    BlowupReason::NormThreshold => "norm_threshold",
                    BlowupReason::StepCollapse => "step_collapse",
                }
                .to_string(),
            ),
            Some(t_est),
        ),
        RunOutcome::ToleranceFailure { .. } => ("tolerance_failure".to_string(), None, None),
    };
    let decaying = matches!(
        report.regime,
        Regime::GlobalDecay | Regime::CriticalGlobal | Regime::SupercriticalGlobal
    );
    let decay = if decaying && run.rows.len() >= 10 {
        decay_monitor(&run.rows, report).ok()
    } else {
        None
    };
    let blowup = t_est.is_some().then(|| {
        blowup_monitor(
            &run.rows,
            &analysis.constants().params,
            analysis.constants().lambda1,
        )
    });
    RunSummaryDoc {
        outcome,
        reason,
        t_est,
        t_last: run.rows.last().map(|r| r.t).unwrap_or(0.0),
        steps_accepted: run.steps_accepted,
        steps_rejected: run.steps_rejected,
        max_energy_residual: energy_residual(&run.rows),
        regime: format!("{:?}", report.regime),
        j0: report.j0,
        i0: report.i0,
        d_hat: report.d_hat,
        mu_pred: report.mu_pred,
        decay,
        blowup,
    }
}

/// `classify`: writes the full membership report as `report.json`.
pub fn run_classify(
    config: &ExperimentConfig,
    analysis: &WellAnalysis,
    out: &Path,
) -> Result<RegimeReport, CliError> {
    let v0 = config.initial.build(&config.domain)?;
    let report = analysis.classify(&v0, config.analysis.alpha)?;
    write_json(out, "report.json", &report)?;
    Ok(report)
}

/// Amplitude grid of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Also integrate each amplitude and record the outcome column.
    pub simulate: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            min: 0.05,
            max: 5.0,
            points: 32,
            simulate: false,
        }
    }
}

impl SweepGrid {
    /// Log-spaced amplitudes from `min` to `max` inclusive.
    fn amplitudes(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                self.min * (self.max / self.min).powf(t)
            })
            .collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.min > 0.0 && self.max > self.min && self.min.is_finite() && self.max.is_finite())
        {
            return Err(CliError::Config(format!(
                "sweep needs 0 < min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config("sweep needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// One sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub j0: f64,
    pub i0: f64,
    pub regime: String,
    /// Present only when the sweep also simulated this amplitude.
    pub outcome: Option<String>,
}

/// Sweep digest with the regime-transition bracket.
#[derive(Debug, Serialize)]
pub struct SweepDoc {
    pub rows: Vec<SweepRow>,
    /// Largest amplitude classified `GlobalDecay`.
    pub last_decay_amplitude: Option<f64>,
    /// Smallest amplitude classified `Blowup` (or its critical/high-energy
    /// variants).
    pub first_blowup_amplitude: Option<f64>,
}

/// `sweep`: scales the configured initial data by each grid amplitude,
/// classifies every scaling (in parallel, output in grid order), and writes
/// `sweep.csv` plus `sweep.json` with the decay→blow-up transition bracket.
pub fn run_sweep(
    config: &ExperimentConfig,
    analysis: &WellAnalysis,
    grid: &SweepGrid,
    out: &Path,
) -> Result<SweepDoc, CliError> {
    grid.validate()?;
    let base = config.initial.build(&config.domain)?;
    if base.norm_h1sq() == 0.0 {
        return Err(CliError::Config(
            "sweep needs nonzero initial data to scale".into(),
        ));
    }
    let rows: Vec<SweepRow> = grid
        .amplitudes()
        .par_iter()
        .map(|&amplitude| -> Result<SweepRow, CliError> {
            let field = base.scaled(amplitude);
            let report = analysis.classify(&field, config.analysis.alpha)?;
            let outcome = if grid.simulate {
                let run = integrate(&config.domain, &config.params, &config.solver, &field)?;
                Some(
                    match run.outcome {
                        RunOutcome::Completed => "completed",
                        RunOutcome::BlownUp { .. } => "blown_up",
                        RunOutcome::ToleranceFailure { .. } => "tolerance_failure",
                    }
                    .to_string(),
                )
            } else {
                None
            };
            Ok(SweepRow {
                amplitude,
                j0: report.j0,
                i0: report.i0,
                regime: format!("{:?}", report.regime),
                outcome,
            })
        })
        .collect::<Result<_, _>>()?;

    let last_decay_amplitude = rows
        .iter()
        .filter(|r| r.regime == "GlobalDecay")
        .map(|r| r.amplitude)
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |m| m.max(a))));
    let first_blowup_amplitude = rows
        .iter()
        .filter(|r| r.regime.contains("Blowup"))
        .map(|r| r.amplitude)
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |m| m.min(a))));

    let mut csv = String::from("amplitude,j0,i0,regime,outcome\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_float(r.amplitude),
            csv_float(r.j0),
            csv_float(r.i0),
            r.regime,
            r.outcome.as_deref().unwrap_or(""),
        ));
    }
    write_out(out, "sweep.csv", &csv)?;
    let doc = SweepDoc {
        rows,
        last_decay_amplitude,
        first_blowup_amplitude,
    };
    write_json(out, "sweep.json", &doc)?;
    Ok(doc)
}
