//! Sectioned `key = value` experiment configuration.
//!
//! The format is deliberately flat and diff-friendly: `[section]` headers,
//! one `key = value` per line, `#` starting a comment anywhere on a line.
//! Every key is validated; unknown sections or keys, duplicated scalar keys,
//! and non-finite numbers are rejected with line numbers.
//!
//! # Sections and keys
//!
//! `[domain]` (required)
//! - `dim` — spatial dimension, 1 or 2 (default `1`)
//! - `lengths` — comma-separated box edge lengths, one per axis (default `1`
//!   on every axis)
//! - `resolution` — comma-separated mode counts per axis (default `128`)
//!
//! `[model]` (required)
//! - `p` — nonlinearity power, must exceed 1 (no default)
//!
//! `[initial_data]` (required; at least one of `mode` / `random_seed`)
//! - `mode` — repeatable; `k:a` in 1-D or `k1,k2:a` in 2-D places amplitude
//!   `a` on the sine mode with 1-based indices `k`
//! - `random_seed` — seed for an additional random low-mode perturbation
//! - `random_modes` — how many leading modes the perturbation touches
//!   (default `8`; requires `random_seed`)
//! - `random_amplitude` — uniform half-width of each perturbed coefficient
//!   (default `0.1`; requires `random_seed`)
//!
//! `[solver]` (optional; defaults in parentheses)
//! - `t_end` (`5`), `dt_init` (`1e-4`), `dt_min` (`0`, meaning
//!   `1e-12·t_end`), `dt_max` (`0.5`), `rel_tol` (`1e-8`), `abs_tol`
//!   (`1e-12`), `blowup_threshold` (`1e6`), `oversample` (`2`),
//!   `record_stride` (`1`), `disable_source` (`false`)
//!
//! `[analysis]` (optional)
//! - `seed` — sampling seed (default `11`)
//! - `safety_factor` — multiplier `s ≥ 1` on the Sobolev estimate
//!   (default `1.05`)
//! - `alpha` — energy ceiling for the supercritical criterion (no default;
//!   omit to skip that check)
//! - `ascent_starts` (`8`), `ascent_iters` (`400`), `directions` (`300`),
//!   `refine_passes` (`16`), `refine_top` (`2`), `delta_grid` (`201`) —
//!   sampling budgets, see [`AnalysisBudget`]

use logwell::domain::{DomainSpec, Field};
use logwell::functionals::ModelParams;
use logwell::solver::SolverConfig;
use logwell::wells::AnalysisBudget;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub params: ModelParams,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub analysis: AnalysisSettings,
}

/// Initial-data recipe: explicit modes plus an optional seeded perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    /// `(1-based mode indices, amplitude)` pairs, applied in file order.
    pub modes: Vec<(Vec<usize>, f64)>,
    pub random_seed: Option<u64>,
    pub random_modes: usize,
    pub random_amplitude: f64,
}

impl InitialData {
    /// Synthesizes the field: explicit modes first, then — when a seed is
    /// set — uniform coefficients in `±random_amplitude` added to the first
    /// `random_modes` flat modes from a ChaCha8 stream.
    pub fn build(&self, domain: &DomainSpec) -> Result<Field, CliError> {
        let mut coeffs = vec![0.0; domain.mode_count()];
        for (index, amplitude) in &self.modes {
            let flat = domain.flat_mode_index(index)?;
            coeffs[flat] += amplitude;
        }
        if let Some(seed) = self.random_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let count = self.random_modes.min(coeffs.len());
            for c in coeffs.iter_mut().take(count) {
                *c += rng.random_range(-self.random_amplitude..=self.random_amplitude);
            }
        }
        Ok(Field::from_spectral(domain, &coeffs)?)
    }
}

/// Potential-well analysis knobs shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub seed: u64,
    pub safety_factor: f64,
    /// Energy ceiling `α` for the supercritical criterion, when requested.
    pub alpha: Option<f64>,
    pub budget: AnalysisBudget,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            seed: 11,
            safety_factor: 1.05,
            alpha: None,
            budget: default_budget(),
        }
    }
}

/// The CLI's default sampling budget. Smaller than the library default: at
/// the preset scale (N = 128) the depth estimate already agrees with the
/// full-budget value to eight digits, at a fraction of the cost.
pub fn default_budget() -> AnalysisBudget {
    AnalysisBudget {
        ascent_starts: 8,
        ascent_iters: 400,
        directions: 300,
        refine_passes: 16,
        refine_top: 2,
        delta_grid: 201,
    }
}

/// One `key = value` occurrence with its 1-based line number.
#[derive(Debug, Clone)]
struct RawEntry {
    line: usize,
    key: String,
    value: String,
}

/// One parsed `[section]` with its entries in file order.
#[derive(Debug, Clone, Default)]
struct RawSection {
    present: bool,
    entries: Vec<RawEntry>,
}

const SECTIONS: [&str; 5] = ["domain", "model", "initial_data", "solver", "analysis"];

/// Parses and validates a configuration text.
///
/// All structural problems (unknown section/key, duplicate scalar key,
/// malformed or non-finite value, violated model constraint) come back as
/// [`CliError::Config`] with the offending line numbers.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut sections: Vec<RawSection> = vec![RawSection::default(); SECTIONS.len()];
    let mut current: Option<usize> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| config_err(line_no, "unterminated section header"))?
                .trim();
            let pos = SECTIONS
                .iter()
                .position(|s| *s == name)
                .ok_or_else(|| config_err(line_no, format!("unknown section [{name}]")))?;
            sections[pos].present = true;
            current = Some(pos);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(line_no, "expected `key = value`"))?;
        let section = current
            .ok_or_else(|| config_err(line_no, "key appears before any [section] header"))?;
        sections[section].entries.push(RawEntry {
            line: line_no,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }

    for (name, section) in SECTIONS.iter().take(3).zip(&sections) {
        if !section.present {
            return Err(CliError::Config(format!(
                "missing required section [{name}]"
            )));
        }
    }

    let domain = parse_domain(&sections[0])?;
    let params = parse_model(&sections[1])?;
    let initial = parse_initial(&sections[2], &domain)?;
    let solver = parse_solver(&sections[3])?;
    let analysis = parse_analysis(&sections[4])?;

    solver.validate()?;
    Ok(ExperimentConfig {
        domain,
        params,
        initial,
        solver,
        analysis,
    })
}

/// Reads a configuration file; see [`parse_config`].
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config(&text)
}

fn config_err(line: usize, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {message}"))
}

/// Scalar-key accessor that enforces the known-key list and rejects
/// duplicates, reporting both line numbers.
struct KeyTable<'a> {
    known: &'static [&'static str],
    entries: &'a [RawEntry],
}

impl<'a> KeyTable<'a> {
    fn new(
        section: &'static str,
        known: &'static [&'static str],
        raw: &'a RawSection,
    ) -> Result<Self, CliError> {
        for entry in &raw.entries {
            if !known.contains(&entry.key.as_str()) {
                return Err(config_err(
                    entry.line,
                    format!("unknown key `{}` in [{section}]", entry.key),
                ));
            }
        }
        for (i, a) in raw.entries.iter().enumerate() {
            if a.key == "mode" {
                continue; // the one repeatable key
            }
            if let Some(b) = raw.entries[i + 1..].iter().find(|b| b.key == a.key) {
                return Err(CliError::Config(format!(
                    "duplicate key `{}` in [{section}] (lines {} and {})",
                    a.key, a.line, b.line
                )));
            }
        }
        Ok(Self {
            known,
            entries: &raw.entries,
        })
    }

    fn get(&self, key: &str) -> Option<&RawEntry> {
        debug_assert!(self.known.contains(&key), "key list out of sync");
        self.entries.iter().find(|e| e.key == key)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|e| {
                let v: f64 = e.value.parse().map_err(|_| {
                    config_err(e.line, format!("`{key}` is not a number: `{}`", e.value))
                })?;
                if !v.is_finite() {
                    return Err(config_err(e.line, format!("`{key}` must be finite")));
                }
                Ok(v)
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get(key)
            .map(|e| {
                e.value.parse().map_err(|_| {
                    config_err(
                        e.line,
                        format!("`{key}` is not a nonnegative integer: `{}`", e.value),
                    )
                })
            })
            .transpose()
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
            .map(|e| {
                e.value.parse().map_err(|_| {
                    config_err(
                        e.line,
                        format!("`{key}` is not a nonnegative integer: `{}`", e.value),
                    )
                })
            })
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.get(key)
            .map(|e| match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(config_err(
                    e.line,
                    format!("`{key}` must be `true` or `false`, got `{other}`"),
                )),
            })
            .transpose()
    }

    /// Comma-separated float list with a per-axis count check.
    fn f64_list(&self, key: &str, expected: usize) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|e| {
                let items: Vec<f64> = e
                    .value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        config_err(e.line, format!("`{key}` is not a comma-separated list"))
                    })?;
                if items.len() != expected {
                    return Err(config_err(
                        e.line,
                        format!("`{key}` needs {expected} entries, got {}", items.len()),
                    ));
                }
                if items.iter().any(|v| !v.is_finite()) {
                    return Err(config_err(e.line, format!("`{key}` must be finite")));
                }
                Ok(items)
            })
            .transpose()
    }

    fn usize_list(&self, key: &str, expected: usize) -> Result<Option<Vec<usize>>, CliError> {
        self.get(key)
            .map(|e| {
                let items: Vec<usize> = e
                    .value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        config_err(e.line, format!("`{key}` is not a comma-separated list"))
                    })?;
                if items.len() != expected {
                    return Err(config_err(
                        e.line,
                        format!("`{key}` needs {expected} entries, got {}", items.len()),
                    ));
                }
                Ok(items)
            })
            .transpose()
    }
}

fn parse_domain(raw: &RawSection) -> Result<DomainSpec, CliError> {
    let table = KeyTable::new("domain", &["dim", "lengths", "resolution"], raw)?;
    let dim = table.usize("dim")?.unwrap_or(1);
    if !(1..=2).contains(&dim) {
        let line = table.get("dim").map(|e| e.line).unwrap_or(0);
        return Err(config_err(line, format!("`dim` must be 1 or 2, got {dim}")));
    }
    let lengths = table.f64_list("lengths", dim)?.unwrap_or(vec![1.0; dim]);
    let resolution = table.usize_list("resolution", dim)?.unwrap_or(vec![128; dim]);
    Ok(DomainSpec::new(&lengths, &resolution)?)
}

fn parse_model(raw: &RawSection) -> Result<ModelParams, CliError> {
    let table = KeyTable::new("model", &["p"], raw)?;
    let entry = table
        .get("p")
        .ok_or_else(|| CliError::Config("[model] is missing the required key `p`".into()))?;
    let p = table.f64("p")?.expect("presence checked above");
    ModelParams::new(p).map_err(|e| config_err(entry.line, e))
}

fn parse_initial(raw: &RawSection, domain: &DomainSpec) -> Result<InitialData, CliError> {
    let table = KeyTable::new(
        "initial_data",
        &["mode", "random_seed", "random_modes", "random_amplitude"],
        raw,
    )?;
    let mut modes = Vec::new();
    for entry in table.entries.iter().filter(|e| e.key == "mode") {
        let (index_part, amp_part) = entry.value.split_once(':').ok_or_else(|| {
            config_err(entry.line, "`mode` must look like `k:amplitude`")
        })?;
        let index: Vec<usize> = index_part
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| config_err(entry.line, "bad mode index"))?;
        if index.len() != domain.dim() {
            return Err(config_err(
                entry.line,
                format!(
                    "mode index has {} components, domain has dim {}",
                    index.len(),
                    domain.dim()
                ),
            ));
        }
        domain
            .flat_mode_index(&index)
            .map_err(|e| config_err(entry.line, e))?;
        let amplitude: f64 = amp_part
            .trim()
            .parse()
            .map_err(|_| config_err(entry.line, "bad mode amplitude"))?;
        if !amplitude.is_finite() {
            return Err(config_err(entry.line, "mode amplitude must be finite"));
        }
        modes.push((index, amplitude));
    }
    let random_seed = table.u64("random_seed")?;
    if random_seed.is_none() {
        for key in ["random_modes", "random_amplitude"] {
            if let Some(e) = table.get(key) {
                return Err(config_err(e.line, format!("`{key}` requires `random_seed`")));
            }
        }
        if modes.is_empty() {
            return Err(CliError::Config(
                "[initial_data] needs at least one `mode` or a `random_seed`".into(),
            ));
        }
    }
    let random_amplitude = table.f64("random_amplitude")?.unwrap_or(0.1);
    if random_amplitude < 0.0 {
        let line = table.get("random_amplitude").map(|e| e.line).unwrap_or(0);
        return Err(config_err(line, "`random_amplitude` must be nonnegative"));
    }
    Ok(InitialData {
        modes,
        random_seed,
        random_modes: table.usize("random_modes")?.unwrap_or(8),
        random_amplitude,
    })
}

fn parse_solver(raw: &RawSection) -> Result<SolverConfig, CliError> {
    let table = KeyTable::new(
        "solver",
        &[
            "t_end",
            "dt_init",
            "dt_min",
            "dt_max",
            "rel_tol",
            "abs_tol",
            "blowup_threshold",
            "oversample",
            "record_stride",
            "disable_source",
        ],
        raw,
    )?;
    let defaults = SolverConfig::default();
    Ok(SolverConfig {
        t_end: table.f64("t_end")?.unwrap_or(defaults.t_end),
        dt_init: table.f64("dt_init")?.unwrap_or(defaults.dt_init),
        dt_min: table.f64("dt_min")?.unwrap_or(defaults.dt_min),
        dt_max: table.f64("dt_max")?.unwrap_or(defaults.dt_max),
        rel_tol: table.f64("rel_tol")?.unwrap_or(defaults.rel_tol),
        abs_tol: table.f64("abs_tol")?.unwrap_or(defaults.abs_tol),
        blowup_threshold: table
            .f64("blowup_threshold")?
            .unwrap_or(defaults.blowup_threshold),
        oversample: table.usize("oversample")?.unwrap_or(defaults.oversample),
        record_stride: table
            .usize("record_stride")?
            .unwrap_or(defaults.record_stride),
        disable_source: table
            .bool("disable_source")?
            .unwrap_or(defaults.disable_source),
    })
}

fn parse_analysis(raw: &RawSection) -> Result<AnalysisSettings, CliError> {
    let table = KeyTable::new(
        "analysis",
        &[
            "seed",
            "safety_factor",
            "alpha",
            "ascent_starts",
            "ascent_iters",
            "directions",
            "refine_passes",
            "refine_top",
            "delta_grid",
        ],
        raw,
    )?;
    let defaults = AnalysisSettings::default();
    let base = defaults.budget;
    Ok(AnalysisSettings {
        seed: table.u64("seed")?.unwrap_or(defaults.seed),
        safety_factor: table
            .f64("safety_factor")?
            .unwrap_or(defaults.safety_factor),
        alpha: table.f64("alpha")?,
        budget: AnalysisBudget {
            ascent_starts: table.usize("ascent_starts")?.unwrap_or(base.ascent_starts),
            ascent_iters: table.usize("ascent_iters")?.unwrap_or(base.ascent_iters),
            directions: table.usize("directions")?.unwrap_or(base.directions),
            refine_passes: table.usize("refine_passes")?.unwrap_or(base.refine_passes),
            refine_top: table.usize("refine_top")?.unwrap_or(base.refine_top),
            delta_grid: table.usize("delta_grid")?.unwrap_or(base.delta_grid),
        },
    })
}
