//! Parser-level tests of the experiment configuration format: defaults,
//! error positions, and the generated initial data.

use logwell_cli::{parse_config, CliError};

fn parse(text: &str) -> Result<logwell_cli::ExperimentConfig, CliError> {
    parse_config(text)
}

fn config_message(err: CliError) -> String {
    match err {
        CliError::Config(msg) => msg,
        other => panic!("expected a configuration error, got {other}"),
    }
}

const MINIMAL: &str = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:0.5
";

#[test]
fn minimal_config_fills_every_default() {
    let config = parse(MINIMAL).expect("minimal config parses");
    assert_eq!(config.domain.dim(), 1);
    assert_eq!(config.domain.lengths(), &[1.0]);
    assert_eq!(config.domain.resolution(), &[128]);
    assert_eq!(config.params.p(), 3.0);
    assert_eq!(config.initial.modes, vec![(vec![1], 0.5)]);
    assert_eq!(config.initial.random_seed, None);

    let defaults = logwell::SolverConfig::default();
    assert_eq!(config.solver.t_end, defaults.t_end);
    assert_eq!(config.solver.rel_tol, defaults.rel_tol);
    assert_eq!(config.analysis.seed, 11);
    assert_eq!(config.analysis.safety_factor, 1.05);
    assert_eq!(config.analysis.alpha, None);
    assert_eq!(config.analysis.budget.delta_grid, 201);
}

#[test]
fn comments_and_blank_lines_are_ignored_everywhere() {
    let text = "\
# leading comment

[domain]
dim = 1        # trailing comment
resolution = 64

# interlude
[model]
p = 2.5

[initial_data]
mode = 1:1.0   # the fundamental
";
    let config = parse(text).expect("commented config parses");
    assert_eq!(config.domain.resolution(), &[64]);
    assert_eq!(config.params.p(), 2.5);
}

#[test]
fn rejected_power_index_reports_its_line() {
    let text = "\
[domain]
dim = 1

[model]
p = 0.5

[initial_data]
mode = 1:1.0
";
    let msg = config_message(parse(text).unwrap_err());
    assert!(msg.contains("line 5"), "missing position: {msg}");
    assert!(msg.contains("p"), "missing subject: {msg}");
}

#[test]
fn duplicate_keys_report_both_lines() {
    let text = "\
[domain]
dim = 1
dim = 2

[model]
p = 3.0

[initial_data]
mode = 1:1.0
";
    let msg = config_message(parse(text).unwrap_err());
    assert!(
        msg.contains("lines 2 and 3"),
        "expected both positions in: {msg}"
    );
    assert!(msg.contains("duplicate key `dim`"), "got: {msg}");
}

#[test]
fn repeated_modes_are_the_one_allowed_duplicate() {
    let text = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:1.0
mode = 3:-0.25
";
    let config = parse(text).expect("repeated mode lines parse");
    assert_eq!(config.initial.modes.len(), 2);
    assert_eq!(config.initial.modes[1], (vec![3], -0.25));
}

#[test]
fn unknown_keys_and_sections_are_rejected() {
    let unknown_key = "\
[domain]
dim = 1
colour = blue

[model]
p = 3.0

[initial_data]
mode = 1:1.0
";
    let msg = config_message(parse(unknown_key).unwrap_err());
    assert!(msg.contains("unknown key `colour` in [domain]"), "got: {msg}");

    let unknown_section = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:1.0

[plotting]
style = dark
";
    let msg = config_message(parse(unknown_section).unwrap_err());
    assert!(msg.contains("unknown section"), "got: {msg}");
    assert!(msg.contains("plotting"), "got: {msg}");
}

#[test]
fn missing_required_sections_are_named() {
    let text = "\
[domain]
dim = 1

[initial_data]
mode = 1:1.0
";
    let msg = config_message(parse(text).unwrap_err());
    assert!(
        msg.contains("missing required section [model]"),
        "got: {msg}"
    );
}

#[test]
fn keys_before_any_section_are_rejected() {
    let msg = config_message(parse("p = 3.0\n").unwrap_err());
    assert!(msg.contains("line 1"), "got: {msg}");
    assert!(msg.contains("before any [section]"), "got: {msg}");
}

#[test]
fn non_finite_values_are_rejected() {
    let text = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:1.0

[solver]
t_end = inf
";
    let msg = config_message(parse(text).unwrap_err());
    assert!(msg.contains("must be finite"), "got: {msg}");
}

#[test]
fn two_dimensional_modes_need_two_indices() {
    let good = "\
[domain]
dim = 2
lengths = 1.0, 2.0
resolution = 16, 16

[model]
p = 2.0

[initial_data]
mode = 1,2:0.5
";
    let config = parse(good).expect("2-D mode parses");
    assert_eq!(config.initial.modes, vec![(vec![1, 2], 0.5)]);

    let bad = good.replace("mode = 1,2:0.5", "mode = 1:0.5");
    let msg = config_message(parse(&bad).unwrap_err());
    assert!(msg.contains("dim 2"), "got: {msg}");
}

#[test]
fn random_keys_require_a_seed() {
    let text = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:1.0
random_modes = 4
";
    let msg = config_message(parse(text).unwrap_err());
    assert!(msg.contains("random_seed"), "got: {msg}");
}

#[test]
fn initial_data_needs_modes_or_a_seed() {
    let text = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
";
    let msg = config_message(parse(text).unwrap_err());
    assert!(
        msg.contains("at least one mode") || msg.contains("random_seed"),
        "got: {msg}"
    );
}

#[test]
fn booleans_accept_only_true_and_false() {
    let base = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:1.0

[solver]
disable_source = VALUE
";
    let config = parse(&base.replace("VALUE", "true")).expect("true parses");
    assert!(config.solver.disable_source);
    let msg = config_message(parse(&base.replace("VALUE", "yes")).unwrap_err());
    assert!(msg.contains("true") && msg.contains("false"), "got: {msg}");
}

#[test]
fn solver_validation_still_runs_on_parsed_values() {
    let text = "\
[domain]
dim = 1

[model]
p = 3.0

[initial_data]
mode = 1:1.0

[solver]
dt_init = 1e-3
dt_min = 1e-2
";
    assert!(parse(text).is_err(), "dt_min above dt_init must be rejected");
}

#[test]
fn explicit_modes_build_the_expected_field() {
    let text = "\
[domain]
dim = 1
resolution = 32

[model]
p = 3.0

[initial_data]
mode = 1:0.7
mode = 3:-0.2
";
    let config = parse(text).expect("parses");
    let field = config.initial.build(&config.domain).expect("builds");
    let coeffs = field.to_spectral();
    assert!((coeffs[0] - 0.7).abs() < 1e-12);
    assert!((coeffs[2] + 0.2).abs() < 1e-12);
    assert!(coeffs[1].abs() < 1e-12);
}

#[test]
fn seeded_noise_is_deterministic_and_bounded() {
    let text = "\
[domain]
dim = 1
resolution = 32

[model]
p = 3.0

[initial_data]
mode = 1:1.0
random_seed = 7
random_modes = 4
random_amplitude = 0.05
";
    let config = parse(text).expect("parses");
    let a = config.initial.build(&config.domain).expect("builds");
    let b = config.initial.build(&config.domain).expect("builds");
    let (ca, cb) = (a.to_spectral(), b.to_spectral());
    assert_eq!(ca, cb, "same seed must give the same field");
    for (k, &c) in ca.iter().enumerate() {
        let base = if k == 0 { 1.0 } else { 0.0 };
        let bound = if k < 4 { 0.05 + 1e-12 } else { 1e-12 };
        assert!(
            (c - base).abs() <= bound,
            "coefficient {k} = {c} strays past the noise bound"
        );
    }
}
