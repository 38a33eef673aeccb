use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sijump::cli::run_from_args;
use sijump::config::RunConfig;
use sijump::ldp::{dv_rate, DvRateInput};
use sijump::varsolve::occupation_rate;
use sijump::{FluxVector, SimplexVector};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sijump(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sijump").chain(args.iter().copied());
    let code = run_from_args(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn run_with(config: &Path, out: &Path, extra: &[&str], command: &str) -> Run {
    let mut args = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    args.push(command);
    sijump(&args)
}

/// Every output file except the manifest, keyed by path relative to `root`.
fn outputs(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "manifest.toml" {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_reports_bound_and_support() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_with(&config_path("autochemotaxis.toml"), tmp.path(), &[], "validate");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("c_q = 5.0"));
    assert!(r.stdout.contains("support = [[1, 2], [2, 1]]"));
}

#[test]
fn dv_rate_prints_the_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_with(&config_path("dv_two_state.toml"), tmp.path(), &[], "dv-rate");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("0.386294"), "{}", r.stdout);

    let q0 = sijump::GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let flux = FluxVector::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let exact = dv_rate(&DvRateInput::new(q0, SimplexVector::uniform(2), flux).unwrap());
    assert!(r.stdout.contains(&format!("{exact}")));
}

#[test]
fn imbalanced_flux_is_a_domain_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"
seed = 1
[field]
family = "constant"
q0 = [[-1.0, 1.0], [1.0, -1.0]]
support = [[1, 2], [2, 1]]
[rate]
gamma = [0.5, 0.5]
flux = [[0.0, 1.0], [2.0, 0.0]]
"#,
    );
    let r = run_with(&config, &tmp.path().join("out"), &[], "rate");
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("infeasible: flux balance violated"), "{}", r.stderr);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let missing = run_with(&tmp.path().join("absent.toml"), &out, &[], "validate");
    assert_eq!(missing.code, 2);

    let bad_generator = write_config(
        tmp.path(),
        r#"
seed = 1
[field]
family = "constant"
q0 = [[-1.0, 2.0], [1.0, -1.0]]
support = [[1, 2], [2, 1]]
"#,
    );
    let r = run_with(&bad_generator, &out, &[], "validate");
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("configuration error"), "{}", r.stderr);

    let unknown_key = write_config(
        tmp.path(),
        r#"
seed = 1
[field]
family = "constant"
q0 = [[-1.0, 1.0], [1.0, -1.0]]
support = [[1, 2], [2, 1]]
k = 2.0
"#,
    );
    let r = run_with(&unknown_key, &out, &[], "validate");
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains('k'), "{}", r.stderr);

    let wrong_support = write_config(
        tmp.path(),
        r#"
seed = 1
[field]
family = "constant"
q0 = [[-1.0, 1.0], [1.0, -1.0]]
support = [[1, 2]]
"#,
    );
    assert_eq!(run_with(&wrong_support, &out, &[], "validate").code, 2);
    assert_eq!(sijump(&["--threads", "many", "validate"]).code, 2);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let cases = [
        ("autochemotaxis.toml", "simulate"),
        ("autochemotaxis.toml", "occupation-rate"),
        ("congestion.toml", "current-rate"),
        ("catalytic.toml", "fixed-point"),
    ];
    for (config, command) in cases {
        let one = tempfile::tempdir().unwrap();
        let four = tempfile::tempdir().unwrap();
        let a = run_with(&config_path(config), one.path(), &["--threads", "1"], command);
        let b = run_with(&config_path(config), four.path(), &["--threads", "4"], command);
        assert_eq!((a.code, b.code), (0, 0), "{command}: {} {}", a.stderr, b.stderr);
        let (fa, fb) = (outputs(one.path()), outputs(four.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{command} on {config}");
    }
}

#[test]
fn mc_curve_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"
seed = 3
[field]
family = "autochemotaxis"
q0 = [[-1.0, 1.0], [2.0, -2.0]]
k = 1.5
support = [[1, 2], [2, 1]]
[mc]
center = [0.6, 0.4]
radius = 0.2
times = [2.0, 4.0]
n = 2000
reference_rate = 0.05
"#,
    );
    let (x, y) = (tmp.path().join("x"), tmp.path().join("y"));
    assert_eq!(run_with(&config, &x, &["--threads", "1"], "mc-ldp").code, 0);
    assert_eq!(run_with(&config, &y, &["--threads", "3"], "mc-ldp").code, 0);
    let (fx, fy) = (outputs(&x), outputs(&y));
    assert!(fx.keys().any(|k| k.ends_with("curve.csv")));
    assert!(fx.keys().any(|k| k.ends_with("comparison.toml")));
    assert_eq!(fx, fy);
}

#[test]
fn rate_output_matches_the_library_call() {
    let tmp = tempfile::tempdir().unwrap();
    let path = config_path("autochemotaxis.toml");
    let r = run_with(&path, tmp.path(), &[], "occupation-rate");
    assert_eq!(r.code, 0, "{}", r.stderr);

    let config = RunConfig::parse(&fs::read_to_string(&path).unwrap()).unwrap();
    let field = config.rate_field().unwrap();
    let gamma = SimplexVector::new(config.rate.as_ref().unwrap().gamma.clone().unwrap()).unwrap();
    let direct = occupation_rate(&gamma, &field, &config.solver_options().unwrap()).unwrap();

    let hash_dir = fs::read_dir(tmp.path().join("occupation-rate")).unwrap().next().unwrap().unwrap().path();
    let written: toml::Table = fs::read_to_string(hash_dir.join("result.toml")).unwrap().parse().unwrap();
    assert_eq!(written["value"].as_float().unwrap(), direct.value);
}

#[test]
fn configs_round_trip() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let parsed = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&parsed.to_toml()).unwrap();
        assert_eq!(parsed, again);
        assert_eq!(again.to_toml(), parsed.to_toml());
    }
}
