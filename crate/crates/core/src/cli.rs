//! Command-line front end.
//!
//! Every command reads one TOML [`RunConfig`], writes its files under
//! `<out>/<command>/<config hash>/` together with `manifest.toml`, and exits
//! with 0 on success, 1 on a domain failure (infeasible target, reducible
//! generator, no convergence) and 2 on a configuration or I/O error.
//!
//! All outputs except the wall time in the manifest are byte-identical for
//! identical configuration and seed, whatever the thread count.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{current_matrix, flux_matrix, simplex, ConfigError, RunConfig};
use crate::ldp::{dv_rate, fixed_point_multistart, fixed_point_pi_star, DvRateInput, LdpError};
use crate::mc::{compare_to_rate, decay_curve, write_curve_csv, McOptions};
use crate::model::{RateFamily, RateField, SimplexVector};
use crate::rng::{derive_seed, path_stream};
use crate::sim::{batch_simulate, simulate};
use crate::varsolve::{
    current_rate, occupation_rate, solve_rate, write_path_csv, write_result_toml, RateResult, SolveStatus,
};

#[derive(Debug, Parser)]
#[command(name = "sijump", version, about = "Self-interacting jump processes: simulation and large deviations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the configuration and report c_Q, k_Q and the support.
    Validate,
    /// Simulate paths; writes per-path terminal occupation and flux.
    Simulate,
    /// Closed-form level-2.5 rate of a constant field.
    DvRate,
    /// Rate of a joint (occupation, flux) target.
    Rate,
    /// Rate of an occupation target.
    OccupationRate,
    /// Rate of a current target.
    CurrentRate,
    /// Self-consistent stationary distribution(s).
    FixedPoint,
    /// Monte Carlo decay curve of a ball probability.
    McLdp,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Simulate => "simulate",
            Self::DvRate => "dv-rate",
            Self::Rate => "rate",
            Self::OccupationRate => "occupation-rate",
            Self::CurrentRate => "current-rate",
            Self::FixedPoint => "fixed-point",
            Self::McLdp => "mc-ldp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pretty,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Config(String),
    /// Exit 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Domain(_) => 1,
            Self::Config(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(format!("i/o: {e}"))
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// Files and messages produced by a command.
#[derive(Debug, Default)]
pub struct Report {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub pretty: String,
    /// Printed instead of `pretty` under `--format csv`, when present.
    pub csv: Option<String>,
    /// Written and printed, but the command still exits with 1.
    pub failure: Option<String>,
    pub warning: Option<String>,
}

impl Report {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let msg = match &e {
                CliError::Config(m) => format!("configuration error: {m}"),
                CliError::Domain(m) => m.clone(),
            };
            let _ = writeln!(stderr, "{msg}");
            e.exit_code()
        }
    }
}

/// Loads the configuration named by `cli`, runs the command and writes its
/// outputs.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let canonical = config.to_toml();
    let hash = config_hash(&canonical);

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(CliError::Config("--threads must be positive".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Config(e.to_string()))?
    };
    let report = pool.install(|| execute(cli.command, &config))?;

    let dir = cli.out.join(cli.command.name()).join(&hash);
    fs::create_dir_all(&dir)?;
    for (name, bytes) in &report.files {
        write_atomic(&dir.join(name), bytes)?;
    }
    let manifest = Manifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: &hash,
        seed: config.seed,
        threads: pool.current_num_threads(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: report.files.iter().map(|(n, _)| n.as_str()).collect(),
        config: &canonical,
    };
    write_atomic(&dir.join("manifest.toml"), toml::to_string(&manifest).expect("manifest").as_bytes())?;

    match (cli.format, &report.csv) {
        (Format::Csv, Some(csv)) => write!(stdout, "{csv}")?,
        _ => write!(stdout, "{}", report.pretty)?,
    }
    writeln!(stdout, "output: {}", dir.display())?;
    if let Some(w) = &report.warning {
        writeln!(stdout, "warning: {w}")?;
    }
    match report.failure {
        Some(f) => Err(CliError::Domain(f)),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: &'a str,
    seed: u64,
    threads: usize,
    wall_time_seconds: f64,
    files: Vec<&'a str>,
    config: &'a str,
}

/// First 16 hex digits of the SHA-256 of the canonical configuration.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn toml_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    toml::to_string(value).expect("serializable").into_bytes()
}

/// Runs `command` on an already parsed configuration without touching the
/// file system.
pub fn execute(command: Command, config: &RunConfig) -> Result<Report, CliError> {
    let field = config.rate_field()?;
    match command {
        Command::Validate => validate(&field),
        Command::Simulate => run_simulate(config, &field),
        Command::DvRate => run_dv_rate(config, &field),
        Command::Rate | Command::OccupationRate | Command::CurrentRate => run_rate(command, config, &field),
        Command::FixedPoint => run_fixed_point(config, &field),
        Command::McLdp => run_mc(config, &field),
    }
}

fn one_based(edges: &[(usize, usize)]) -> Vec<[usize; 2]> {
    edges.iter().map(|&(x, y)| [x + 1, y + 1]).collect()
}

fn validate(field: &RateField) -> Result<Report, CliError> {
    #[derive(Serialize)]
    struct Summary<'a> {
        family: &'a str,
        states: usize,
        c_q: f64,
        k_q: f64,
        support: Vec<[usize; 2]>,
        support_irreducible: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        pi_star: Option<Vec<f64>>,
    }
    let pi_star = field.support_irreducible().then(|| fixed_point_pi_star(field, 1e-12, 10_000).ok()).flatten();
    let summary = Summary {
        family: field.family().name(),
        states: field.dim(),
        c_q: field.rate_bound(),
        k_q: field.rate_lower_coeff(),
        support: one_based(&field.support_edges()),
        support_irreducible: field.support_irreducible(),
        pi_star: pi_star.map(|fp| fp.pi.into_vec()),
    };
    let mut report = Report::default();
    let bytes = toml_bytes(&summary);
    report.pretty = String::from_utf8(bytes.clone()).expect("utf8");
    report.file("summary.toml", bytes);
    Ok(report)
}

fn run_simulate(config: &RunConfig, field: &RateField) -> Result<Report, CliError> {
    let sim = config.simulate.as_ref().ok_or_else(|| CliError::Config("[simulate] section missing".into()))?;
    let x0 = config.initial_state_index(field)?;
    let seed = derive_seed(config.seed, "simulate");
    let batch = batch_simulate(field, x0, sim.horizon, sim.paths, seed, sim.sampler.into()).map_err(domain)?;
    let first = simulate(sim.sampler.into(), field, x0, sim.horizon, &mut path_stream(seed, 0)).map_err(domain)?;

    let mut paths = Vec::new();
    batch.write_csv(field, &mut paths)?;
    let mut events = Vec::new();
    first.write_csv(&mut events)?;

    #[derive(Serialize)]
    struct Summary {
        paths: usize,
        horizon: f64,
        occupation_mean: Vec<f64>,
        occupation_var: Vec<f64>,
        flux_mean: Vec<Vec<f64>>,
    }
    let space = field.space();
    let mut flux_mean = vec![vec![0.0; space.dim()]; space.dim()];
    for (e, (x, y)) in space.edges().enumerate() {
        flux_mean[x][y] = batch.flux_mean[e];
    }
    let summary = toml_bytes(&Summary {
        paths: sim.paths,
        horizon: sim.horizon,
        occupation_mean: batch.occupation_mean.clone(),
        occupation_var: batch.occupation_var.clone(),
        flux_mean,
    });
    let mut report = Report {
        pretty: String::from_utf8(summary.clone()).expect("utf8"),
        csv: Some(String::from_utf8(paths.clone()).expect("utf8")),
        ..Default::default()
    };
    report.file("paths.csv", paths);
    report.file("trajectory_1.csv", events);
    report.file("summary.toml", summary);
    Ok(report)
}

fn rate_section(config: &RunConfig) -> Result<&crate::config::RateConfig, CliError> {
    config.rate.as_ref().ok_or_else(|| CliError::Config("[rate] section missing".into()))
}

fn run_dv_rate(config: &RunConfig, field: &RateField) -> Result<Report, CliError> {
    let RateFamily::Constant { q0 } = field.family() else {
        return Err(CliError::Config("dv-rate needs field.family = \"constant\"".into()));
    };
    let rate = rate_section(config)?;
    let d = field.dim();
    let gamma = simplex("rate.gamma", rate.gamma.as_deref().ok_or_else(|| missing("rate.gamma"))?, d)?;
    let flux = flux_matrix("rate.flux", rate.flux.as_ref().ok_or_else(|| missing("rate.flux"))?, d)?;
    let input = DvRateInput::new(q0.clone(), gamma, flux).map_err(|e| match e {
        LdpError::Model(m) => CliError::Config(m.to_string()),
        other => domain(other),
    })?;
    let value = dv_rate(&input);
    #[derive(Serialize)]
    struct Out {
        value: f64,
    }
    let mut report = Report { pretty: format!("{value}\n"), ..Default::default() };
    report.file("dv_rate.toml", toml_bytes(&Out { value }));
    if value.is_infinite() {
        report.failure = Some("infeasible: flux balance violated or flux off the support".into());
    }
    Ok(report)
}

fn missing(name: &str) -> CliError {
    CliError::Config(format!("field `{name}`: required by this command"))
}

fn run_rate(command: Command, config: &RunConfig, field: &RateField) -> Result<Report, CliError> {
    let rate = rate_section(config)?;
    let d = field.dim();
    let mut opts = config.solver_options()?;
    opts.seed = derive_seed(config.seed, command.name());
    let result: RateResult = match command {
        Command::Rate => {
            let gamma = simplex("rate.gamma", rate.gamma.as_deref().ok_or_else(|| missing("rate.gamma"))?, d)?;
            let flux = flux_matrix("rate.flux", rate.flux.as_ref().ok_or_else(|| missing("rate.flux"))?, d)?;
            solve_rate(&gamma, &flux, field, &opts)
        }
        Command::OccupationRate => {
            let gamma = simplex("rate.gamma", rate.gamma.as_deref().ok_or_else(|| missing("rate.gamma"))?, d)?;
            occupation_rate(&gamma, field, &opts)
        }
        _ => {
            let j = current_matrix("rate.current", rate.current.as_ref().ok_or_else(|| missing("rate.current"))?, d)?;
            current_rate(&j, field, &opts)
        }
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    let mut toml_out = Vec::new();
    write_result_toml(&result, &mut toml_out).map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = Report::default();
    let _ = writeln!(report.pretty, "value = {}", result.value);
    let _ = writeln!(report.pretty, "status = {}", result.status.as_str());
    let r = &result.residuals;
    let _ = writeln!(
        report.pretty,
        "residuals: marginal {:e}, stationarity {:e}, flux {:e}, current {:e}, support {}",
        r.marginal, r.stationarity, r.flux, r.current, r.support
    );
    report.file("result.toml", toml_out);
    if let Some(path) = &result.path {
        let mut csv = Vec::new();
        write_path_csv(path, &mut csv)?;
        report.csv = Some(String::from_utf8(csv.clone()).expect("utf8"));
        report.file("path.csv", csv);
    }
    match result.status {
        SolveStatus::Infeasible => {
            report.failure =
                Some(format!("infeasible: {}", result.note.as_deref().unwrap_or("constraints cannot be met")))
        }
        SolveStatus::MaxIter => report.failure = Some("solver did not meet its tolerances".into()),
        SolveStatus::Boundary if !result.feasible_to_tol => {
            report.failure = Some("solver did not meet its tolerances on the floored target".into())
        }
        SolveStatus::Boundary => report.warning = result.note.clone(),
        SolveStatus::Converged => {}
    }
    Ok(report)
}

fn run_fixed_point(config: &RunConfig, field: &RateField) -> Result<Report, CliError> {
    let fp = config.fixed_point.clone().unwrap_or_default();
    let d = field.dim();
    let mut starts = vec![SimplexVector::uniform(d)];
    starts.extend((0..d).map(|x| SimplexVector::dirac(d, x)));
    for (i, s) in fp.starts.iter().enumerate() {
        starts.push(simplex(&format!("fixed_point.starts[{}]", i + 1), s, d)?);
    }
    let found = fixed_point_multistart(field, &starts, fp.tol, fp.max_iter).map_err(domain)?;

    #[derive(Serialize)]
    struct Point {
        pi: Vec<f64>,
        residual: f64,
        iterations: usize,
        damped: bool,
    }
    #[derive(Serialize)]
    struct Out {
        distinct: usize,
        fixed_point: Vec<Point>,
    }
    let out = Out {
        distinct: found.len(),
        fixed_point: found
            .iter()
            .map(|f| Point {
                pi: f.pi.as_slice().to_vec(),
                residual: f.residual,
                iterations: f.iterations,
                damped: f.damped,
            })
            .collect(),
    };
    let bytes = toml_bytes(&out);
    let mut report = Report { pretty: String::from_utf8(bytes.clone()).expect("utf8"), ..Default::default() };
    if found.len() > 1 {
        report.warning = Some(format!("{} distinct fixed points; the limit depends on the start", found.len()));
    }
    report.file("fixed_point.toml", bytes);
    Ok(report)
}

fn run_mc(config: &RunConfig, field: &RateField) -> Result<Report, CliError> {
    let target = config.ball_target(field)?;
    let mc = config.mc.as_ref().expect("checked by ball_target");
    let x0 = config.initial_state_index(field)?;
    let opts = McOptions { n: mc.n, seed: derive_seed(config.seed, "mc-ldp"), sampler: mc.sampler.into() };
    let curve = decay_curve(field, x0, &target, &mc.times, opts).map_err(domain)?;
    let mut csv = Vec::new();
    write_curve_csv(&curve, &mut csv)?;
    let mut report = Report::default();
    for p in &curve {
        let _ = writeln!(
            report.pretty,
            "t = {}: p_hat = {} [{}, {}], -log(p)/t = {}{}",
            p.t,
            p.p_hat,
            p.ci_low,
            p.ci_high,
            p.neg_log_rate,
            if p.censored { " (censored)" } else { "" }
        );
    }
    report.csv = Some(String::from_utf8(csv.clone()).expect("utf8"));
    report.file("curve.csv", csv);
    if let Some(rate) = mc.reference_rate {
        let cmp = compare_to_rate(&curve, rate);
        #[derive(Serialize)]
        struct Out {
            rate: f64,
            gaps: Vec<f64>,
            censored: usize,
            trend: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            terminal_relative_gap: Option<f64>,
            inconclusive: bool,
        }
        let bytes = toml_bytes(&Out {
            rate: cmp.rate,
            gaps: cmp.gaps,
            censored: cmp.censored,
            trend: cmp.trend.as_str(),
            terminal_relative_gap: cmp.terminal_relative_gap,
            inconclusive: cmp.inconclusive,
        });
        let _ = write!(report.pretty, "{}", String::from_utf8_lossy(&bytes));
        report.file("comparison.toml", bytes);
    }
    Ok(report)
}
