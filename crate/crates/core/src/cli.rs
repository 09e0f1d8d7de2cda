//! Command-line front end. Every command reads files, runs one pipeline and
//! writes CSV or JSON; the same [`execute`] entry point backs the binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bell::{joint, slice_behaviour, Behaviour, JointDistribution, Scenario, SettingsDistribution, SliceCoords};
use crate::entropy::optimal_iid_attack;
use crate::error::{domain, param, Error, Result};
use crate::io::{fmt_f64, read_behaviour, read_json, read_trials, sha256_hex, to_json, write_trials};
use crate::pef::{
    argmax_beta, beta_grid, ns_222_extremals, optimize_pef, rate_on_slice, sweep_rates, zero_rate_intercept, Pef,
    PefFile, PefOptConfig, SolveStatus,
};
use crate::polytope::{counterexample_suite, decompose_nonlocal, local_membership, Membership, SeparatingFunctional};
use crate::protocol::{certify, choose_log2_p, simulate, CertifyParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Optimal and net log-prob rates over a power sweep
    Rates,
    /// Rate of one optimised PEF over the (S', S) slice
    Heatmap,
    /// PR/LD decomposition of a nonlocal behaviour
    Decompose,
    /// Optimal IID attack reproducing a behaviour
    Attack,
    /// Local polytope membership with witness
    Membership,
    /// Min-entropy certificate for a trial file
    Certify,
    /// Local/nonlocal verdicts for the mixture counterexamples
    Counterexamples,
    /// Sample a trial CSV from a behaviour
    Simulate,
    /// Optimise a PEF and write it as JSON
    Optimize,
}

fn parse_scenario(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string())).collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected n,m,k".to_string())
}

fn parse_grid(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi, count] => Ok((
            lo.parse().map_err(|e| format!("{e}"))?,
            hi.parse().map_err(|e| format!("{e}"))?,
            count.parse().map_err(|e| format!("{e}"))?,
        )),
        _ => Err("expected LO,HI,COUNT".into()),
    }
}

/// Comma-separated trial counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrialCounts(pub Vec<f64>);

fn parse_counts(s: &str) -> std::result::Result<TrialCounts, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<std::result::Result<_, _>>().map(TrialCounts)
}

/// Options shared by all commands. Flags override the JSON config file,
/// which overrides the defaults.
#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// Behaviour JSON file
    #[arg(long, global = true)]
    pub behaviour: Option<PathBuf>,
    /// Expected scenario as n,m,k
    #[arg(long, global = true, value_parser = parse_scenario)]
    pub scenario: Option<[usize; 3]>,
    /// PEF power
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Log-spaced power grid LO,HI,COUNT
    #[arg(long, global = true, value_parser = parse_grid)]
    pub beta_grid: Option<(f64, f64, usize)>,
    /// Trial count(s), comma separated
    #[arg(long, global = true, value_parser = parse_counts)]
    pub n: Option<TrialCounts>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Success threshold probability
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Success threshold in bits (for thresholds below the f64 range)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub log2_p: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Trial CSV file
    #[arg(long, global = true)]
    pub trials: Option<PathBuf>,
    /// PEF JSON file
    #[arg(long, global = true)]
    pub pef: Option<PathBuf>,
    /// Heat-map points per axis
    #[arg(long, global = true)]
    pub grid: Option<usize>,
}

impl Options {
    fn or(self, base: Options) -> Options {
        Options {
            behaviour: self.behaviour.or(base.behaviour),
            scenario: self.scenario.or(base.scenario),
            beta: self.beta.or(base.beta),
            beta_grid: self.beta_grid.or(base.beta_grid),
            n: self.n.or(base.n),
            epsilon: self.epsilon.or(base.epsilon),
            kappa: self.kappa.or(base.kappa),
            p: self.p.or(base.p),
            log2_p: self.log2_p.or(base.log2_p),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            trials: self.trials.or(base.trials),
            pef: self.pef.or(base.pef),
            grid: self.grid.or(base.grid),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pefkit", version, about = "Probability estimation factors for device-independent randomness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file with the same keys as the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    options: Options,
}

/// Fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub options: Options,
}

impl RunConfig {
    pub fn new(command: Command, options: Options) -> Self {
        RunConfig { command, options }
    }

    fn epsilon(&self) -> f64 {
        self.options.epsilon.unwrap_or(1e-4)
    }

    fn seed(&self) -> u64 {
        self.options.seed.unwrap_or(0)
    }

    fn format(&self, default: Format) -> Format {
        self.options.format.unwrap_or(default)
    }

    fn require_behaviour(&self) -> Result<(Behaviour, SettingsDistribution)> {
        let path = self.options.behaviour.as_deref().ok_or_else(|| param("--behaviour is required"))?;
        self.load(path)
    }

    fn load(&self, path: &Path) -> Result<(Behaviour, SettingsDistribution)> {
        let (b, s) = read_behaviour(path)?;
        if let Some([n, m, k]) = self.options.scenario {
            let want = Scenario::new(n, m, k)?;
            if b.scenario() != want {
                return Err(domain(format!("behaviour has scenario {}, expected {want}", b.scenario())));
            }
        }
        Ok((b, s))
    }

    /// Behaviour file when given, else the slice anchor `(S', S) = (0, 2.6)`.
    fn anchor(&self) -> Result<(Behaviour, SettingsDistribution)> {
        match &self.options.behaviour {
            Some(path) => self.load(path),
            None => Ok((slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, SettingsDistribution::uniform(Scenario::CHSH))),
        }
    }
}

/// Result of a command: the text to emit and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
    pub message: Option<String>,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome { output, code: EXIT_OK, message: None }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) | Error::Numerical(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_INPUT,
    }
}

fn csv_table(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of ASCII fields"))
}

#[derive(Serialize)]
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn emit_table(cfg: &RunConfig, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<String> {
    match cfg.format(Format::Csv) {
        Format::Csv => csv_table(&header, &rows),
        Format::Json => to_json(&Table { columns: header, rows }),
    }
}

fn not_converged(outcome: Outcome, what: &str) -> Outcome {
    Outcome { code: EXIT_NONCONVERGENCE, message: Some(format!("{what} did not converge")), ..outcome }
}

fn cmd_rates(cfg: &RunConfig) -> Result<Outcome> {
    let (b, s) = cfg.anchor()?;
    let target = joint(&b, &s)?;
    let (lo, hi, count) = cfg.options.beta_grid.unwrap_or((1e-3, 1e-1, 200));
    let betas = beta_grid(lo, hi, count)?;
    let counts = cfg.options.n.clone().map(|c| c.0).unwrap_or_else(|| vec![1.5e5, 2.4e5]);
    let eps = cfg.epsilon();
    let rows = sweep_rates(&target, &betas, &counts, eps, &ns_222_extremals(&s)?)?;

    let mut header = vec!["kind".to_string(), "beta".into(), "rate".into()];
    header.extend(counts.iter().map(|n| format!("net_rate_n{n}")));
    let line = |kind: String, r: &crate::pef::SweepRow| {
        let mut v = vec![kind, fmt_f64(r.beta), fmt_f64(r.optimum.rate)];
        v.extend(r.net_rates.iter().map(|x| fmt_f64(*x)));
        v
    };
    let mut table: Vec<Vec<String>> = rows.iter().map(|r| line("sweep".into(), r)).collect();
    for (which, n) in counts.iter().enumerate() {
        if let Some(i) = argmax_beta(&rows, which) {
            table.push(line(format!("argmax_n{n}"), &rows[i]));
        }
    }
    let out = Outcome::ok(emit_table(cfg, header, table)?);
    if rows.iter().any(|r| r.optimum.status != SolveStatus::Converged) {
        return Ok(not_converged(out, "rate sweep"));
    }
    Ok(out)
}

fn optimise_for(cfg: &RunConfig, target: &JointDistribution, s: &SettingsDistribution, beta: f64) -> Result<(crate::pef::PefOptimum, Vec<JointDistribution>)> {
    let extremals = ns_222_extremals(s)?;
    let mut opt = PefOptConfig::new(beta, target.clone())?;
    opt.epsilon = cfg.epsilon();
    if let Some(n) = cfg.options.n.as_ref().and_then(|v| v.0.first()) {
        opt.n = *n;
    }
    opt.seed = cfg.seed();
    Ok((optimize_pef(&opt, &extremals)?, extremals))
}

fn cmd_heatmap(cfg: &RunConfig) -> Result<Outcome> {
    let (b, s) = cfg.anchor()?;
    let beta = cfg.options.beta.unwrap_or(0.1);
    let (opt, _) = optimise_for(cfg, &joint(&b, &s)?, &s, beta)?;
    let steps = cfg.options.grid.unwrap_or(41).max(2);
    let s_max = 8f64.sqrt();
    let mut rows = Vec::new();
    for i in 0..steps {
        let sp = -2.0 + 4.0 * i as f64 / (steps - 1) as f64;
        for j in 0..steps {
            let sv = 2.0 + (s_max - 2.0) * j as f64 / (steps - 1) as f64;
            if sv * sv + sp * sp > 8.0 + 1e-12 {
                continue;
            }
            let Ok(coords) = SliceCoords::new(sv, sp) else { continue };
            rows.push(vec![fmt_f64(sp), fmt_f64(sv), fmt_f64(rate_on_slice(&opt.pef, &s, coords)?)]);
        }
    }
    let header = vec!["s_prime".to_string(), "s".into(), "rate".into()];
    let mut out = Outcome::ok(emit_table(cfg, header, rows)?);
    if let Some(x) = zero_rate_intercept(&opt.pef, &s, 0.0)? {
        out.message = Some(format!("zero-rate intercept at S' = 0: S = {x:.6}"));
    }
    if opt.status != SolveStatus::Converged {
        return Ok(not_converged(out, "PEF optimisation"));
    }
    Ok(out)
}

fn cmd_decompose(cfg: &RunConfig) -> Result<Outcome> {
    let (b, _) = cfg.require_behaviour()?;
    Ok(Outcome::ok(to_json(&decompose_nonlocal(&b)?.to_report())?))
}

fn cmd_attack(cfg: &RunConfig) -> Result<Outcome> {
    let (b, s) = cfg.require_behaviour()?;
    let attack = optimal_iid_attack(&b, &s)?;
    let target = cfg.options.behaviour.as_ref().map(|p| p.display().to_string());
    Ok(Outcome::ok(to_json(&attack.to_report(target))?))
}

#[derive(Serialize)]
struct MembershipReport {
    scenario: String,
    local: bool,
    weights: Option<Vec<f64>>,
    witness: Option<SeparatingFunctional>,
}

fn cmd_membership(cfg: &RunConfig) -> Result<Outcome> {
    let (b, _) = cfg.require_behaviour()?;
    let scenario = b.scenario().to_string();
    let report = match local_membership(&b)? {
        Membership::Local { weights } => MembershipReport { scenario, local: true, weights: Some(weights), witness: None },
        Membership::Nonlocal { witness } => MembershipReport { scenario, local: false, weights: None, witness: Some(witness) },
    };
    Ok(Outcome::ok(to_json(&report)?))
}

fn cmd_counterexamples(_cfg: &RunConfig) -> Result<Outcome> {
    let report = counterexample_suite()?;
    let mut out = Outcome::ok(to_json(&report)?);
    if !report.all_match {
        let bad: Vec<&str> = report.cases.iter().filter(|c| !c.matches()).map(|c| c.name.as_str()).collect();
        out.code = EXIT_ASSERTION;
        out.message = Some(format!("unexpected verdicts: {}", bad.join(", ")));
    }
    Ok(out)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let (b, s) = cfg.require_behaviour()?;
    let n = cfg.options.n.as_ref().and_then(|v| v.0.first()).copied().unwrap_or(1e4);
    if !(n >= 0.0 && n.fract() == 0.0) {
        return Err(param(format!("trial count must be a non-negative integer, got {n}")));
    }
    let trials = simulate(&joint(&b, &s)?, n as usize, cfg.seed());
    let mut buf = Vec::new();
    write_trials(&mut buf, b.scenario(), &trials, None)?;
    Ok(Outcome::ok(String::from_utf8(buf).expect("ASCII CSV")))
}

/// Power maximising the net rate at trial count `n` over the configured grid.
fn best_beta(cfg: &RunConfig, target: &JointDistribution, s: &SettingsDistribution, n: f64) -> Result<f64> {
    let (lo, hi, count) = cfg.options.beta_grid.unwrap_or((1e-3, 1.0, 60));
    let rows = sweep_rates(target, &beta_grid(lo, hi, count)?, &[n], cfg.epsilon(), &ns_222_extremals(s)?)?;
    Ok(rows[argmax_beta(&rows, 0).ok_or_else(|| param("empty power grid"))?].beta)
}

fn cmd_optimize(cfg: &RunConfig) -> Result<Outcome> {
    let (b, s) = cfg.anchor()?;
    let target = joint(&b, &s)?;
    let beta = match cfg.options.beta {
        Some(beta) => beta,
        None => best_beta(cfg, &target, &s, cfg.options.n.as_ref().and_then(|v| v.0.first()).copied().unwrap_or(1e5))?,
    };
    let (opt, extremals) = optimise_for(cfg, &target, &s, beta)?;
    let out = Outcome::ok(to_json(&opt.pef.to_file(&extremals))?);
    if opt.status != SolveStatus::Converged {
        return Ok(not_converged(out, "PEF optimisation"));
    }
    Ok(out)
}

fn cmd_certify(cfg: &RunConfig) -> Result<Outcome> {
    let path = cfg.options.trials.as_deref().ok_or_else(|| param("--trials is required"))?;
    let bytes = std::fs::read(path)?;
    let trials = read_trials(bytes.as_slice(), Scenario::CHSH, None)?;
    let anticipated = match &cfg.options.behaviour {
        Some(p) => {
            let (b, s) = cfg.load(p)?;
            Some((joint(&b, &s)?, s))
        }
        None => None,
    };
    let f: Pef = match (&cfg.options.pef, &anticipated) {
        (Some(p), _) => read_json::<PefFile>(p)?.into_pef()?,
        (None, Some((target, s))) => {
            let beta = match cfg.options.beta {
                Some(beta) => beta,
                None => best_beta(cfg, target, s, trials.len() as f64)?,
            };
            let (opt, _) = optimise_for(cfg, target, s, beta)?;
            if opt.status != SolveStatus::Converged {
                return Err(Error::NonConvergence("PEF optimisation".into()));
            }
            opt.pef
        }
        (None, None) => return Err(param("certify needs --pef or --behaviour")),
    };
    let epsilon = cfg.epsilon();
    let log2_p = match (cfg.options.log2_p, cfg.options.p, &anticipated) {
        (Some(l), _, _) => l,
        (None, Some(p), _) => p.log2(),
        (None, None, Some((target, _))) => choose_log2_p(&f, target, trials.len(), epsilon)?,
        (None, None, None) => return Err(param("certify needs --p, --log2-p or --behaviour")),
    };
    let params = CertifyParams { epsilon, log2_p, kappa: cfg.options.kappa.unwrap_or(1.0) };
    let mut cert = certify(&f, &trials, params)?;
    cert.input_digest = Some(sha256_hex(&bytes));
    Ok(Outcome::ok(to_json(&cert)?))
}

/// Runs one resolved command.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Rates => cmd_rates(cfg),
        Command::Heatmap => cmd_heatmap(cfg),
        Command::Decompose => cmd_decompose(cfg),
        Command::Attack => cmd_attack(cfg),
        Command::Membership => cmd_membership(cfg),
        Command::Certify => cmd_certify(cfg),
        Command::Counterexamples => cmd_counterexamples(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Optimize => cmd_optimize(cfg),
    }
}

/// Parses arguments, applies the config file and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = (|| {
        let base = match &cli.config {
            Some(path) => read_json::<Options>(path)?,
            None => Options::default(),
        };
        let cfg = RunConfig::new(cli.command, cli.options.clone().or(base));
        let outcome = execute(&cfg)?;
        match &cfg.options.out {
            Some(path) => std::fs::write(path, &outcome.output)?,
            None => print!("{}", outcome.output),
        }
        Ok::<_, Error>(outcome)
    })();
    match result {
        Ok(outcome) => {
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
