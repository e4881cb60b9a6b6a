//! `inclusionlab` command line.
//!
//! Input files:
//!
//! * system: `{"schema_version": 1, "dim": d, "matrices": [[[row], ...], ...],
//!   "labels"?: [..], "nonsingularity_tol"?: x, "tol"?: x}`
//! * law: `{"schema_version": 1, "kind": "periodic", "prefix": [..], "period": [..]}`
//!   or `{"kind": "blocks", "prefix": [..], "blocks": [[[word], repeats], ...],
//!   "tail"?: {"kind": "geometric", "symbols": [..], "first_length": n, "ratio": r}}`.
//!   Symbols are 1-based.
//! * rotation config: the fields of a rotation synthesis input
//!   (`rot_index`, `stable`, `divergent`, `u`, `eps_schedule`, `caps`).
//!
//! Every JSON report is `{"schema_version": 1, "kind": .., "result": ..}`.
//! Exit status is 0 on success, 2 when the answer is a certified negative and
//! 1 on errors or an inconclusive synthesis.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use inclusionlab::classify::{bj_run_profile, bj_verdict, stability_under_nonchaotic};
use inclusionlab::io::{
    self, AnalysisReport, ClassificationReport, Envelope, SimulationReport, SynthesisMode, SynthesisReport,
};
use inclusionlab::lyapunov::{partial_exponents, random_switching_exponent, simulate, TailWindows, DEFAULT_IRREGULARITY_TOL};
use inclusionlab::spectral::{
    chaos_feasibility_with, cojsr_bounds_with, finiteness_candidate, growth_curve_with, jsr_bounds_with,
    periodic_stability_check_with, EnumOptions, FeasibilityVerdict, GrowthStrategy, DEFAULT_BUDGET,
};
use inclusionlab::synth::{
    synthesize_rotation, synthesize_uniform, synthesize_zero_exponent, RotationSynthInput, UniformOptions,
    DEFAULT_REPEAT_CAP,
};
use inclusionlab::{Error, LawProgram, SystemSpec, Word};

#[derive(Parser, Debug)]
#[command(name = "inclusionlab", version, about = "Analysis and synthesis for discrete-time linear inclusions")]
struct Cli {
    /// How to report errors on stderr
    #[arg(long, global = true, value_enum, default_value_t = ErrorFormat::Text)]
    error_format: ErrorFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ErrorFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// JSR and co-JSR bounds, periodic stability and finiteness candidate
    Analyze(AnalyzeArgs),
    /// Decide whether fiber chaos is possible
    Feasibility(FeasibilityArgs),
    /// Build a chaotic or zero-exponent switching law
    Synthesize(SynthesizeArgs),
    /// Trajectory of one law, or Monte Carlo over random laws
    Simulate(SimulateArgs),
    /// Balde–Jouan run-length classification of a law
    Classify(ClassifyArgs),
    /// Maximal product norm growth and its polynomial exponent
    Growth(GrowthArgs),
}

#[derive(Args, Debug)]
struct Io {
    /// System file
    #[arg(long = "in")]
    input: PathBuf,
    /// Report destination; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Override the system's comparison tolerance
    #[arg(long, value_parser = positive_f64)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    /// Word-evaluation budget per enumeration
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
}

#[derive(Args, Debug)]
struct FeasibilityArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Uniform,
    Rotation,
    ZeroExponent,
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Search depth for the feasibility witnesses
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    k_max: u32,
    /// Contracting word, e.g. "1,1,2"; found by search when absent
    #[arg(long)]
    contract: Option<String>,
    /// Expanding word; found by search when absent
    #[arg(long)]
    expand: Option<String>,
    /// Fixed law prefix for uniform mode
    #[arg(long)]
    prefix: Option<String>,
    #[arg(long, default_value_t = DEFAULT_REPEAT_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    repeat_cap: u64,
    /// Rotation mode input file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    stages: u32,
    /// Initial state for zero-exponent mode, e.g. "1,0"
    #[arg(long)]
    x0: Option<String>,
    /// Annulus "a,b" for zero-exponent mode
    #[arg(long, default_value = "0.25,4")]
    band: String,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    /// Also write the synthesized law as a law file
    #[arg(long)]
    law_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    io: Io,
    /// Law file; omit for Monte Carlo
    #[arg(long, conflicts_with_all = ["weights", "trials"])]
    law: Option<PathBuf>,
    #[arg(long, requires = "law")]
    x0: Option<String>,
    /// Required for infinite laws and Monte Carlo
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: Option<u64>,
    /// Symbol probabilities, e.g. "1,1"; normalized
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_IRREGULARITY_TOL, value_parser = positive_f64)]
    irregularity_tol: f64,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    law: PathBuf,
    #[arg(long, default_value_t = 1 << 14, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    /// System for the stability check; requires --delta
    #[arg(long = "in", requires = "delta")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = positive_f64)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Auto,
    BruteForce,
    Dominance,
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    #[arg(long, value_enum, default_value_t = Strategy::Auto)]
    strategy: Strategy,
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| anyhow!("{what}: cannot parse {t:?}: {e}")))
        .collect()
}

fn parse_word(s: &str, what: &str) -> anyhow::Result<Word> {
    Ok(Word::new(parse_list(s, what)?)?)
}

/// Exit status of a run that produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Done,
    CertifiedNegative,
    Inconclusive,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::CertifiedNegative => 2,
            Outcome::Inconclusive => 1,
        }
    }
}

fn write_out(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, kind: &str, result: T) -> anyhow::Result<()> {
    write_out(out, &Envelope::new(kind, result).to_json())
}

fn load(io: &Io) -> anyhow::Result<SystemSpec> {
    let sys = io::load_system(&io.input)?;
    Ok(match io.tol {
        Some(tol) => {
            let re = SystemSpec::with_tolerances(sys.matrices().to_vec(), sys.nonsingularity_tol(), tol)?;
            match sys.labels() {
                Some(l) => re.with_labels(l.to_vec())?,
                None => re,
            }
        }
        None => sys,
    })
}

fn json_only(io: &Io, command: &str) -> anyhow::Result<()> {
    if io.format == Format::Csv {
        bail!("{command} has no CSV form; use --format json");
    }
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> anyhow::Result<Outcome> {
    let sys = load(&a.io)?;
    let opts = EnumOptions { budget: a.budget };
    let depth = a.depth as usize;
    let bounds = jsr_bounds_with(&sys, depth, &opts)?;
    let cobounds = cojsr_bounds_with(&sys, depth, &opts)?;
    let out = a.io.out.as_deref();
    if a.io.format == Format::Csv {
        write_out(out, &io::analysis_csv(&bounds, &cobounds))?;
        return Ok(Outcome::Done);
    }
    let stability = periodic_stability_check_with(&sys, depth, &opts)?;
    let finiteness = finiteness_candidate(&sys, bounds.completed_depth.max(1))?;
    emit_json(out, "analysis", AnalysisReport { bounds, cobounds, stability, finiteness })?;
    Ok(Outcome::Done)
}

fn feasibility(a: &FeasibilityArgs) -> anyhow::Result<Outcome> {
    json_only(&a.io, "feasibility")?;
    let sys = load(&a.io)?;
    let verdict = chaos_feasibility_with(&sys, a.depth as usize, &EnumOptions { budget: a.budget })?;
    let outcome = match verdict {
        FeasibilityVerdict::InfeasibleCertified { .. } => Outcome::CertifiedNegative,
        _ => Outcome::Done,
    };
    emit_json(a.io.out.as_deref(), "feasibility", verdict)?;
    Ok(outcome)
}

/// Contracting and expanding words from the flags, or from a feasibility search.
fn witnesses(
    sys: &SystemSpec,
    a: &SynthesizeArgs,
    report: &mut SynthesisReport,
) -> anyhow::Result<Option<(Word, Word)>> {
    if let (Some(c), Some(e)) = (&a.contract, &a.expand) {
        return Ok(Some((parse_word(c, "--contract")?, parse_word(e, "--expand")?)));
    }
    let verdict = chaos_feasibility_with(sys, a.depth as usize, &EnumOptions::default())?;
    let found = match &verdict {
        FeasibilityVerdict::FeasibleWitness { w_contract, w_expand, .. } => {
            let c = a.contract.as_deref().map(|s| parse_word(s, "--contract")).transpose()?;
            let e = a.expand.as_deref().map(|s| parse_word(s, "--expand")).transpose()?;
            Some((c.unwrap_or_else(|| w_contract.clone()), e.unwrap_or_else(|| w_expand.clone())))
        }
        _ => None,
    };
    report.feasibility = Some(verdict);
    Ok(found)
}

/// Exit status when no witness pair was found.
fn missing_witnesses(report: &SynthesisReport) -> Outcome {
    match report.feasibility {
        Some(FeasibilityVerdict::InfeasibleCertified { .. }) => Outcome::CertifiedNegative,
        _ => Outcome::Inconclusive,
    }
}

#[derive(Deserialize)]
struct RotationConfigFile {
    #[serde(default = "schema_v1")]
    schema_version: u32,
    #[serde(flatten)]
    input: RotationSynthInput,
}

fn schema_v1() -> u32 {
    io::SCHEMA_VERSION
}

fn synthesize(a: &SynthesizeArgs) -> anyhow::Result<Outcome> {
    json_only(&a.io, "synthesize")?;
    let sys = load(&a.io)?;
    let out = a.io.out.as_deref();
    let law_out = a.law_out.as_deref();
    match a.mode {
        Mode::Uniform => {
            let mut report = SynthesisReport::empty(SynthesisMode::Uniform);
            let Some((wc, we)) = witnesses(&sys, a, &mut report)? else {
                let outcome = missing_witnesses(&report);
                emit_json(out, "synthesis", report)?;
                return Ok(outcome);
            };
            let prefix: Vec<u32> = match &a.prefix {
                Some(p) => parse_list(p, "--prefix")?,
                None => Vec::new(),
            };
            let opts = UniformOptions { repeat_cap: a.repeat_cap, ..UniformOptions::default() };
            match synthesize_uniform(&sys, &wc, &we, &prefix, a.k_max as usize, &opts) {
                Ok(syn) => {
                    if let Some(p) = law_out {
                        write_out(Some(p), &io::law_to_json(&syn.law))?;
                    }
                    report.uniform = Some(syn);
                    emit_json(out, "synthesis", report)?;
                    Ok(Outcome::Done)
                }
                Err(Error::CapExceeded { what, cap, stage, partial }) => {
                    report.partial = partial.map(|b| *b);
                    emit_json(out, "synthesis", report)?;
                    Err(Error::CapExceeded { what, cap, stage, partial: None }.into())
                }
                Err(e) => Err(e.into()),
            }
        }
        Mode::Rotation => {
            let path = a.config.as_deref().ok_or_else(|| anyhow!("rotation mode needs --config"))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg: RotationConfigFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            if cfg.schema_version != io::SCHEMA_VERSION {
                bail!("unsupported schema_version {}", cfg.schema_version);
            }
            let syn = synthesize_rotation(&sys, &cfg.input, a.stages as usize)?;
            if let Some(p) = law_out {
                write_out(Some(p), &io::law_to_json(&syn.law))?;
            }
            let mut report = SynthesisReport::empty(SynthesisMode::Rotation);
            report.rotation = Some(syn);
            emit_json(out, "synthesis", report)?;
            Ok(Outcome::Done)
        }
        Mode::ZeroExponent => {
            let x0: Vec<f64> = parse_list(a.x0.as_deref().ok_or_else(|| anyhow!("zero-exponent mode needs --x0"))?, "--x0")?;
            let band: Vec<f64> = parse_list(&a.band, "--band")?;
            let [lo, hi] = band[..] else { bail!("--band takes two numbers a,b") };
            let mut report = SynthesisReport::empty(SynthesisMode::ZeroExponent);
            let Some((wc, we)) = witnesses(&sys, a, &mut report)? else {
                let outcome = missing_witnesses(&report);
                emit_json(out, "synthesis", report)?;
                return Ok(outcome);
            };
            let syn = synthesize_zero_exponent(&sys, &wc, &we, &x0, (lo, hi), a.horizon)?;
            if let Some(p) = law_out {
                write_out(Some(p), &io::law_to_json(&syn.law))?;
            }
            report.zero_exponent = Some(syn);
            emit_json(out, "synthesis", report)?;
            Ok(Outcome::Done)
        }
    }
}

fn simulate_cmd(a: &SimulateArgs) -> anyhow::Result<Outcome> {
    let sys = load(&a.io)?;
    let out = a.io.out.as_deref();
    if let Some(law_path) = &a.law {
        let law = io::load_law(law_path)?;
        let horizon = a
            .horizon
            .or_else(|| law.horizon())
            .ok_or_else(|| anyhow!("--horizon is required for an infinite law"))?;
        let x0: Vec<f64> = match &a.x0 {
            Some(s) => parse_list(s, "--x0")?,
            None => {
                let mut e = vec![0.0; sys.dim()];
                e[0] = 1.0;
                e
            }
        };
        let trajectory = simulate(&sys, &law, &x0, horizon)?;
        if a.io.format == Format::Csv {
            write_out(out, &io::trajectory_csv(&trajectory))?;
        } else {
            let exponents = partial_exponents(&trajectory, &TailWindows::tail_half(horizon), a.irregularity_tol)?;
            emit_json(out, "simulation", SimulationReport { trajectory, exponents })?;
        }
        return Ok(Outcome::Done);
    }
    let mut weights: Vec<f64> = match &a.weights {
        Some(w) => parse_list(w, "--weights")?,
        None => vec![1.0; sys.k()],
    };
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        bail!("--weights must have a positive finite sum");
    }
    weights.iter_mut().for_each(|w| *w /= total);
    let horizon = a.horizon.ok_or_else(|| anyhow!("Monte Carlo needs --horizon"))?;
    let summary = random_switching_exponent(&sys, &weights, a.trials, horizon, a.seed)?;
    if a.io.format == Format::Csv {
        write_out(out, &io::monte_carlo_csv(&summary))?;
    } else {
        emit_json(out, "monte_carlo", summary)?;
    }
    Ok(Outcome::Done)
}

fn classify(a: &ClassifyArgs) -> anyhow::Result<Outcome> {
    let law: LawProgram = io::load_law(&a.law)?;
    let profile = bj_run_profile(&law, a.horizon)?;
    let verdict = bj_verdict(&law, a.horizon)?;
    let stability = match (&a.input, a.delta) {
        (Some(p), Some(delta)) => Some(stability_under_nonchaotic(&io::load_system(p)?, &law, a.horizon, delta)?),
        _ => None,
    };
    emit_json(a.out.as_deref(), "classification", ClassificationReport { profile, verdict, stability })?;
    Ok(Outcome::Done)
}

fn growth(a: &GrowthArgs) -> anyhow::Result<Outcome> {
    let sys = load(&a.io)?;
    let strategy = match a.strategy {
        Strategy::Auto => GrowthStrategy::Auto,
        Strategy::BruteForce => GrowthStrategy::BruteForce,
        Strategy::Dominance => GrowthStrategy::Dominance,
    };
    let curve = growth_curve_with(&sys, a.depth as usize, strategy, &EnumOptions { budget: a.budget })?;
    let out = a.io.out.as_deref();
    match a.io.format {
        Format::Csv => write_out(out, &io::growth_csv(&curve))?,
        Format::Json => emit_json(out, "growth", curve)?,
    }
    Ok(Outcome::Done)
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("INCLUSIONLAB_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("INCLUSIONLAB_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Feasibility(a) => feasibility(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Classify(a) => classify(a),
        Command::Growth(a) => growth(a),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    match e.downcast_ref::<Error>() {
        Some(Error::Input(_)) => "input",
        Some(Error::Domain(_)) => "domain",
        Some(Error::Singular { .. }) => "singular",
        Some(Error::Numeric(_)) => "numeric",
        Some(Error::Horizon { .. }) => "horizon",
        Some(Error::Precondition(_)) => "precondition",
        Some(Error::CapExceeded { .. }) => "cap_exceeded",
        Some(Error::Parse(_)) => "parse",
        Some(Error::Io(_)) => "io",
        None => "other",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            match cli.error_format {
                ErrorFormat::Text => eprintln!("error: {e:#}"),
                ErrorFormat::Json => eprintln!(
                    "{}",
                    serde_json::json!({ "schema_version": io::SCHEMA_VERSION, "error": error_kind(&e), "message": format!("{e:#}") })
                ),
            }
            ExitCode::from(1)
        }
    }
}
