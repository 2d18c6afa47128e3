//! Command-line front end. `main.rs` only forwards to [`run`]; everything
//! else lives here so tests can drive the commands in-process.
//!
//! Exit status is 0 when the program verified (or the campaign completed),
//! 1 when it did not verify, and 2 for anything else: unreadable files,
//! parse errors, solver failures, bad flags.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use loopy_bench::{normalize, run_campaign, CampaignConfig, UnionConfig};
use loopy_core::lang::{parse_program, CandidateSet, ParseError, Program};
use loopy_core::loopy::{loopy, LoopyConfig, Session, SessionRecord};
use loopy_core::oracle::{OracleVerdict, ProgramOracle};
use loopy_core::proposer::{
    extract_invariants, HttpProvider, OfflineProvider, PromptTemplate, Provider, RecordingProvider, ReplayProvider,
    API_KEY_VAR,
};
use loopy_core::smt::{CachedChecker, Checker, SolverChecker, SolverCommand, SolverConfig};
use loopy_core::vcgen::IntSemantics;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Verified = 0,
    NotVerified = 1,
    Infra = 2,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {error}")]
    Parse { path: String, error: ParseError },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Parser)]
#[command(name = "loopy", version, about = "Synthesize and check loop invariants")]
pub struct Cli {
    /// More logging; repeat for debug output. Also prints the effective
    /// configuration.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a set of invariants against a program.
    #[command(alias = "verify")]
    Check(CheckArgs),
    /// Search for invariants that prove the program's assertions.
    Prove(ProveArgs),
    /// Run over every benchmark in a corpus directory.
    #[command(alias = "run-campaign")]
    Campaign(CampaignArgs),
    /// Run a campaign from a recorded log, with no network access.
    Replay(ReplayArgs),
    /// Rewrite an SV-COMP style C file into the input language.
    Normalize(NormalizeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Solver command line, e.g. "z3 -in -smt2". Repeat to configure
    /// several. Defaults to `LOOPY_SOLVER` or z3.
    #[arg(long = "solver", value_name = "CMDLINE")]
    pub solvers: Vec<String>,
    #[arg(long, value_name = "MS", default_value_t = 3000)]
    pub timeout_ms: u64,
    /// Ask every solver and fail when they disagree.
    #[arg(long)]
    pub cross_check: bool,
    /// 32-bit machine integers instead of mathematical ones.
    #[arg(long)]
    pub wrap32: bool,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::from_env();
        if !self.solvers.is_empty() {
            cfg.solvers = self
                .solvers
                .iter()
                .map(|s| SolverCommand::parse(s).ok_or_else(|| CliError::Config(format!("empty solver command {s:?}"))))
                .collect::<Result<_, _>>()?;
        }
        cfg.timeout_ms = self.timeout_ms;
        cfg.cross_check = self.cross_check;
        Ok(cfg)
    }

    pub fn checker(&self) -> Result<Arc<dyn Checker>, CliError> {
        Ok(Arc::new(CachedChecker::new(SolverChecker::new(self.config()?))))
    }

    pub fn semantics(&self) -> IntSemantics {
        if self.wrap32 {
            IntSemantics::Wrap32
        } else {
            IntSemantics::Unbounded
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// M1, M2 or a template file.
    #[arg(long, default_value = "M2")]
    pub prompt: String,
    /// Template for repair rounds: Mr or a file.
    #[arg(long, default_value = "Mr")]
    pub repair_prompt: String,
    /// offline, http:<model> or replay:<log>.
    #[arg(long, default_value = "offline")]
    pub provider: String,
    /// Shorthand for --provider replay:<log>.
    #[arg(long, value_name = "LOG", conflicts_with = "provider")]
    pub replay: Option<PathBuf>,
    /// Append every response to this log for later replay.
    #[arg(long, value_name = "LOG")]
    pub record: Option<PathBuf>,
    /// Completions sampled per benchmark [default: 15, or 8 with repair].
    #[arg(long)]
    pub completions: Option<usize>,
    /// Repair rounds after Houdini fails.
    #[arg(long, default_value_t = 0)]
    pub repair_rounds: usize,
    #[arg(long, overrides_with = "no_houdini")]
    pub houdini: bool,
    /// Stop after checking completions one by one.
    #[arg(long, overrides_with = "houdini")]
    pub no_houdini: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Candidates the offline provider enumerates.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_tokens: u32,
    /// Check every completion instead of stopping at the first success.
    #[arg(long)]
    pub eager: bool,
}

impl GenArgs {
    pub fn loopy_config(&self) -> Result<LoopyConfig, CliError> {
        let base = if self.repair_rounds > 0 { LoopyConfig::repair_mode() } else { LoopyConfig::default() };
        let n_samples = self.completions.unwrap_or(base.n_samples);
        if n_samples == 0 {
            return Err(CliError::Config("--completions must be at least 1".into()));
        }
        let template = |s: &str| PromptTemplate::resolve(s).map_err(|e| CliError::Config(e.to_string()));
        let mut cfg = LoopyConfig {
            n_samples,
            n_repair: self.repair_rounds,
            enable_repair: self.repair_rounds > 0,
            enable_houdini: !self.no_houdini,
            eager: self.eager,
            prompt: template(&self.prompt)?,
            repair_prompt: template(&self.repair_prompt)?,
            ..base
        };
        cfg.generation.completions = n_samples;
        cfg.generation.seed = self.seed;
        cfg.generation.temperature = self.temperature;
        cfg.generation.max_tokens = self.max_tokens;
        if let Some(model) = self.provider.strip_prefix("http:") {
            cfg.generation.model = model.to_string();
        }
        Ok(cfg)
    }

    pub fn provider(&self) -> Result<Arc<dyn Provider>, CliError> {
        let spec = match &self.replay {
            Some(log) => format!("replay:{}", log.display()),
            None => self.provider.clone(),
        };
        let base: Arc<dyn Provider> = if spec == "offline" {
            Arc::new(OfflineProvider::new(self.budget))
        } else if let Some(name) = spec.strip_prefix("http:") {
            Arc::new(HttpProvider::from_env(name).map_err(|e| CliError::Config(e.to_string()))?)
        } else if let Some(log) = spec.strip_prefix("replay:") {
            Arc::new(ReplayProvider::load(Path::new(log)).map_err(|e| CliError::Config(e.to_string()))?)
        } else {
            return Err(CliError::Config(format!(
                "unknown provider {spec:?}; expected offline, http:<model> or replay:<log> (the http provider reads {API_KEY_VAR})"
            )));
        };
        match &self.record {
            Some(path) => {
                Ok(Arc::new(RecordingProvider::new(base, path).map_err(|e| CliError::Config(e.to_string()))?))
            }
            None => Ok(base),
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    /// `loop invariant e;` clauses, or one expression per line.
    pub invariants: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Print the verdict as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub generation: GenArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to write `<name>.inv` and the session record. Defaults to the
    /// input's directory (invariants only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the session record as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub generation: GenArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Also estimate Houdini on unions of k sampled completions.
    #[arg(long)]
    pub union_houdini: bool,
    #[arg(long, default_value_t = 100)]
    pub union_trials: usize,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub log: PathBuf,
    #[command(flatten)]
    pub campaign: CampaignArgs,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    pub file: PathBuf,
    /// Write here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parse arguments and run. Clap's own help and version output count as
/// success; any other argument error is exit 2.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { Exit::Infra.code() } else { Exit::Verified.code() };
        }
    };
    init_logging(cli.verbose);
    let verbose = cli.verbose > 0;
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a, out),
        Command::Prove(a) => cmd_prove(&a, verbose, out),
        Command::Campaign(a) => cmd_campaign(&a, verbose, out),
        Command::Replay(mut a) => {
            a.campaign.generation.replay = Some(a.log.clone());
            cmd_campaign(&a.campaign, verbose, out)
        }
        Command::Normalize(a) => cmd_normalize(&a, out),
    };
    match result {
        Ok(exit) => exit.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Exit::Infra.code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn show_config(label: &str, value: &impl Serialize) {
    if let Ok(text) = serde_json::to_string_pretty(value) {
        eprintln!("{label}: {text}");
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Parse as written; failing that, try the normalized text so raw SV-COMP
/// files work too. The first error is the one reported.
pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let text = read(path)?;
    parse_program(&text).or_else(|first| {
        parse_program(&normalize(&text)).map_err(|_| CliError::Parse { path: path.display().to_string(), error: first })
    })
}

/// Invariants from a file holding `loop invariant e;` clauses (possibly in
/// a fenced block or an annotation comment), or else one per line. Blank
/// lines and `//` lines are skipped.
pub fn parse_invariants_file(text: &str) -> CandidateSet {
    if text.contains("loop invariant") {
        return if text.contains("```") {
            extract_invariants(text)
        } else {
            extract_invariants(&format!("```\n{text}\n```"))
        };
    }
    let mut set = CandidateSet::new();
    for line in text.lines() {
        let line = line.trim().trim_end_matches(';').trim();
        if !line.is_empty() && !line.starts_with("//") {
            set.push_source(line);
        }
    }
    set
}

/// The `.inv` file text for a set.
pub fn render_invariants(set: &CandidateSet) -> String {
    let mut s = String::from("/*@\n");
    for src in set.sources() {
        let _ = writeln!(s, "  loop invariant {src};");
    }
    s.push_str("*/\n");
    s
}

pub fn render_verdict(v: &OracleVerdict) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", if v.success { "verified" } else { "not verified" });
    if let Some(e) = &v.syntax_error {
        let _ = writeln!(s, "syntax error in candidate {} `{}`: {}", e.candidate, e.source, e.message);
        return s;
    }
    let blamed = v.blamed_ids();
    for c in &v.statuses {
        let _ = writeln!(
            s,
            "  [{}] {}  established={} preserved={}{}",
            c.id,
            c.source,
            c.established,
            c.preserved,
            if blamed.contains(&c.id) { "  BLAMED" } else { "" }
        );
    }
    if !blamed.is_empty() {
        let names: Vec<&str> = v.blamed.sources();
        let _ = writeln!(s, "blamed: {}", names.join(", "));
    }
    for u in &v.unproven {
        let _ = writeln!(s, "unproven {:?} `{}` at line {}", u.kind, u.assertion, u.location.line);
    }
    s
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| io_err(Path::new("<stdout>"), e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<Exit, CliError> {
    let program = load_program(&args.file)?;
    let candidates = parse_invariants_file(&read(&args.invariants)?);
    let oracle = ProgramOracle::new(program, args.solver.checker()?, args.solver.semantics());
    let verdict =
        loopy_core::oracle::InvariantOracle::check(&oracle, &candidates).map_err(|e| CliError::Run(e.to_string()))?;
    if args.json {
        print_json(out, &verdict)?;
    } else {
        emit(out, &render_verdict(&verdict))?;
    }
    Ok(if verdict.success { Exit::Verified } else { Exit::NotVerified })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "program".into(), |s| s.to_string_lossy().into_owned())
}

/// Where `prove` puts the invariants for `input`.
pub fn invariant_path(input: &Path, out: Option<&Path>) -> PathBuf {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
    dir.join(format!("{}.inv", stem(input)))
}

/// A failed session counts as infrastructure trouble when nothing usable
/// came back from the provider or the oracle.
fn session_exit(record: &SessionRecord) -> Exit {
    if record.success {
        Exit::Verified
    } else if record.error.is_some()
        || (!record.completions.is_empty() && record.infra_errors() == record.completions.len())
    {
        Exit::Infra
    } else {
        Exit::NotVerified
    }
}

pub fn cmd_prove(args: &ProveArgs, verbose: bool, out: &mut dyn Write) -> Result<Exit, CliError> {
    let program = load_program(&args.file)?;
    let config = args.generation.loopy_config()?;
    let solver = args.solver.config()?;
    if verbose {
        show_config("loopy", &config);
        show_config("solver", &solver);
    }
    let provider = args.generation.provider()?;
    let checker: Arc<dyn Checker> = Arc::new(CachedChecker::new(SolverChecker::new(solver)));
    let oracle = ProgramOracle::new(program.clone(), checker, args.solver.semantics());
    let name = stem(&args.file);
    let record =
        loopy(&Session { benchmark: &name, program: &program, oracle: &oracle, provider: &*provider }, &config);

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(format!("{name}.session.json"));
        let text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Run(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    }
    if record.success {
        let path = invariant_path(&args.file, args.out.as_deref());
        fs::write(&path, render_invariants(&record.invariants)).map_err(|e| io_err(&path, e))?;
        log::info!("wrote {}", path.display());
    }
    if args.json {
        print_json(out, &record)?;
    } else {
        let mut s = String::new();
        match (&record.solved_by, record.success) {
            (Some(stage), true) => {
                let _ = writeln!(s, "verified ({stage:?}, {} oracle calls)", record.counters.oracle_calls);
                s.push_str(&render_invariants(&record.invariants));
            }
            _ => {
                let _ = writeln!(
                    s,
                    "not verified after {} completions ({} oracle calls)",
                    record.completions.len(),
                    record.counters.oracle_calls
                );
                if let Some(e) = &record.error {
                    let _ = writeln!(s, "error: {e}");
                }
            }
        }
        emit(out, &s)?;
    }
    Ok(session_exit(&record))
}

pub fn cmd_campaign(args: &CampaignArgs, verbose: bool, out: &mut dyn Write) -> Result<Exit, CliError> {
    if args.workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let config = CampaignConfig {
        loopy: args.generation.loopy_config()?,
        semantics: args.solver.semantics(),
        workers: args.workers,
        union: args.union_houdini.then_some(UnionConfig { trials: args.union_trials, seed: args.generation.seed }),
    };
    if verbose {
        show_config("campaign", &config);
        show_config("solver", &args.solver.config()?);
    }
    let provider = args.generation.provider()?;
    let report = run_campaign(&args.corpus, &args.out, &config, &*provider, args.solver.checker()?)
        .map_err(|e| CliError::Run(e.to_string()))?;
    log::info!("{} provider calls, {} over the network", provider.calls(), provider.network_calls());
    let s = &report.summary;
    if args.json {
        print_json(out, s)?;
    } else {
        let text = format!(
            "{} benchmarks, {} attempted, {} failed; solved: {} by a completion, {} with Houdini, {} with repair\nreports in {}\n",
            s.benchmarks,
            s.attempted,
            s.failed,
            s.solved.completion,
            s.solved.houdini,
            s.solved.repair,
            args.out.display()
        );
        emit(out, &text)?;
    }
    Ok(Exit::Verified)
}

pub fn cmd_normalize(args: &NormalizeArgs, out: &mut dyn Write) -> Result<Exit, CliError> {
    let text = normalize(&read(&args.file)?);
    match &args.output {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e))?,
        None => emit(out, &text)?,
    }
    Ok(Exit::Verified)
}
