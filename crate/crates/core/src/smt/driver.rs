use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigInt;

use crate::lang::eval::eval_bool;
use crate::vcgen::VerificationCondition;

use super::emit::emit_smtlib;
use super::sexp::{parse_all, Sexp};
use super::{CheckResult, Checker, Model, ScriptInput, SmtError, SolverCommand, SolverConfig, Status};

static TEMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Run one solver on one script.
pub fn run_solver(cmd: &SolverCommand, script: &str, timeout_ms: u64) -> Result<CheckResult, SmtError> {
    let solver = cmd.name();
    let spawn_err = |e: std::io::Error| SmtError::Spawn { solver: solver.clone(), message: e.to_string() };
    let start = Instant::now();

    let mut command = Command::new(&cmd.program);
    command.args(&cmd.args).stdout(Stdio::piped()).stderr(Stdio::null());
    let temp_path = match cmd.input {
        ScriptInput::Stdin => {
            command.stdin(Stdio::piped());
            None
        }
        ScriptInput::File => {
            let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
            let path = std::env::temp_dir().join(format!("loopy-{}-{n}.smt2", std::process::id()));
            std::fs::write(&path, script).map_err(spawn_err)?;
            command.arg(&path).stdin(Stdio::null());
            Some(path)
        }
    };
    let mut child = command.spawn().map_err(spawn_err)?;
    if let Some(mut stdin) = child.stdin.take() {
        // a solver that exits early closes the pipe; that shows up in its output
        let _ = stdin.write_all(script.as_bytes());
    }
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });

    let deadline = start + Duration::from_millis(timeout_ms);
    let mut timed_out = false;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                timed_out = true;
                break;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(1)),
            Err(e) => return Err(spawn_err(e)),
        }
    }
    let output = reader.join().unwrap_or_default();
    if let Some(p) = temp_path {
        let _ = std::fs::remove_file(p);
    }
    let elapsed_ms = start.elapsed().as_millis() as u64;
    let status = if timed_out { Status::Timeout } else { parse_response(&solver, &output)? };
    Ok(CheckResult { status, solver, elapsed_ms })
}

/// Interpret a solver's reply to `(check-sat) (get-model)`.
pub fn parse_response(solver: &str, output: &str) -> Result<Status, SmtError> {
    let protocol = |message: String| SmtError::Protocol { solver: solver.to_string(), message };
    let items = parse_all(output).map_err(protocol)?;
    let mut items = items.iter().skip_while(|s| s.atom() == Some("success"));
    let first = items.next().ok_or_else(|| protocol("empty output".into()))?;
    match first.atom() {
        Some("unsat") => Ok(Status::Proved),
        Some("sat") => {
            let model = match items.next() {
                Some(m) => parse_model(m).map_err(protocol)?,
                None => Model::new(),
            };
            Ok(Status::Refuted { model })
        }
        Some("unknown") => Ok(Status::Unknown { reason: "solver returned unknown".into() }),
        Some("timeout") => Ok(Status::Timeout),
        _ => {
            let text = match first {
                Sexp::List(items) if items.first().and_then(Sexp::atom) == Some("error") => match items.get(1) {
                    Some(Sexp::Str(s)) => s.clone(),
                    _ => "error".into(),
                },
                _ => output.lines().next().unwrap_or("").to_string(),
            };
            Err(protocol(text))
        }
    }
}

fn parse_model(m: &Sexp) -> Result<Model, String> {
    let items = m.list().ok_or("model is not a list")?;
    let mut model = Model::new();
    for def in items {
        if def.atom() == Some("model") {
            continue;
        }
        let Some(parts) = def.list() else { continue };
        if parts.first().and_then(Sexp::atom) != Some("define-fun") || parts.len() != 5 {
            continue;
        }
        let name = parts[1].atom().ok_or("bad model entry")?;
        if parts[2].list().is_none_or(|args| !args.is_empty()) {
            continue;
        }
        if let Some(v) = int_value(&parts[4]) {
            model.insert(name.to_string(), v);
        }
    }
    Ok(model)
}

fn int_value(s: &Sexp) -> Option<BigInt> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) if items.len() == 2 && items[0].atom() == Some("-") => int_value(&items[1]).map(|v| -v),
        _ => None,
    }
}

/// Does the model falsify the VC? Variables the solver left out are 0.
pub fn model_refutes(vc: &VerificationCondition, model: &Model) -> Option<bool> {
    let vc = vc.prenex();
    let formula = vc.formula();
    let mut env = model.clone();
    for v in formula.free_vars() {
        env.entry(v).or_insert_with(|| BigInt::from(0));
    }
    eval_bool(&formula, &env).ok().map(|holds| !holds)
}

/// Decide validity with the configured solvers. The first conclusive answer
/// wins unless `cross_check` is set; a model that does not falsify the
/// formula is reported as unknown.
pub fn check_validity(vc: &VerificationCondition, config: &SolverConfig) -> Result<CheckResult, SmtError> {
    let script = emit_smtlib(vc);
    check_script(vc, &script, config)
}

fn check_script(vc: &VerificationCondition, script: &str, config: &SolverConfig) -> Result<CheckResult, SmtError> {
    let mut last: Option<CheckResult> = None;
    let mut conclusive: Option<CheckResult> = None;
    for cmd in &config.solvers {
        let mut result = run_solver(cmd, script, config.timeout_ms)?;
        if let Status::Refuted { model } = &result.status {
            if model_refutes(vc, model) != Some(true) {
                log::warn!("{}: model does not falsify {:?}; treating as unknown", result.solver, vc.kind);
                result.status = Status::Unknown { reason: "model failed re-check".into() };
            }
        }
        if result.status.is_conclusive() {
            match &conclusive {
                None => conclusive = Some(result.clone()),
                Some(prev) if prev.status.is_proved() != result.status.is_proved() => {
                    let (p, r) = if prev.status.is_proved() { (prev, &result) } else { (&result, prev) };
                    return Err(SmtError::Integrity { proved_by: p.solver.clone(), refuted_by: r.solver.clone() });
                }
                Some(_) => {}
            }
            if !config.cross_check {
                break;
            }
        }
        last = Some(result);
    }
    Ok(conclusive.or(last).unwrap_or(CheckResult {
        status: Status::Unknown { reason: "no solver configured".into() },
        solver: String::new(),
        elapsed_ms: 0,
    }))
}

/// [`Checker`] backed by external solver processes.
pub struct SolverChecker {
    pub config: SolverConfig,
    queries: AtomicUsize,
}

impl SolverChecker {
    pub fn new(config: SolverConfig) -> Self {
        SolverChecker { config, queries: AtomicUsize::new(0) }
    }
}

impl Checker for SolverChecker {
    fn check(&self, _scope: &str, vc: &VerificationCondition) -> Result<CheckResult, SmtError> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        check_validity(vc, &self.config)
    }

    fn solver_queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }
}
