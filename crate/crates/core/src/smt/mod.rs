//! SMT backend: renders VCs to SMT-LIB and runs external solvers, one
//! process per query.

pub mod cache;
pub mod driver;
pub mod emit;
pub mod sexp;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vcgen::VerificationCondition;

pub use cache::CachedChecker;
pub use driver::{check_validity, SolverChecker};
pub use emit::emit_smtlib;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Logic {
    QfLia,
    QfNia,
    Lia,
    Nia,
}

impl Logic {
    pub fn name(self) -> &'static str {
        match self {
            Logic::QfLia => "QF_LIA",
            Logic::QfNia => "QF_NIA",
            Logic::Lia => "LIA",
            Logic::Nia => "NIA",
        }
    }
}

/// How the script reaches the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptInput {
    #[default]
    Stdin,
    /// Written to a temporary file whose path is appended to the arguments.
    File,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
    #[serde(default)]
    pub input: ScriptInput,
}

impl SolverCommand {
    /// Parse a whitespace-separated command line, e.g. `z3 -in -smt2`.
    pub fn parse(cmdline: &str) -> Option<Self> {
        let mut parts = cmdline.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(SolverCommand { program, args: parts.collect(), input: ScriptInput::Stdin })
    }

    pub fn z3() -> Self {
        SolverCommand::parse("z3 -in -smt2").expect("static command")
    }

    /// Short name used in results, the executable's file name.
    pub fn name(&self) -> String {
        std::path::Path::new(&self.program)
            .file_name()
            .map_or_else(|| self.program.clone(), |n| n.to_string_lossy().into_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub solvers: Vec<SolverCommand>,
    pub timeout_ms: u64,
    /// Run every solver on every query and fail on disagreement.
    #[serde(default)]
    pub cross_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { solvers: vec![SolverCommand::z3()], timeout_ms: 3000, cross_check: false }
    }
}

impl SolverConfig {
    /// Defaults, with the solver list taken from `LOOPY_SOLVER` when set
    /// (commands separated by `;`).
    pub fn from_env() -> Self {
        let mut cfg = SolverConfig::default();
        if let Ok(v) = std::env::var("LOOPY_SOLVER") {
            let solvers: Vec<_> = v.split(';').filter_map(SolverCommand::parse).collect();
            if !solvers.is_empty() {
                cfg.solvers = solvers;
            }
        }
        cfg
    }
}

pub type Model = BTreeMap<String, BigInt>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Status {
    Proved,
    Refuted { model: Model },
    Unknown { reason: String },
    Timeout,
}

impl Status {
    pub fn is_proved(&self) -> bool {
        matches!(self, Status::Proved)
    }

    pub fn is_conclusive(&self) -> bool {
        matches!(self, Status::Proved | Status::Refuted { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    #[serde(flatten)]
    pub status: Status,
    pub solver: String,
    pub elapsed_ms: u64,
}

impl CheckResult {
    pub fn proved(&self) -> bool {
        self.status.is_proved()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("cannot start solver `{solver}`: {message}")]
    Spawn { solver: String, message: String },
    #[error("solver `{solver}` produced unexpected output: {message}")]
    Protocol { solver: String, message: String },
    #[error("solvers disagree: {proved_by} proved the query, {refuted_by} refuted it")]
    Integrity { proved_by: String, refuted_by: String },
}

/// Anything that decides validity of VCs. `scope` identifies the program
/// the VC came from and is used by caching layers.
pub trait Checker: Send + Sync {
    fn check(&self, scope: &str, vc: &VerificationCondition) -> Result<CheckResult, SmtError>;

    /// Number of queries actually sent to a solver.
    fn solver_queries(&self) -> usize;
}

impl<C: Checker + ?Sized> Checker for std::sync::Arc<C> {
    fn check(&self, scope: &str, vc: &VerificationCondition) -> Result<CheckResult, SmtError> {
        (**self).check(scope, vc)
    }

    fn solver_queries(&self) -> usize {
        (**self).solver_queries()
    }
}

/// Cached checker over the solvers from [`SolverConfig::from_env`].
pub fn default_checker() -> std::sync::Arc<dyn Checker> {
    std::sync::Arc::new(CachedChecker::new(SolverChecker::new(SolverConfig::from_env())))
}
