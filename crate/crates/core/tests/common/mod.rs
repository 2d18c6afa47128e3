#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use loopy_core::lang::{parse_program, Program};
use loopy_core::oracle::ProgramOracle;
use loopy_core::smt::{default_checker, Checker};
use loopy_core::vcgen::IntSemantics;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/paper").join(name)
}

pub fn program(name: &str) -> Program {
    let text = std::fs::read_to_string(corpus(name)).expect("corpus file");
    parse_program(&text).expect("corpus program parses")
}

pub fn oracle(p: &Program) -> ProgramOracle {
    ProgramOracle::new(p.clone(), default_checker(), IntSemantics::Unbounded)
}

pub fn oracle_with(p: &Program, checker: Arc<dyn Checker>) -> ProgramOracle {
    ProgramOracle::new(p.clone(), checker, IntSemantics::Unbounded)
}
