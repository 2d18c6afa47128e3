//! Loop invariant synthesis by guess and check.
//!
//! A proposer suggests candidate invariants for the single loop of a
//! [`lang::Program`]; the [`oracle`] checks them with an external SMT solver
//! and says which candidates are at fault; [`houdini`] and [`repair`] work
//! from the failures; [`loopy::loopy`] strings it all together.
//!
//! ```no_run
//! use loopy_core::lang::{parse_program, CandidateSet};
//! use loopy_core::oracle::{InvariantOracle, ProgramOracle};
//! use loopy_core::smt::default_checker;
//! use loopy_core::vcgen::IntSemantics;
//!
//! let p = parse_program("int main() { int x = 0; while (x < 5) x++; //@ assert x == 5;\n}").unwrap();
//! let oracle = ProgramOracle::new(p, default_checker(), IntSemantics::Unbounded);
//! assert!(oracle.check(&CandidateSet::from_sources(["x <= 5"])).unwrap().success);
//! ```

pub mod explore;
pub mod houdini;
pub mod lang;
pub mod loopy;
pub mod oracle;
pub mod proposer;
pub mod repair;
pub mod smt;
pub mod vcgen;
