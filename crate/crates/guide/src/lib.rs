//! The book's chapters as doc comments, so `cargo test` runs every Rust
//! snippet in `book/src` against the current crates. One module per
//! chapter keeps failures traceable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/grammar.md")]
pub mod grammar {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/houdini.md")]
pub mod houdini {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../book/src/repair.md")]
pub mod repair {}

#[doc = include_str!("../../../book/src/campaigns.md")]
pub mod campaigns {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
