//! Compiler and simulator for a small quantum description language with
//! fixed-point numeric semantics.
//!
//! Pipeline: [`frontend`] parses source text, [`sema`] checks it and expands
//! it to a monomorphic tree, [`synth`] lowers that tree to gate-level
//! [`ir`], and [`sim`] executes the result on a dense statevector.

pub mod compile;
pub mod diag;
pub mod frontend;
pub mod ir;
pub mod sema;
pub mod sim;
pub mod synth;
pub mod typed;
pub mod types;
