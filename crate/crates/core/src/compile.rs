//! Source-to-circuit pipeline: parse, analyze, synthesize, validate.

use std::collections::HashMap;

use crate::diag::Diagnostic;
use crate::frontend::{self, eval::Value};
use crate::ir::{self, CircuitIR};
use crate::sema::{analyze, AnalyzeOptions};
use crate::sim::SampleReg;
use crate::synth::{synthesize, SynthError};
use crate::typed::TypedProgram;

#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Cap on fraction digits carried by intermediate arithmetic results.
    pub machine_precision: u32,
    /// Values for main's classical parameters, by name.
    pub args: HashMap<String, Value>,
    /// Global compile-time constants, by name.
    pub consts: HashMap<String, Value>,
    /// Reuse released qubits for later allocations.
    pub recycle: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            machine_precision: crate::types::DEFAULT_MACHINE_PRECISION,
            args: HashMap::new(),
            consts: HashMap::new(),
            recycle: true,
        }
    }
}

pub struct Compiled {
    pub program: TypedProgram,
    pub circuit: CircuitIR,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug)]
pub enum CompileError {
    /// Positioned front-half failures (lexing, parsing, analysis).
    Diagnostics(Vec<Diagnostic>),
    /// Circuit construction failure.
    Synth(SynthError),
}

pub fn compile(src: &str, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let ast = frontend::parse(src).map_err(|d| CompileError::Diagnostics(vec![d]))?;
    let sema_opts = AnalyzeOptions {
        machine_precision: opts.machine_precision,
        args: opts.args.clone(),
        consts: opts.consts.clone(),
    };
    let out = analyze(&ast, &sema_opts).map_err(CompileError::Diagnostics)?;
    let circuit = synthesize(&out.program, opts.recycle).map_err(CompileError::Synth)?;
    if let Err(e) = ir::validate(&circuit) {
        return Err(CompileError::Synth(SynthError::Internal(format!(
            "synthesized circuit failed validation: {e}"
        ))));
    }
    Ok(Compiled { program: out.program, circuit, warnings: out.warnings })
}

/// Measurement columns for the program's outputs, in declaration order.
pub fn sample_regs(p: &TypedProgram, c: &CircuitIR) -> Vec<SampleReg> {
    c.outputs
        .iter()
        .map(|o| {
            let (_, var) = p.outputs.iter().find(|(n, _)| *n == o.name).expect("output name");
            SampleReg {
                name: o.name.clone(),
                qubits: o.qubits.clone(),
                ty: p.vars[*var].ty.clone().expect("outputs are bound"),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_produces_a_runnable_circuit() {
        let src = "qfunc main(res: output qnum) { res |= 3; }";
        let out = compile(src, &CompileOptions::default()).unwrap();
        assert_eq!(out.circuit.width, 2);
        let regs = sample_regs(&out.program, &out.circuit);
        assert_eq!(regs.len(), 1);
        assert_eq!(regs[0].name, "res");
        assert_eq!(regs[0].qubits.len(), 2);
    }

    #[test]
    fn diagnostics_surface_with_positions() {
        let err = compile("qfunc main(res: output qnum) { res |= undefined_name; }",
            &CompileOptions::default());
        match err {
            Err(CompileError::Diagnostics(ds)) => {
                assert!(ds[0].message.contains("undefined_name"), "{}", ds[0].message);
                assert!(ds[0].span.line >= 1);
            }
            _ => panic!("expected diagnostics"),
        }
    }

    #[test]
    fn synthesis_errors_carry_their_kind() {
        let err = compile(
            "qfunc main(x: output qnum[2, unsigned, 0]) { allocate(x); x ^= x; }",
            &CompileOptions::default(),
        );
        assert!(matches!(err, Err(CompileError::Synth(SynthError::SelfReference { .. }))));
    }
}
