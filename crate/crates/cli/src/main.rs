//! Command-line driver: compile programs to OpenQASM, simulate and sample
//! them, inspect statevectors and relative phases, and report circuit
//! resources.
//!
//! Exit codes: 0 success, 1 compile diagnostics, 2 runtime (simulation)
//! error, 3 usage error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmodc::coefs;
use qmodc::values::{parse_binding, render_code};
use qmodc_core::compile::{compile, sample_regs, CompileError, CompileOptions, Compiled};
use qmodc_core::ir::qasm::emit_qasm3;
use qmodc_core::ir::{decompose_multicontrol, Event};
use qmodc_core::sim::{self, Simulator};

const MAX_SIM_QUBITS: u32 = 24;

#[derive(Parser)]
#[command(
    name = "qmodc",
    version,
    about = "Compile, simulate, and inspect quantum programs with native arithmetic expressions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a program and emit OpenQASM 3
    Compile(BuildArgs),
    /// Simulate the program and sample its outputs
    Run(RunArgs),
    /// Print the populated statevector entries with decoded outputs
    Statevector(SimArgs),
    /// Print relative phases of populated basis states
    Phases(SimArgs),
    /// Print circuit resource usage
    Report(BuildArgs),
    /// Print per-segment linear coefficients for tanh
    Coefs(CoefsArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Input program
    input: PathBuf,

    /// Cap on fraction digits of intermediate arithmetic results
    #[arg(long, default_value_t = 8, value_name = "DIGITS")]
    machine_precision: u32,

    /// Bind main's classical parameter: name=value or name=[v1,v2,...]
    #[arg(long = "arg", value_name = "NAME=VALUE")]
    args: Vec<String>,

    /// Define a compile-time constant: NAME=value
    #[arg(long = "const", value_name = "NAME=VALUE")]
    consts: Vec<String>,

    /// Allocate fresh qubits instead of reusing released ones
    #[arg(long)]
    no_recycle: bool,

    /// Write output to this file instead of stdout
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    build: BuildArgs,

    /// Simulator qubit cap
    #[arg(long, default_value_t = MAX_SIM_QUBITS)]
    max_qubits: u32,

    /// Force the sequential state-update kernels
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    sim: SimArgs,

    /// Number of measurement shots
    #[arg(long, default_value_t = 4096)]
    shots: u64,

    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CoefsArgs {
    /// Lower bound of the approximated range
    #[arg(long, default_value_t = 0.0)]
    lo: f64,

    /// Upper bound of the approximated range
    #[arg(long, default_value_t = 1.0)]
    hi: f64,

    /// Number of uniform segments
    #[arg(long, default_value_t = 4)]
    segments: u32,

    /// Fit each segment at its two Chebyshev nodes instead of its endpoints
    #[arg(long)]
    chebyshev: bool,

    /// Write output to this file instead of stdout
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Diagnostics(Vec<String>),
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Compile(a) => cmd_compile(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Statevector(a) => cmd_statevector(a),
        Cmd::Phases(a) => cmd_phases(a),
        Cmd::Report(a) => cmd_report(a),
        Cmd::Coefs(a) => cmd_coefs(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(lines)) => {
            for l in lines {
                eprintln!("{l}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

// ─── shared plumbing ─────────────────────────────────────────────────

fn build(args: &BuildArgs) -> Result<(Compiled, String), Failure> {
    let file = args.input.display().to_string();
    let src = std::fs::read_to_string(&args.input)
        .map_err(|e| Failure::Usage(format!("cannot read {file}: {e}")))?;
    let mut opts = CompileOptions {
        machine_precision: args.machine_precision,
        recycle: !args.no_recycle,
        ..Default::default()
    };
    if args.machine_precision < 1 {
        return Err(Failure::Usage("--machine-precision must be at least 1".into()));
    }
    for s in &args.args {
        let (k, v) = parse_binding(s).map_err(|e| Failure::Usage(format!("--arg {s}: {e}")))?;
        opts.args.insert(k, v);
    }
    for s in &args.consts {
        let (k, v) = parse_binding(s).map_err(|e| Failure::Usage(format!("--const {s}: {e}")))?;
        opts.consts.insert(k, v);
    }
    let compiled = compile(&src, &opts).map_err(|e| match e {
        CompileError::Diagnostics(ds) => {
            Failure::Diagnostics(ds.iter().map(|d| d.render(&file)).collect())
        }
        CompileError::Synth(s) => Failure::Diagnostics(vec![match s.span() {
            Some(sp) => format!("{file}:{}:{}: error: {s}", sp.line, sp.col),
            None => format!("{file}: error: {s}"),
        }]),
    })?;
    for w in &compiled.warnings {
        eprintln!("{}", w.render(&file));
    }
    Ok((compiled, file))
}

fn simulate(args: &SimArgs) -> Result<(Compiled, Simulator), Failure> {
    if args.max_qubits > MAX_SIM_QUBITS {
        return Err(Failure::Usage(format!(
            "--max-qubits {} exceeds the supported cap of {MAX_SIM_QUBITS}",
            args.max_qubits
        )));
    }
    let (compiled, _) = build(&args.build)?;
    let s = sim::run(&compiled.circuit, args.max_qubits, !args.sequential)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok((compiled, s))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ─── commands ────────────────────────────────────────────────────────

fn cmd_compile(args: BuildArgs) -> Result<(), Failure> {
    let (compiled, _) = build(&args)?;
    let lowered = decompose_multicontrol(&compiled.circuit)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let text = emit_qasm3(&lowered).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(&args.out, &text)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    if args.shots < 1 {
        return Err(Failure::Usage("--shots must be at least 1".into()));
    }
    let (compiled, s) = simulate(&args.sim)?;
    let regs = sample_regs(&compiled.program, &compiled.circuit);
    let result =
        s.sample(&regs, args.shots, args.seed).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut text = String::new();
    for (col, reg) in regs.iter().enumerate() {
        let mut marginal: BTreeMap<u64, u64> = BTreeMap::new();
        for (codes, n) in &result.counts {
            *marginal.entry(codes[col]).or_insert(0) += n;
        }
        text += &format!("# {}\tcount\tprobability\n", reg.name);
        for (code, n) in marginal {
            text += &format!(
                "{}\t{}\t{:.6}\n",
                render_code(&reg.ty, code),
                n,
                n as f64 / args.shots as f64
            );
        }
    }
    emit(&args.sim.build.out, &text)
}

fn cmd_statevector(args: SimArgs) -> Result<(), Failure> {
    let (compiled, s) = simulate(&args)?;
    let regs = sample_regs(&compiled.program, &compiled.circuit);
    let mut text = String::new();
    text += "# ";
    text += &regs.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join("\t");
    text += "\tre\tim\tprobability\n";
    for idx in 0..s.amplitudes().len() as u64 {
        let a = s.amplitude(idx);
        if a.norm_sqr() < 1e-18 {
            continue;
        }
        let row: Vec<String> = regs
            .iter()
            .map(|r| render_code(&r.ty, s.register_code(&r.qubits, idx).expect("live outputs")))
            .collect();
        text += &format!("{}\t{:.9}\t{:.9}\t{:.9}\n", row.join("\t"), a.re, a.im, a.norm_sqr());
    }
    emit(&args.build.out, &text)
}

fn cmd_phases(args: SimArgs) -> Result<(), Failure> {
    let (compiled, s) = simulate(&args)?;
    let regs = sample_regs(&compiled.program, &compiled.circuit);
    let reference = (0..s.amplitudes().len() as u64)
        .find(|&i| s.amplitude(i).norm() > 1e-9)
        .ok_or_else(|| Failure::Runtime("state has no populated amplitudes".into()))?;
    let phases = s.relative_phases(reference).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut text = String::new();
    text += "# ";
    text += &regs.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join("\t");
    text += "\tphase\n";
    let mut row = |idx: u64, phase: f64| {
        let cols: Vec<String> = regs
            .iter()
            .map(|r| render_code(&r.ty, s.register_code(&r.qubits, idx).expect("live outputs")))
            .collect();
        text += &format!("{}\t{:.6}\n", cols.join("\t"), phase);
    };
    row(reference, 0.0);
    for (idx, phase) in &phases {
        row(*idx, *phase);
    }
    emit(&args.build.out, &text)
}

fn cmd_report(args: BuildArgs) -> Result<(), Failure> {
    let (compiled, _) = build(&args)?;
    let c = &compiled.circuit;
    let mut by_kind: BTreeMap<&'static str, usize> = BTreeMap::new();
    let (mut gates, mut cx_cost) = (0usize, 0usize);
    for e in &c.events {
        if let Event::Gate(g) = e {
            gates += 1;
            *by_kind.entry(g.kind.name()).or_insert(0) += 1;
            cx_cost += g.kind.cx_equiv(g.qubits.len());
        }
    }
    let mut text = format!("qubits: {}\n", c.width);
    text += &format!("gates: {gates}\n");
    for (name, n) in by_kind {
        text += &format!("  {name}: {n}\n");
    }
    text += &format!("cx-equivalent cost: {cx_cost}\n");
    text += "outputs:\n";
    for o in &c.outputs {
        text += &format!("  {}: {} ({} qubits)\n", o.name, o.desc, o.qubits.len());
    }
    emit(&args.out, &text)
}

fn cmd_coefs(args: CoefsArgs) -> Result<(), Failure> {
    if args.segments < 1 {
        return Err(Failure::Usage("--segments must be at least 1".into()));
    }
    if !(args.hi > args.lo) {
        return Err(Failure::Usage(format!(
            "{}",
            coefs::DegenerateSegment { lo: args.lo, hi: args.hi }
        )));
    }
    let bounds = coefs::uniform_bounds(args.lo, args.hi, args.segments);
    let cs = if args.chebyshev {
        coefs::chebyshev_coefs(f64::tanh, &bounds)
    } else {
        coefs::sampled_coefs(f64::tanh, args.lo, args.hi, args.segments)
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut text = String::from("# segment\tlo\thi\ta\tb\n");
    for (i, (a, b)) in cs.iter().enumerate() {
        text += &format!("{i}\t{}\t{}\t{a:.10}\t{b:.10}\n", bounds[i], bounds[i + 1]);
    }
    emit(&args.out, &text)
}

