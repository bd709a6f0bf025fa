//! Circuit synthesis: lowers a typed program to gate-level IR.
//!
//! Digital operators become reversible fixed-point arithmetic over basis
//! states, mirroring [`crate::typed::fixed_eval`] bit for bit: every operator
//! computes into a fresh register in the node's inferred format, is consumed,
//! and is uncomputed by splicing the adjoint of its own recorded fragment.
//! `phase` bypasses registers entirely and compiles the expression's exact
//! bit-level polynomial into diagonal phase gates; `assign_amplitude`
//! multiplexes single-qubit rotations over the computed value register.
//!
//! Controlled structure never materializes products with the control:
//! recorded fragments are wrapped by [`controlled_events`], which adds the
//! control to every gate and leaves allocations alone, so a false control
//! costs nothing and no extra ancillae appear.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::rational::BigRational;
use num::{ToPrimitive, Zero};

use crate::diag::Span;
use crate::ir::{
    adjoint_events, controlled_events, CircuitBuilder, CircuitIR, Event, GateKind, IrError,
    OutputReg, QubitId,
};
use crate::typed::{
    AnnExpr, AnnExprKind, BitBinOp, ConcreteQType, LogicBinOp, PrimGate, RelOp, TypedPath,
    TypedProgram, TypedStmt, VarId,
};
use crate::types::{
    const_partial_exponents, mul_partial_weights, partial_value, plan_scaled_alignment, BitSource,
    FixedPointFormat,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("phase expressions must be polynomial: comparisons, bitwise and boolean \
             operators have no phase form")]
    NonPolynomial { span: Span },
    #[error("the control qubit is acted on inside its own controlled block")]
    ControlOverlap { span: Span },
    #[error("update expression reads the register it writes")]
    SelfReference { span: Span },
    #[error("internal synthesis invariant broken: {0}")]
    Internal(String),
}

impl From<IrError> for SynthError {
    fn from(e: IrError) -> SynthError {
        SynthError::Internal(e.to_string())
    }
}

impl SynthError {
    /// Source location, when the error points at one.
    pub fn span(&self) -> Option<Span> {
        match self {
            SynthError::NonPolynomial { span }
            | SynthError::ControlOverlap { span }
            | SynthError::SelfReference { span } => Some(*span),
            SynthError::Internal(_) => None,
        }
    }
}

/// Lower a typed program to circuit IR. `recycle` lets released ancilla ids
/// be handed out again (narrower circuits); turning it off must not change
/// any observable amplitude, only the width.
pub fn synthesize(p: &TypedProgram, recycle: bool) -> Result<CircuitIR, SynthError> {
    let mut ctx = Ctx { b: CircuitBuilder::new(recycle), regs: HashMap::new() };
    for stmt in &p.stmts {
        synth_stmt(&mut ctx, p, stmt)?;
        // Ancilla-hygiene probe: between top-level statements exactly the
        // bound registers are live.
        ctx.b.checkpoint();
    }
    let mut outputs = Vec::new();
    for (name, var) in &p.outputs {
        let ty = p.vars[*var]
            .ty
            .as_ref()
            .ok_or_else(|| SynthError::Internal(format!("output '{name}' was never typed")))?;
        let qubits = ctx
            .regs
            .get(var)
            .ok_or_else(|| SynthError::Internal(format!("output '{name}' was never initialized")))?
            .clone();
        outputs.push(OutputReg {
            name: name.clone(),
            qubits,
            fmt: match ty {
                ConcreteQType::Num(f) => Some(*f),
                _ => None,
            },
            desc: ty.to_string(),
        });
    }
    Ok(ctx.b.finish(outputs))
}

// ─── context ─────────────────────────────────────────────────────────

struct Ctx {
    b: CircuitBuilder,
    /// Qubits of each initialized variable, LSB first.
    regs: HashMap<VarId, Vec<QubitId>>,
}

/// A register view: qubits (LSB first) plus the format decoding them.
#[derive(Debug, Clone)]
struct RegSlice {
    qubits: Vec<QubitId>,
    fmt: FixedPointFormat,
}

impl Ctx {
    fn path_qubits(&self, p: &TypedPath) -> Result<Vec<QubitId>, SynthError> {
        let reg = self.regs.get(&p.var).ok_or_else(|| {
            SynthError::Internal(format!("path into uninitialized variable {}", p.var))
        })?;
        let (a, b) = (p.bit_offset as usize, (p.bit_offset + p.bit_len) as usize);
        Ok(reg[a..b].to_vec())
    }

    fn path_slice(&self, p: &TypedPath) -> Result<RegSlice, SynthError> {
        let fmt = p.ty.arith_format().ok_or_else(|| {
            SynthError::Internal(format!("path of type {} used arithmetically", p.ty))
        })?;
        Ok(RegSlice { qubits: self.path_qubits(p)?, fmt })
    }

    fn alloc_reg(&mut self, fmt: FixedPointFormat) -> Result<RegSlice, SynthError> {
        Ok(RegSlice { qubits: self.b.alloc(fmt.size as usize)?, fmt })
    }

    /// Rewind a recorded fragment: splice the adjoint, replaying its
    /// alloc/release bookkeeping (frees the fragment's result register).
    fn unwind(&mut self, script: &[Event]) -> Result<(), SynthError> {
        if !script.is_empty() {
            self.b.splice(adjoint_events(script))?;
        }
        Ok(())
    }

    /// Wrap everything recorded since `start` under `ctrl` (no-op when
    /// `ctrl` is `None`). Allocations pass through unconditionally.
    fn finish_controlled(
        &mut self,
        start: usize,
        ctrl: Option<QubitId>,
    ) -> Result<(), SynthError> {
        let Some(c) = ctrl else { return Ok(()) };
        let frag = self.b.take_since(start);
        let lowered = controlled_events(&frag, c)?;
        self.b.splice_recorded(lowered);
        Ok(())
    }
}

// ─── statements ──────────────────────────────────────────────────────

fn synth_stmt(ctx: &mut Ctx, p: &TypedProgram, stmt: &TypedStmt) -> Result<(), SynthError> {
    match stmt {
        TypedStmt::Allocate { var, .. } => {
            let ty = p.vars[*var]
                .ty
                .as_ref()
                .ok_or_else(|| SynthError::Internal("allocate of an untyped variable".into()))?;
            let qubits = ctx.b.alloc(ty.total_size() as usize)?;
            ctx.regs.insert(*var, qubits);
            Ok(())
        }
        TypedStmt::AssignOut { var, expr, adopt, .. } => {
            synth_assign_out(ctx, p, *var, expr, *adopt)
        }
        TypedStmt::XorAssign { target, expr, span } => synth_xor_assign(ctx, target, expr, *span),
        TypedStmt::AddAssign { target, expr, span } => synth_add_assign(ctx, target, expr, *span),
        TypedStmt::Phase { expr, theta, .. } => {
            let poly = phase_polynomial(ctx, expr)?;
            emit_phase(ctx, &poly, *theta);
            Ok(())
        }
        TypedStmt::AssignAmplitude { expr, indicator, span } => {
            synth_assign_amplitude(ctx, expr, indicator, *span)
        }
        TypedStmt::ControlBit { ctrl, body, span } => {
            let cq = ctx.path_qubits(ctrl)?[0];
            let start = ctx.b.events.len();
            for s in body {
                synth_stmt(ctx, p, s)?;
            }
            control_fragment(ctx, start, cq, *span)
        }
        TypedStmt::ControlExpr { cond, body, span } => {
            match operand(ctx, cond)? {
                // Classical conditions normally fold away in analysis; be
                // truthful if one slips through.
                Src::Const(c) => {
                    if !c.is_zero() {
                        for s in body {
                            synth_stmt(ctx, p, s)?;
                        }
                    }
                    Ok(())
                }
                Src::Reg(creg, cscript) => {
                    let start = ctx.b.events.len();
                    for s in body {
                        synth_stmt(ctx, p, s)?;
                    }
                    control_fragment(ctx, start, creg.qubits[0], *span)?;
                    ctx.unwind(&cscript)
                }
            }
        }
        TypedStmt::WithinApply { within, apply, within_inits, .. } => {
            let start = ctx.b.events.len();
            for s in within {
                synth_stmt(ctx, p, s)?;
            }
            let u = ctx.b.events_since(start);
            for s in apply {
                synth_stmt(ctx, p, s)?;
            }
            // U† — also releases every register the within block created
            ctx.b.splice(adjoint_events(&u))?;
            for v in within_inits {
                ctx.regs.remove(v);
            }
            Ok(())
        }
        TypedStmt::Invert { body, .. } => {
            let start = ctx.b.events.len();
            for s in body {
                synth_stmt(ctx, p, s)?;
            }
            let frag = ctx.b.take_since(start);
            // balanced fragments adjoint to balanced fragments, so the
            // pool's net bookkeeping from recording still holds
            ctx.b.splice_recorded(adjoint_events(&frag));
            Ok(())
        }
        TypedStmt::Gate { gate, theta, args, .. } => {
            let kind = prim_gate_kind(*gate, *theta);
            let mut qubits = Vec::new();
            for a in args {
                qubits.extend(ctx.path_qubits(a)?);
            }
            ctx.b.gate(kind, qubits);
            Ok(())
        }
        TypedStmt::ReleaseLocal { var, .. } => {
            if let Some(qubits) = ctx.regs.remove(var) {
                ctx.b.release(&qubits)?;
            }
            Ok(())
        }
    }
}

fn control_fragment(
    ctx: &mut Ctx,
    start: usize,
    ctrl: QubitId,
    span: Span,
) -> Result<(), SynthError> {
    let frag = ctx.b.take_since(start);
    let lowered = controlled_events(&frag, ctrl).map_err(|e| match e {
        IrError::OverlappingControl(_) => SynthError::ControlOverlap { span },
        other => other.into(),
    })?;
    ctx.b.splice_recorded(lowered);
    Ok(())
}

fn prim_gate_kind(g: PrimGate, theta: Option<f64>) -> GateKind {
    let t = theta.unwrap_or(0.0);
    match g {
        PrimGate::H => GateKind::H,
        PrimGate::X => GateKind::X,
        PrimGate::Y => GateKind::Y,
        PrimGate::Z => GateKind::Z,
        PrimGate::S => GateKind::S,
        PrimGate::T => GateKind::T,
        PrimGate::RX => GateKind::RX(t),
        PrimGate::RY => GateKind::RY(t),
        PrimGate::RZ => GateKind::RZ(t),
        PrimGate::CX => GateKind::CX,
        PrimGate::CCX => GateKind::CCX,
        PrimGate::SWAP => GateKind::SWAP,
    }
}

fn synth_assign_out(
    ctx: &mut Ctx,
    p: &TypedProgram,
    var: VarId,
    expr: &AnnExpr,
    adopt: bool,
) -> Result<(), SynthError> {
    let ty = p.vars[var]
        .ty
        .as_ref()
        .ok_or_else(|| SynthError::Internal("assignment target was never typed".into()))?;
    let want = ty.arith_format().ok_or_else(|| {
        SynthError::Internal(format!("assignment into non-arithmetic type {ty}"))
    })?;
    debug_assert!(!adopt || want == expr.fmt, "adopted format must match the expression");

    if want == expr.fmt {
        match &expr.kind {
            AnnExprKind::Const(c) => {
                let dst = ctx.alloc_reg(want)?;
                let code = want.encode_exact(c).ok_or_else(|| {
                    SynthError::Internal(format!("constant {c} does not fit format {want}"))
                })?;
                xor_const(ctx, &dst, code);
                ctx.regs.insert(var, dst.qubits);
            }
            AnnExprKind::Leaf(_) => {
                // bare variable: fresh register, plain copy
                let src = synth_expr(ctx, expr)?;
                let dst = ctx.alloc_reg(want)?;
                for (s, d) in src.qubits.iter().zip(&dst.qubits) {
                    ctx.b.gate(GateKind::CX, vec![*s, *d]);
                }
                ctx.regs.insert(var, dst.qubits);
            }
            _ => {
                // operator result: adopt the freshly computed register
                let reg = synth_expr(ctx, expr)?;
                ctx.regs.insert(var, reg.qubits);
            }
        }
        return Ok(());
    }

    // declared format differs from the inferred one: move through the
    // format bridge (floor to the coarser grid, wrap at the top)
    let dst = ctx.alloc_reg(want)?;
    match expr.is_const() {
        Some(c) => xor_const(ctx, &dst, want.encode_wrap(c)),
        None => {
            let (reg, script) = expect_reg(operand(ctx, expr)?)?;
            xor_fanout(ctx, &reg, &dst, 0);
            ctx.unwind(&script)?;
        }
    }
    ctx.regs.insert(var, dst.qubits);
    Ok(())
}

fn synth_xor_assign(
    ctx: &mut Ctx,
    target: &TypedPath,
    expr: &AnnExpr,
    span: Span,
) -> Result<(), SynthError> {
    reject_self_reference(target, expr, span)?;
    let dst = ctx.path_slice(target)?;
    if let Some(c) = expr.is_const() {
        xor_const(ctx, &dst, dst.fmt.encode_wrap(c));
        return Ok(());
    }
    let (reg, script) = expect_reg(operand(ctx, expr)?)?;
    xor_fanout(ctx, &reg, &dst, 0);
    ctx.unwind(&script)
}

fn synth_add_assign(
    ctx: &mut Ctx,
    target: &TypedPath,
    expr: &AnnExpr,
    span: Span,
) -> Result<(), SynthError> {
    reject_self_reference(target, expr, span)?;
    let dst = ctx.path_slice(target)?;
    if let Some(c) = expr.is_const() {
        return add_const(ctx, &dst, c, None);
    }
    let (reg, script) = expect_reg(operand(ctx, expr)?)?;
    add_partial(ctx, &reg, &dst, 0, false, None)?;
    ctx.unwind(&script)
}

/// In-place updates whose right side reads the register being written are
/// not invertible in general (`x ^= x` zeroes a register), so they are
/// rejected rather than miscompiled.
fn reject_self_reference(
    target: &TypedPath,
    e: &AnnExpr,
    span: Span,
) -> Result<(), SynthError> {
    let mut bad = false;
    walk_leaves(e, &mut |p| bad |= p.overlaps(target));
    if bad {
        return Err(SynthError::SelfReference { span });
    }
    Ok(())
}

fn walk_leaves<'a>(e: &'a AnnExpr, f: &mut impl FnMut(&'a TypedPath)) {
    match &e.kind {
        AnnExprKind::Const(_) => {}
        AnnExprKind::Leaf(p) => f(p),
        AnnExprKind::Add(l, r)
        | AnnExprKind::Sub(l, r)
        | AnnExprKind::Mul { mcand: l, mult: r }
        | AnnExprKind::Rel { l, r, .. }
        | AnnExprKind::BitBin { l, r, .. }
        | AnnExprKind::Logic { l, r, .. } => {
            walk_leaves(l, f);
            walk_leaves(r, f);
        }
        AnnExprKind::Neg(x)
        | AnnExprKind::MulConst { operand: x, .. }
        | AnnExprKind::Shl { operand: x, .. }
        | AnnExprKind::Shr { operand: x, .. }
        | AnnExprKind::BitNot(x)
        | AnnExprKind::LogicNot(x) => walk_leaves(x, f),
    }
}

// ─── expression operands ─────────────────────────────────────────────

/// Where an operand's value lives during synthesis.
enum Src {
    /// Classical constant, exact.
    Const(BigRational),
    /// Register holding the value, plus the recorded fragment that computed
    /// it (empty for a borrowed variable slice). Unwinding the fragment's
    /// adjoint returns the register to |0⟩ and releases it.
    Reg(RegSlice, Vec<Event>),
}

fn operand(ctx: &mut Ctx, e: &AnnExpr) -> Result<Src, SynthError> {
    if let Some(c) = e.is_const() {
        return Ok(Src::Const(c.clone()));
    }
    let start = ctx.b.events.len();
    let reg = synth_expr(ctx, e)?;
    Ok(Src::Reg(reg, ctx.b.events[start..].to_vec()))
}

fn expect_reg(s: Src) -> Result<(RegSlice, Vec<Event>), SynthError> {
    match s {
        Src::Reg(r, ev) => Ok((r, ev)),
        Src::Const(c) => Err(SynthError::Internal(format!("unexpected constant operand {c}"))),
    }
}

/// Emit events computing `e` into a register. A bare variable slice is
/// returned as-is (borrowed, no events); everything else lands in a fresh
/// register in the node's inferred format, which by construction holds the
/// exact `fixed_eval` value of the node — inferred formats never overflow.
fn synth_expr(ctx: &mut Ctx, e: &AnnExpr) -> Result<RegSlice, SynthError> {
    match &e.kind {
        AnnExprKind::Const(c) => {
            let dst = ctx.alloc_reg(e.fmt)?;
            let code = e.fmt.encode_exact(c).ok_or_else(|| {
                SynthError::Internal(format!("constant {c} does not fit format {}", e.fmt))
            })?;
            xor_const(ctx, &dst, code);
            Ok(dst)
        }
        AnnExprKind::Leaf(p) => ctx.path_slice(p),
        AnnExprKind::Add(l, r) => {
            let dst = ctx.alloc_reg(e.fmt)?;
            addend(ctx, l, &dst, &[(0, false)], None)?;
            addend(ctx, r, &dst, &[(0, false)], None)?;
            Ok(dst)
        }
        AnnExprKind::Sub(l, r) => {
            let dst = ctx.alloc_reg(e.fmt)?;
            addend(ctx, l, &dst, &[(0, false)], None)?;
            addend(ctx, r, &dst, &[(0, true)], None)?;
            Ok(dst)
        }
        AnnExprKind::Neg(x) => {
            let dst = ctx.alloc_reg(e.fmt)?;
            addend(ctx, x, &dst, &[(0, true)], None)?;
            Ok(dst)
        }
        AnnExprKind::MulConst { c, operand: x } => {
            let (negative, exps) = const_partial_exponents(c);
            let parts: Vec<(i64, bool)> = exps.iter().map(|&p| (p, negative)).collect();
            let dst = ctx.alloc_reg(e.fmt)?;
            addend(ctx, x, &dst, &parts, None)?;
            Ok(dst)
        }
        AnnExprKind::Mul { mcand, mult } => synth_mul(ctx, e, mcand, mult),
        AnnExprKind::Shl { operand: x, k } => {
            let dst = ctx.alloc_reg(e.fmt)?;
            addend(ctx, x, &dst, &[(*k as i64, false)], None)?;
            Ok(dst)
        }
        AnnExprKind::Shr { operand: x, k } => {
            let dst = ctx.alloc_reg(e.fmt)?;
            addend(ctx, x, &dst, &[(-(*k as i64), false)], None)?;
            Ok(dst)
        }
        AnnExprKind::Rel { op, l, r, work, .. } => synth_rel(ctx, *op, l, r, work),
        AnnExprKind::BitBin { op, l, r } => synth_bit_bin(ctx, e, *op, l, r),
        AnnExprKind::BitNot(x) => synth_bit_not(ctx, e, x),
        AnnExprKind::Logic { op, l, r } => {
            // 1-bit boolean operands make these exactly the bitwise forms
            let bop = match op {
                LogicBinOp::And => BitBinOp::And,
                LogicBinOp::Or => BitBinOp::Or,
                LogicBinOp::Xor => BitBinOp::Xor,
            };
            synth_bit_bin(ctx, e, bop, l, r)
        }
        AnnExprKind::LogicNot(x) => synth_bit_not(ctx, e, x),
    }
}

// ─── ripple arithmetic ───────────────────────────────────────────────

/// dst += Σ over `parts` of sign·floor_g(2^exp · side), g = dst's grid.
/// Each part is optionally controlled. A classical side folds the whole sum
/// into one constant addition.
fn addend(
    ctx: &mut Ctx,
    side: &AnnExpr,
    dst: &RegSlice,
    parts: &[(i64, bool)],
    ctrl: Option<QubitId>,
) -> Result<(), SynthError> {
    if let Some(c) = side.is_const() {
        let g = dst.fmt.fraction_digits;
        let total = parts
            .iter()
            .map(|&(exp, neg)| partial_value(c, exp, g, neg))
            .fold(BigRational::zero(), |a, b| a + b);
        return add_const(ctx, dst, &total, ctrl);
    }
    let (reg, script) = expect_reg(operand(ctx, side)?)?;
    for &(exp, neg) in parts {
        add_partial(ctx, &reg, dst, exp, neg, ctrl)?;
    }
    ctx.unwind(&script)
}

/// dst += sign·floor_g(2^exp · src) (mod the register range), realized as a
/// ripple-carry addition of the aligned source slice. Negation conjugates
/// the slice with X and injects a carry-in (two's complement); the borrow
/// correction and sign extension both reduce to a decrement of the bits
/// above the slice, keyed on the current top-cell value.
fn add_partial(
    ctx: &mut Ctx,
    src: &RegSlice,
    dst: &RegSlice,
    exp: i64,
    negate: bool,
    ctrl: Option<QubitId>,
) -> Result<(), SynthError> {
    let n = src.fmt.size as i64;
    let nn = dst.fmt.size as i64;
    // source bit j carries 2^(j - delta) destination units
    let delta = src.fmt.fraction_digits as i64 - dst.fmt.fraction_digits as i64 - exp;
    let j0 = delta.max(0); // first source bit at or above the grid
    let i0 = (-delta).max(0); // its destination position
    if i0 >= nn {
        return Ok(()); // every bit weighs a multiple of the range: ≡ 0
    }
    let len = (n - j0).min(nn - i0);
    let start = ctx.b.events.len();

    if len <= 0 {
        // the whole source floors away; a negative value still owes one ulp
        if src.fmt.signed {
            let sign = src.qubits[(n - 1) as usize];
            let inner = ctx.b.events.len();
            if negate {
                increment(ctx, &dst.qubits); // −(−ulp)
            } else {
                decrement(ctx, &dst.qubits);
            }
            let frag = ctx.b.take_since(inner);
            ctx.b.splice_recorded(controlled_events(&frag, sign)?);
        }
        return ctx.finish_controlled(start, ctrl);
    }

    let (j0, i0, len) = (j0 as usize, i0 as usize, len as usize);
    let s_bits = &src.qubits[j0..j0 + len];
    let d_bits = &dst.qubits[i0..i0 + len];

    if negate {
        for &q in s_bits {
            ctx.b.gate(GateKind::X, vec![q]);
        }
    }
    let carry = ctx.b.alloc(1)?[0];
    if negate {
        ctx.b.gate(GateKind::X, vec![carry]); // +1 of the two's complement
    }
    // CDKM ripple: carry cell for position i is the source bit below it
    let cell = |i: usize| if i == 0 { carry } else { s_bits[i - 1] };
    for i in 0..len {
        maj(ctx, cell(i), d_bits[i], s_bits[i]);
    }
    // carry-out lives in the top source cell between the two half-chains
    let heads: Vec<QubitId> = dst.qubits[i0 + len..].to_vec();
    if !heads.is_empty() {
        let cout = s_bits[len - 1];
        let inner = ctx.b.events.len();
        increment(ctx, &heads);
        let frag = ctx.b.take_since(inner);
        ctx.b.splice_recorded(controlled_events(&frag, cout)?);
    }
    for i in (0..len).rev() {
        uma(ctx, cell(i), d_bits[i], s_bits[i]);
    }
    if negate {
        ctx.b.gate(GateKind::X, vec![carry]);
    }
    ctx.b.release(&[carry])?;

    // Correction above the slice: an unsigned ripple added U·2^i0, but the
    // true contribution is (U − 2^len·s)·2^i0 for a signed source (s = top
    // cell) and, under negation, the complement's implicit high ones mean
    // 2^(i0+len) too much was added. Both cases subtract one unit from the
    // head bits, keyed on the current top-cell value (which holds ~s under
    // negation — exactly the right key, since ~sx(v) = sx(~v)).
    if !heads.is_empty() {
        if src.fmt.signed {
            let sign = s_bits[len - 1];
            let inner = ctx.b.events.len();
            decrement(ctx, &heads);
            let frag = ctx.b.take_since(inner);
            ctx.b.splice_recorded(controlled_events(&frag, sign)?);
        } else if negate {
            decrement(ctx, &heads);
        }
    }
    if negate {
        for &q in s_bits {
            ctx.b.gate(GateKind::X, vec![q]);
        }
    }
    ctx.finish_controlled(start, ctrl)
}

/// dst += v (mod the register range) for a classical addend already on the
/// destination grid: one ripple of multi-controlled increments per set bit.
fn add_const(
    ctx: &mut Ctx,
    dst: &RegSlice,
    v: &BigRational,
    ctrl: Option<QubitId>,
) -> Result<(), SynthError> {
    let k = dst.fmt.encode_wrap(v);
    if k == 0 {
        return Ok(());
    }
    let start = ctx.b.events.len();
    for j in 0..dst.qubits.len() {
        if k >> j & 1 == 1 {
            increment(ctx, &dst.qubits[j..]);
        }
    }
    ctx.finish_controlled(start, ctrl)
}

/// slice += 1 (mod 2^len): carries resolved top-down so every control reads
/// the pre-increment bits.
fn increment(ctx: &mut Ctx, slice: &[QubitId]) {
    for t in (1..slice.len()).rev() {
        let mut qs = slice[..t].to_vec();
        qs.push(slice[t]);
        ctx.b.gate(mcx_kind(t), qs);
    }
    ctx.b.gate(GateKind::X, vec![slice[0]]);
}

/// slice −= 1 (mod 2^len): X-conjugated increment (~(~x + 1) = x − 1).
fn decrement(ctx: &mut Ctx, slice: &[QubitId]) {
    for &q in slice {
        ctx.b.gate(GateKind::X, vec![q]);
    }
    increment(ctx, slice);
    for &q in slice {
        ctx.b.gate(GateKind::X, vec![q]);
    }
}

fn mcx_kind(controls: usize) -> GateKind {
    match controls {
        0 => GateKind::X,
        1 => GateKind::CX,
        2 => GateKind::CCX,
        _ => GateKind::MCX,
    }
}

/// MAJ cell: c,b,a → c⊕a, b⊕a, maj(a,b,c).
fn maj(ctx: &mut Ctx, c: QubitId, b: QubitId, a: QubitId) {
    ctx.b.gate(GateKind::CX, vec![a, b]);
    ctx.b.gate(GateKind::CX, vec![a, c]);
    ctx.b.gate(GateKind::CCX, vec![c, b, a]);
}

/// UMA cell: undoes MAJ and leaves the sum in b.
fn uma(ctx: &mut Ctx, c: QubitId, b: QubitId, a: QubitId) {
    ctx.b.gate(GateKind::CCX, vec![c, b, a]);
    ctx.b.gate(GateKind::CX, vec![a, c]);
    ctx.b.gate(GateKind::CX, vec![c, b]);
}

// ─── multiplication ──────────────────────────────────────────────────

/// Shift-add product: one aligned partial of the multiplicand per
/// multiplier bit, each controlled on that bit. A signed multiplier's top
/// bit contributes negatively. The multiplicand is staged through a copy
/// when the two operand registers share qubits — the ripple transiently
/// rewrites its source, and a control may not sit inside it.
fn synth_mul(
    ctx: &mut Ctx,
    e: &AnnExpr,
    mcand: &AnnExpr,
    mult: &AnnExpr,
) -> Result<RegSlice, SynthError> {
    let dst = ctx.alloc_reg(e.fmt)?;
    let (mc, mc_script) = expect_reg(operand(ctx, mcand)?)?;
    let (ml, ml_script) = expect_reg(operand(ctx, mult)?)?;

    let overlap = mc.qubits.iter().any(|q| ml.qubits.contains(q));
    let (src, copy_script) = if overlap {
        let start = ctx.b.events.len();
        let copy = ctx.alloc_reg(mc.fmt)?;
        for (s, d) in mc.qubits.iter().zip(&copy.qubits) {
            ctx.b.gate(GateKind::CX, vec![*s, *d]);
        }
        (copy, ctx.b.events[start..].to_vec())
    } else {
        (mc.clone(), Vec::new())
    };

    for w in mul_partial_weights(&ml.fmt) {
        add_partial(ctx, &src, &dst, w.exp, w.negative, Some(ml.qubits[w.bit as usize]))?;
    }

    ctx.unwind(&copy_script)?;
    ctx.unwind(&ml_script)?;
    ctx.unwind(&mc_script)?;
    Ok(dst)
}

// ─── comparisons ─────────────────────────────────────────────────────

/// Order tests read the sign of a floored difference held in the signed
/// `work` format (which covers it exactly); equality XOR-compares the two
/// floored encodings in the hull format. Both scratch registers are
/// uncomputed by unwinding their fragments.
fn synth_rel(
    ctx: &mut Ctx,
    op: RelOp,
    l: &AnnExpr,
    r: &AnnExpr,
    work: &FixedPointFormat,
) -> Result<RegSlice, SynthError> {
    let res = ctx.alloc_reg(FixedPointFormat::bit())?;
    match op {
        RelOp::Lt | RelOp::Ge | RelOp::Gt | RelOp::Le => {
            // Lt/Ge test l − r; Gt/Le test r − l (Ge, Le are the negations)
            let (first, second) = match op {
                RelOp::Lt | RelOp::Ge => (l, r),
                _ => (r, l),
            };
            let start = ctx.b.events.len();
            let diff = ctx.alloc_reg(*work)?;
            addend(ctx, first, &diff, &[(0, false)], None)?;
            addend(ctx, second, &diff, &[(0, true)], None)?;
            let script = ctx.b.events[start..].to_vec();
            let sign = *diff.qubits.last().expect("work format is non-empty");
            ctx.b.gate(GateKind::CX, vec![sign, res.qubits[0]]);
            ctx.unwind(&script)?;
            if matches!(op, RelOp::Ge | RelOp::Le) {
                ctx.b.gate(GateKind::X, vec![res.qubits[0]]);
            }
        }
        RelOp::Eq | RelOp::Ne => {
            let start = ctx.b.events.len();
            let w = ctx.alloc_reg(*work)?;
            xor_addend(ctx, l, &w)?;
            xor_addend(ctx, r, &w)?;
            let script = ctx.b.events[start..].to_vec();
            // res = [w == 0]
            for &q in &w.qubits {
                ctx.b.gate(GateKind::X, vec![q]);
            }
            let mut qs = w.qubits.clone();
            qs.push(res.qubits[0]);
            ctx.b.gate(mcx_kind(w.qubits.len()), qs);
            for &q in &w.qubits {
                ctx.b.gate(GateKind::X, vec![q]);
            }
            ctx.unwind(&script)?;
            if op == RelOp::Ne {
                ctx.b.gate(GateKind::X, vec![res.qubits[0]]);
            }
        }
    }
    Ok(res)
}

/// w ^= the side's floored encoding in w's format.
fn xor_addend(ctx: &mut Ctx, side: &AnnExpr, w: &RegSlice) -> Result<(), SynthError> {
    if let Some(c) = side.is_const() {
        xor_const(ctx, w, w.fmt.encode_wrap(c));
        return Ok(());
    }
    let (reg, script) = expect_reg(operand(ctx, side)?)?;
    xor_fanout(ctx, &reg, w, 0);
    ctx.unwind(&script)
}

// ─── bit-level operators ─────────────────────────────────────────────

/// Bitwise And/Or/Xor over identical formats, bit by bit. Classical sides
/// fold into plain X/CX choices per bit; a shared qubit on both sides
/// degenerates to a copy (And/Or) or cancels (Xor).
fn synth_bit_bin(
    ctx: &mut Ctx,
    e: &AnnExpr,
    op: BitBinOp,
    l: &AnnExpr,
    r: &AnnExpr,
) -> Result<RegSlice, SynthError> {
    let dst = ctx.alloc_reg(e.fmt)?;
    let lo = operand(ctx, l)?;
    let ro = operand(ctx, r)?;
    let code_of = |c: &BigRational| {
        e.fmt.encode_exact(c).ok_or_else(|| {
            SynthError::Internal(format!("constant {c} does not fit format {}", e.fmt))
        })
    };
    match (&lo, &ro) {
        (Src::Const(a), Src::Const(b)) => {
            let (a, b) = (code_of(a)?, code_of(b)?);
            let c = match op {
                BitBinOp::And => a & b,
                BitBinOp::Or => a | b,
                BitBinOp::Xor => a ^ b,
            };
            xor_const(ctx, &dst, c);
        }
        (Src::Const(c), Src::Reg(reg, _)) | (Src::Reg(reg, _), Src::Const(c)) => {
            let code = code_of(c)?;
            for (i, &d) in dst.qubits.iter().enumerate() {
                let cbit = code >> i & 1 == 1;
                let q = reg.qubits[i];
                match (op, cbit) {
                    (BitBinOp::And, true) => ctx.b.gate(GateKind::CX, vec![q, d]),
                    (BitBinOp::And, false) => {}
                    (BitBinOp::Or, true) => ctx.b.gate(GateKind::X, vec![d]),
                    (BitBinOp::Or, false) => ctx.b.gate(GateKind::CX, vec![q, d]),
                    (BitBinOp::Xor, cb) => {
                        ctx.b.gate(GateKind::CX, vec![q, d]);
                        if cb {
                            ctx.b.gate(GateKind::X, vec![d]);
                        }
                    }
                }
            }
        }
        (Src::Reg(la, _), Src::Reg(rb, _)) => {
            for (i, &d) in dst.qubits.iter().enumerate() {
                let (ql, qr) = (la.qubits[i], rb.qubits[i]);
                if ql == qr {
                    match op {
                        BitBinOp::And | BitBinOp::Or => ctx.b.gate(GateKind::CX, vec![ql, d]),
                        BitBinOp::Xor => {} // q ⊕ q = 0
                    }
                    continue;
                }
                match op {
                    BitBinOp::And => ctx.b.gate(GateKind::CCX, vec![ql, qr, d]),
                    BitBinOp::Xor => {
                        ctx.b.gate(GateKind::CX, vec![ql, d]);
                        ctx.b.gate(GateKind::CX, vec![qr, d]);
                    }
                    BitBinOp::Or => {
                        // De Morgan: ~(~l & ~r)
                        ctx.b.gate(GateKind::X, vec![ql]);
                        ctx.b.gate(GateKind::X, vec![qr]);
                        ctx.b.gate(GateKind::CCX, vec![ql, qr, d]);
                        ctx.b.gate(GateKind::X, vec![qr]);
                        ctx.b.gate(GateKind::X, vec![ql]);
                        ctx.b.gate(GateKind::X, vec![d]);
                    }
                }
            }
        }
    }
    if let Src::Reg(_, script) = ro {
        ctx.unwind(&script)?;
    }
    if let Src::Reg(_, script) = lo {
        ctx.unwind(&script)?;
    }
    Ok(dst)
}

fn synth_bit_not(ctx: &mut Ctx, e: &AnnExpr, x: &AnnExpr) -> Result<RegSlice, SynthError> {
    let dst = ctx.alloc_reg(e.fmt)?;
    match operand(ctx, x)? {
        Src::Const(c) => {
            let code = e.fmt.encode_exact(&c).ok_or_else(|| {
                SynthError::Internal(format!("constant {c} does not fit format {}", e.fmt))
            })?;
            let mask = if e.fmt.size >= 64 { u64::MAX } else { (1u64 << e.fmt.size) - 1 };
            xor_const(ctx, &dst, !code & mask);
        }
        Src::Reg(reg, script) => {
            for (s, d) in reg.qubits.iter().zip(&dst.qubits) {
                ctx.b.gate(GateKind::CX, vec![*s, *d]);
                ctx.b.gate(GateKind::X, vec![*d]);
            }
            ctx.unwind(&script)?;
        }
    }
    Ok(dst)
}

// ─── plain bit moves ─────────────────────────────────────────────────

/// dst ^= the source value scaled by 2^exp and converted to dst's format
/// (floor at the bottom, wrap at the top, sign extension in between) — a
/// pure CX fanout along the alignment plan.
fn xor_fanout(ctx: &mut Ctx, src: &RegSlice, dst: &RegSlice, exp: i64) {
    let plan = plan_scaled_alignment(&src.fmt, &dst.fmt, exp);
    for (k, bs) in plan.dst_bits.iter().enumerate() {
        match bs {
            BitSource::Zero => {}
            BitSource::Src(j) | BitSource::SignOf(j) => {
                ctx.b.gate(GateKind::CX, vec![src.qubits[*j as usize], dst.qubits[k]]);
            }
        }
    }
}

fn xor_const(ctx: &mut Ctx, dst: &RegSlice, code: u64) {
    for (k, &q) in dst.qubits.iter().enumerate() {
        if code >> k & 1 == 1 {
            ctx.b.gate(GateKind::X, vec![q]);
        }
    }
}

// ─── phase polynomials ───────────────────────────────────────────────

/// Multilinear polynomial over qubit bits: monomial support → coefficient.
/// The empty set is the constant term. Products reduce by b² = b, which is
/// precisely set union on the support.
type Poly = BTreeMap<BTreeSet<QubitId>, BigRational>;

fn phase_polynomial(ctx: &Ctx, e: &AnnExpr) -> Result<Poly, SynthError> {
    Ok(match &e.kind {
        AnnExprKind::Const(c) => {
            let mut p = Poly::new();
            p.insert(BTreeSet::new(), c.clone());
            p
        }
        AnnExprKind::Leaf(path) => {
            let qs = ctx.path_qubits(path)?;
            let mut p = Poly::new();
            for (j, &q) in qs.iter().enumerate() {
                p.insert(BTreeSet::from([q]), e.fmt.bit_weight(j as u32));
            }
            p
        }
        AnnExprKind::Add(l, r) => {
            poly_add(phase_polynomial(ctx, l)?, &phase_polynomial(ctx, r)?, false)
        }
        AnnExprKind::Sub(l, r) => {
            poly_add(phase_polynomial(ctx, l)?, &phase_polynomial(ctx, r)?, true)
        }
        AnnExprKind::Neg(x) => poly_scale(phase_polynomial(ctx, x)?, &-BigRational::from_integer(1.into())),
        AnnExprKind::MulConst { c, operand } => poly_scale(phase_polynomial(ctx, operand)?, c),
        AnnExprKind::Mul { mcand, mult } => {
            poly_mul(&phase_polynomial(ctx, mcand)?, &phase_polynomial(ctx, mult)?)
        }
        AnnExprKind::Shl { operand, k } => {
            poly_scale(phase_polynomial(ctx, operand)?, &crate::types::pow2(*k as i64))
        }
        AnnExprKind::Shr { operand, k } => {
            poly_scale(phase_polynomial(ctx, operand)?, &crate::types::pow2(-(*k as i64)))
        }
        AnnExprKind::Rel { .. }
        | AnnExprKind::BitBin { .. }
        | AnnExprKind::BitNot(_)
        | AnnExprKind::Logic { .. }
        | AnnExprKind::LogicNot(_) => {
            return Err(SynthError::NonPolynomial { span: e.span });
        }
    })
}

fn poly_add(mut a: Poly, b: &Poly, negate_b: bool) -> Poly {
    for (k, c) in b {
        let slot = a.entry(k.clone()).or_insert_with(BigRational::zero);
        if negate_b {
            *slot -= c;
        } else {
            *slot += c;
        }
    }
    a.retain(|_, c| !c.is_zero());
    a
}

fn poly_scale(mut a: Poly, c: &BigRational) -> Poly {
    if c.is_zero() {
        return Poly::new();
    }
    for v in a.values_mut() {
        *v *= c;
    }
    a
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (sa, ca) in a {
        for (sb, cb) in b {
            let key: BTreeSet<QubitId> = sa.union(sb).copied().collect();
            *out.entry(key).or_insert_with(BigRational::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// e^{iθ·f(v)} as one diagonal gate per monomial; the constant term is an
/// unobservable global phase and is dropped.
fn emit_phase(ctx: &mut Ctx, poly: &Poly, theta: f64) {
    for (support, coef) in poly {
        if support.is_empty() {
            continue;
        }
        let angle = theta * coef.to_f64().unwrap_or(0.0);
        if angle == 0.0 {
            continue;
        }
        let qs: Vec<QubitId> = support.iter().copied().collect();
        let kind = match qs.len() {
            1 => GateKind::P(angle),
            2 => GateKind::CP(angle),
            _ => GateKind::MCP(angle),
        };
        ctx.b.gate(kind, qs);
    }
}

// ─── amplitude encoding ──────────────────────────────────────────────

/// Rotate the indicator by 2·arcsin(clamp(value)) for every representable
/// value of the computed register: select each code with an X conjugation,
/// then apply a multi-controlled RY built from two MCX and two half-angle
/// rotations. Zero rotations are skipped; the value register is uncomputed
/// afterwards.
fn synth_assign_amplitude(
    ctx: &mut Ctx,
    expr: &AnnExpr,
    indicator: &TypedPath,
    span: Span,
) -> Result<(), SynthError> {
    let ind = ctx.path_qubits(indicator)?[0];
    let mut overlapping = false;
    walk_leaves(expr, &mut |p| overlapping |= p.overlaps(indicator));
    if overlapping {
        return Err(SynthError::SelfReference { span });
    }
    if let Some(c) = expr.is_const() {
        let a = rotation_for(c.to_f64().unwrap_or(0.0));
        if a != 0.0 {
            ctx.b.gate(GateKind::RY(a), vec![ind]);
        }
        return Ok(());
    }
    let (reg, script) = expect_reg(operand(ctx, expr)?)?;
    let m = reg.fmt.size;
    for code in 0..(1u64 << m) {
        let v = reg.fmt.decode(code).to_f64().unwrap_or(0.0);
        let a = rotation_for(v);
        if a == 0.0 {
            continue;
        }
        let conj: Vec<QubitId> = (0..m)
            .filter(|j| code >> j & 1 == 0)
            .map(|j| reg.qubits[j as usize])
            .collect();
        for &q in &conj {
            ctx.b.gate(GateKind::X, vec![q]);
        }
        let mut qs = reg.qubits.clone();
        qs.push(ind);
        ctx.b.gate(GateKind::RY(a / 2.0), vec![ind]);
        ctx.b.gate(mcx_kind(m as usize), qs.clone());
        ctx.b.gate(GateKind::RY(-a / 2.0), vec![ind]);
        ctx.b.gate(mcx_kind(m as usize), qs);
        for &q in &conj {
            ctx.b.gate(GateKind::X, vec![q]);
        }
    }
    ctx.unwind(&script)
}

fn rotation_for(v: f64) -> f64 {
    2.0 * v.clamp(-1.0, 1.0).asin()
}

// ─── tests ───────────────────────────────────────────────────────────
