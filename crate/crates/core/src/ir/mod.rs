//! Gate-level circuit representation.
//!
//! Circuits are flat event lists over virtual qubit ids handed out by a
//! [`QubitPool`]. The structural functors ([`adjoint`], [`controlled`],
//! [`power`]) are pure event transforms; [`decompose_multicontrol`] rewrites
//! the two variadic gates into the fixed base set, after which
//! [`qasm::emit_qasm3`] can serialize the circuit.

pub mod qasm;

use std::collections::BTreeSet;

use crate::types::FixedPointFormat;

pub type QubitId = u32;

pub const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Sdg,
    Tdg,
    RX(f64),
    RY(f64),
    RZ(f64),
    P(f64),
    CX,
    CCX,
    SWAP,
    CP(f64),
    /// qubits = [controls..., target]; any number of controls.
    MCX,
    /// Phase on the all-ones subspace of every listed qubit (symmetric).
    MCP(f64),
}

impl GateKind {
    pub fn inverse(self) -> GateKind {
        use GateKind::*;
        match self {
            S => Sdg,
            Sdg => S,
            T => Tdg,
            Tdg => T,
            RX(t) => RX(-t),
            RY(t) => RY(-t),
            RZ(t) => RZ(-t),
            P(t) => P(-t),
            CP(t) => CP(-t),
            MCP(t) => MCP(-t),
            g => g,
        }
    }

    /// Lowercase mnemonic (doubles as the QASM opcode for the base set).
    pub fn name(&self) -> &'static str {
        use GateKind::*;
        match self {
            H => "h",
            X => "x",
            Y => "y",
            Z => "z",
            S => "s",
            T => "t",
            Sdg => "sdg",
            Tdg => "tdg",
            RX(_) => "rx",
            RY(_) => "ry",
            RZ(_) => "rz",
            P(_) => "p",
            CX => "cx",
            CCX => "ccx",
            SWAP => "swap",
            CP(_) => "cp",
            MCX => "mcx",
            MCP(_) => "mcp",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        use GateKind::*;
        match self {
            RX(t) | RY(t) | RZ(t) | P(t) | CP(t) | MCP(t) => Some(*t),
            _ => None,
        }
    }

    /// Two-qubit-gate cost in CX units, the conventional comparison metric.
    /// One-qubit gates are free; CP costs 2 (its standard two-CX expansion),
    /// CCX 6, SWAP 3; the variadic gates are priced at their ladder
    /// decomposition.
    pub fn cx_equiv(&self, num_qubits: usize) -> usize {
        use GateKind::*;
        match self {
            CX => 1,
            CP(_) => 2,
            SWAP => 3,
            CCX => 6,
            MCX => {
                let k = num_qubits - 1;
                match k {
                    0 => 0,
                    1 => 1,
                    2 => 6,
                    _ => 6 * (2 * (k - 2) + 1),
                }
            }
            MCP(_) => match num_qubits {
                1 => 0,
                2 => 2,
                k => 12 * (k - 2) + 2,
            },
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<QubitId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Gate(Gate),
    Alloc(Vec<QubitId>),
    Release(Vec<QubitId>),
    /// Static liveness assertion: exactly these qubits are live here.
    Checkpoint(Vec<QubitId>),
}

/// One of the circuit's named result registers (main's output parameters).
#[derive(Debug, Clone)]
pub struct OutputReg {
    pub name: String,
    pub qubits: Vec<QubitId>,
    /// Numeric interpretation of the register, when it has one.
    pub fmt: Option<FixedPointFormat>,
    /// Human-readable type, carried into emission comments.
    pub desc: String,
}

#[derive(Debug, Clone)]
pub struct CircuitIR {
    pub events: Vec<Event>,
    /// Peak number of simultaneously live qubits.
    pub width: u32,
    pub outputs: Vec<OutputReg>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IrError {
    #[error("allocation count must be at least 1")]
    InvalidCount,
    #[error("control qubit {0} already appears in the controlled fragment")]
    OverlappingControl(QubitId),
    #[error("gate '{0}' has no OpenQASM form; decompose multi-controls first")]
    UnsupportedGate(String),
    #[error("malformed circuit: {0}")]
    Invalid(String),
}

// ─── qubit pool ──────────────────────────────────────────────────────

/// Hands out virtual qubit ids, preferring the most recently released
/// (LIFO) so register reuse stays local. With `recycle` off every
/// allocation is fresh — semantics must not change, only width.
#[derive(Debug, Clone)]
pub struct QubitPool {
    free: Vec<QubitId>,
    next: QubitId,
    live: BTreeSet<QubitId>,
    peak: u32,
    pub recycle: bool,
}

impl Default for QubitPool {
    fn default() -> Self {
        QubitPool::new(true)
    }
}

impl QubitPool {
    pub fn new(recycle: bool) -> QubitPool {
        QubitPool { free: Vec::new(), next: 0, live: BTreeSet::new(), peak: 0, recycle }
    }

    pub fn alloc(&mut self, n: usize) -> Result<Vec<QubitId>, IrError> {
        if n == 0 {
            return Err(IrError::InvalidCount);
        }
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let id = match self.free.pop() {
                Some(id) if self.recycle => id,
                _ => {
                    let id = self.next;
                    self.next += 1;
                    id
                }
            };
            self.live.insert(id);
            ids.push(id);
        }
        self.peak = self.peak.max(self.live.len() as u32);
        Ok(ids)
    }

    pub fn release(&mut self, ids: &[QubitId]) -> Result<(), IrError> {
        for &id in ids {
            if !self.live.remove(&id) {
                return Err(IrError::Invalid(format!("release of non-live qubit {id}")));
            }
            self.free.push(id);
        }
        Ok(())
    }

    /// Re-mark specific recorded ids as live (used when replaying an event
    /// fragment whose allocations are already pinned to ids).
    pub fn reclaim(&mut self, ids: &[QubitId]) -> Result<(), IrError> {
        for &id in ids {
            if self.live.contains(&id) {
                return Err(IrError::Invalid(format!("qubit {id} allocated while live")));
            }
            self.free.retain(|&f| f != id);
            self.next = self.next.max(id + 1);
            self.live.insert(id);
        }
        self.peak = self.peak.max(self.live.len() as u32);
        Ok(())
    }

    /// Ensure future fresh ids start above `id`.
    pub fn seed_above(&mut self, id: QubitId) {
        self.next = self.next.max(id + 1);
    }

    pub fn live(&self) -> &BTreeSet<QubitId> {
        &self.live
    }

    pub fn peak(&self) -> u32 {
        self.peak
    }
}

// ─── builder ─────────────────────────────────────────────────────────

/// Single writer that keeps the event list and the pool in sync.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    pub events: Vec<Event>,
    pub pool: QubitPool,
}

impl CircuitBuilder {
    pub fn new(recycle: bool) -> CircuitBuilder {
        CircuitBuilder { events: Vec::new(), pool: QubitPool::new(recycle) }
    }

    pub fn alloc(&mut self, n: usize) -> Result<Vec<QubitId>, IrError> {
        let ids = self.pool.alloc(n)?;
        self.events.push(Event::Alloc(ids.clone()));
        Ok(ids)
    }

    pub fn release(&mut self, ids: &[QubitId]) -> Result<(), IrError> {
        self.pool.release(ids)?;
        self.events.push(Event::Release(ids.to_vec()));
        Ok(())
    }

    pub fn gate(&mut self, kind: GateKind, qubits: Vec<QubitId>) {
        debug_assert!(
            qubits.iter().collect::<BTreeSet<_>>().len() == qubits.len(),
            "gate operands must be distinct: {kind:?} {qubits:?}"
        );
        self.events.push(Event::Gate(Gate { kind, qubits }));
    }

    /// Record that exactly the currently-live qubits are expected live.
    pub fn checkpoint(&mut self) {
        self.events.push(Event::Checkpoint(self.pool.live().iter().copied().collect()));
    }

    /// Append a fragment that was NOT recorded through this builder (an
    /// adjoint of an earlier fragment, say), replaying its alloc/release
    /// bookkeeping so the pool's live set stays truthful. Ids are kept
    /// as-is.
    pub fn splice(&mut self, events: Vec<Event>) -> Result<(), IrError> {
        for ev in events {
            match &ev {
                Event::Alloc(ids) => self.pool.reclaim(ids)?,
                Event::Release(ids) => self.pool.release(ids)?,
                _ => {}
            }
            self.events.push(ev);
        }
        Ok(())
    }

    /// Append events whose pool effects are already accounted for — the
    /// put-back half of record/detach/transform, where the transform
    /// (controlling a fragment) leaves alloc/release events untouched.
    pub fn splice_recorded(&mut self, events: Vec<Event>) {
        self.events.extend(events);
    }

    /// Detach the events recorded since index `from`, leaving the pool
    /// state alone (pair with [`Self::splice_recorded`]).
    pub fn take_since(&mut self, from: usize) -> Vec<Event> {
        self.events.split_off(from)
    }

    /// Copy of the events recorded since index `from` (pair with
    /// [`Self::splice`] of their adjoint to uncompute a fragment).
    pub fn events_since(&self, from: usize) -> Vec<Event> {
        self.events[from..].to_vec()
    }

    pub fn finish(self, outputs: Vec<OutputReg>) -> CircuitIR {
        CircuitIR { events: self.events, width: self.pool.peak(), outputs }
    }
}

// ─── functors ────────────────────────────────────────────────────────

/// Reverse the fragment and invert each gate; allocations and releases
/// swap roles. Applying it twice yields the original.
pub fn adjoint_events(events: &[Event]) -> Vec<Event> {
    events
        .iter()
        .rev()
        .map(|ev| match ev {
            Event::Gate(g) => {
                Event::Gate(Gate { kind: g.kind.inverse(), qubits: g.qubits.clone() })
            }
            Event::Alloc(ids) => Event::Release(ids.clone()),
            Event::Release(ids) => Event::Alloc(ids.clone()),
            Event::Checkpoint(ids) => Event::Checkpoint(ids.clone()),
        })
        .collect()
}

pub fn adjoint(c: &CircuitIR) -> CircuitIR {
    CircuitIR { events: adjoint_events(&c.events), width: c.width, outputs: c.outputs.clone() }
}

/// Add `ctrl` as one more control to every gate. Allocations are left
/// unconditional: ancillae enter and leave in |0⟩ either way, so skipping
/// them under a false control is unobservable (and the release check
/// verifies it).
pub fn controlled_events(events: &[Event], ctrl: QubitId) -> Result<Vec<Event>, IrError> {
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        match ev {
            Event::Gate(g) => {
                if g.qubits.contains(&ctrl) {
                    return Err(IrError::OverlappingControl(ctrl));
                }
                controlled_gate(g, ctrl, &mut out);
            }
            other => out.push(other.clone()),
        }
    }
    Ok(out)
}

pub fn controlled(c: &CircuitIR, ctrl: QubitId) -> Result<CircuitIR, IrError> {
    Ok(CircuitIR {
        events: controlled_events(&c.events, ctrl)?,
        width: c.width,
        outputs: c.outputs.clone(),
    })
}

fn controlled_gate(g: &Gate, ctrl: QubitId, out: &mut Vec<Event>) {
    use GateKind::*;
    let mut push = |kind: GateKind, qubits: Vec<QubitId>| out.push(Event::Gate(Gate { kind, qubits }));
    let with_ctrl = |g: &Gate| {
        let mut qs = Vec::with_capacity(g.qubits.len() + 1);
        qs.push(ctrl);
        qs.extend_from_slice(&g.qubits);
        qs
    };
    match g.kind {
        // The X family just gains a control slot.
        X => push(CX, with_ctrl(g)),
        CX => push(CCX, with_ctrl(g)),
        CCX | MCX => push(MCX, with_ctrl(g)),
        // The phase family is symmetric in its operands.
        Z => push(CP(PI), with_ctrl(g)),
        S => push(CP(PI / 2.0), with_ctrl(g)),
        Sdg => push(CP(-PI / 2.0), with_ctrl(g)),
        T => push(CP(PI / 4.0), with_ctrl(g)),
        Tdg => push(CP(-PI / 4.0), with_ctrl(g)),
        P(t) => push(CP(t), with_ctrl(g)),
        CP(t) | MCP(t) => push(MCP(t), with_ctrl(g)),
        // Rotations via the half-angle sandwich: when the control is off the
        // two halves cancel; when on they compose to the full rotation.
        RZ(t) => {
            let q = g.qubits[0];
            push(RZ(t / 2.0), vec![q]);
            push(CX, vec![ctrl, q]);
            push(RZ(-t / 2.0), vec![q]);
            push(CX, vec![ctrl, q]);
        }
        RY(t) => {
            let q = g.qubits[0];
            push(RY(t / 2.0), vec![q]);
            push(CX, vec![ctrl, q]);
            push(RY(-t / 2.0), vec![q]);
            push(CX, vec![ctrl, q]);
        }
        // RX = H·RZ·H exactly, so conjugate the controlled-RZ once.
        RX(t) => {
            let q = g.qubits[0];
            push(H, vec![q]);
            push(RZ(t / 2.0), vec![q]);
            push(CX, vec![ctrl, q]);
            push(RZ(-t / 2.0), vec![q]);
            push(CX, vec![ctrl, q]);
            push(H, vec![q]);
        }
        // Y = S·X·S†, H = RY(−π/4)·X·RY(π/4): control only the X inside.
        Y => {
            let q = g.qubits[0];
            push(Sdg, vec![q]);
            push(CX, vec![ctrl, q]);
            push(S, vec![q]);
        }
        H => {
            let q = g.qubits[0];
            push(RY(PI / 4.0), vec![q]);
            push(CX, vec![ctrl, q]);
            push(RY(-PI / 4.0), vec![q]);
        }
        // Fredkin from two CX and one CCX.
        SWAP => {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            push(CX, vec![b, a]);
            push(CCX, vec![ctrl, a, b]);
            push(CX, vec![b, a]);
        }
    }
}

pub fn power(c: &CircuitIR, k: u32) -> CircuitIR {
    let mut events = Vec::with_capacity(c.events.len() * k as usize);
    for _ in 0..k {
        events.extend(c.events.iter().cloned());
    }
    CircuitIR { events, width: c.width, outputs: c.outputs.clone() }
}

// ─── multicontrol decomposition ──────────────────────────────────────

/// Rewrite MCX/MCP into the base gate set using clean ancillae in a
/// compute/use/uncompute ladder. A k-control X costs 2(k−2)+1 CCX and
/// k−2 ancillae; a k-qubit phase reduces to an AND-ladder plus one CP.
pub fn decompose_multicontrol(c: &CircuitIR) -> Result<CircuitIR, IrError> {
    let max_id = c
        .events
        .iter()
        .flat_map(|ev| match ev {
            Event::Gate(g) => g.qubits.clone(),
            Event::Alloc(ids) | Event::Release(ids) | Event::Checkpoint(ids) => ids.clone(),
        })
        .max();
    let mut pool = QubitPool::new(true);
    if let Some(m) = max_id {
        // Fresh ancillae start above every recorded id; recorded ids that
        // get released become recyclable as the replay proceeds.
        pool.seed_above(m);
    }
    let mut out = Vec::with_capacity(c.events.len());
    let mut width = c.width;
    for ev in &c.events {
        match ev {
            Event::Gate(g) => match g.kind {
                GateKind::MCX => {
                    let (ctrls, target) = g.qubits.split_at(g.qubits.len() - 1);
                    emit_and_ladder(ctrls, target[0], GateKind::X, &mut pool, &mut out)?;
                }
                GateKind::MCP(theta) => {
                    let (rest, last) = g.qubits.split_at(g.qubits.len() - 1);
                    match rest.len() {
                        0 => out.push(Event::Gate(Gate {
                            kind: GateKind::P(theta),
                            qubits: vec![last[0]],
                        })),
                        _ => emit_and_ladder(
                            rest,
                            last[0],
                            GateKind::P(theta),
                            &mut pool,
                            &mut out,
                        )?,
                    }
                }
                _ => out.push(ev.clone()),
            },
            Event::Alloc(ids) => {
                pool.reclaim(ids)?;
                out.push(ev.clone());
            }
            Event::Release(ids) => {
                pool.release(ids)?;
                out.push(ev.clone());
            }
            Event::Checkpoint(_) => out.push(ev.clone()),
        }
        width = width.max(pool.peak());
    }
    Ok(CircuitIR { events: out, width, outputs: c.outputs.clone() })
}

/// `target op` conditioned on the AND of `ctrls`, built from CCX with a
/// compute/uncompute chain of clean ancillae. `op` must be a one-qubit
/// kind (X or P); with 0 controls it applies directly, with 1 it becomes
/// the controlled form.
fn emit_and_ladder(
    ctrls: &[QubitId],
    target: QubitId,
    op: GateKind,
    pool: &mut QubitPool,
    out: &mut Vec<Event>,
) -> Result<(), IrError> {
    let apply = |qubits: Vec<QubitId>, out: &mut Vec<Event>| {
        let kind = match (op, qubits.len()) {
            (GateKind::X, 1) => GateKind::X,
            (GateKind::X, 2) => GateKind::CX,
            (GateKind::X, 3) => GateKind::CCX,
            (GateKind::P(t), 1) => GateKind::P(t),
            (GateKind::P(t), 2) => GateKind::CP(t),
            _ => unreachable!("ladder leaves at most two controls"),
        };
        out.push(Event::Gate(Gate { kind, qubits }));
    };
    match ctrls.len() {
        0 => apply(vec![target], out),
        1 => apply(vec![ctrls[0], target], out),
        2 if matches!(op, GateKind::X) => apply(vec![ctrls[0], ctrls[1], target], out),
        k => {
            // Fold controls pairwise into a chain of ANDs; the last link
            // (and for phase, the last two qubits) feeds the base gate.
            let direct = if matches!(op, GateKind::X) { 2 } else { 1 };
            let anc = pool.alloc(k - direct)?;
            out.push(Event::Alloc(anc.clone()));
            let mut compute = Vec::new();
            compute.push(Event::Gate(Gate {
                kind: GateKind::CCX,
                qubits: vec![ctrls[0], ctrls[1], anc[0]],
            }));
            for (i, &a) in anc.iter().enumerate().skip(1) {
                compute.push(Event::Gate(Gate {
                    kind: GateKind::CCX,
                    qubits: vec![ctrls[i + 1], anc[i - 1], a],
                }));
            }
            out.extend(compute.iter().cloned());
            let top = *anc.last().unwrap();
            if direct == 2 {
                apply(vec![*ctrls.last().unwrap(), top, target], out);
            } else {
                apply(vec![top, target], out);
            }
            out.extend(adjoint_events(&compute));
            out.push(Event::Release(anc.clone()));
            pool.release(&anc)?;
        }
    }
    Ok(())
}

// ─── validation & reporting ──────────────────────────────────────────

/// Structural well-formedness: operands live and distinct, alloc/release
/// alternation, checkpoints matching the live set. Returns the peak width.
pub fn validate(c: &CircuitIR) -> Result<u32, IrError> {
    let mut live: BTreeSet<QubitId> = BTreeSet::new();
    let mut peak = 0u32;
    for (i, ev) in c.events.iter().enumerate() {
        match ev {
            Event::Alloc(ids) => {
                for &id in ids {
                    if !live.insert(id) {
                        return Err(IrError::Invalid(format!(
                            "event {i}: qubit {id} allocated while live"
                        )));
                    }
                }
            }
            Event::Release(ids) => {
                for &id in ids {
                    if !live.remove(&id) {
                        return Err(IrError::Invalid(format!(
                            "event {i}: qubit {id} released while not live"
                        )));
                    }
                }
            }
            Event::Gate(g) => {
                let mut seen = BTreeSet::new();
                for &q in &g.qubits {
                    if !live.contains(&q) {
                        return Err(IrError::Invalid(format!(
                            "event {i}: gate {} touches dead qubit {q}",
                            g.kind.name()
                        )));
                    }
                    if !seen.insert(q) {
                        return Err(IrError::Invalid(format!(
                            "event {i}: gate {} repeats operand {q}",
                            g.kind.name()
                        )));
                    }
                }
            }
            Event::Checkpoint(expected) => {
                let actual: Vec<QubitId> = live.iter().copied().collect();
                if &actual != expected {
                    return Err(IrError::Invalid(format!(
                        "event {i}: checkpoint expected live {expected:?}, found {actual:?}"
                    )));
                }
            }
        }
        peak = peak.max(live.len() as u32);
    }
    Ok(peak)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourceReport {
    pub gate_counts: std::collections::BTreeMap<&'static str, usize>,
    pub cx_equiv: usize,
    pub depth: usize,
    pub width: u32,
    /// Total qubit allocations (churn): higher than width when registers
    /// are recycled.
    pub allocations: usize,
}

impl std::fmt::Display for ResourceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "width: {}", self.width)?;
        writeln!(f, "depth: {}", self.depth)?;
        writeln!(f, "cx-equivalent two-qubit gates: {}", self.cx_equiv)?;
        writeln!(f, "qubit allocations: {}", self.allocations)?;
        write!(f, "gates:")?;
        if self.gate_counts.is_empty() {
            write!(f, " (none)")?;
        }
        for (name, n) in &self.gate_counts {
            write!(f, " {name}:{n}")?;
        }
        Ok(())
    }
}

/// Counts, CX-equivalents, and greedy depth (each gate occupies one layer
/// slot on each of its operands).
pub fn resource_report(c: &CircuitIR) -> ResourceReport {
    let mut r = ResourceReport { width: c.width, ..Default::default() };
    let mut qubit_depth: std::collections::HashMap<QubitId, usize> = Default::default();
    for ev in &c.events {
        match ev {
            Event::Gate(g) => {
                *r.gate_counts.entry(g.kind.name()).or_insert(0) += 1;
                r.cx_equiv += g.kind.cx_equiv(g.qubits.len());
                let layer = 1 + g
                    .qubits
                    .iter()
                    .map(|q| qubit_depth.get(q).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                for &q in &g.qubits {
                    qubit_depth.insert(q, layer);
                }
                r.depth = r.depth.max(layer);
            }
            Event::Alloc(ids) => r.allocations += ids.len(),
            _ => {}
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kind: GateKind, qubits: &[QubitId]) -> Event {
        Event::Gate(Gate { kind, qubits: qubits.to_vec() })
    }

    fn bare(events: Vec<Event>) -> CircuitIR {
        CircuitIR { events, width: 0, outputs: vec![] }
    }

    #[test]
    fn pool_hands_out_recycled_ids_lifo() {
        let mut pool = QubitPool::new(true);
        assert_eq!(pool.alloc(2).unwrap(), vec![0, 1]);
        pool.release(&[0, 1]).unwrap();
        assert_eq!(pool.alloc(1).unwrap(), vec![1]);
        assert_eq!(pool.alloc(2).unwrap(), vec![0, 2]);
        assert_eq!(pool.peak(), 3);
        assert_eq!(pool.alloc(0), Err(IrError::InvalidCount));

        let mut fresh = QubitPool::new(false);
        assert_eq!(fresh.alloc(2).unwrap(), vec![0, 1]);
        fresh.release(&[0, 1]).unwrap();
        assert_eq!(fresh.alloc(1).unwrap(), vec![2]);
    }

    #[test]
    fn adjoint_reverses_and_inverts() {
        let c = bare(vec![
            Event::Alloc(vec![0, 1]),
            g(GateKind::H, &[0]),
            g(GateKind::CX, &[0, 1]),
            g(GateKind::RZ(0.3), &[1]),
            g(GateKind::S, &[0]),
            Event::Release(vec![1]),
        ]);
        let a = adjoint(&c);
        assert_eq!(
            a.events,
            vec![
                Event::Alloc(vec![1]),
                g(GateKind::Sdg, &[0]),
                g(GateKind::RZ(-0.3), &[1]),
                g(GateKind::CX, &[0, 1]),
                g(GateKind::H, &[0]),
                Event::Release(vec![0, 1]),
            ]
        );
        assert_eq!(adjoint(&a).events, c.events);
    }

    #[test]
    fn controlled_maps_the_gate_family() {
        let cases: Vec<(Event, Vec<Event>)> = vec![
            (g(GateKind::X, &[1]), vec![g(GateKind::CX, &[0, 1])]),
            (g(GateKind::CX, &[1, 2]), vec![g(GateKind::CCX, &[0, 1, 2])]),
            (g(GateKind::CCX, &[1, 2, 3]), vec![g(GateKind::MCX, &[0, 1, 2, 3])]),
            (g(GateKind::Z, &[1]), vec![g(GateKind::CP(PI), &[0, 1])]),
            (g(GateKind::T, &[1]), vec![g(GateKind::CP(PI / 4.0), &[0, 1])]),
            (g(GateKind::P(0.7), &[1]), vec![g(GateKind::CP(0.7), &[0, 1])]),
            (g(GateKind::CP(0.7), &[1, 2]), vec![g(GateKind::MCP(0.7), &[0, 1, 2])]),
            (
                g(GateKind::RZ(0.8), &[1]),
                vec![
                    g(GateKind::RZ(0.4), &[1]),
                    g(GateKind::CX, &[0, 1]),
                    g(GateKind::RZ(-0.4), &[1]),
                    g(GateKind::CX, &[0, 1]),
                ],
            ),
            (
                g(GateKind::SWAP, &[1, 2]),
                vec![
                    g(GateKind::CX, &[2, 1]),
                    g(GateKind::CCX, &[0, 1, 2]),
                    g(GateKind::CX, &[2, 1]),
                ],
            ),
        ];
        for (input, want) in cases {
            let got = controlled_events(&[input.clone()], 0).unwrap();
            assert_eq!(got, want, "controlling {input:?}");
        }
        assert_eq!(
            controlled_events(&[g(GateKind::X, &[0])], 0),
            Err(IrError::OverlappingControl(0))
        );
        // Alloc/release pass through unconditionally.
        let frag = vec![Event::Alloc(vec![5]), g(GateKind::X, &[5]), Event::Release(vec![5])];
        let got = controlled_events(&frag, 0).unwrap();
        assert_eq!(got[0], Event::Alloc(vec![5]));
        assert_eq!(got[2], Event::Release(vec![5]));
    }

    #[test]
    fn power_repeats_events() {
        let c = bare(vec![g(GateKind::RZ(0.1), &[0])]);
        assert!(power(&c, 0).events.is_empty());
        assert_eq!(power(&c, 1).events, c.events);
        assert_eq!(power(&c, 3).events.len(), 3);
    }

    #[test]
    fn validator_catches_structural_bugs() {
        let ok = bare(vec![
            Event::Alloc(vec![0, 1]),
            g(GateKind::H, &[0]),
            Event::Checkpoint(vec![0, 1]),
            Event::Release(vec![0, 1]),
        ]);
        assert_eq!(validate(&ok), Ok(2));

        let dead = bare(vec![Event::Alloc(vec![0]), Event::Release(vec![0]), g(GateKind::X, &[0])]);
        assert!(matches!(validate(&dead), Err(IrError::Invalid(m)) if m.contains("dead")));

        let double = bare(vec![Event::Alloc(vec![0]), Event::Alloc(vec![0])]);
        assert!(matches!(validate(&double), Err(IrError::Invalid(m)) if m.contains("while live")));

        let repeat = bare(vec![Event::Alloc(vec![0, 1]), g(GateKind::CX, &[0, 0])]);
        assert!(matches!(validate(&repeat), Err(IrError::Invalid(m)) if m.contains("repeats")));

        let chk = bare(vec![Event::Alloc(vec![0]), Event::Checkpoint(vec![])]);
        assert!(matches!(validate(&chk), Err(IrError::Invalid(m)) if m.contains("checkpoint")));
    }

    #[test]
    fn mcx_ladder_counts() {
        // 3 controls: one ancilla, 2(k−2)+1 = 3 CCX.
        let c = bare(vec![
            Event::Alloc(vec![0, 1, 2, 3]),
            g(GateKind::MCX, &[0, 1, 2, 3]),
            Event::Release(vec![0, 1, 2, 3]),
        ]);
        let d = decompose_multicontrol(&c).unwrap();
        let r = resource_report(&d);
        assert_eq!(r.gate_counts.get("ccx"), Some(&3));
        assert_eq!(r.gate_counts.get("mcx"), None);
        assert_eq!(validate(&d).unwrap(), 5);
        // The ancilla id sits above the recorded ids.
        assert!(d.events.iter().any(|e| matches!(e, Event::Alloc(ids) if ids == &vec![4])));

        // 4 controls: two ancillae, 5 CCX.
        let c = bare(vec![
            Event::Alloc(vec![0, 1, 2, 3, 4]),
            g(GateKind::MCX, &[0, 1, 2, 3, 4]),
            Event::Release(vec![0, 1, 2, 3, 4]),
        ]);
        let d = decompose_multicontrol(&c).unwrap();
        assert_eq!(resource_report(&d).gate_counts.get("ccx"), Some(&5));
        assert_eq!(validate(&d).unwrap(), 7);

        // 2 controls stay a plain CCX; a 2-qubit phase stays CP.
        let c = bare(vec![
            Event::Alloc(vec![0, 1, 2]),
            g(GateKind::MCX, &[0, 1, 2]),
            g(GateKind::MCP(0.4), &[0, 1]),
            Event::Release(vec![0, 1, 2]),
        ]);
        let d = decompose_multicontrol(&c).unwrap();
        assert_eq!(d.events[1], g(GateKind::CCX, &[0, 1, 2]));
        assert_eq!(d.events[2], g(GateKind::CP(0.4), &[0, 1]));

        // 3-qubit phase: AND the first two into an ancilla, CP against the
        // last, uncompute — 2 CCX + 1 CP.
        let c = bare(vec![
            Event::Alloc(vec![0, 1, 2]),
            g(GateKind::MCP(0.9), &[0, 1, 2]),
            Event::Release(vec![0, 1, 2]),
        ]);
        let d = decompose_multicontrol(&c).unwrap();
        let r = resource_report(&d);
        assert_eq!(r.gate_counts.get("ccx"), Some(&2));
        assert_eq!(r.gate_counts.get("cp"), Some(&1));
        validate(&d).unwrap();
    }

    #[test]
    fn report_counts_bell() {
        let c = bare(vec![
            Event::Alloc(vec![0, 1]),
            g(GateKind::H, &[0]),
            g(GateKind::CX, &[0, 1]),
        ]);
        let c = CircuitIR { width: 2, ..c };
        let r = resource_report(&c);
        assert_eq!(r.gate_counts.get("h"), Some(&1));
        assert_eq!(r.gate_counts.get("cx"), Some(&1));
        assert_eq!(r.depth, 2);
        assert_eq!(r.width, 2);
        assert_eq!(r.cx_equiv, 1);
        assert_eq!(r.allocations, 2);

        let empty = resource_report(&bare(vec![]));
        assert_eq!(empty, ResourceReport::default());
    }

    #[test]
    fn builder_splice_keeps_pool_truthful() {
        // The conjugation pattern: record a compute fragment, run a body,
        // then splice the fragment's adjoint to uncompute — the adjoint's
        // swapped alloc/release events release the temp for real.
        let mut b = CircuitBuilder::new(true);
        let q = b.alloc(2).unwrap();
        let mark = b.events.len();
        let t = b.alloc(1).unwrap();
        b.gate(GateKind::CX, vec![q[0], t[0]]);
        let frag = b.events_since(mark);
        b.gate(GateKind::Z, vec![t[0]]);
        b.splice(adjoint_events(&frag)).unwrap();
        assert_eq!(b.pool.live().len(), 2);
        assert_eq!(b.pool.live().iter().copied().collect::<Vec<_>>(), q);
        b.checkpoint();
        let c = b.finish(vec![]);
        assert_eq!(validate(&c).unwrap(), 3);

        // The transform pattern: detach a recorded fragment, control it,
        // put it back; alloc/release events are untouched so the pool is
        // already truthful.
        let mut b = CircuitBuilder::new(true);
        let q = b.alloc(2).unwrap();
        let mark = b.events.len();
        let t = b.alloc(1).unwrap();
        b.gate(GateKind::X, vec![t[0]]);
        b.gate(GateKind::X, vec![t[0]]);
        b.release(&t).unwrap();
        let frag = b.take_since(mark);
        b.splice_recorded(controlled_events(&frag, q[0]).unwrap());
        b.checkpoint();
        let c = b.finish(vec![]);
        assert_eq!(validate(&c).unwrap(), 3);
        assert!(c.events.iter().any(|e| matches!(
            e,
            Event::Gate(Gate { kind: GateKind::CX, .. })
        )));
    }
}
