//! OpenQASM 3 serialization.
//!
//! Virtual qubit ids are remapped onto one physical register of exactly
//! `width` slots: each alloc takes the lowest free slot, each release
//! returns it. The mapping is deterministic, so emission is byte-stable.

use std::collections::HashMap;
use std::fmt::Write;

use super::{CircuitIR, Event, GateKind, IrError, QubitId};

pub fn emit_qasm3(c: &CircuitIR) -> Result<String, IrError> {
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\n");
    out.push_str("include \"stdgates.inc\";\n\n");

    let mut slots = SlotMap::new(c.width);
    // Pre-walk allocations so output-register comments can name physical
    // slots up front; the replay below re-derives the same mapping.
    let final_map = {
        let mut probe = SlotMap::new(c.width);
        for ev in &c.events {
            match ev {
                Event::Alloc(ids) => probe.bind(ids)?,
                Event::Release(ids) => probe.unbind(ids)?,
                _ => {}
            }
        }
        probe.map
    };
    for reg in &c.outputs {
        let phys: Vec<String> = reg
            .qubits
            .iter()
            .map(|q| final_map.get(q).map(|s| s.to_string()).unwrap_or_else(|| "?".into()))
            .collect();
        writeln!(out, "// output {}: {} @ q[{}]", reg.name, reg.desc, phys.join(",")).unwrap();
    }
    writeln!(out, "qubit[{}] q;", c.width.max(1)).unwrap();

    for ev in &c.events {
        match ev {
            Event::Alloc(ids) => slots.bind(ids)?,
            Event::Release(ids) => {
                // Physical slots are reused; the program guarantees they
                // are back in |0⟩, so a reset is not emitted.
                slots.unbind(ids)?
            }
            Event::Checkpoint(_) => {}
            Event::Gate(g) => {
                if matches!(g.kind, GateKind::MCX | GateKind::MCP(_)) {
                    return Err(IrError::UnsupportedGate(g.kind.name().to_string()));
                }
                let name = g.kind.name();
                match g.kind.theta() {
                    Some(t) => write!(out, "{name}({t}) ").unwrap(),
                    None => write!(out, "{name} ").unwrap(),
                }
                let ops: Vec<String> = g
                    .qubits
                    .iter()
                    .map(|q| slots.get(*q).map(|s| format!("q[{s}]")))
                    .collect::<Result<_, _>>()?;
                writeln!(out, "{};", ops.join(", ")).unwrap();
            }
        }
    }
    Ok(out)
}

struct SlotMap {
    map: HashMap<QubitId, u32>,
    free: Vec<u32>,
}

impl SlotMap {
    fn new(width: u32) -> SlotMap {
        // Popping from the back must yield the lowest slot first.
        SlotMap { map: HashMap::new(), free: (0..width.max(1)).rev().collect() }
    }

    fn bind(&mut self, ids: &[QubitId]) -> Result<(), IrError> {
        for &id in ids {
            let slot = self
                .free
                .pop()
                .ok_or_else(|| IrError::Invalid(format!("qubit {id} exceeds declared width")))?;
            self.map.insert(id, slot);
        }
        Ok(())
    }

    fn unbind(&mut self, ids: &[QubitId]) -> Result<(), IrError> {
        for &id in ids {
            let slot = self
                .map
                .remove(&id)
                .ok_or_else(|| IrError::Invalid(format!("released unmapped qubit {id}")))?;
            // Keep descending order so the lowest free slot stays on top.
            let pos = self.free.partition_point(|&s| s > slot);
            self.free.insert(pos, slot);
        }
        Ok(())
    }

    fn get(&self, id: QubitId) -> Result<u32, IrError> {
        self.map
            .get(&id)
            .copied()
            .ok_or_else(|| IrError::Invalid(format!("gate on unmapped qubit {id}")))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{CircuitBuilder, GateKind, OutputReg, PI};
    use super::*;
    use crate::types::FixedPointFormat;

    #[test]
    fn bell_emission() {
        let mut b = CircuitBuilder::new(true);
        let q = b.alloc(2).unwrap();
        b.gate(GateKind::H, vec![q[0]]);
        b.gate(GateKind::CX, vec![q[0], q[1]]);
        let c = b.finish(vec![OutputReg {
            name: "qba".into(),
            qubits: q,
            fmt: None,
            desc: "qarray[qbit, 2]".into(),
        }]);
        let text = emit_qasm3(&c).unwrap();
        assert_eq!(
            text,
            "OPENQASM 3.0;\n\
             include \"stdgates.inc\";\n\n\
             // output qba: qarray[qbit, 2] @ q[0,1]\n\
             qubit[2] q;\n\
             h q[0];\n\
             cx q[0], q[1];\n"
        );
        // Byte-stable across repeated emission.
        assert_eq!(emit_qasm3(&c).unwrap(), text);
    }

    #[test]
    fn rotation_angle_formatting() {
        let mut b = CircuitBuilder::new(true);
        let q = b.alloc(1).unwrap();
        b.gate(GateKind::RZ(PI / 4.0), vec![q[0]]);
        let text = emit_qasm3(&b.finish(vec![])).unwrap();
        assert!(text.contains("rz(0.7853981633974483) q[0];"), "{text}");
    }

    #[test]
    fn recycled_ids_share_slots() {
        let mut b = CircuitBuilder::new(false); // fresh virtual ids only
        let a = b.alloc(1).unwrap();
        b.gate(GateKind::X, vec![a[0]]);
        b.release(&a).unwrap();
        let c2 = b.alloc(1).unwrap();
        assert_ne!(c2[0], a[0]);
        b.gate(GateKind::H, vec![c2[0]]);
        let c = b.finish(vec![]);
        assert_eq!(c.width, 1);
        let text = emit_qasm3(&c).unwrap();
        assert!(text.contains("qubit[1] q;"), "{text}");
        assert!(text.contains("x q[0];"), "{text}");
        assert!(text.contains("h q[0];"), "{text}");
    }

    #[test]
    fn undecomposed_multicontrol_is_rejected() {
        let mut b = CircuitBuilder::new(true);
        let q = b.alloc(4).unwrap();
        b.gate(GateKind::MCX, q.clone());
        let err = emit_qasm3(&b.finish(vec![])).unwrap_err();
        assert_eq!(err, IrError::UnsupportedGate("mcx".into()));
    }

    #[test]
    fn numeric_outputs_carry_formats() {
        let mut b = CircuitBuilder::new(true);
        let q = b.alloc(4).unwrap();
        let fmt = FixedPointFormat::new(4, false, 3);
        let c = b.finish(vec![OutputReg {
            name: "res".into(),
            qubits: q,
            fmt: Some(fmt),
            desc: format!("{fmt}"),
        }]);
        let text = emit_qasm3(&c).unwrap();
        assert!(text.contains("// output res:"), "{text}");
        assert!(text.contains("@ q[0,1,2,3]"), "{text}");
    }
}
