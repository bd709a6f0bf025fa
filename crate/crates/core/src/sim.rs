//! Dense statevector simulator: the semantic oracle for circuit IR.
//!
//! Executes events directly — including the variadic controls, which run as
//! masked kernels without decomposition. Qubits are tracked by a virtual-id →
//! bit-position map; releases verify the qubit is back in |0⟩ and contract the
//! state, so storage always matches the live width exactly.
//!
//! One simulation is single-threaded over its state, but the kernels stripe
//! over amplitudes internally (rayon, behind the `parallel` feature) with a
//! fixed chunk scheme so parallel and sequential runs produce identical bits.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::ir::{CircuitIR, Event, Gate, GateKind, QubitId, PI};
use crate::typed::ConcreteQType;
use crate::types::decimal_string;

pub const MAX_SIM_QUBITS: u32 = 24;

/// Marginal |1⟩ probability below which a released qubit counts as clean:
/// far above accumulated float noise, far below any real entanglement signal.
pub const RELEASE_TOL: f64 = 1e-9;

/// Amplitudes at or below this magnitude are numeric noise for phase and
/// separability queries.
pub const NOISE_TOL: f64 = 1e-12;

/// Stripe width for kernels and partial sums. Reductions add per-stripe
/// subtotals in stripe order, so results do not depend on thread scheduling.
const PAR_BLOCK: usize = 4096;

/// States smaller than this run sequentially even when `parallel` is on.
const PAR_MIN: usize = 1 << 14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("circuit needs {need} live qubits; the simulator cap is {cap}")]
    WidthExceeded { need: u32, cap: u32 },
    #[error("qubit {qubit} released while holding |1> probability {prob:.3e}")]
    NonZeroRelease { qubit: QubitId, prob: f64 },
    #[error("reference basis state has (near-)zero amplitude")]
    ZeroReference,
    #[error("remaining qubits are in superposition; no single marginal amplitude exists")]
    NotSeparable,
    #[error("{0}")]
    Malformed(String),
}

/// An output register plus the type that decodes its measured codes.
#[derive(Debug, Clone)]
pub struct SampleReg {
    pub name: String,
    /// LSB-first.
    pub qubits: Vec<QubitId>,
    pub ty: ConcreteQType,
}

/// Joint measurement histogram: each key holds one code per register, in
/// column order, so cross-register relations survive aggregation.
#[derive(Debug, Clone)]
pub struct SampleResult {
    pub shots: u64,
    pub seed: u64,
    pub columns: Vec<SampleReg>,
    pub counts: BTreeMap<Vec<u64>, u64>,
}

impl SampleResult {
    pub fn render_row(&self, codes: &[u64]) -> Vec<String> {
        self.columns
            .iter()
            .zip(codes)
            .map(|(reg, &code)| decode_value(&reg.ty, code))
            .collect()
    }
}

/// Render a measured code as the value its type denotes. Codes are LSB-first;
/// aggregate types slice fields from the low bits up.
pub fn decode_value(ty: &ConcreteQType, code: u64) -> String {
    match ty {
        ConcreteQType::Bit => if code & 1 == 1 { "1" } else { "0" }.to_string(),
        ConcreteQType::Num(f) => {
            let mask = if f.size >= 64 { u64::MAX } else { (1u64 << f.size) - 1 };
            decimal_string(&f.decode(code & mask))
        }
        ConcreteQType::Array { elem, len } => {
            let esz = elem.total_size();
            let emask = if esz >= 64 { u64::MAX } else { (1u64 << esz) - 1 };
            let vals: Vec<String> = (0..*len)
                .map(|k| decode_value(elem, code >> (k as u32 * esz) & emask))
                .collect();
            format!("[{}]", vals.join(", "))
        }
        ConcreteQType::Record { fields, .. } => {
            let mut off = 0u32;
            let vals: Vec<String> = fields
                .iter()
                .map(|(name, fty)| {
                    let sz = fty.total_size();
                    let fmask = if sz >= 64 { u64::MAX } else { (1u64 << sz) - 1 };
                    let s = format!("{name}: {}", decode_value(fty, code >> off & fmask));
                    off += sz;
                    s
                })
                .collect();
            format!("{{{}}}", vals.join(", "))
        }
    }
}

pub struct Simulator {
    amps: Vec<Complex64>,
    /// Live virtual id → bit position in the amplitude index.
    pos: HashMap<QubitId, u32>,
    /// Inverse map: `order[p]` is the virtual id at bit `p`.
    order: Vec<QubitId>,
    cap: u32,
    par: bool,
}

/// Execute a full circuit from the vacuum state.
pub fn run(circuit: &CircuitIR, max_qubits: u32, parallel: bool) -> Result<Simulator, SimError> {
    let mut sim = Simulator::new(max_qubits);
    sim.set_parallel(parallel);
    sim.run_events(&circuit.events)?;
    Ok(sim)
}

impl Simulator {
    pub fn new(max_qubits: u32) -> Simulator {
        assert!(
            max_qubits <= MAX_SIM_QUBITS,
            "cap {max_qubits} exceeds the {MAX_SIM_QUBITS}-qubit dense limit"
        );
        Simulator {
            amps: vec![ONE],
            pos: HashMap::new(),
            order: Vec::new(),
            cap: max_qubits,
            par: true,
        }
    }

    pub fn set_parallel(&mut self, on: bool) {
        self.par = on;
    }

    pub fn width(&self) -> u32 {
        self.order.len() as u32
    }

    /// Live ids in position order: bit `p` of an amplitude index belongs to
    /// `live()[p]`.
    pub fn live(&self) -> &[QubitId] {
        &self.order
    }

    pub fn position(&self, q: QubitId) -> Option<u32> {
        self.pos.get(&q).copied()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps.get(index as usize).copied().unwrap_or(ZERO)
    }

    /// Replace the state over the current live qubits — a harness hook for
    /// semantic tests. The caller supplies a normalized vector.
    pub fn load_amplitudes(&mut self, amps: Vec<Complex64>) -> Result<(), SimError> {
        if amps.len() != self.amps.len() {
            return Err(SimError::Malformed(format!(
                "state has {} amplitudes; {} live qubits need {}",
                amps.len(),
                self.order.len(),
                self.amps.len()
            )));
        }
        self.amps = amps;
        Ok(())
    }

    pub fn run_events(&mut self, events: &[Event]) -> Result<(), SimError> {
        for ev in events {
            self.step(ev)?;
        }
        Ok(())
    }

    pub fn step(&mut self, ev: &Event) -> Result<(), SimError> {
        match ev {
            Event::Gate(g) => self.apply(g),
            Event::Alloc(ids) => self.alloc(ids),
            Event::Release(ids) => self.release(ids),
            Event::Checkpoint(ids) => self.checkpoint(ids),
        }
    }

    pub fn alloc(&mut self, ids: &[QubitId]) -> Result<(), SimError> {
        let need = self.order.len() as u32 + ids.len() as u32;
        if need > self.cap {
            return Err(SimError::WidthExceeded { need, cap: self.cap });
        }
        for &q in ids {
            if self.pos.contains_key(&q) {
                return Err(SimError::Malformed(format!("qubit {q} allocated while live")));
            }
            self.pos.insert(q, self.order.len() as u32);
            self.order.push(q);
        }
        // New qubits sit at the top positions in |0⟩, so the old amplitudes
        // are exactly the low block of the doubled state.
        self.amps.resize(self.amps.len() << ids.len(), ZERO);
        Ok(())
    }

    pub fn release(&mut self, ids: &[QubitId]) -> Result<(), SimError> {
        for &q in ids {
            self.release_one(q)?;
        }
        Ok(())
    }

    fn release_one(&mut self, q: QubitId) -> Result<(), SimError> {
        let p = self.pos_of(q)?;
        let bit = 1u64 << p;
        let prob = self.masked_prob(bit, bit);
        if prob >= RELEASE_TOL {
            return Err(SimError::NonZeroRelease { qubit: q, prob });
        }
        // Contract: keep the bit-p=0 half of every 2^(p+1) block. The dropped
        // half carries < RELEASE_TOL probability, inside the norm budget.
        let keep = 1usize << p;
        let mut out = Vec::with_capacity(self.amps.len() >> 1);
        for block in self.amps.chunks(keep << 1) {
            out.extend_from_slice(&block[..keep]);
        }
        self.amps = out;
        self.order.remove(p as usize);
        self.pos.remove(&q);
        for (i, &id) in self.order.iter().enumerate().skip(p as usize) {
            self.pos.insert(id, i as u32);
        }
        Ok(())
    }

    fn checkpoint(&self, expected: &[QubitId]) -> Result<(), SimError> {
        let mut want: Vec<QubitId> = expected.to_vec();
        want.sort_unstable();
        let mut have: Vec<QubitId> = self.order.clone();
        have.sort_unstable();
        if want != have {
            return Err(SimError::Malformed(format!(
                "checkpoint expects live qubits {want:?}, simulator has {have:?}"
            )));
        }
        Ok(())
    }

    pub fn apply(&mut self, g: &Gate) -> Result<(), SimError> {
        let p: Vec<u32> = g
            .qubits
            .iter()
            .map(|&q| self.pos_of(q))
            .collect::<Result<_, _>>()?;
        let mut seen = 0u64;
        for &x in &p {
            if seen >> x & 1 == 1 {
                return Err(SimError::Malformed(format!(
                    "gate {} lists a qubit twice: {:?}",
                    g.kind.name(),
                    g.qubits
                )));
            }
            seen |= 1 << x;
        }
        use GateKind::*;
        let arity_ok = match g.kind {
            CX | SWAP | CP(_) => p.len() == 2,
            CCX => p.len() == 3,
            MCX => p.len() >= 2,
            MCP(_) => !p.is_empty(),
            _ => p.len() == 1,
        };
        if !arity_ok {
            return Err(SimError::Malformed(format!(
                "gate {} applied to {} qubits",
                g.kind.name(),
                p.len()
            )));
        }
        let h = FRAC_1_SQRT_2;
        match g.kind {
            H => self.apply_1q([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]], p[0]),
            X => self.x_masked(p[0], 0),
            Y => self.apply_1q([[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]], p[0]),
            Z => self.phase_masked(1 << p[0], c(-1.0, 0.0)),
            S => self.phase_masked(1 << p[0], c(0.0, 1.0)),
            Sdg => self.phase_masked(1 << p[0], c(0.0, -1.0)),
            T => self.phase_masked(1 << p[0], c(h, h)),
            Tdg => self.phase_masked(1 << p[0], c(h, -h)),
            P(t) => self.phase_masked(1 << p[0], Complex64::from_polar(1.0, t)),
            RX(t) => {
                let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
                let (d, o) = (c(cs, 0.0), c(0.0, -sn));
                self.apply_1q([[d, o], [o, d]], p[0]);
            }
            RY(t) => {
                let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
                self.apply_1q([[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]], p[0]);
            }
            RZ(t) => {
                let (lo, hi) = (
                    Complex64::from_polar(1.0, -t / 2.0),
                    Complex64::from_polar(1.0, t / 2.0),
                );
                self.apply_1q([[lo, ZERO], [ZERO, hi]], p[0]);
            }
            CX => self.x_masked(p[1], 1 << p[0]),
            CCX => self.x_masked(p[2], 1 << p[0] | 1 << p[1]),
            MCX => {
                let (t, cs) = p.split_last().unwrap();
                self.x_masked(*t, mask_of(cs));
            }
            SWAP => {
                self.x_masked(p[1], 1 << p[0]);
                self.x_masked(p[0], 1 << p[1]);
                self.x_masked(p[1], 1 << p[0]);
            }
            CP(t) | MCP(t) => self.phase_masked(mask_of(&p), Complex64::from_polar(1.0, t)),
        }
        Ok(())
    }

    fn pos_of(&self, q: QubitId) -> Result<u32, SimError> {
        self.pos
            .get(&q)
            .copied()
            .ok_or_else(|| SimError::Malformed(format!("qubit {q} is not live")))
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    fn use_par(&self) -> bool {
        cfg!(feature = "parallel") && self.par && self.amps.len() >= PAR_MIN
    }

    /// One-qubit unitary on position `t`: pairs (i, i|2^t) map through `m`.
    fn apply_1q(&mut self, m: [[Complex64; 2]; 2], t: u32) {
        let half = 1usize << t;
        let step = half << 1;
        let body = move |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let x = lo[k];
                let y = hi[k];
                lo[k] = m[0][0] * x + m[0][1] * y;
                hi[k] = m[1][0] * x + m[1][1] * y;
            }
        };
        #[cfg(feature = "parallel")]
        if self.use_par() {
            let block = step.max(PAR_BLOCK);
            self.amps
                .par_chunks_mut(block)
                .for_each(|b| b.chunks_mut(step).for_each(body));
            return;
        }
        self.amps.chunks_mut(step).for_each(body);
    }

    /// X on position `t` wherever every `ctrl` bit is set. `ctrl` must not
    /// contain `t`.
    fn x_masked(&mut self, t: u32, ctrl: u64) {
        let half = 1usize << t;
        let step = half << 1;
        let body = move |base: usize, chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                if (base + k) as u64 & ctrl == ctrl {
                    std::mem::swap(&mut lo[k], &mut hi[k]);
                }
            }
        };
        #[cfg(feature = "parallel")]
        if self.use_par() {
            let block = step.max(PAR_BLOCK);
            self.amps
                .par_chunks_mut(block)
                .enumerate()
                .for_each(|(bi, b)| {
                    let mut base = bi * block;
                    for ch in b.chunks_mut(step) {
                        body(base, ch);
                        base += step;
                    }
                });
            return;
        }
        let mut base = 0;
        for ch in self.amps.chunks_mut(step) {
            body(base, ch);
            base += step;
        }
    }

    /// Multiply `ph` into every amplitude whose index has all `mask` bits set.
    fn phase_masked(&mut self, mask: u64, ph: Complex64) {
        let body = move |base: usize, chunk: &mut [Complex64]| {
            for (k, a) in chunk.iter_mut().enumerate() {
                if (base + k) as u64 & mask == mask {
                    *a *= ph;
                }
            }
        };
        #[cfg(feature = "parallel")]
        if self.use_par() {
            self.amps
                .par_chunks_mut(PAR_BLOCK)
                .enumerate()
                .for_each(|(bi, b)| body(bi * PAR_BLOCK, b));
            return;
        }
        let mut base = 0;
        for ch in self.amps.chunks_mut(PAR_BLOCK) {
            body(base, ch);
            base += PAR_BLOCK;
        }
    }

    /// Σ|a_i|² over indices with `i & mask == want`, summed per stripe and
    /// combined in stripe order — identical bits parallel or not.
    fn masked_prob(&self, mask: u64, want: u64) -> f64 {
        let chunk_sum = move |base: usize, chunk: &[Complex64]| -> f64 {
            let mut s = 0.0;
            for (k, a) in chunk.iter().enumerate() {
                if (base + k) as u64 & mask == want {
                    s += a.norm_sqr();
                }
            }
            s
        };
        #[cfg(feature = "parallel")]
        if self.use_par() {
            let partials: Vec<f64> = self
                .amps
                .par_chunks(PAR_BLOCK)
                .enumerate()
                .map(|(bi, ch)| chunk_sum(bi * PAR_BLOCK, ch))
                .collect();
            return partials.into_iter().sum();
        }
        let mut total = 0.0;
        let mut base = 0;
        for ch in self.amps.chunks(PAR_BLOCK) {
            total += chunk_sum(base, ch);
            base += PAR_BLOCK;
        }
        total
    }

    pub fn total_probability(&self) -> f64 {
        self.masked_prob(0, 0)
    }

    pub fn qubit_one_probability(&self, q: QubitId) -> Result<f64, SimError> {
        let bit = 1u64 << self.pos_of(q)?;
        Ok(self.masked_prob(bit, bit))
    }

    /// Full-state index with the given qubits set as specified, all others 0.
    pub fn basis_index(&self, assignment: &[(QubitId, bool)]) -> Result<u64, SimError> {
        let mut i = 0u64;
        for &(q, b) in assignment {
            if b {
                i |= 1 << self.pos_of(q)?;
            } else {
                self.pos_of(q)?;
            }
        }
        Ok(i)
    }

    /// Full-state index for an LSB-first register code, all other qubits 0.
    pub fn register_index(&self, qubits: &[QubitId], code: u64) -> Result<u64, SimError> {
        let mut i = 0u64;
        for (k, &q) in qubits.iter().enumerate() {
            if code >> k & 1 == 1 {
                i |= 1 << self.pos_of(q)?;
            } else {
                self.pos_of(q)?;
            }
        }
        Ok(i)
    }

    /// Extract a register's LSB-first code from a full-state index.
    pub fn register_code(&self, qubits: &[QubitId], index: u64) -> Result<u64, SimError> {
        let mut code = 0u64;
        for (k, &q) in qubits.iter().enumerate() {
            code |= (index >> self.pos_of(q)? & 1) << k;
        }
        Ok(code)
    }

    /// Phase of every populated basis state relative to `reference`, in
    /// [0, 2π). The reference itself is omitted (identically 0), as is
    /// anything at noise magnitude.
    pub fn relative_phases(&self, reference: u64) -> Result<BTreeMap<u64, f64>, SimError> {
        let r = self.amps.get(reference as usize).copied().ok_or_else(|| {
            SimError::Malformed(format!("reference index {reference} is out of range"))
        })?;
        if r.norm() <= NOISE_TOL {
            return Err(SimError::ZeroReference);
        }
        let ra = r.arg();
        let tau = 2.0 * PI;
        let mut map = BTreeMap::new();
        for (i, a) in self.amps.iter().enumerate() {
            if i as u64 == reference || a.norm() <= NOISE_TOL {
                continue;
            }
            let mut d = (a.arg() - ra).rem_euclid(tau);
            if d >= tau {
                d = 0.0; // rem_euclid can round up to exactly 2π
            }
            map.insert(i as u64, d);
        }
        Ok(map)
    }

    /// Amplitude at a partial basis assignment, defined only when the
    /// unlisted qubits hold a single basis state alongside it.
    pub fn marginal_amplitude(&self, pattern: &[(QubitId, bool)]) -> Result<Complex64, SimError> {
        let mut sel = 0u64;
        let mut want = 0u64;
        for &(q, b) in pattern {
            let p = self.pos_of(q)?;
            if sel >> p & 1 == 1 {
                return Err(SimError::Malformed(format!(
                    "qubit {q} appears twice in the pattern"
                )));
            }
            sel |= 1 << p;
            if b {
                want |= 1 << p;
            }
        }
        let mut hit: Option<Complex64> = None;
        for (i, a) in self.amps.iter().enumerate() {
            if i as u64 & sel == want && a.norm() > NOISE_TOL {
                if hit.is_some() {
                    return Err(SimError::NotSeparable);
                }
                hit = Some(*a);
            }
        }
        Ok(hit.unwrap_or(ZERO))
    }

    /// Multinomial sampling from |a|², bit-reproducible per seed: sorted
    /// uniform draws walk the cumulative distribution in one sweep.
    pub fn sample(&self, regs: &[SampleReg], shots: u64, seed: u64) -> Result<SampleResult, SimError> {
        let reg_pos: Vec<Vec<u32>> = regs
            .iter()
            .map(|r| r.qubits.iter().map(|&q| self.pos_of(q)).collect())
            .collect::<Result<_, _>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws: Vec<f64> = (0..shots).map(|_| rng.gen::<f64>()).collect();
        draws.sort_unstable_by(|a, b| a.total_cmp(b));
        let total = self.total_probability();
        let mut index_counts: BTreeMap<u64, u64> = BTreeMap::new();
        let mut cum = 0.0;
        let mut next = 0usize;
        let mut last_populated = 0u64;
        for (i, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w > 0.0 {
                last_populated = i as u64;
            }
            cum += w;
            let bound = cum / total;
            let start = next;
            while next < draws.len() && draws[next] < bound {
                next += 1;
            }
            if next > start {
                *index_counts.entry(i as u64).or_default() += (next - start) as u64;
            }
        }
        if next < draws.len() {
            // Rounding left the last few draws past the final bound.
            *index_counts.entry(last_populated).or_default() += (draws.len() - next) as u64;
        }
        let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        for (idx, n) in index_counts {
            let codes: Vec<u64> = reg_pos
                .iter()
                .map(|ps| {
                    ps.iter()
                        .enumerate()
                        .fold(0u64, |code, (k, &p)| code | (idx >> p & 1) << k)
                })
                .collect();
            *counts.entry(codes).or_default() += n;
        }
        Ok(SampleResult { shots, seed, columns: regs.to_vec(), counts })
    }
}

fn mask_of(positions: &[u32]) -> u64 {
    positions.iter().fold(0u64, |m, &p| m | 1 << p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{adjoint_events, controlled_events, decompose_multicontrol, OutputReg};
    use crate::types::FixedPointFormat;
    use GateKind::*;

    fn ev(kind: GateKind, qs: &[QubitId]) -> Event {
        Event::Gate(Gate { kind, qubits: qs.to_vec() })
    }

    fn fresh(n: u32) -> Simulator {
        let mut s = Simulator::new(MAX_SIM_QUBITS);
        s.alloc(&(0..n).collect::<Vec<_>>()).unwrap();
        s
    }

    fn basis(n: u32, j: usize) -> Vec<Complex64> {
        let mut v = vec![ZERO; 1 << n];
        v[j] = ONE;
        v
    }

    fn assert_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (k, (g, w)) in got.iter().zip(want).enumerate() {
            assert!(
                (g - w).norm() <= tol,
                "amplitude {k}: got {g}, want {w} (tol {tol})"
            );
        }
    }

    fn random_state(n: u32, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> = (0..1usize << n)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut v {
            *a /= norm;
        }
        v
    }

    /// Reference gate action, independent of the kernels: a dense matrix on
    /// the listed qubits (sub-index bit k = qubits[k]), expanded naively.
    fn dense_matrix(kind: &GateKind) -> Vec<Vec<Complex64>> {
        let h = FRAC_1_SQRT_2;
        let i = c(0.0, 1.0);
        let one = ONE;
        let diag = |phases: Vec<Complex64>| -> Vec<Vec<Complex64>> {
            let d = phases.len();
            (0..d)
                .map(|r| (0..d).map(|cl| if r == cl { phases[r] } else { ZERO }).collect())
                .collect()
        };
        let perm = |dim: usize, swaps: &[(usize, usize)]| -> Vec<Vec<Complex64>> {
            let mut to: Vec<usize> = (0..dim).collect();
            for &(a, b) in swaps {
                to.swap(a, b);
            }
            (0..dim)
                .map(|r| (0..dim).map(|cl| if to[cl] == r { one } else { ZERO }).collect())
                .collect()
        };
        match *kind {
            H => vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]],
            X => perm(2, &[(0, 1)]),
            Y => vec![vec![ZERO, -i], vec![i, ZERO]],
            Z => diag(vec![one, -one]),
            S => diag(vec![one, i]),
            Sdg => diag(vec![one, -i]),
            T => diag(vec![one, c(h, h)]),
            Tdg => diag(vec![one, c(h, -h)]),
            P(t) => diag(vec![one, Complex64::from_polar(1.0, t)]),
            RX(t) => {
                let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
                vec![vec![c(cs, 0.0), c(0.0, -sn)], vec![c(0.0, -sn), c(cs, 0.0)]]
            }
            RY(t) => {
                let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
                vec![vec![c(cs, 0.0), c(-sn, 0.0)], vec![c(sn, 0.0), c(cs, 0.0)]]
            }
            RZ(t) => diag(vec![
                Complex64::from_polar(1.0, -t / 2.0),
                Complex64::from_polar(1.0, t / 2.0),
            ]),
            // ctrl = sub-bit 0, target = sub-bit 1: |c,t⟩ index c + 2t.
            CX => perm(4, &[(1, 3)]),
            CCX => perm(8, &[(3, 7)]),
            SWAP => perm(4, &[(1, 2)]),
            CP(t) => diag(vec![one, one, one, Complex64::from_polar(1.0, t)]),
            MCX | MCP(_) => unreachable!("variadic matrices built by arity"),
        }
    }

    fn dense_variadic(kind: &GateKind, arity: usize) -> Vec<Vec<Complex64>> {
        let dim = 1usize << arity;
        match *kind {
            // Controls are sub-bits 0..arity-1; target is the top sub-bit.
            MCX => {
                let ones = dim / 2 - 1;
                let mut m: Vec<Vec<Complex64>> = (0..dim)
                    .map(|r| (0..dim).map(|cl| if r == cl { ONE } else { ZERO }).collect())
                    .collect();
                let (a, b) = (ones, ones | dim / 2);
                m[a][a] = ZERO;
                m[b][b] = ZERO;
                m[a][b] = ONE;
                m[b][a] = ONE;
                m
            }
            MCP(t) => (0..dim)
                .map(|r| {
                    (0..dim)
                        .map(|cl| {
                            if r != cl {
                                ZERO
                            } else if r == dim - 1 {
                                Complex64::from_polar(1.0, t)
                            } else {
                                ONE
                            }
                        })
                        .collect()
                })
                .collect(),
            _ => unreachable!(),
        }
    }

    fn apply_dense(qs: &[u32], m: &[Vec<Complex64>], state: &[Complex64]) -> Vec<Complex64> {
        let gather = |idx: usize| -> usize {
            qs.iter()
                .enumerate()
                .fold(0usize, |s, (k, &q)| s | (idx >> q & 1) << k)
        };
        let scatter = |idx: usize, sub: usize| -> usize {
            let mut out = idx;
            for (k, &q) in qs.iter().enumerate() {
                out = out & !(1usize << q) | (sub >> k & 1) << q;
            }
            out
        };
        let mut out = vec![ZERO; state.len()];
        for (idx, &a) in state.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let sub = gather(idx);
            for (row, mrow) in m.iter().enumerate() {
                let coeff = mrow[sub];
                if coeff != ZERO {
                    out[scatter(idx, row)] += coeff * a;
                }
            }
        }
        out
    }

    #[test]
    fn every_gate_matches_its_matrix_on_all_basis_inputs() {
        let n = 3u32;
        let cases: Vec<(GateKind, Vec<u32>)> = vec![
            (H, vec![1]),
            (X, vec![0]),
            (Y, vec![2]),
            (Z, vec![1]),
            (S, vec![0]),
            (Sdg, vec![1]),
            (T, vec![2]),
            (Tdg, vec![0]),
            (RX(0.7), vec![1]),
            (RY(1.3), vec![0]),
            (RZ(0.9), vec![2]),
            (P(0.4), vec![1]),
            (CX, vec![2, 0]),
            (CX, vec![0, 2]),
            (CCX, vec![2, 0, 1]),
            (SWAP, vec![1, 2]),
            (CP(0.8), vec![2, 1]),
            (MCX, vec![0, 2, 1]),
            (MCX, vec![1, 0]),
            (MCP(0.6), vec![0, 1, 2]),
            (MCP(0.6), vec![1, 2]),
        ];
        for (kind, qs) in cases {
            let m = match kind {
                MCX | MCP(_) => dense_variadic(&kind, qs.len()),
                _ => dense_matrix(&kind),
            };
            for j in 0..1usize << n {
                let mut s = fresh(n);
                s.load_amplitudes(basis(n, j)).unwrap();
                s.apply(&Gate { kind, qubits: qs.clone() }).unwrap();
                let want = apply_dense(&qs, &m, &basis(n, j));
                assert_close(s.amplitudes(), &want, 1e-12);
            }
        }
    }

    #[test]
    fn bell_amplitudes_and_joint_sampling() {
        let circuit = CircuitIR {
            events: vec![
                Event::Alloc(vec![0, 1]),
                ev(H, &[0]),
                ev(CX, &[0, 1]),
            ],
            width: 2,
            outputs: vec![OutputReg {
                name: "qba".into(),
                qubits: vec![0, 1],
                fmt: None,
                desc: "qarray[qbit, 2]".into(),
            }],
        };
        let sim = run(&circuit, 24, true).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_close(
            sim.amplitudes(),
            &[c(h, 0.0), ZERO, ZERO, c(h, 0.0)],
            1e-12,
        );

        let regs = [SampleReg {
            name: "qba".into(),
            qubits: vec![0, 1],
            ty: ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: 2 },
        }];
        let res = sim.sample(&regs, 4096, 7).unwrap();
        assert_eq!(res.counts.values().sum::<u64>(), 4096);
        assert_eq!(res.counts.len(), 2, "only [0,0] and [1,1] may appear");
        let zeros = res.counts[&vec![0u64]];
        let ones = res.counts[&vec![3u64]];
        // 3σ for Binomial(4096, 1/2) is 96.
        assert!((zeros as i64 - 2048).abs() <= 96, "zeros = {zeros}");
        assert_eq!(zeros + ones, 4096);
        assert_eq!(res.render_row(&[3]), vec!["[1, 1]".to_string()]);

        // Same seed, same histogram, bit for bit; the seed rides along.
        let again = sim.sample(&regs, 4096, 7).unwrap();
        assert_eq!(res.counts, again.counts);
        assert_eq!(again.seed, 7);
    }

    #[test]
    fn skewed_sampling_tracks_the_distribution() {
        let mut s = fresh(1);
        // sin²(θ/2) = 0.1
        let theta = 2.0 * 0.1f64.sqrt().asin();
        s.apply(&Gate { kind: RY(theta), qubits: vec![0] }).unwrap();
        let regs = [SampleReg {
            name: "b".into(),
            qubits: vec![0],
            ty: ConcreteQType::Bit,
        }];
        let res = s.sample(&regs, 4096, 11).unwrap();
        let ones = res.counts.get(&vec![1u64]).copied().unwrap_or(0);
        // mean 409.6, 3σ ≈ 58
        assert!((ones as i64 - 410).abs() <= 60, "ones = {ones}");

        // A deterministic state sends every shot to one record.
        let mut d = fresh(2);
        d.apply(&Gate { kind: X, qubits: vec![1] }).unwrap();
        let dregs = [SampleReg {
            name: "q".into(),
            qubits: vec![0, 1],
            ty: ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: 2 },
        }];
        let dres = d.sample(&dregs, 512, 3).unwrap();
        assert_eq!(dres.counts.len(), 1);
        assert_eq!(dres.counts[&vec![2u64]], 512);
    }

    #[test]
    fn sampled_codes_decode_through_their_types() {
        // qnum[4, unsigned, 3] holding code 13 = 1.625
        let mut s = fresh(4);
        for q in [0u32, 2, 3] {
            s.apply(&Gate { kind: X, qubits: vec![q] }).unwrap();
        }
        let regs = [SampleReg {
            name: "v".into(),
            qubits: vec![0, 1, 2, 3],
            ty: ConcreteQType::Num(FixedPointFormat::new(4, false, 3)),
        }];
        let res = s.sample(&regs, 64, 1).unwrap();
        assert_eq!(res.counts.len(), 1);
        assert_eq!(res.counts[&vec![13u64]], 64);
        assert_eq!(res.render_row(&[13]), vec!["1.625".to_string()]);

        // Records decode field by field from the low bits up.
        let rec = ConcreteQType::Record {
            name: "S".into(),
            fields: vec![
                ("a".into(), ConcreteQType::Bit),
                ("b".into(), ConcreteQType::Num(FixedPointFormat::new(2, false, 1))),
            ],
        };
        assert_eq!(decode_value(&rec, 0b011), "{a: 1, b: 0.5}");
        let arr = ConcreteQType::Array {
            elem: Box::new(ConcreteQType::Num(FixedPointFormat::new(2, true, 0))),
            len: 3,
        };
        assert_eq!(decode_value(&arr, 0b10_01_11), "[-1, 1, -2]");
    }

    #[test]
    fn norm_stays_pinned_through_a_random_dense_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut s = fresh(5);
        s.load_amplitudes(random_state(5, 9)).unwrap();
        for _ in 0..60 {
            let q = rng.gen_range(0..5u32);
            let r = (q + 1 + rng.gen_range(0..4u32)) % 5;
            let t = rng.gen_range(0.0..PI);
            let g = match rng.gen_range(0..10) {
                0 => Gate { kind: H, qubits: vec![q] },
                1 => Gate { kind: X, qubits: vec![q] },
                2 => Gate { kind: Y, qubits: vec![q] },
                3 => Gate { kind: T, qubits: vec![q] },
                4 => Gate { kind: RX(t), qubits: vec![q] },
                5 => Gate { kind: RY(t), qubits: vec![q] },
                6 => Gate { kind: RZ(t), qubits: vec![q] },
                7 => Gate { kind: CX, qubits: vec![q, r] },
                8 => Gate { kind: CP(t), qubits: vec![q, r] },
                _ => Gate { kind: SWAP, qubits: vec![q, r] },
            };
            let before = s.total_probability();
            s.apply(&g).unwrap();
            let after = s.total_probability();
            assert!((after - before).abs() <= 1e-12, "gate {} drifted the norm", g.kind.name());
        }
        assert!((s.total_probability() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn alloc_then_release_is_a_noop() {
        let mut s = fresh(2);
        s.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        s.apply(&Gate { kind: CX, qubits: vec![0, 1] }).unwrap();
        let snapshot = s.amplitudes().to_vec();
        s.alloc(&[5]).unwrap();
        assert_eq!(s.width(), 3);
        assert_eq!(s.amplitudes().len(), 8);
        s.release(&[5]).unwrap();
        assert_eq!(s.width(), 2);
        assert_eq!(s.amplitudes(), &snapshot[..]);
        assert_eq!(s.live(), &[0, 1]);
    }

    #[test]
    fn contraction_reindexes_the_survivors() {
        let mut s = fresh(3);
        // Put q2 into |1⟩-correlated-with-q0? No — keep q1 releasable: state
        // (|0⟩+|1⟩)/√2 on q0, |0⟩ on q1, |1⟩ on q2.
        s.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        s.apply(&Gate { kind: X, qubits: vec![2] }).unwrap();
        s.release(&[1]).unwrap();
        assert_eq!(s.live(), &[0, 2]);
        assert_eq!(s.position(2), Some(1));
        let h = FRAC_1_SQRT_2;
        assert_close(s.amplitudes(), &[ZERO, ZERO, c(h, 0.0), c(h, 0.0)], 1e-12);
        // q2 still flips under its virtual id after the shift.
        s.apply(&Gate { kind: X, qubits: vec![2] }).unwrap();
        assert_close(s.amplitudes(), &[c(h, 0.0), c(h, 0.0), ZERO, ZERO], 1e-12);
    }

    #[test]
    fn dirty_release_is_rejected() {
        let mut s = fresh(1);
        s.apply(&Gate { kind: X, qubits: vec![0] }).unwrap();
        match s.release(&[0]) {
            Err(SimError::NonZeroRelease { qubit: 0, prob }) => assert!(prob > 0.999),
            other => panic!("expected NonZeroRelease, got {other:?}"),
        }

        let mut s = fresh(1);
        s.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        match s.release(&[0]) {
            Err(SimError::NonZeroRelease { prob, .. }) => assert!((prob - 0.5).abs() < 1e-12),
            other => panic!("expected NonZeroRelease, got {other:?}"),
        }
    }

    #[test]
    fn width_cap_is_enforced() {
        let mut s = Simulator::new(3);
        assert_eq!(
            s.alloc(&[0, 1, 2, 3]),
            Err(SimError::WidthExceeded { need: 4, cap: 3 })
        );
        s.alloc(&[0, 1]).unwrap();
        assert_eq!(
            s.alloc(&[2, 3]),
            Err(SimError::WidthExceeded { need: 4, cap: 3 })
        );
        s.alloc(&[2]).unwrap();
        assert_eq!(s.width(), 3);
    }

    #[test]
    fn checkpoints_verify_the_live_set() {
        let mut s = fresh(2);
        s.step(&Event::Checkpoint(vec![1, 0])).unwrap();
        assert!(matches!(
            s.step(&Event::Checkpoint(vec![0, 2])),
            Err(SimError::Malformed(_))
        ));
    }

    #[test]
    fn relative_phase_readout() {
        // θ(x) = (π/4)x² over a 2-qubit register: phases π/4, π, 9π/4≡π/4.
        let mut s = fresh(2);
        s.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        s.apply(&Gate { kind: H, qubits: vec![1] }).unwrap();
        s.apply(&Gate { kind: P(PI / 4.0), qubits: vec![0] }).unwrap();
        s.apply(&Gate { kind: P(PI), qubits: vec![1] }).unwrap();
        s.apply(&Gate { kind: CP(PI), qubits: vec![0, 1] }).unwrap();
        let phases = s.relative_phases(0).unwrap();
        assert_eq!(phases.keys().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!((phases[&1] - PI / 4.0).abs() < 1e-12);
        assert!((phases[&2] - PI).abs() < 1e-12);
        assert!((phases[&3] - PI / 4.0).abs() < 1e-12, "9π/4 wraps to π/4");

        // A uniform state reports explicit zeros, not omissions.
        let mut u = fresh(2);
        u.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        u.apply(&Gate { kind: H, qubits: vec![1] }).unwrap();
        let flat = u.relative_phases(0).unwrap();
        assert_eq!(flat.len(), 3);
        assert!(flat.values().all(|&p| p.abs() < 1e-12));

        // Referencing an empty basis state is an error.
        let mut b = fresh(2);
        b.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        b.apply(&Gate { kind: CX, qubits: vec![0, 1] }).unwrap();
        assert_eq!(b.relative_phases(1), Err(SimError::ZeroReference));
    }

    #[test]
    fn marginal_amplitudes_and_separability() {
        let mut bell = fresh(2);
        bell.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        bell.apply(&Gate { kind: CX, qubits: vec![0, 1] }).unwrap();
        let h = FRAC_1_SQRT_2;
        // Fixing q0 pins q1, so the marginal is well-defined either way.
        let a = bell.marginal_amplitude(&[(0, true)]).unwrap();
        assert!((a - c(h, 0.0)).norm() < 1e-12);
        let a = bell.marginal_amplitude(&[(0, false)]).unwrap();
        assert!((a - c(h, 0.0)).norm() < 1e-12);
        // Full patterns read single amplitudes, populated or not.
        let a = bell.marginal_amplitude(&[(0, true), (1, false)]).unwrap();
        assert_eq!(a, ZERO);

        // A product of superpositions leaves the complement spread out.
        let mut prod = fresh(2);
        prod.apply(&Gate { kind: H, qubits: vec![0] }).unwrap();
        prod.apply(&Gate { kind: H, qubits: vec![1] }).unwrap();
        assert_eq!(
            prod.marginal_amplitude(&[(0, false)]),
            Err(SimError::NotSeparable)
        );
    }

    #[test]
    fn controlled_lowering_matches_direct_control() {
        let menu: Vec<(GateKind, usize)> = vec![
            (H, 1),
            (X, 1),
            (Y, 1),
            (Z, 1),
            (S, 1),
            (Sdg, 1),
            (T, 1),
            (Tdg, 1),
            (RX(0.7), 1),
            (RY(0.7), 1),
            (RZ(0.7), 1),
            (P(0.7), 1),
            (CX, 2),
            (SWAP, 2),
            (CP(0.7), 2),
            (CCX, 3),
            (MCX, 3),
            (MCP(0.7), 2),
        ];
        for (kind, arity) in menu {
            let targets: Vec<QubitId> = (0..arity as u32).collect();
            let ctrl = arity as u32;
            let base = vec![ev(kind, &targets)];
            let lowered = controlled_events(&base, ctrl).unwrap();
            for ctrl_on in [false, true] {
                let psi = random_state(arity as u32, 17 + arity as u64);
                // ψ ⊗ |c⟩ with the control as the top position.
                let mut joint = vec![ZERO; psi.len() * 2];
                let off = if ctrl_on { psi.len() } else { 0 };
                joint[off..off + psi.len()].copy_from_slice(&psi);

                let mut s = fresh(ctrl + 1);
                s.load_amplitudes(joint.clone()).unwrap();
                s.run_events(&lowered).unwrap();

                let expected = if ctrl_on {
                    let mut t = fresh(arity as u32);
                    t.load_amplitudes(psi).unwrap();
                    t.run_events(&base).unwrap();
                    let mut e = vec![ZERO; joint.len()];
                    e[off..off + t.amplitudes().len()].copy_from_slice(t.amplitudes());
                    e
                } else {
                    joint
                };
                assert_close(s.amplitudes(), &expected, 1e-10);
            }
        }
    }

    #[test]
    fn multicontrol_ladders_match_the_native_kernels() {
        // MCX with 3 controls: the CCX ladder must agree on all 16 basis
        // states and hand its ancilla back in |0⟩.
        let native = CircuitIR {
            events: vec![Event::Alloc(vec![0, 1, 2, 3]), ev(MCX, &[0, 1, 2, 3])],
            width: 4,
            outputs: vec![],
        };
        let lowered = decompose_multicontrol(&native).unwrap();
        assert!(lowered.events.len() > native.events.len());
        for j in 0..16usize {
            let mut a = Simulator::new(24);
            a.run_events(&native.events[..1]).unwrap();
            a.load_amplitudes(basis(4, j)).unwrap();
            a.run_events(&native.events[1..]).unwrap();

            let mut b = Simulator::new(24);
            b.run_events(&lowered.events[..1]).unwrap();
            b.load_amplitudes(basis(4, j)).unwrap();
            b.run_events(&lowered.events[1..]).unwrap();

            assert_eq!(b.width(), 4, "ancillae must be released");
            assert_close(a.amplitudes(), b.amplitudes(), 1e-10);
        }

        let native = CircuitIR {
            events: vec![Event::Alloc(vec![0, 1, 2]), ev(MCP(0.9), &[0, 1, 2])],
            width: 3,
            outputs: vec![],
        };
        let lowered = decompose_multicontrol(&native).unwrap();
        for j in 0..8usize {
            let mut a = Simulator::new(24);
            a.run_events(&native.events[..1]).unwrap();
            a.load_amplitudes(basis(3, j)).unwrap();
            a.run_events(&native.events[1..]).unwrap();

            let mut b = Simulator::new(24);
            b.run_events(&lowered.events[..1]).unwrap();
            b.load_amplitudes(basis(3, j)).unwrap();
            b.run_events(&lowered.events[1..]).unwrap();

            assert_eq!(b.width(), 3);
            assert_close(a.amplitudes(), b.amplitudes(), 1e-10);
        }
    }

    #[test]
    fn adjoint_fragments_undo_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut events = Vec::new();
        for _ in 0..40 {
            let q = rng.gen_range(0..4u32);
            let r = (q + 1 + rng.gen_range(0..3u32)) % 4;
            let t = rng.gen_range(0.0..PI);
            events.push(match rng.gen_range(0..8) {
                0 => ev(H, &[q]),
                1 => ev(S, &[q]),
                2 => ev(T, &[q]),
                3 => ev(RX(t), &[q]),
                4 => ev(RY(t), &[q]),
                5 => ev(CX, &[q, r]),
                6 => ev(CP(t), &[q, r]),
                _ => ev(SWAP, &[q, r]),
            });
        }
        let mut s = fresh(4);
        s.run_events(&events).unwrap();
        s.run_events(&adjoint_events(&events)).unwrap();
        assert!((s.amplitude(0) - ONE).norm() < 1e-10);
        for j in 1..16 {
            assert!(s.amplitude(j).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_circuits_preserve_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let psi = random_state(4, 31);
        let mut s = fresh(4);
        s.load_amplitudes(psi.clone()).unwrap();
        for _ in 0..50 {
            let q = rng.gen_range(0..4u32);
            let r = (q + 1 + rng.gen_range(0..3u32)) % 4;
            let t = rng.gen_range(0.0..PI);
            let g = match rng.gen_range(0..8) {
                0 => Gate { kind: Z, qubits: vec![q] },
                1 => Gate { kind: S, qubits: vec![q] },
                2 => Gate { kind: T, qubits: vec![q] },
                3 => Gate { kind: Sdg, qubits: vec![q] },
                4 => Gate { kind: RZ(t), qubits: vec![q] },
                5 => Gate { kind: P(t), qubits: vec![q] },
                6 => Gate { kind: CP(t), qubits: vec![q, r] },
                _ => Gate { kind: MCP(t), qubits: vec![q, r] },
            };
            s.apply(&g).unwrap();
        }
        for (a, b) in s.amplitudes().iter().zip(&psi) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn gates_on_dead_or_repeated_qubits_are_malformed() {
        let mut s = fresh(2);
        assert!(matches!(
            s.apply(&Gate { kind: H, qubits: vec![7] }),
            Err(SimError::Malformed(_))
        ));
        assert!(matches!(
            s.apply(&Gate { kind: CX, qubits: vec![1, 1] }),
            Err(SimError::Malformed(_))
        ));
        assert!(matches!(
            s.apply(&Gate { kind: CX, qubits: vec![0] }),
            Err(SimError::Malformed(_))
        ));
        assert!(matches!(
            s.release(&[9]),
            Err(SimError::Malformed(_))
        ));
        assert!(matches!(
            s.alloc(&[0]),
            Err(SimError::Malformed(_))
        ));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_runs_are_bit_identical() {
        // 15 qubits crosses the PAR_MIN threshold, so the rayon path really
        // runs; the stripe scheme must make it indistinguishable.
        let n = 15u32;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut events = vec![Event::Alloc((0..n).collect())];
        for _ in 0..64 {
            let q = rng.gen_range(0..n);
            let r = (q + 1 + rng.gen_range(0..n - 1)) % n;
            let t = rng.gen_range(0.0..PI);
            events.push(match rng.gen_range(0..9) {
                0 => ev(H, &[q]),
                1 => ev(X, &[q]),
                2 => ev(T, &[q]),
                3 => ev(RY(t), &[q]),
                4 => ev(RZ(t), &[q]),
                5 => ev(CX, &[q, r]),
                6 => ev(CP(t), &[q, r]),
                7 => ev(SWAP, &[q, r]),
                _ => ev(MCP(t), &[q, r]),
            });
        }
        let circuit = CircuitIR { events, width: n, outputs: vec![] };
        let par = run(&circuit, 24, true).unwrap();
        let seq = run(&circuit, 24, false).unwrap();
        assert_eq!(par.amplitudes(), seq.amplitudes());
        // Reductions agree too, bit for bit.
        assert_eq!(par.total_probability(), seq.total_probability());
        let sp = par.sample(
            &[SampleReg {
                name: "q".into(),
                qubits: (0..n).collect(),
                ty: ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: n as usize },
            }],
            256,
            13,
        );
        let ss = seq.sample(
            &[SampleReg {
                name: "q".into(),
                qubits: (0..n).collect(),
                ty: ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: n as usize },
            }],
            256,
            13,
        );
        assert_eq!(sp.unwrap().counts, ss.unwrap().counts);
    }
}
