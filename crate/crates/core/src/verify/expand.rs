//! Rewrites a schedule into an explicit circuit over data and communication
//! wires, with measurements and classically conditioned Pauli corrections.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::schedule::{Operand, Primitive, PrimitiveKind, ScheduledCircuit};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    /// A unitary whose qubits are wire indices.
    Gate(Gate),
    Measure { wire: usize, bit: usize },
    /// X on `wire` iff the parity of `bits` is odd.
    CondX { wire: usize, bits: Vec<usize> },
    /// Z on `wire` iff the parity of `bits` is odd.
    CondZ { wire: usize, bits: Vec<usize> },
}

/// Wires `0..num_data` are the data qubits, the rest communication qubits
/// that start in |0⟩.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandedProgram {
    pub num_data: usize,
    pub num_wires: usize,
    pub num_bits: usize,
    pub ops: Vec<Op>,
}

impl ExpandedProgram {
    pub fn from_circuit(c: &Circuit) -> Self {
        let mut ops = Vec::with_capacity(c.gates.len());
        let mut num_bits = 0;
        for g in &c.gates {
            match g.kind {
                GateKind::Barrier => {}
                GateKind::Measure { .. } => {
                    ops.push(Op::Measure { wire: g.qubits[0], bit: num_bits });
                    num_bits += 1;
                }
                _ => ops.push(Op::Gate(g.clone())),
            }
        }
        ExpandedProgram {
            num_data: c.num_qubits,
            num_wires: c.num_qubits,
            num_bits,
            ops,
        }
    }

    pub fn num_measurements(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Measure { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpandError {
    #[error("communication qubit {index} on QPU {qpu} is reused while still held")]
    CommInUse { qpu: usize, index: usize },
    #[error("communication qubit {index} on QPU {qpu} is used before it holds an EPR half")]
    CommUnset { qpu: usize, index: usize },
    #[error("malformed {0:?} primitive")]
    Malformed(PrimitiveKind),
}

/// Pauli corrections still owed to a group's remote EPR half after
/// entanglement swapping.
#[derive(Default)]
struct Frame {
    x: Vec<usize>,
    z: Vec<usize>,
}

struct Expander {
    num_data: usize,
    wires: BTreeMap<(usize, usize), usize>,
    free: BTreeSet<usize>,
    next_wire: usize,
    num_bits: usize,
    frames: BTreeMap<usize, Frame>,
    ops: Vec<Op>,
}

impl Expander {
    fn acquire(&mut self, qpu: usize, index: usize) -> Result<usize, ExpandError> {
        if self.wires.contains_key(&(qpu, index)) {
            return Err(ExpandError::CommInUse { qpu, index });
        }
        let wire = match self.free.pop_first() {
            Some(w) => w,
            None => {
                self.next_wire += 1;
                self.next_wire - 1
            }
        };
        self.wires.insert((qpu, index), wire);
        Ok(wire)
    }

    fn release(&mut self, qpu: usize, index: usize) {
        if let Some(w) = self.wires.remove(&(qpu, index)) {
            self.free.insert(w);
        }
    }

    fn wire(&self, operand: &Operand) -> Result<usize, ExpandError> {
        match *operand {
            Operand::Data { qubit, .. } => Ok(qubit),
            Operand::Comm { qpu, index } => self
                .wires
                .get(&(qpu, index))
                .copied()
                .ok_or(ExpandError::CommUnset { qpu, index }),
        }
    }

    fn measure(&mut self, wire: usize) -> usize {
        let bit = self.num_bits;
        self.num_bits += 1;
        self.ops.push(Op::Measure { wire, bit });
        bit
    }

    fn gate(&mut self, kind: GateKind, wires: Vec<usize>) {
        self.ops.push(Op::Gate(Gate::new(kind, wires)));
    }

    fn comm_of(op: &Operand) -> Option<(usize, usize)> {
        match *op {
            Operand::Comm { qpu, index } => Some((qpu, index)),
            Operand::Data { .. } => None,
        }
    }

    fn primitive(&mut self, p: &Primitive) -> Result<(), ExpandError> {
        let bad = || ExpandError::Malformed(p.kind);
        match p.kind {
            PrimitiveKind::LocalGate => {
                let g = p.gate.as_ref().ok_or_else(bad)?;
                if g.kind == GateKind::Barrier {
                    return Ok(());
                }
                let wires = p
                    .operands
                    .iter()
                    .map(|o| self.wire(o))
                    .collect::<Result<Vec<_>, _>>()?;
                if let GateKind::Measure { .. } = g.kind {
                    self.measure(wires[0]);
                } else {
                    self.ops.push(Op::Gate(Gate { qubits: wires, ..g.clone() }));
                }
            }
            PrimitiveKind::EprGen => {
                let [a, b] = p.operands.as_slice() else { return Err(bad()) };
                let (qa, ia) = Self::comm_of(a).ok_or_else(bad)?;
                let (qb, ib) = Self::comm_of(b).ok_or_else(bad)?;
                let x = self.acquire(qa, ia)?;
                let y = self.acquire(qb, ib)?;
                self.gate(GateKind::H, vec![x]);
                self.gate(GateKind::Cx, vec![x, y]);
            }
            PrimitiveKind::EntSwap => {
                let [l, r] = p.operands.as_slice() else { return Err(bad()) };
                let (wl, wr) = (self.wire(l)?, self.wire(r)?);
                self.gate(GateKind::Cx, vec![wl, wr]);
                self.gate(GateKind::H, vec![wl]);
                let m1 = self.measure(wl);
                let m2 = self.measure(wr);
                self.ops.push(Op::CondX { wire: wl, bits: vec![m1] });
                self.ops.push(Op::CondX { wire: wr, bits: vec![m2] });
                let frame = self.frames.entry(p.group_id.ok_or_else(bad)?).or_default();
                frame.x.push(m2);
                frame.z.push(m1);
                for o in [l, r] {
                    let (q, i) = Self::comm_of(o).ok_or_else(bad)?;
                    self.release(q, i);
                }
            }
            PrimitiveKind::CatEnt => {
                let [a, x, y] = p.operands.as_slice() else { return Err(bad()) };
                let (wa, wx, wy) = (self.wire(a)?, self.wire(x)?, self.wire(y)?);
                if let Some(frame) = self.frames.remove(&p.group_id.ok_or_else(bad)?) {
                    self.ops.push(Op::CondX { wire: wy, bits: frame.x });
                    self.ops.push(Op::CondZ { wire: wy, bits: frame.z });
                }
                self.gate(GateKind::Cx, vec![wa, wx]);
                let b = self.measure(wx);
                self.ops.push(Op::CondX { wire: wy, bits: vec![b] });
                self.ops.push(Op::CondX { wire: wx, bits: vec![b] });
                let (q, i) = Self::comm_of(x).ok_or_else(bad)?;
                self.release(q, i);
            }
            PrimitiveKind::CatDisent => {
                let [a, y] = p.operands.as_slice() else { return Err(bad()) };
                let (wa, wy) = (self.wire(a)?, self.wire(y)?);
                self.gate(GateKind::H, vec![wy]);
                let b = self.measure(wy);
                self.ops.push(Op::CondZ { wire: wa, bits: vec![b] });
                self.ops.push(Op::CondX { wire: wy, bits: vec![b] });
                let (q, i) = Self::comm_of(y).ok_or_else(bad)?;
                self.release(q, i);
            }
        }
        Ok(())
    }
}

/// Expands every TeleGate into its cat-entangle / cat-disentangle circuit.
/// Primitives are replayed in start-slot order; communication wires are
/// reset after each measurement and reused.
pub fn expand_telegate(sc: &ScheduledCircuit) -> Result<ExpandedProgram, ExpandError> {
    let mut order: Vec<usize> = (0..sc.primitives.len()).collect();
    order.sort_by_key(|&i| (sc.primitives[i].slot, i));
    let mut ex = Expander {
        num_data: sc.num_data,
        wires: BTreeMap::new(),
        free: BTreeSet::new(),
        next_wire: sc.num_data,
        num_bits: 0,
        frames: BTreeMap::new(),
        ops: Vec::new(),
    };
    for i in order {
        ex.primitive(&sc.primitives[i])?;
    }
    Ok(ExpandedProgram {
        num_data: ex.num_data,
        num_wires: ex.next_wire,
        num_bits: ex.num_bits,
        ops: ex.ops,
    })
}
