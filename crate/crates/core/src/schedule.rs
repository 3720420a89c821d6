//! ASAP lowering of a grouped circuit into timed communication primitives.
//!
//! Items are placed strictly in order, each primitive starting as soon as
//! every resource it touches is free. There is no backfilling, so start
//! times are max-plus expressions of earlier ones and relaxing a resource
//! (more communication qubits) can only make them earlier.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Gate, GateKind};
use crate::grouping::{epr_pairs_of, GateGroup, GroupedCircuit, Item};
use crate::network::{NetworkConfig, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrimitiveKind {
    LocalGate,
    EprGen,
    EntSwap,
    CatEnt,
    CatDisent,
}

impl PrimitiveKind {
    pub fn duration(self) -> usize {
        match self {
            PrimitiveKind::LocalGate | PrimitiveKind::EprGen => 1,
            PrimitiveKind::EntSwap => 2,
            PrimitiveKind::CatEnt | PrimitiveKind::CatDisent => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Operand {
    Data { qubit: usize, qpu: usize },
    Comm { qpu: usize, index: usize },
}

impl Operand {
    pub fn qpu(&self) -> usize {
        match *self {
            Operand::Data { qpu, .. } | Operand::Comm { qpu, .. } => qpu,
        }
    }
}

/// One timed primitive.
///
/// For `LOCAL_GATE`, `operands` line up with `gate.qubits`; a member of a
/// group has its anchor replaced by the remote communication qubit holding
/// the anchor's cat-entangled copy. `EPR_GEN` lists the two communication
/// qubits of one link in path order, `ENT_SWAP` the two halves it measures,
/// `CAT_ENT` is (anchor, home comm, remote comm) and `CAT_DISENT` is
/// (anchor, remote comm).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub operands: Vec<Operand>,
    pub slot: usize,
    pub duration: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<Gate>,
}

impl Primitive {
    pub fn end(&self) -> usize {
        self.slot + self.duration
    }
}

/// A communication qubit reserved over `[from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommHold {
    pub qpu: usize,
    pub index: usize,
    pub from: usize,
    pub to: usize,
    pub group_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduledCircuit {
    pub num_data: usize,
    pub primitives: Vec<Primitive>,
    pub depth: usize,
    pub epr_pairs: usize,
    pub per_qpu_comm_peak: BTreeMap<usize, usize>,
    pub comm_capacity: Vec<usize>,
    pub comm_holds: Vec<CommHold>,
}

impl ScheduledCircuit {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("schedule serializes")
    }

    pub fn group_primitives(&self, group_id: usize) -> impl Iterator<Item = &Primitive> {
        self.primitives
            .iter()
            .filter(move |p| p.group_id == Some(group_id))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("group {group} cannot be routed: {source}")]
    Unroutable { group: usize, source: NetworkError },
    #[error("QPU {qpu} has no communication qubits for group {group}")]
    NoCommQubits { qpu: usize, group: usize },
}

pub fn depth_of(sc: &ScheduledCircuit) -> usize {
    sc.primitives.iter().map(Primitive::end).max().unwrap_or(0)
}

struct Scheduler<'a> {
    net: &'a NetworkConfig,
    gc: &'a GroupedCircuit,
    data_free: Vec<usize>,
    comm_free: Vec<Vec<usize>>,
    out: Vec<Primitive>,
    holds: Vec<CommHold>,
}

pub fn schedule(gc: &GroupedCircuit, net: &NetworkConfig) -> Result<ScheduledCircuit, ScheduleError> {
    let mut s = Scheduler {
        net,
        gc,
        data_free: vec![0; gc.num_qubits],
        comm_free: net.qpus().iter().map(|q| vec![0; q.comm_qubits]).collect(),
        out: Vec::new(),
        holds: Vec::new(),
    };
    let mut group_id = 0;
    for item in &gc.items {
        match item {
            Item::Gate(g) => s.local(g),
            Item::Group(group) => {
                s.group(group, group_id)?;
                group_id += 1;
            }
        }
    }
    let epr_pairs = s
        .out
        .iter()
        .filter(|p| p.kind == PrimitiveKind::EprGen)
        .count();
    debug_assert_eq!(epr_pairs, epr_pairs_of(gc, net));
    let per_qpu_comm_peak = comm_peaks(&s.holds, net.num_qpus());
    let mut sc = ScheduledCircuit {
        num_data: gc.num_qubits,
        primitives: s.out,
        depth: 0,
        epr_pairs,
        per_qpu_comm_peak,
        comm_capacity: net.qpus().iter().map(|q| q.comm_qubits).collect(),
        comm_holds: s.holds,
    };
    sc.depth = depth_of(&sc);
    Ok(sc)
}

fn comm_peaks(holds: &[CommHold], num_qpus: usize) -> BTreeMap<usize, usize> {
    let mut events: Vec<Vec<(usize, i64)>> = vec![Vec::new(); num_qpus];
    for h in holds {
        events[h.qpu].push((h.from, 1));
        events[h.qpu].push((h.to, -1));
    }
    let mut peaks = BTreeMap::new();
    for (qpu, mut ev) in events.into_iter().enumerate() {
        // releases sort before acquisitions at the same instant
        ev.sort_unstable();
        let (mut live, mut peak) = (0i64, 0i64);
        for (_, delta) in ev {
            live += delta;
            peak = peak.max(live);
        }
        peaks.insert(qpu, peak as usize);
    }
    peaks
}

impl Scheduler<'_> {
    fn data(&self, q: usize) -> Operand {
        Operand::Data {
            qubit: q,
            qpu: self.gc.assignment.qpu_of(q),
        }
    }

    fn local(&mut self, g: &Gate) {
        let start = g.qubits.iter().map(|&q| self.data_free[q]).max().unwrap_or(0);
        if g.kind == GateKind::Barrier {
            for &q in &g.qubits {
                self.data_free[q] = start;
            }
            return;
        }
        let operands = g.qubits.iter().map(|&q| self.data(q)).collect();
        self.push(PrimitiveKind::LocalGate, operands, start, None, Some(g.clone()));
        for &q in &g.qubits {
            self.data_free[q] = start + 1;
        }
    }

    fn push(
        &mut self,
        kind: PrimitiveKind,
        operands: Vec<Operand>,
        slot: usize,
        group_id: Option<usize>,
        gate: Option<Gate>,
    ) {
        self.out.push(Primitive {
            kind,
            operands,
            slot,
            duration: kind.duration(),
            group_id,
            gate,
        });
    }

    /// The `count` earliest-free communication qubits of `qpu`.
    fn pick_comm(&self, qpu: usize, count: usize, group: usize) -> Result<Vec<usize>, ScheduleError> {
        let free = &self.comm_free[qpu];
        if free.len() < count {
            return Err(ScheduleError::NoCommQubits { qpu, group });
        }
        let mut idx: Vec<usize> = (0..free.len()).collect();
        idx.sort_by_key(|&i| (free[i], i));
        idx.truncate(count);
        Ok(idx)
    }

    fn group(&mut self, group: &GateGroup, id: usize) -> Result<(), ScheduleError> {
        let path = self
            .net
            .shortest_path(group.home_qpu, group.remote_qpu)
            .map_err(|source| ScheduleError::Unroutable { group: id, source })?;
        let hops = path.len() - 1;
        // comm qubits per path node: one at each end, two at each repeater
        let mut comm: Vec<Vec<usize>> = Vec::with_capacity(path.len());
        for (i, &qpu) in path.iter().enumerate() {
            let need = if i == 0 || i == hops { 1 } else { 2 };
            comm.push(self.pick_comm(qpu, need, id)?);
        }
        let chain = if hops > 1 {
            PrimitiveKind::EprGen.duration() + PrimitiveKind::EntSwap.duration()
        } else {
            PrimitiveKind::EprGen.duration()
        };
        let anchor_free = self.data_free[group.anchor];
        let comm_ready = path
            .iter()
            .zip(&comm)
            .flat_map(|(&qpu, idx)| idx.iter().map(move |&i| (qpu, i)))
            .map(|(qpu, i)| self.comm_free[qpu][i])
            .max()
            .unwrap_or(0);
        // generate just in time for the anchor, but never before the links are free
        let t_gen = comm_ready.max(anchor_free.saturating_sub(chain));
        let ready = t_gen + chain;

        let end_comm = |i: usize| -> Operand {
            let slot = if i == 0 { 0 } else { comm[i].len() - 1 };
            Operand::Comm { qpu: path[i], index: comm[i][slot] }
        };
        let side = |i: usize, right: bool| -> Operand {
            // a repeater's left half pairs towards home, its right half towards remote
            let k = if comm[i].len() == 2 && right { 1 } else { 0 };
            Operand::Comm { qpu: path[i], index: comm[i][k] }
        };
        for e in 0..hops {
            let ops = vec![side(e, true), side(e + 1, false)];
            self.push(PrimitiveKind::EprGen, ops, t_gen, Some(id), None);
        }
        for i in 1..hops {
            let ops = vec![side(i, false), side(i, true)];
            self.push(PrimitiveKind::EntSwap, ops, t_gen + 1, Some(id), None);
        }

        let home = end_comm(0);
        let remote = end_comm(hops);
        let anchor = self.data(group.anchor);
        let cat = anchor_free.max(ready);
        self.push(PrimitiveKind::CatEnt, vec![anchor, home, remote], cat, Some(id), None);

        let mut remote_free = cat + PrimitiveKind::CatEnt.duration();
        let mut members_end = remote_free;
        for g in &group.members {
            let uses_copy = g.touches(group.anchor);
            let mut start = g
                .qubits
                .iter()
                .filter(|&&q| q != group.anchor)
                .map(|&q| self.data_free[q])
                .max()
                .unwrap_or(0)
                .max(cat + PrimitiveKind::CatEnt.duration());
            if uses_copy {
                start = start.max(remote_free);
            }
            let operands = g
                .qubits
                .iter()
                .map(|&q| if q == group.anchor { remote } else { self.data(q) })
                .collect();
            self.push(PrimitiveKind::LocalGate, operands, start, Some(id), Some(g.clone()));
            for &q in &g.qubits {
                if q != group.anchor {
                    self.data_free[q] = start + 1;
                }
            }
            if uses_copy {
                remote_free = start + 1;
            }
            members_end = members_end.max(start + 1);
        }

        let disent = members_end;
        self.push(PrimitiveKind::CatDisent, vec![anchor, remote], disent, Some(id), None);
        let done = disent + PrimitiveKind::CatDisent.duration();
        self.data_free[group.anchor] = done;

        for (i, &qpu) in path.iter().enumerate() {
            let release = if i == 0 || i == hops { done } else { ready };
            for &index in &comm[i] {
                self.comm_free[qpu][index] = release;
                self.holds.push(CommHold { qpu, index, from: t_gen, to: release, group_id: id });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::grouping::{group_gates, SlotLimit};
    use crate::network::QpuSpec;
    use crate::partition::QubitAssignment;

    fn run(c: &Circuit, part: Vec<usize>, net: &NetworkConfig, d: SlotLimit) -> ScheduledCircuit {
        let a = QubitAssignment::new(part, net.num_qpus()).unwrap();
        let gc = group_gates(c, &a, net, d, true);
        schedule(&gc, net).unwrap()
    }

    fn kinds(sc: &ScheduledCircuit) -> Vec<PrimitiveKind> {
        let mut p: Vec<&Primitive> = sc.primitives.iter().collect();
        p.sort_by_key(|p| p.slot);
        p.iter().map(|p| p.kind).collect()
    }

    #[test]
    fn local_circuit_has_standard_depth() {
        let c = Circuit::with_gates(
            "loc",
            3,
            vec![Gate::h(0), Gate::cx(0, 1), Gate::h(2), Gate::cx(1, 2), Gate::h(0)],
        );
        let net = NetworkConfig::homogeneous(2, 3, 4).unwrap();
        let sc = run(&c, vec![0, 0, 0], &net, SlotLimit::Unbounded);
        assert_eq!(sc.depth, c.depth());
        assert_eq!(sc.depth, 3);
        assert_eq!(sc.epr_pairs, 0);
        assert!(sc.primitives.iter().all(|p| p.kind == PrimitiveKind::LocalGate));
    }

    #[test]
    fn empty_and_single_gate() {
        let net = NetworkConfig::homogeneous(2, 1, 1).unwrap();
        assert_eq!(run(&Circuit::new("e", 1), vec![0], &net, SlotLimit::Unbounded).depth, 0);
        let one = Circuit::with_gates("h", 1, vec![Gate::h(0)]);
        assert_eq!(run(&one, vec![0], &net, SlotLimit::Unbounded).depth, 1);
    }

    #[test]
    fn minimal_telegate() {
        let c = Circuit::with_gates("cz", 2, vec![Gate::cz(0, 1)]);
        let net = NetworkConfig::homogeneous(2, 1, 4).unwrap();
        let sc = run(&c, vec![0, 1], &net, SlotLimit::Unbounded);
        use PrimitiveKind::*;
        assert_eq!(kinds(&sc), vec![EprGen, CatEnt, LocalGate, CatDisent]);
        assert_eq!(sc.epr_pairs, 1);
        assert_eq!(sc.depth, 8);
        let member = sc.primitives.iter().find(|p| p.kind == LocalGate).unwrap();
        assert!(matches!(member.operands[0], Operand::Comm { qpu: 1, .. }));
        assert_eq!(sc.per_qpu_comm_peak[&0], 1);
        assert_eq!(sc.per_qpu_comm_peak[&1], 1);
    }

    /// Two independent one-gate sessions between the same QPUs.
    fn two_sessions(nc: usize) -> ScheduledCircuit {
        let c = Circuit::with_gates("two", 4, vec![Gate::cz(0, 2), Gate::cz(1, 3)]);
        let net = NetworkConfig::homogeneous(2, 2, nc).unwrap();
        run(&c, vec![0, 0, 1, 1], &net, SlotLimit::Unbounded)
    }

    /// Smallest makespan of two sessions on one comm qubit per side: the
    /// second may start its EPR generation at any time the first has
    /// released the comm qubits, so try every start.
    fn brute_force_two_sessions_nc1() -> usize {
        let stages = [1, 3, 1, 3];
        let length: usize = stages.iter().sum();
        let mut best = usize::MAX;
        for first in 0..=20 {
            for second in 0..=40 {
                let overlaps = second < first + length && first < second + length;
                if !overlaps {
                    best = best.min((first + length).max(second + length));
                }
            }
        }
        best
    }

    #[test]
    fn comm_contention_delays() {
        let one = two_sessions(1);
        let two = two_sessions(2);
        assert_eq!(two.depth, 8);
        assert_eq!(one.depth, brute_force_two_sessions_nc1());
        assert_eq!(one.depth, 16);
        assert!(one.depth > two.depth);
        let gens: Vec<usize> = one
            .primitives
            .iter()
            .filter(|p| p.kind == PrimitiveKind::EprGen)
            .map(|p| p.slot)
            .collect();
        assert_eq!(gens, vec![0, 8]);
        assert_eq!(one.per_qpu_comm_peak[&0], 1);
        assert_eq!(two.per_qpu_comm_peak[&0], 2);
    }

    #[test]
    fn multi_hop_swaps_at_repeaters() {
        let qpus = (0..3)
            .map(|id| QpuSpec { id, data_qubits: 1, comm_qubits: 2 })
            .collect();
        let net = NetworkConfig::custom(qpus, [(0, 1), (1, 2)]).unwrap();
        let c = Circuit::with_gates("hop", 3, vec![Gate::cz(0, 2)]);
        let sc = run(&c, vec![0, 1, 2], &net, SlotLimit::Unbounded);
        use PrimitiveKind::*;
        assert_eq!(kinds(&sc), vec![EprGen, EprGen, EntSwap, CatEnt, LocalGate, CatDisent]);
        assert_eq!(sc.epr_pairs, 2);
        assert_eq!(sc.depth, 1 + 2 + 3 + 1 + 3);
        assert_eq!(sc.per_qpu_comm_peak[&1], 2);
    }

    #[test]
    fn anchor_is_locked_while_open() {
        // the H on the anchor has to wait for CAT_DISENT
        let c = Circuit::with_gates("lock", 3, vec![Gate::cz(0, 1), Gate::h(2), Gate::h(0)]);
        let net = NetworkConfig::homogeneous(2, 2, 2).unwrap();
        let sc = run(&c, vec![0, 1, 0], &net, SlotLimit::Unbounded);
        let h0 = sc
            .primitives
            .iter()
            .find(|p| p.gate.as_ref().is_some_and(|g| g.kind == GateKind::H && g.qubits == [0]))
            .unwrap();
        assert_eq!(h0.slot, 8);
        assert_eq!(sc.depth, 9);
    }

    #[test]
    fn shared_session_runs_members_in_sequence() {
        let c = Circuit::with_gates(
            "share",
            4,
            vec![Gate::cz(0, 1), Gate::cz(0, 2), Gate::cz(0, 3)],
        );
        let net = NetworkConfig::homogeneous(2, 3, 1).unwrap();
        let sc = run(&c, vec![0, 1, 1, 1], &net, SlotLimit::Unbounded);
        assert_eq!(sc.epr_pairs, 1);
        assert_eq!(sc.depth, 1 + 3 + 3 + 3);
    }
}
