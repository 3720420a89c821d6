//! Greedy grouping of non-local gates into shared TeleGate sessions.
//!
//! Every qubit has a working-memory cell pointing at the open group that
//! currently owns it, if any. The scan walks the remaining gates with a
//! cursor:
//!
//! 1. a gate touching no owned qubit is emitted when local, or opens a new
//!    group when non-local;
//! 2. a gate whose owned qubits all belong to one group joins it when
//!    admissible;
//! 3. otherwise, with reordering enabled, the cursor moves on to the next
//!    gate provided that gate commutes with every gate it would overtake;
//! 4. failing that, the blocking group is flushed and the gate retried.
//!
//! Consuming a gate resets the cursor to the first remaining gate. A group
//! is flushed as soon as it has used `d_max` slots. Measurements and barriers
//! flush every group on their qubits and are never reordered.

use std::collections::VecDeque;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::commutation::can_swap;
use crate::network::{epr_cost_of_path, NetworkConfig};
use crate::partition::QubitAssignment;

/// Upper bound on the time slots a group may keep its EPR pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotLimit {
    Bounded(usize),
    Unbounded,
}

impl SlotLimit {
    fn reached(self, slots: usize) -> bool {
        match self {
            SlotLimit::Bounded(limit) => slots >= limit,
            SlotLimit::Unbounded => false,
        }
    }

    pub fn as_option(self) -> Option<usize> {
        match self {
            SlotLimit::Bounded(limit) => Some(limit),
            SlotLimit::Unbounded => None,
        }
    }
}

impl fmt::Display for SlotLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotLimit::Bounded(limit) => write!(f, "{limit}"),
            SlotLimit::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for SlotLimit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SlotLimit::Bounded(limit) => s.serialize_u64(*limit as u64),
            SlotLimit::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

/// Gates sharing one TeleGate session around `anchor`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateGroup {
    pub anchor: usize,
    pub home_qpu: usize,
    pub remote_qpu: usize,
    pub members: Vec<Gate>,
    pub slot_count: usize,
}

impl GateGroup {
    /// Qubits touched by the session, anchor first.
    pub fn qubits(&self) -> Vec<usize> {
        let mut out = vec![self.anchor];
        for g in &self.members {
            for &q in &g.qubits {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }

    pub fn nonlocal_members(&self) -> impl Iterator<Item = &Gate> {
        self.members.iter().filter(|g| g.is_two_qubit())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "item", rename_all = "lowercase")]
pub enum Item {
    Gate(Gate),
    Group(GateGroup),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedCircuit {
    pub num_qubits: usize,
    pub items: Vec<Item>,
    pub assignment: QubitAssignment,
    pub d_max_used: SlotLimit,
}

impl GroupedCircuit {
    pub fn groups(&self) -> impl Iterator<Item = &GateGroup> {
        self.items.iter().filter_map(|i| match i {
            Item::Group(g) => Some(g),
            Item::Gate(_) => None,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.groups().count()
    }

    /// Items with every group expanded into its members, in order.
    pub fn flatten(&self) -> Vec<Gate> {
        let mut out = Vec::new();
        for item in &self.items {
            match item {
                Item::Gate(g) => out.push(g.clone()),
                Item::Group(group) => out.extend(group.members.iter().cloned()),
            }
        }
        out
    }

    pub fn flattened_circuit(&self, name: &str) -> Circuit {
        Circuit::with_gates(name, self.num_qubits, self.flatten())
    }
}

/// EPR pairs consumed by the grouped circuit: each session costs one pair
/// per hop between its QPUs.
pub fn epr_pairs_of(gc: &GroupedCircuit, net: &NetworkConfig) -> usize {
    gc.groups()
        .map(|g| {
            net.shortest_path(g.home_qpu, g.remote_qpu)
                .map(|p| epr_cost_of_path(&p))
                .unwrap_or(0)
        })
        .sum()
}

// Bounded so that opening a group never costs more than a fixed scan.
const ANCHOR_LOOKAHEAD: usize = 1024;

struct OpenGroup {
    group: GateGroup,
    order: usize,
}

struct Grouper<'a> {
    assignment: &'a QubitAssignment,
    d_max: SlotLimit,
    reorder: bool,
    memory: Vec<Option<usize>>,
    open: Vec<Option<OpenGroup>>,
    opened: usize,
    out: Vec<Item>,
}

pub fn group_gates(
    circuit: &Circuit,
    assignment: &QubitAssignment,
    _net: &NetworkConfig,
    d_max: SlotLimit,
    reorder: bool,
) -> GroupedCircuit {
    let mut grouper = Grouper {
        assignment,
        d_max,
        reorder,
        memory: vec![None; circuit.num_qubits],
        open: Vec::new(),
        opened: 0,
        out: Vec::with_capacity(circuit.gates.len()),
    };
    let mut remaining: VecDeque<Gate> = circuit.gates.iter().cloned().collect();
    grouper.run(&mut remaining);
    GroupedCircuit {
        num_qubits: circuit.num_qubits,
        items: grouper.out,
        assignment: assignment.clone(),
        d_max_used: d_max,
    }
}

impl Grouper<'_> {
    fn run(&mut self, ga: &mut VecDeque<Gate>) {
        let mut j = 0;
        while !ga.is_empty() {
            let g = &ga[j];
            if !g.kind.is_unitary() {
                // j == 0 here: nothing commutes past a fence
                let fenced: Vec<usize> = g.qubits.clone();
                self.flush_touching(&fenced);
                let g = ga.remove(j).expect("cursor in range");
                self.out.push(Item::Gate(g));
                j = 0;
                continue;
            }
            let owners = self.owners(g);
            if owners.is_empty() {
                let g = ga.remove(j).expect("cursor in range");
                if g.is_nonlocal(self.assignment) {
                    let anchor = self.choose_anchor(&g, ga, j);
                    self.open_group(g, anchor);
                } else {
                    self.out.push(Item::Gate(g));
                }
                j = 0;
                continue;
            }
            if owners.len() == 1 && self.admissible(g, owners[0]) {
                let g = ga.remove(j).expect("cursor in range");
                self.admit(owners[0], g);
                j = 0;
                continue;
            }
            if self.reorder && j + 1 < ga.len() && (0..=j).all(|k| can_swap(&ga[k], &ga[j + 1])) {
                j += 1;
                continue;
            }
            let blocking = *owners
                .iter()
                .min_by_key(|&&slot| self.open[slot].as_ref().map(|o| o.order))
                .expect("non-empty");
            self.flush(blocking);
        }
        let mut rest: Vec<(usize, usize)> = self
            .open
            .iter()
            .enumerate()
            .filter_map(|(slot, o)| o.as_ref().map(|o| (o.order, slot)))
            .collect();
        rest.sort_unstable();
        for (_, slot) in rest {
            self.flush(slot);
        }
    }

    /// Distinct open groups owning any of `g`'s qubits.
    fn owners(&self, g: &Gate) -> Vec<usize> {
        let mut out = Vec::new();
        for &q in &g.qubits {
            if let Some(slot) = self.memory[q] {
                if !out.contains(&slot) {
                    out.push(slot);
                }
            }
        }
        out
    }

    fn group(&self, slot: usize) -> &GateGroup {
        &self.open[slot].as_ref().expect("open group").group
    }

    fn joins_as_member(&self, g: &Gate, anchor: usize, remote_qpu: usize) -> bool {
        if !g.is_two_qubit() || !g.touches(anchor) {
            return false;
        }
        let other = if g.qubits[0] == anchor { g.qubits[1] } else { g.qubits[0] };
        if self.assignment.qpu_of(other) != remote_qpu {
            return false;
        }
        match g.kind {
            GateKind::Cz => true,
            GateKind::Cx => g.qubits[0] == anchor,
            _ => false,
        }
    }

    fn admissible(&self, g: &Gate, slot: usize) -> bool {
        let group = self.group(slot);
        if g.qubits.len() == 1 {
            let q = g.qubits[0];
            return q != group.anchor && self.memory[q] == Some(slot);
        }
        self.joins_as_member(g, group.anchor, group.remote_qpu)
    }

    /// CX anchors on its control. For CZ, each endpoint is scored by how many
    /// upcoming gates could join a session anchored there before something
    /// else touches it; ties go to the lower index.
    fn choose_anchor(&self, g: &Gate, ga: &VecDeque<Gate>, from: usize) -> usize {
        if g.kind == GateKind::Cx {
            return g.qubits[0];
        }
        let score = |anchor: usize| -> usize {
            let other = if g.qubits[0] == anchor { g.qubits[1] } else { g.qubits[0] };
            let remote = self.assignment.qpu_of(other);
            let mut members = 1;
            for next in ga.iter().skip(from).take(ANCHOR_LOOKAHEAD) {
                if !next.touches(anchor) {
                    continue;
                }
                if self.joins_as_member(next, anchor, remote) {
                    members += 1;
                    if self.d_max.reached(members) {
                        break;
                    }
                } else if self.reorder && matches!(next.kind, GateKind::Rz { .. }) {
                    continue;
                } else {
                    break;
                }
            }
            members
        };
        let (a, b) = (g.qubits[0], g.qubits[1]);
        let (sa, sb) = (score(a), score(b));
        if sb > sa || (sb == sa && b < a) {
            b
        } else {
            a
        }
    }

    fn open_group(&mut self, g: Gate, anchor: usize) {
        let other = if g.qubits[0] == anchor { g.qubits[1] } else { g.qubits[0] };
        let group = GateGroup {
            anchor,
            home_qpu: self.assignment.qpu_of(anchor),
            remote_qpu: self.assignment.qpu_of(other),
            members: vec![g],
            slot_count: 1,
        };
        let slot = match self.open.iter().position(Option::is_none) {
            Some(free) => free,
            None => {
                self.open.push(None);
                self.open.len() - 1
            }
        };
        self.memory[anchor] = Some(slot);
        self.memory[other] = Some(slot);
        self.open[slot] = Some(OpenGroup {
            group,
            order: self.opened,
        });
        self.opened += 1;
        if self.d_max.reached(1) {
            self.flush(slot);
        }
    }

    fn admit(&mut self, slot: usize, g: Gate) {
        for &q in &g.qubits {
            self.memory[q] = Some(slot);
        }
        let open = self.open[slot].as_mut().expect("open group");
        open.group.members.push(g);
        open.group.slot_count += 1;
        if self.d_max.reached(open.group.slot_count) {
            self.flush(slot);
        }
    }

    fn flush(&mut self, slot: usize) {
        let open = self.open[slot].take().expect("open group");
        for q in open.group.qubits() {
            if self.memory[q] == Some(slot) {
                self.memory[q] = None;
            }
        }
        self.out.push(Item::Group(open.group));
    }

    fn flush_touching(&mut self, qubits: &[usize]) {
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for &q in qubits {
            if let Some(slot) = self.memory[q] {
                let order = self.open[slot].as_ref().expect("open group").order;
                if !slots.contains(&(order, slot)) {
                    slots.push((order, slot));
                }
            }
        }
        slots.sort_unstable();
        for (_, slot) in slots {
            self.flush(slot);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::count_nonlocal;

    fn split(partition: Vec<usize>, qpus: usize) -> (QubitAssignment, NetworkConfig) {
        (
            QubitAssignment::new(partition, qpus).unwrap(),
            NetworkConfig::homogeneous(qpus, 8, 2).unwrap(),
        )
    }

    /// Three CZ(q1, q0) with an H on q0 and an RZ on q1 in between.
    fn three_cz() -> Circuit {
        Circuit::with_gates(
            "three_cz",
            2,
            vec![
                Gate::cz(1, 0),
                Gate::h(0),
                Gate::cz(1, 0),
                Gate::rz(1, 0.7),
                Gate::cz(1, 0),
            ],
        )
    }

    #[test]
    fn three_cz_share_one_session() {
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&three_cz(), &a, &net, SlotLimit::Unbounded, true);
        assert_eq!(gc.num_groups(), 1);
        let group = gc.groups().next().unwrap();
        assert_eq!(group.anchor, 1);
        assert_eq!(group.nonlocal_members().count(), 3);
        assert_eq!(epr_pairs_of(&gc, &net), 1);
        // the RZ on the anchor is emitted after the session
        assert!(matches!(gc.items.last(), Some(Item::Gate(g)) if g.kind == GateKind::Rz { angle: 0.7 }));
    }

    #[test]
    fn three_cz_without_reorder_needs_two() {
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&three_cz(), &a, &net, SlotLimit::Unbounded, false);
        assert_eq!(gc.num_groups(), 2);
    }

    #[test]
    fn h_on_anchor_splits_sessions() {
        let c = Circuit::with_gates("h", 4, vec![Gate::cz(0, 2), Gate::h(0), Gate::cz(0, 3)]);
        let (a, net) = split(vec![0, 0, 1, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, false);
        assert_eq!(gc.num_groups(), 2);
        assert_eq!(gc.flatten().len(), 3);
    }

    #[test]
    fn dmax_one_is_one_session_per_nonlocal_gate() {
        let c = three_cz();
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Bounded(1), false);
        assert_eq!(gc.num_groups(), count_nonlocal(&c, &a).unwrap());
        assert!(gc.groups().all(|g| g.members.len() == 1));
    }

    #[test]
    fn dmax_caps_slots() {
        let gates = (0..7).map(|_| Gate::cx(0, 1)).collect();
        let c = Circuit::with_gates("cx", 2, gates);
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Bounded(3), true);
        let sizes: Vec<usize> = gc.groups().map(|g| g.slot_count).collect();
        assert_eq!(sizes, vec![3, 3, 1]);
    }

    #[test]
    fn same_control_different_targets_share() {
        let c = Circuit::with_gates(
            "fan",
            4,
            vec![Gate::cx(0, 1), Gate::cz(0, 2), Gate::h(3), Gate::cx(0, 3)],
        );
        let (a, net) = split(vec![0, 1, 1, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, false);
        assert_eq!(gc.num_groups(), 1);
        assert_eq!(gc.groups().next().unwrap().nonlocal_members().count(), 3);
        // H(3) was emitted on its own before the session closed
        assert!(matches!(&gc.items[0], Item::Gate(g) if g.kind == GateKind::H));
    }

    #[test]
    fn cx_with_anchor_as_target_does_not_join() {
        let c = Circuit::with_gates("rev", 2, vec![Gate::cx(0, 1), Gate::cx(1, 0)]);
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, true);
        assert_eq!(gc.num_groups(), 2);
        let anchors: Vec<usize> = gc.groups().map(|g| g.anchor).collect();
        assert_eq!(anchors, vec![0, 1]);
    }

    #[test]
    fn measurement_is_a_fence() {
        let c = Circuit::with_gates(
            "m",
            2,
            vec![Gate::cz(0, 1), Gate::measure(1, 0), Gate::cz(0, 1)],
        );
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, true);
        assert_eq!(gc.num_groups(), 2);
        assert!(matches!(&gc.items[1], Item::Gate(g) if g.kind == GateKind::Measure { clbit: 0 }));
    }

    #[test]
    fn overtaking_requires_commuting_with_every_skipped_gate() {
        // H(0) is blocked by the session anchored on 0, RZ(2) is blocked by
        // the session anchored on 2. CZ(0, 1) commutes with RZ(2) but not
        // with H(0), so it must not jump ahead of H(0).
        let c = Circuit::with_gates(
            "skip",
            4,
            vec![
                Gate::cx(0, 1),
                Gate::cx(2, 3),
                Gate::h(0),
                Gate::rz(2, 0.1),
                Gate::cz(0, 1),
            ],
        );
        let (a, net) = split(vec![0, 1, 0, 1], 2);
        let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, true);
        let flat = gc.flatten();
        let h = flat.iter().position(|g| g.kind == GateKind::H).unwrap();
        let cz = flat.iter().position(|g| g.kind == GateKind::Cz).unwrap();
        assert!(h < cz);
    }

    #[test]
    fn empty_circuit() {
        let (a, net) = split(vec![0, 1], 2);
        let gc = group_gates(&Circuit::new("e", 2), &a, &net, SlotLimit::Unbounded, true);
        assert!(gc.items.is_empty());
        assert_eq!(epr_pairs_of(&gc, &net), 0);
    }

    #[test]
    fn multi_hop_sessions_cost_path_length() {
        let qpus = (0..3)
            .map(|id| crate::network::QpuSpec { id, data_qubits: 2, comm_qubits: 2 })
            .collect();
        let net = NetworkConfig::custom(qpus, [(0, 1), (1, 2)]).unwrap();
        let a = QubitAssignment::new(vec![0, 2, 0, 2, 0, 2], 3).unwrap();
        let c = Circuit::with_gates(
            "hop",
            6,
            vec![Gate::h(0), Gate::cz(0, 1), Gate::h(0), Gate::cz(2, 3), Gate::h(2), Gate::cx(4, 5)],
        );
        let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, false);
        assert_eq!(gc.num_groups(), 3);
        assert_eq!(epr_pairs_of(&gc, &net), 6);
    }
}
