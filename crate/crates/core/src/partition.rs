//! Qubit assignment: balanced k-way min-cut over the circuit's interaction
//! graph.
//!
//! Edge weights estimate EPR pairs between two qubits if they end up on
//! different QPUs. In [`WeightMode::Raw`] that is the number of two-qubit
//! gates on the pair; in [`WeightMode::GroupingAware`] it is the number of
//! TeleGate sessions the grouping pass would open for the pair in isolation.
//!
//! The partitioner grows an initial partition region by region from a
//! pseudo-peripheral seed, then runs Kernighan-Lin pairwise-swap passes to a
//! local optimum. It restarts [`RESTARTS`] times with shuffled tie-breaking
//! and keeps the lowest cut (earliest restart on ties).

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::grouping::{group_gates, SlotLimit};
use crate::network::NetworkConfig;

pub const RESTARTS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("{needed} qubits do not fit in {available} data qubits")]
    InsufficientCapacity { needed: usize, available: usize },
    #[error("assignment covers {covered} qubits, circuit has {needed}")]
    MissingQubit { covered: usize, needed: usize },
    #[error("QPU {qpu} holds {assigned} qubits but has {capacity} data qubits")]
    OverCapacity {
        qpu: usize,
        assigned: usize,
        capacity: usize,
    },
    #[error("qubit {qubit} assigned to unknown QPU {qpu}")]
    UnknownQpu { qubit: usize, qpu: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Raw,
    GroupingAware,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InteractionGraph {
    pub num_vertices: usize,
    /// Keyed by `(low, high)` qubit pair.
    pub weights: BTreeMap<(usize, usize), u64>,
}

impl InteractionGraph {
    pub fn weight(&self, a: usize, b: usize) -> u64 {
        self.weights
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0)
    }

    fn dense(&self) -> Vec<Vec<u64>> {
        let n = self.num_vertices;
        let mut w = vec![vec![0u64; n]; n];
        for (&(a, b), &wt) in &self.weights {
            w[a][b] = wt;
            w[b][a] = wt;
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QubitAssignment {
    partition_of: Vec<usize>,
    counts: Vec<usize>,
}

impl QubitAssignment {
    pub fn new(partition_of: Vec<usize>, num_qpus: usize) -> Result<Self, PartitionError> {
        let mut counts = vec![0; num_qpus];
        for (qubit, &qpu) in partition_of.iter().enumerate() {
            if qpu >= num_qpus {
                return Err(PartitionError::UnknownQpu { qubit, qpu });
            }
            counts[qpu] += 1;
        }
        Ok(QubitAssignment {
            partition_of,
            counts,
        })
    }

    pub fn qpu_of(&self, qubit: usize) -> usize {
        self.partition_of[qubit]
    }

    pub fn partition_of(&self) -> &[usize] {
        &self.partition_of
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_qubits(&self) -> usize {
        self.partition_of.len()
    }

    pub fn num_qpus(&self) -> usize {
        self.counts.len()
    }

    pub fn check_covers(&self, num_qubits: usize) -> Result<(), PartitionError> {
        if self.partition_of.len() < num_qubits {
            return Err(PartitionError::MissingQubit {
                covered: self.partition_of.len(),
                needed: num_qubits,
            });
        }
        Ok(())
    }

    pub fn check_capacity(&self, net: &NetworkConfig) -> Result<(), PartitionError> {
        for (qpu, &assigned) in self.counts.iter().enumerate() {
            let capacity = net.qpu(qpu).data_qubits;
            if assigned > capacity {
                return Err(PartitionError::OverCapacity {
                    qpu,
                    assigned,
                    capacity,
                });
            }
        }
        Ok(())
    }

    /// `{qubit: qpu_id}` map.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.partition_of
                .iter()
                .enumerate()
                .map(|(q, &p)| (q.to_string(), serde_json::json!(p)))
                .collect(),
        )
    }
}

pub fn build_interaction_graph(
    circuit: &Circuit,
    mode: WeightMode,
    d_max: SlotLimit,
) -> InteractionGraph {
    let mut raw: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for g in circuit.gates.iter().filter(|g| g.is_two_qubit()) {
        let (a, b) = (g.qubits[0], g.qubits[1]);
        *raw.entry((a.min(b), a.max(b))).or_default() += 1;
    }
    let weights = match mode {
        WeightMode::Raw => raw,
        WeightMode::GroupingAware => {
            let mut touching: Vec<Vec<usize>> = vec![Vec::new(); circuit.num_qubits];
            for (i, g) in circuit.gates.iter().enumerate() {
                for &q in &g.qubits {
                    touching[q].push(i);
                }
            }
            raw.keys()
                .map(|&(u, v)| ((u, v), pair_sessions(circuit, &touching, u, v, d_max)))
                .collect()
        }
    };
    InteractionGraph {
        num_vertices: circuit.num_qubits,
        weights,
    }
}

/// Runs the grouping pass on the gates touching `u` or `v`, with `u` and `v`
/// on separate QPUs. Gates that share only one qubit with the pair become
/// fences, since their placement is unknown at this point.
fn pair_sessions(circuit: &Circuit, touching: &[Vec<usize>], u: usize, v: usize, d_max: SlotLimit) -> u64 {
    let local = |q: usize| if q == u { 0 } else { 1 };
    let mut gates = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (tu, tv) = (&touching[u], &touching[v]);
    while i < tu.len() || j < tv.len() {
        let next = match (tu.get(i), tv.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                i += 1;
                j += 1;
                a
            }
            (Some(&a), Some(&b)) if a < b => {
                i += 1;
                a
            }
            (Some(&a), None) => {
                i += 1;
                a
            }
            (_, Some(&b)) => {
                j += 1;
                b
            }
            (None, None) => unreachable!(),
        };
        let g = &circuit.gates[next];
        let mine: Vec<usize> = g.qubits.iter().copied().filter(|&q| q == u || q == v).collect();
        if mine.len() == g.qubits.len() {
            let qubits = g.qubits.iter().map(|&q| local(q)).collect();
            gates.push(Gate::new(g.kind, qubits));
        } else {
            gates.push(Gate::new(
                GateKind::Barrier,
                mine.into_iter().map(local).collect(),
            ));
        }
    }
    let sub = Circuit::with_gates("pair", 2, gates);
    let assignment = QubitAssignment::new(vec![0, 1], 2).expect("two QPUs");
    let net = NetworkConfig::homogeneous(2, 1, 1).expect("valid network");
    group_gates(&sub, &assignment, &net, d_max, true).num_groups() as u64
}

pub fn cut_weight(graph: &InteractionGraph, assignment: &QubitAssignment) -> u64 {
    graph
        .weights
        .iter()
        .filter(|(&(a, b), _)| assignment.qpu_of(a) != assignment.qpu_of(b))
        .map(|(_, &w)| w)
        .sum()
}

/// Per-QPU target sizes: as even as the data-qubit capacities allow, larger
/// shares going to lower QPU ids.
pub fn target_sizes(net: &NetworkConfig, num_qubits: usize) -> Result<Vec<usize>, PartitionError> {
    let available = net.total_data_qubits();
    if available < num_qubits {
        return Err(PartitionError::InsufficientCapacity {
            needed: num_qubits,
            available,
        });
    }
    let caps: Vec<usize> = net.qpus().iter().map(|q| q.data_qubits).collect();
    let mut sizes = vec![0; caps.len()];
    // one qubit at a time to the emptiest QPU with room, lowest id first
    for _ in 0..num_qubits {
        let p = (0..caps.len())
            .filter(|&p| sizes[p] < caps[p])
            .min_by_key(|&p| (sizes[p], p))
            .expect("capacity checked above");
        sizes[p] += 1;
    }
    Ok(sizes)
}

pub fn assign_qubits(
    graph: &InteractionGraph,
    net: &NetworkConfig,
    num_qubits: usize,
    seed: u64,
) -> Result<QubitAssignment, PartitionError> {
    let sizes = target_sizes(net, num_qubits)?;
    let w = graph.dense();
    let n = num_qubits;
    let mut best: Option<(u64, Vec<usize>)> = None;
    for restart in 0..RESTARTS {
        let mut order: Vec<usize> = (0..n).collect();
        if restart > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ restart);
            order.shuffle(&mut rng);
        }
        let mut part = grow_initial(&w, &sizes, &order);
        kernighan_lin(&w, &mut part, sizes.len());
        let cut = cut_of(&w, &part);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, part));
        }
    }
    let (_, part) = best.unwrap_or((0, Vec::new()));
    QubitAssignment::new(part, net.num_qpus())
}

fn cut_of(w: &[Vec<u64>], part: &[usize]) -> u64 {
    let mut cut = 0;
    for a in 0..part.len() {
        for b in a + 1..part.len() {
            if part[a] != part[b] {
                cut += w[a][b];
            }
        }
    }
    cut
}

/// Region growing: each QPU in turn starts from a pseudo-peripheral vertex of
/// the unassigned subgraph and absorbs the most strongly connected vertex
/// until it reaches its target size. `order` breaks ties.
fn grow_initial(w: &[Vec<u64>], sizes: &[usize], order: &[usize]) -> Vec<usize> {
    let n = w.len();
    let unassigned = usize::MAX;
    let mut part = vec![unassigned; n];
    let rank: Vec<usize> = {
        let mut r = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            r[v] = i;
        }
        r
    };
    let last = sizes.len() - 1;
    for (p, &size) in sizes.iter().enumerate() {
        if p == last {
            for slot in part.iter_mut().filter(|s| **s == unassigned) {
                *slot = p;
            }
            break;
        }
        if size == 0 {
            continue;
        }
        let free: Vec<usize> = order.iter().copied().filter(|&v| part[v] == unassigned).collect();
        let Some(start) = peripheral_seed(w, &free, &rank) else {
            break;
        };
        let mut conn = vec![0u64; n];
        let mut taken = 0;
        let mut next = Some(start);
        while taken < size {
            let v = match next.take() {
                Some(v) => v,
                None => {
                    let pick = free
                        .iter()
                        .copied()
                        .filter(|&v| part[v] == unassigned)
                        .max_by(|&a, &b| conn[a].cmp(&conn[b]).then(rank[b].cmp(&rank[a])));
                    match pick {
                        Some(v) => v,
                        None => break,
                    }
                }
            };
            part[v] = p;
            taken += 1;
            for u in 0..n {
                conn[u] += w[v][u];
            }
        }
    }
    part
}

fn peripheral_seed(w: &[Vec<u64>], free: &[usize], rank: &[usize]) -> Option<usize> {
    let first = *free.first()?;
    // endpoint of the heaviest edge inside the free set
    let mut heaviest = (0u64, first);
    for &a in free {
        for &b in free {
            if w[a][b] > heaviest.0 {
                heaviest = (w[a][b], a);
            }
        }
    }
    let in_free = |v: usize| free.contains(&v);
    let farthest = |src: usize| -> usize {
        let n = w.len();
        let mut dist = vec![usize::MAX; n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        let mut best = src;
        while let Some(u) = queue.pop_front() {
            if dist[u] > dist[best] || (dist[u] == dist[best] && rank[u] < rank[best]) {
                best = u;
            }
            for &v in free {
                if w[u][v] > 0 && dist[v] == usize::MAX && in_free(v) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        best
    };
    let far = farthest(heaviest.1);
    Some(farthest(far))
}

/// Kernighan-Lin passes of pairwise swaps between any two partitions. Each
/// pass tentatively swaps the best unlocked pair until none is left, then
/// keeps the prefix with the largest cumulative gain. Stops when no prefix
/// improves the cut, so no single swap can improve it either.
fn kernighan_lin(w: &[Vec<u64>], part: &mut [usize], k: usize) {
    let n = part.len();
    if n < 2 || k < 2 {
        return;
    }
    let gain_of = |conn: &[Vec<i64>], part: &[usize], a: usize, b: usize| -> i64 {
        let (pa, pb) = (part[a], part[b]);
        conn[a][pb] - conn[a][pa] + conn[b][pa] - conn[b][pb] - 2 * w[a][b] as i64
    };
    for _pass in 0..64 {
        let mut conn = vec![vec![0i64; k]; n];
        for a in 0..n {
            for b in 0..n {
                conn[a][part[b]] += w[a][b] as i64;
            }
        }
        let mut locked = vec![false; n];
        let mut swaps: Vec<(usize, usize)> = Vec::new();
        let mut cumulative = 0i64;
        let mut best_gain = 0i64;
        let mut best_len = 0;
        loop {
            let mut pick: Option<(i64, usize, usize)> = None;
            for a in 0..n {
                if locked[a] {
                    continue;
                }
                for b in a + 1..n {
                    if locked[b] || part[a] == part[b] {
                        continue;
                    }
                    let g = gain_of(&conn, part, a, b);
                    if pick.is_none_or(|(bg, _, _)| g > bg) {
                        pick = Some((g, a, b));
                    }
                }
            }
            let Some((g, a, b)) = pick else { break };
            let (pa, pb) = (part[a], part[b]);
            for u in 0..n {
                conn[u][pa] += w[u][b] as i64 - w[u][a] as i64;
                conn[u][pb] += w[u][a] as i64 - w[u][b] as i64;
            }
            part[a] = pb;
            part[b] = pa;
            locked[a] = true;
            locked[b] = true;
            swaps.push((a, b));
            cumulative += g;
            if cumulative > best_gain {
                best_gain = cumulative;
                best_len = swaps.len();
            }
        }
        for &(a, b) in swaps[best_len..].iter().rev() {
            part.swap(a, b);
        }
        if best_gain <= 0 {
            break;
        }
    }
}
