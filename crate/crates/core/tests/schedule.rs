mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use dqc_core::corpus::standard_corpus;
use dqc_core::pipeline::{compile, CompileOptions, OptLevel};
use dqc_core::schedule::Operand;
use dqc_core::verify::{expand_telegate, verify_equivalence};
use dqc_core::{
    assign_qubits, build_interaction_graph, epr_pairs_of, group_gates, schedule, Circuit,
    GroupedCircuit, NetworkConfig, PrimitiveKind, QubitAssignment, ScheduledCircuit, SlotLimit,
    WeightMode,
};

use common::basis_circuit;

fn no_overlap(mut spans: Vec<(usize, usize)>, what: &str) {
    spans.sort_unstable();
    for w in spans.windows(2) {
        assert!(w[0].1 <= w[1].0, "{what}: {:?} overlaps {:?}", w[0], w[1]);
    }
}

fn check_schedule(sc: &ScheduledCircuit, gc: &GroupedCircuit, net: &NetworkConfig) {
    // one user per qubit at a time
    let mut by_operand: BTreeMap<Operand, Vec<(usize, usize)>> = BTreeMap::new();
    for p in &sc.primitives {
        assert_eq!(p.duration, p.kind.duration());
        for &op in &p.operands {
            by_operand.entry(op).or_default().push((p.slot, p.end()));
        }
    }
    for (op, spans) in by_operand {
        no_overlap(spans, &format!("{op:?}"));
    }

    // reservations never overlap, and the reported peak is the true peak
    let mut holds: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for h in &sc.comm_holds {
        assert!(h.index < net.qpu(h.qpu).comm_qubits);
        holds.entry((h.qpu, h.index)).or_default().push((h.from, h.to));
    }
    for ((q, i), spans) in holds {
        no_overlap(spans, &format!("comm {q}.{i}"));
    }
    for q in 0..net.num_qpus() {
        let mut events: Vec<(usize, i64)> = Vec::new();
        for h in sc.comm_holds.iter().filter(|h| h.qpu == q) {
            events.push((h.from, 1));
            events.push((h.to, -1));
        }
        events.sort_unstable();
        let (mut live, mut peak) = (0i64, 0i64);
        for (_, d) in events {
            live += d;
            peak = peak.max(live);
        }
        let reported = sc.per_qpu_comm_peak.get(&q).copied().unwrap_or(0);
        assert_eq!(reported as i64, peak, "QPU {q}");
        assert!(reported <= net.qpu(q).comm_qubits);
    }

    // comm qubits are only touched inside their session's reservation
    for p in &sc.primitives {
        let Some(g) = p.group_id else { continue };
        for op in &p.operands {
            if let Operand::Comm { qpu, index } = *op {
                assert!(sc.comm_holds.iter().any(|h| h.group_id == g
                    && h.qpu == qpu
                    && h.index == index
                    && h.from <= p.slot
                    && p.end() <= h.to));
            }
        }
    }

    // protocol order inside every session
    let groups: Vec<_> = gc.groups().collect();
    for (id, group) in groups.iter().enumerate() {
        let prims: Vec<_> = sc.group_primitives(id).collect();
        let of = |k| prims.iter().filter(move |p| p.kind == k);
        let hops = net.shortest_path(group.home_qpu, group.remote_qpu).unwrap().len() - 1;
        assert_eq!(of(PrimitiveKind::EprGen).count(), hops);
        assert_eq!(of(PrimitiveKind::EntSwap).count(), hops - 1);
        let ent: Vec<_> = of(PrimitiveKind::CatEnt).collect();
        let dis: Vec<_> = of(PrimitiveKind::CatDisent).collect();
        assert_eq!((ent.len(), dis.len()), (1, 1));
        let members: Vec<_> = of(PrimitiveKind::LocalGate).collect();
        assert_eq!(members.len(), group.members.len());
        let epr_end = of(PrimitiveKind::EprGen).map(|p| p.end()).max().unwrap();
        for s in of(PrimitiveKind::EntSwap) {
            assert!(epr_end <= s.slot);
            assert!(s.end() <= ent[0].slot);
        }
        assert!(epr_end <= ent[0].slot);
        for m in &members {
            assert!(ent[0].end() <= m.slot && m.end() <= dis[0].slot);
        }
    }

    assert_eq!(sc.epr_pairs, epr_pairs_of(gc, net));
    assert_eq!(sc.depth, sc.primitives.iter().map(|p| p.end()).max().unwrap_or(0));
    // local gates alone already need this long
    let local: Vec<_> = gc
        .items
        .iter()
        .filter_map(|i| match i {
            dqc_core::Item::Gate(g) => Some(g.clone()),
            _ => None,
        })
        .collect();
    assert!(sc.depth >= Circuit::with_gates("local", gc.num_qubits, local).depth());
}

fn check_monotone(gc: &GroupedCircuit, net: &NetworkConfig, label: &str) {
    // repeaters need two comm qubits
    let from = if net.topology() == dqc_core::TopologyKind::Complete { 1 } else { 2 };
    let depths: Vec<usize> = [1, 2, 4, 8, 16]
        .iter()
        .filter(|&&nc| nc >= from)
        .map(|&nc| schedule(gc, &net.with_comm_qubits(nc).unwrap()).unwrap().depth)
        .collect();
    assert!(depths.windows(2).all(|w| w[1] <= w[0]), "{label}: {depths:?}");
}

#[test]
fn corpus_schedules_respect_resources() {
    let networks = [(2, 1), (2, 4), (3, 2), (4, 1), (8, 4)];
    for c in standard_corpus() {
        for &(qpus, nc) in &networks {
            let net = NetworkConfig::homogeneous(qpus, c.num_qubits.div_ceil(qpus), nc).unwrap();
            for level in OptLevel::ALL {
                let out = compile(&c, &net, &CompileOptions::new(level)).unwrap();
                check_schedule(&out.schedule, &out.grouped, &net);
                if qpus <= 4 {
                    check_monotone(&out.grouped, &net, &c.name);
                }
            }
        }
    }
}

#[test]
fn line_topology_schedules_respect_resources() {
    let qpus = |nd| (0..4).map(|id| dqc_core::QpuSpec { id, data_qubits: nd, comm_qubits: 2 }).collect();
    for c in standard_corpus().into_iter().filter(|c| c.num_qubits <= 40) {
        let net = NetworkConfig::custom(qpus(c.num_qubits.div_ceil(4)), [(0, 1), (1, 2), (2, 3)]).unwrap();
        let out = compile(&c, &net, &CompileOptions::new(OptLevel::Unlimited)).unwrap();
        check_schedule(&out.schedule, &out.grouped, &net);
    }
}

#[test]
fn repeaters_without_two_comm_qubits_are_reported() {
    let c = Circuit::with_gates("far", 3, vec![dqc_core::Gate::cx(0, 2)]);
    let specs = (0..3).map(|id| dqc_core::QpuSpec { id, data_qubits: 1, comm_qubits: 1 }).collect();
    let net = NetworkConfig::custom(specs, [(0, 1), (1, 2)]).unwrap();
    let a = QubitAssignment::new(vec![0, 1, 2], 3).unwrap();
    let gc = group_gates(&c, &a, &net, SlotLimit::Unbounded, true);
    assert!(matches!(
        schedule(&gc, &net),
        Err(dqc_core::schedule::ScheduleError::NoCommQubits { qpu: 1, .. })
    ));
    assert!(schedule(&gc, &net.with_comm_qubits(2).unwrap()).is_ok());
}

fn grouped(c: &Circuit, net: &NetworkConfig, limit: SlotLimit) -> GroupedCircuit {
    let graph = build_interaction_graph(c, WeightMode::Raw, SlotLimit::Bounded(1));
    let a: QubitAssignment = assign_qubits(&graph, net, c.num_qubits, 0).unwrap();
    group_gates(c, &a, net, limit, true)
}

fn limit() -> impl Strategy<Value = SlotLimit> {
    prop_oneof![
        Just(SlotLimit::Bounded(1)),
        Just(SlotLimit::Bounded(3)),
        Just(SlotLimit::Unbounded)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_schedules_respect_resources(
        c in basis_circuit(2, 8, 40),
        qpus in 2usize..=4,
        nc in 1usize..=3,
        line in any::<bool>(),
        limit in limit(),
    ) {
        let qpus = qpus.min(c.num_qubits);
        let nc = if line && qpus > 2 { nc.max(2) } else { nc };
        let specs = (0..qpus)
            .map(|id| dqc_core::QpuSpec { id, data_qubits: c.num_qubits.div_ceil(qpus), comm_qubits: nc })
            .collect();
        let net = if line {
            NetworkConfig::custom(specs, (1..qpus).map(|q| (q - 1, q))).unwrap()
        } else {
            NetworkConfig::complete(specs).unwrap()
        };
        let gc = grouped(&c, &net, limit);
        let sc = schedule(&gc, &net).unwrap();
        check_schedule(&sc, &gc, &net);
        check_monotone(&gc, &net, "random");
    }

    #[test]
    fn expanded_schedules_reproduce_the_input(
        c in basis_circuit(2, 4, 14),
        qpus in 2usize..=3,
        limit in limit(),
    ) {
        let qpus = qpus.min(c.num_qubits);
        let net = NetworkConfig::homogeneous(qpus, c.num_qubits.div_ceil(qpus), 1).unwrap();
        let gc = grouped(&c, &net, limit);
        let sc = schedule(&gc, &net).unwrap();
        let program = expand_telegate(&sc).unwrap();
        prop_assert!(verify_equivalence(&c, &program, 1e-9).unwrap());
    }
}
