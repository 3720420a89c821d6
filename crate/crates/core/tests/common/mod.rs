//! Random circuit strategies shared by the property tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use proptest::prelude::*;

use dqc_core::{Circuit, Gate, GateKind};

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

/// Distinct qubit operands drawn from `0..n`.
fn operands(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(move |v| v[..k].to_vec())
}

/// Any unitary kind the frontend accepts, with its operands.
pub fn any_unitary_gate(n: usize) -> BoxedStrategy<Gate> {
    let one = prop_oneof![
        Just(GateKind::H),
        Just(GateKind::X),
        Just(GateKind::Z),
        Just(GateKind::S),
        Just(GateKind::Sdg),
        Just(GateKind::T),
        Just(GateKind::Tdg),
        angle().prop_map(|angle| GateKind::Rx { angle }),
        angle().prop_map(|angle| GateKind::Rz { angle }),
        angle().prop_map(|lambda| GateKind::U1 { lambda }),
        (angle(), angle()).prop_map(|(phi, lambda)| GateKind::U2 { phi, lambda }),
        (angle(), angle(), angle()).prop_map(|(theta, phi, lambda)| GateKind::U3 { theta, phi, lambda }),
    ];
    let one = (one, operands(n, 1)).prop_map(|(k, q)| Gate::new(k, q));
    if n == 1 {
        return one.boxed();
    }
    let two = (
        prop_oneof![Just(GateKind::Cx), Just(GateKind::Cz), Just(GateKind::Swap)],
        operands(n, 2),
    )
        .prop_map(|(k, q)| Gate::new(k, q));
    if n == 2 {
        return prop_oneof![3 => one, 2 => two].boxed();
    }
    let three = operands(n, 3).prop_map(|q| Gate::new(GateKind::Ccx, q));
    prop_oneof![3 => one, 3 => two, 1 => three].boxed()
}

/// Gates of the compiler basis. Two-qubit gates are weighted up so that the
/// grouping pass has something to do.
pub fn basis_gate(n: usize) -> BoxedStrategy<Gate> {
    let one = prop_oneof![
        Just(GateKind::H),
        angle().prop_map(|angle| GateKind::Rx { angle }),
        angle().prop_map(|angle| GateKind::Rz { angle }),
    ];
    let one = (one, operands(n, 1)).prop_map(|(k, q)| Gate::new(k, q));
    let two = (prop_oneof![Just(GateKind::Cx), Just(GateKind::Cz)], operands(n, 2))
        .prop_map(|(k, q)| Gate::new(k, q));
    prop_oneof![2 => one, 3 => two].boxed()
}

pub fn unitary_circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_qubits).prop_flat_map(move |n| {
        prop::collection::vec(any_unitary_gate(n), 0..=max_gates)
            .prop_map(move |gates| Circuit::with_gates("prop", n, gates))
    })
}

pub fn basis_circuit(min_qubits: usize, max_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (min_qubits..=max_qubits).prop_flat_map(move |n| {
        prop::collection::vec(basis_gate(n), 0..=max_gates)
            .prop_map(move |gates| Circuit::with_gates("prop", n, gates))
    })
}

/// Appends measurements and a barrier to a unitary circuit.
pub fn with_measurements(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (unitary_circuit(max_qubits, max_gates), any::<bool>()).prop_map(|(mut c, barrier)| {
        let n = c.num_qubits;
        if barrier {
            c.push(Gate::new(GateKind::Barrier, (0..n).collect()));
        }
        for q in 0..n {
            c.push(Gate::measure(q, q));
        }
        c
    })
}

pub fn same_gates(a: &[Gate], b: &[Gate]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_operation(y))
}
