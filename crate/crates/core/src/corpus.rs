//! Generators for the benchmark circuit families.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, GateKind};

fn ry(q: usize, theta: f64) -> Gate {
    Gate::new(GateKind::U3 { theta, phi: 0.0, lambda: 0.0 }, vec![q])
}

fn u1(q: usize, lambda: f64) -> Gate {
    Gate::new(GateKind::U1 { lambda }, vec![q])
}

fn ccx(a: usize, b: usize, t: usize) -> Gate {
    Gate::new(GateKind::Ccx, vec![a, b, t])
}

// deterministic, irregular-looking angles
fn angle(i: usize, j: usize) -> f64 {
    let x = ((i * 7919 + j * 104_729) % 997) as f64 / 997.0;
    0.1 + x * (PI - 0.2)
}

fn measure_all(c: &mut Circuit) {
    for q in 0..c.num_qubits {
        c.push(Gate::measure(q, q));
    }
}

pub fn ghz(n: usize) -> Circuit {
    let mut gates = vec![Gate::h(0)];
    gates.extend((1..n).map(|i| Gate::cx(i - 1, i)));
    Circuit::with_gates(format!("ghz_n{n}"), n, gates)
}

/// GHZ chain followed by measuring every qubit.
pub fn cat(n: usize) -> Circuit {
    let mut c = ghz(n);
    c.name = format!("cat_n{n}");
    measure_all(&mut c);
    c
}

/// Two Trotter steps of a transverse-field Ising chain. The ZZ coupling is
/// taken at the point where it is a CZ up to single-qubit phases.
pub fn ising(n: usize) -> Circuit {
    let mut c = Circuit::new(format!("ising_n{n}"), n);
    for q in 0..n {
        c.push(Gate::h(q));
    }
    for step in 0..2 {
        for q in 0..n {
            c.push(Gate::rx(q, angle(q, step)));
        }
        for parity in 0..2 {
            for i in (parity..n.saturating_sub(1)).step_by(2) {
                c.push(Gate::cz(i, i + 1));
            }
        }
    }
    c
}

/// Linear W-state preparation.
pub fn w_state(n: usize) -> Circuit {
    let mut c = Circuit::new(format!("wstate_n{n}"), n);
    c.push(Gate::x(0));
    for k in 0..n - 1 {
        let (ctl, t) = (k, k + 1);
        let theta = (1.0 / (n - k) as f64).sqrt().acos();
        c.push(ry(t, -theta));
        c.push(Gate::cz(ctl, t));
        c.push(ry(t, theta));
        c.push(Gate::cx(t, ctl));
    }
    c
}

/// Controlled phase written as u1/cx, the usual qelib1 `cu1`.
fn cu1(c: &mut Circuit, ctl: usize, t: usize, lambda: f64) {
    c.push(u1(ctl, lambda / 2.0));
    c.push(Gate::cx(ctl, t));
    c.push(u1(t, -lambda / 2.0));
    c.push(Gate::cx(ctl, t));
    c.push(u1(t, lambda / 2.0));
}

pub fn qft(n: usize) -> Circuit {
    let mut c = Circuit::new(format!("qft_n{n}"), n);
    for i in 0..n {
        c.push(Gate::h(i));
        for j in i + 1..n {
            cu1(&mut c, i, j, PI / 2f64.powi((j - i) as i32));
        }
    }
    c
}

fn cswap(c: &mut Circuit, ctl: usize, a: usize, b: usize) {
    c.push(Gate::cx(b, a));
    c.push(ccx(ctl, a, b));
    c.push(Gate::cx(b, a));
}

/// Ancilla 0 compares registers `1..=k` and `k+1..=2k`.
fn swap_test_on(c: &mut Circuit, k: usize) {
    c.push(Gate::h(0));
    for i in 1..=k {
        cswap(c, 0, i, i + k);
    }
    c.push(Gate::h(0));
    c.push(Gate::measure(0, 0));
}

fn registers(n: usize) -> usize {
    assert!(n >= 3 && n % 2 == 1, "needs an ancilla plus two equal registers");
    (n - 1) / 2
}

pub fn swap_test(n: usize) -> Circuit {
    let k = registers(n);
    let mut c = Circuit::new(format!("swap_test_n{n}"), n);
    for i in 1..=k {
        c.push(Gate::h(i));
        c.push(Gate::new(GateKind::T, vec![i + k]));
        c.push(Gate::h(i + k));
    }
    swap_test_on(&mut c, k);
    c
}

/// Amplitude-style encoding of a test and a training vector, then a swap test.
pub fn knn(n: usize) -> Circuit {
    let k = registers(n);
    let mut c = Circuit::new(format!("knn_n{n}"), n);
    for i in 1..=k {
        c.push(ry(i, angle(i, 1)));
        c.push(Gate::rz(i, angle(i, 2)));
        c.push(ry(i + k, angle(i, 3)));
        c.push(Gate::rz(i + k, angle(i, 4)));
    }
    swap_test_on(&mut c, k);
    c
}

/// Variational generator (rotation layers around a CX ladder) on the first
/// register, fixed data on the second, swap-test discriminator.
pub fn qugan(n: usize) -> Circuit {
    let k = registers(n);
    let mut c = Circuit::new(format!("qugan_n{n}"), n);
    for i in 1..=k {
        c.push(ry(i, angle(i, 5)));
        c.push(ry(i + k, angle(i, 6)));
    }
    for i in 1..k {
        c.push(Gate::cx(i, i + 1));
    }
    for i in 1..=k {
        c.push(ry(i, angle(i, 7)));
    }
    swap_test_on(&mut c, k);
    c
}

/// Qubit 0 is the output neuron, coupled to every input in each layer.
pub fn dnn(n: usize) -> Circuit {
    let mut c = Circuit::new(format!("dnn_n{n}"), n);
    for layer in 0..2 {
        for q in 1..n {
            c.push(ry(q, angle(q, layer + 8)));
        }
        for q in 1..n {
            c.push(Gate::cz(0, q));
        }
        c.push(Gate::rx(0, angle(0, layer + 8)));
    }
    c.push(Gate::measure(0, 0));
    c
}

/// Cuccaro ripple-carry adder on `k`-bit registers: qubit 0 is the carry
/// in, then `a`, then `b`, then the carry out.
pub fn adder(k: usize) -> Circuit {
    let n = 2 * k + 2;
    let a = |i: usize| 1 + i;
    let b = |i: usize| 1 + k + i;
    let cout = n - 1;
    let mut c = Circuit::new(format!("adder_n{n}"), n);
    for i in 0..k {
        if i % 2 == 0 {
            c.push(Gate::x(a(i)));
        }
        if i % 3 != 1 {
            c.push(Gate::x(b(i)));
        }
    }
    let maj = |c: &mut Circuit, x: usize, y: usize, z: usize| {
        c.push(Gate::cx(z, y));
        c.push(Gate::cx(z, x));
        c.push(ccx(x, y, z));
    };
    let uma = |c: &mut Circuit, x: usize, y: usize, z: usize| {
        c.push(ccx(x, y, z));
        c.push(Gate::cx(z, x));
        c.push(Gate::cx(x, y));
    };
    maj(&mut c, 0, b(0), a(0));
    for i in 1..k {
        maj(&mut c, a(i - 1), b(i), a(i));
    }
    c.push(Gate::cx(a(k - 1), cout));
    for i in (1..k).rev() {
        uma(&mut c, a(i - 1), b(i), a(i));
    }
    uma(&mut c, 0, b(0), a(0));
    for i in 0..k {
        c.push(Gate::measure(b(i), i));
    }
    c.push(Gate::measure(cout, k));
    c
}

/// Three CZ on one pair with an H on q0 and an RZ on q1 in between.
pub fn three_cz() -> Circuit {
    Circuit::with_gates(
        "three_cz_n2",
        2,
        vec![
            Gate::cz(1, 0),
            Gate::h(0),
            Gate::cz(1, 0),
            Gate::rz(1, PI / 3.0),
            Gate::cz(1, 0),
        ],
    )
}

/// Uniformly random unitary circuit over the full input gate set.
pub fn random_circuit(n: usize, num_gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(format!("random_n{n}_s{seed}"), n);
    for _ in 0..num_gates {
        let pick = rng.gen_range(0..if n >= 3 { 14 } else if n == 2 { 13 } else { 8 });
        let theta = rng.gen_range(-PI..PI);
        let mut qubits: Vec<usize> = (0..n).collect();
        for i in 0..3.min(n) {
            let j = rng.gen_range(i..n);
            qubits.swap(i, j);
        }
        let kind = match pick {
            0 => GateKind::H,
            1 => GateKind::X,
            2 => GateKind::S,
            3 => GateKind::Tdg,
            4 => GateKind::Rx { angle: theta },
            5 => GateKind::Rz { angle: theta },
            6 => GateKind::U3 { theta, phi: rng.gen_range(-PI..PI), lambda: rng.gen_range(-PI..PI) },
            7 => GateKind::Z,
            8..=10 => GateKind::Cx,
            11 => GateKind::Cz,
            12 => GateKind::Swap,
            _ => GateKind::Ccx,
        };
        let arity = kind.arity().expect("fixed arity");
        c.push(Gate::new(kind, qubits[..arity].to_vec()));
    }
    c
}

/// The circuits shipped in `corpus/`, in file-name order.
pub fn standard_corpus() -> Vec<Circuit> {
    let mut out = vec![
        ghz(40),
        ghz(8),
        cat(35),
        cat(6),
        ising(34),
        ising(10),
        w_state(76),
        w_state(118),
        w_state(6),
        qft(29),
        qft(63),
        qft(6),
        qft(8),
        swap_test(25),
        swap_test(41),
        swap_test(83),
        swap_test(7),
        knn(41),
        knn(9),
        qugan(39),
        qugan(71),
        qugan(111),
        qugan(9),
        dnn(33),
        dnn(51),
        dnn(9),
        adder(13),
        adder(31),
        adder(58),
        adder(4),
        three_cz(),
    ];
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// Family name of a corpus circuit, e.g. `swap_test` for `swap_test_n25`.
pub fn family(name: &str) -> &str {
    name.rsplit_once("_n").map_or(name, |(f, _)| f)
}
