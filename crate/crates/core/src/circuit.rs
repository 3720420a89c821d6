//! Compiler IR: gates over logical qubits and the basis rewriting pass.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::partition::QubitAssignment;

/// Gate kinds accepted by the frontend.
///
/// Only `Rx`, `Rz`, `H`, `Cx`, `Cz`, `Measure` and `Barrier` survive
/// [`to_basis`]; the rest exist so that a parsed circuit mirrors its source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum GateKind {
    H,
    X,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx { angle: f64 },
    Rz { angle: f64 },
    U1 { lambda: f64 },
    U2 { phi: f64, lambda: f64 },
    U3 { theta: f64, phi: f64, lambda: f64 },
    Cx,
    Cz,
    Swap,
    Ccx,
    Measure { clbit: usize },
    Barrier,
}

impl GateKind {
    /// Number of qubits the gate acts on, `None` for variadic barriers.
    pub fn arity(&self) -> Option<usize> {
        use GateKind::*;
        match self {
            H | X | Z | S | Sdg | T | Tdg | Rx { .. } | Rz { .. } | U1 { .. } | U2 { .. }
            | U3 { .. } | Measure { .. } => Some(1),
            Cx | Cz | Swap => Some(2),
            Ccx => Some(3),
            Barrier => None,
        }
    }

    pub fn name(&self) -> &'static str {
        use GateKind::*;
        match self {
            H => "h",
            X => "x",
            Z => "z",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            Rx { .. } => "rx",
            Rz { .. } => "rz",
            U1 { .. } => "u1",
            U2 { .. } => "u2",
            U3 { .. } => "u3",
            Cx => "cx",
            Cz => "cz",
            Swap => "swap",
            Ccx => "ccx",
            Measure { .. } => "measure",
            Barrier => "barrier",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        use GateKind::*;
        match *self {
            Rx { angle } | Rz { angle } => vec![angle],
            U1 { lambda } => vec![lambda],
            U2 { phi, lambda } => vec![phi, lambda],
            U3 { theta, phi, lambda } => vec![theta, phi, lambda],
            _ => Vec::new(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, GateKind::Measure { .. } | GateKind::Barrier)
    }

    pub fn is_basis(&self) -> bool {
        use GateKind::*;
        matches!(
            self,
            Rx { .. } | Rz { .. } | H | Cx | Cz | Measure { .. } | Barrier
        )
    }
}

/// One gate application. `qubits[0]` is the control for `Cx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    #[serde(flatten)]
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// 1-based source line the gate came from, 0 when synthesized.
    #[serde(default)]
    pub line: usize,
}

impl Gate {
    /// Builds a gate, putting `Cz` operands in ascending order.
    pub fn new(kind: GateKind, mut qubits: Vec<usize>) -> Self {
        if kind == GateKind::Cz && qubits.len() == 2 && qubits[0] > qubits[1] {
            qubits.swap(0, 1);
        }
        Gate {
            kind,
            qubits,
            line: 0,
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }

    pub fn h(q: usize) -> Self {
        Gate::new(GateKind::H, vec![q])
    }

    pub fn x(q: usize) -> Self {
        Gate::new(GateKind::X, vec![q])
    }

    pub fn rx(q: usize, angle: f64) -> Self {
        Gate::new(GateKind::Rx { angle }, vec![q])
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Gate::new(GateKind::Rz { angle }, vec![q])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::new(GateKind::Cx, vec![control, target])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Gate::new(GateKind::Cz, vec![a, b])
    }

    pub fn measure(q: usize, clbit: usize) -> Self {
        Gate::new(GateKind::Measure { clbit }, vec![q])
    }

    /// Rotation angle of `Rx`/`Rz`.
    pub fn angle(&self) -> Option<f64> {
        match self.kind {
            GateKind::Rx { angle } | GateKind::Rz { angle } => Some(angle),
            _ => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.is_unitary() && self.qubits.len() == 2
    }

    pub fn touches(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    /// Same kind and operands, ignoring provenance.
    pub fn same_operation(&self, other: &Gate) -> bool {
        self.kind == other.kind && self.qubits == other.qubits
    }

    /// Whether the gate spans two partitions under `assignment`.
    pub fn is_nonlocal(&self, assignment: &QubitAssignment) -> bool {
        self.is_two_qubit()
            && assignment.qpu_of(self.qubits[0]) != assignment.qpu_of(self.qubits[1])
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        let params = self.kind.params();
        if !params.is_empty() {
            let rendered: Vec<String> = params.iter().map(|p| format!("{p:?}")).collect();
            write!(f, "({})", rendered.join(","))?;
        }
        let operands: Vec<String> = self.qubits.iter().map(|q| format!("q[{q}]")).collect();
        write!(f, " {}", operands.join(","))?;
        if let GateKind::Measure { clbit } = self.kind {
            write!(f, " -> c[{clbit}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    pub num_qubits: usize,
    #[serde(default)]
    pub num_clbits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Self {
        Circuit {
            name: name.into(),
            num_qubits,
            num_clbits: 0,
            gates: Vec::new(),
        }
    }

    pub fn with_gates(name: impl Into<String>, num_qubits: usize, gates: Vec<Gate>) -> Self {
        let num_clbits = gates
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::Measure { clbit } => Some(clbit + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        Circuit {
            name: name.into(),
            num_qubits,
            num_clbits,
            gates,
        }
    }

    pub fn push(&mut self, gate: Gate) {
        if let GateKind::Measure { clbit } = gate.kind {
            self.num_clbits = self.num_clbits.max(clbit + 1);
        }
        self.gates.push(gate);
    }

    pub fn is_unitary(&self) -> bool {
        self.gates.iter().all(|g| g.kind.is_unitary())
    }

    pub fn is_basis(&self) -> bool {
        self.gates.iter().all(|g| g.kind.is_basis())
    }

    /// ASAP depth with unit-duration gates. Barriers align their qubits but
    /// take no time.
    pub fn depth(&self) -> usize {
        let mut ready = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for gate in &self.gates {
            let start = gate.qubits.iter().map(|&q| ready[q]).max().unwrap_or(0);
            let end = if gate.kind == GateKind::Barrier {
                start
            } else {
                start + 1
            };
            for &q in &gate.qubits {
                ready[q] = end;
            }
            depth = depth.max(end);
        }
        depth
    }

    /// Renders the circuit as OpenQASM 2.0 over a single `q` register.
    pub fn to_qasm(&self) -> String {
        let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        out.push_str(&format!("qreg q[{}];\n", self.num_qubits));
        if self.num_clbits > 0 {
            out.push_str(&format!("creg c[{}];\n", self.num_clbits));
        }
        for gate in &self.gates {
            out.push_str(&gate.to_string());
            out.push_str(";\n");
        }
        out
    }
}

/// Counts two-qubit gates whose operands sit on different QPUs.
pub fn count_nonlocal(circuit: &Circuit, assignment: &QubitAssignment) -> Result<usize, crate::partition::PartitionError> {
    assignment.check_covers(circuit.num_qubits)?;
    Ok(circuit
        .gates
        .iter()
        .filter(|g| g.is_nonlocal(assignment))
        .count())
}

/// Rewrites every gate into `{RX, RZ, H, CX, CZ, MEASURE, BARRIER}`.
/// Equal to the input up to global phase.
pub fn to_basis(circuit: &Circuit) -> Circuit {
    let mut gates = Vec::with_capacity(circuit.gates.len());
    for gate in &circuit.gates {
        lower_gate(gate, &mut gates);
    }
    Circuit {
        name: circuit.name.clone(),
        num_qubits: circuit.num_qubits,
        num_clbits: circuit.num_clbits,
        gates,
    }
}

fn lower_gate(gate: &Gate, out: &mut Vec<Gate>) {
    use GateKind::*;
    let line = gate.line;
    let q = &gate.qubits;
    let mut emit = |kind: GateKind, qubits: Vec<usize>| out.push(Gate::new(kind, qubits).at_line(line));
    match gate.kind {
        Rx { .. } | Rz { .. } | H | Cx | Cz | Measure { .. } | Barrier => {
            emit(gate.kind, gate.qubits.clone())
        }
        X => emit(Rx { angle: PI }, vec![q[0]]),
        Z => emit(Rz { angle: PI }, vec![q[0]]),
        S => emit(Rz { angle: FRAC_PI_2 }, vec![q[0]]),
        Sdg => emit(Rz { angle: -FRAC_PI_2 }, vec![q[0]]),
        T => emit(Rz { angle: FRAC_PI_4 }, vec![q[0]]),
        Tdg => emit(Rz { angle: -FRAC_PI_4 }, vec![q[0]]),
        U1 { lambda } => emit(Rz { angle: lambda }, vec![q[0]]),
        U2 { phi, lambda } => {
            for (kind, qs) in euler_zxz(FRAC_PI_2, phi, lambda, q[0]) {
                emit(kind, qs);
            }
        }
        U3 { theta, phi, lambda } => {
            for (kind, qs) in euler_zxz(theta, phi, lambda, q[0]) {
                emit(kind, qs);
            }
        }
        Swap => {
            let (a, b) = (q[0], q[1]);
            emit(Cx, vec![a, b]);
            emit(Cx, vec![b, a]);
            emit(Cx, vec![a, b]);
        }
        Ccx => {
            let (a, b, c) = (q[0], q[1], q[2]);
            let t = Rz { angle: FRAC_PI_4 };
            let tdg = Rz { angle: -FRAC_PI_4 };
            emit(H, vec![c]);
            emit(Cx, vec![b, c]);
            emit(tdg, vec![c]);
            emit(Cx, vec![a, c]);
            emit(t, vec![c]);
            emit(Cx, vec![b, c]);
            emit(tdg, vec![c]);
            emit(Cx, vec![a, c]);
            emit(t, vec![b]);
            emit(t, vec![c]);
            emit(H, vec![c]);
            emit(Cx, vec![a, b]);
            emit(t, vec![a]);
            emit(tdg, vec![b]);
            emit(Cx, vec![a, b]);
        }
    }
}

/// `U3(θ, φ, λ) ≃ RZ(φ)·RY(θ)·RZ(λ)` with `RY(θ) = RZ(π/2)·RX(θ)·RZ(-π/2)`,
/// returned in application order.
fn euler_zxz(theta: f64, phi: f64, lambda: f64, q: usize) -> [(GateKind, Vec<usize>); 3] {
    [
        (GateKind::Rz { angle: lambda - FRAC_PI_2 }, vec![q]),
        (GateKind::Rx { angle: theta }, vec![q]),
        (GateKind::Rz { angle: phi + FRAC_PI_2 }, vec![q]),
    ]
}
