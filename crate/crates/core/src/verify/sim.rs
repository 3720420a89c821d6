//! Dense statevector simulation. Qubit `q` is bit `q` of the amplitude index.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};

pub const MAX_QUBITS: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{0} qubits exceeds the simulator limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("cannot simulate non-unitary `{0}`")]
    NonUnitary(&'static str),
    #[error("gate acts on qubit {qubit} of a {n}-qubit state")]
    QubitOutOfRange { qubit: usize, n: usize },
}

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self, SimError> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self, SimError> {
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(StateVector { n, amps })
    }

    /// Haar-ish random state: normalised complex Gaussian amplitudes.
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self, SimError> {
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        let mut gauss = || {
            // Box-Muller
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let v: f64 = rng.gen();
            (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
        };
        let amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(gauss(), gauss()))
            .collect();
        let mut s = StateVector { n, amps };
        s.normalize();
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        let n = amps.len().trailing_zeros() as usize;
        assert_eq!(amps.len(), 1 << n, "length must be a power of two");
        StateVector { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |⟨self|other⟩|, the phase-insensitive overlap.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    /// Appends `extra` qubits in |0⟩ above the existing ones.
    pub fn extended(&self, extra: usize) -> Result<Self, SimError> {
        let n = self.n + extra;
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(StateVector { n, amps })
    }

    /// Keeps the lowest `k` qubits, assuming every higher qubit is |0⟩;
    /// returns the dropped norm² as well.
    pub fn truncated(&self, k: usize) -> (StateVector, f64) {
        let keep = 1usize << k;
        let leaked = self.amps[keep..].iter().map(|a| a.norm_sqr()).sum();
        (
            StateVector {
                n: k,
                amps: self.amps[..keep].to_vec(),
            },
            leaked,
        )
    }

    fn check(&self, q: usize) -> Result<(), SimError> {
        if q >= self.n {
            Err(SimError::QubitOutOfRange { qubit: q, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply_1q(&mut self, q: usize, m: &Matrix2) -> Result<(), SimError> {
        self.check(q)?;
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    /// Applies `m` to `target` on the subspace where `control` is 1.
    pub fn apply_controlled(&mut self, control: usize, target: usize, m: &Matrix2) -> Result<(), SimError> {
        self.check(control)?;
        self.check(target)?;
        let (c, t) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                let (a, b) = (self.amps[i], self.amps[i | t]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | t] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<(), SimError> {
        self.check(a)?;
        self.check(b)?;
        let (ba, bb) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amps.swap(i, i ^ ba ^ bb);
            }
        }
        Ok(())
    }

    pub fn apply_ccx(&mut self, c1: usize, c2: usize, t: usize) -> Result<(), SimError> {
        for q in [c1, c2, t] {
            self.check(q)?;
        }
        let (m1, m2, mt) = (1usize << c1, 1usize << c2, 1usize << t);
        for i in 0..self.amps.len() {
            if i & m1 != 0 && i & m2 != 0 && i & mt == 0 {
                self.amps.swap(i, i | mt);
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), SimError> {
        let q = &g.qubits;
        match g.kind {
            GateKind::Cx => self.apply_controlled(q[0], q[1], &pauli_x()),
            GateKind::Cz => self.apply_controlled(q[0], q[1], &pauli_z()),
            GateKind::Swap => self.apply_swap(q[0], q[1]),
            GateKind::Ccx => self.apply_ccx(q[0], q[1], q[2]),
            GateKind::Measure { .. } | GateKind::Barrier => Err(SimError::NonUnitary(g.kind.name())),
            kind => self.apply_1q(q[0], &single_qubit_matrix(kind).expect("one-qubit kind")),
        }
    }

    /// Probability of reading 1 on `q`.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects `q` onto `outcome` without renormalising.
    pub fn project(&mut self, q: usize, outcome: bool) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) != outcome {
                *a = ZERO;
            }
        }
    }
}

pub fn pauli_x() -> Matrix2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_z() -> Matrix2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub fn hadamard() -> Matrix2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn rx(theta: f64) -> Matrix2 {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    [[c, s], [s, c]]
}

fn rz(theta: f64) -> Matrix2 {
    [
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

fn phase(lambda: f64) -> Matrix2 {
    [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, lambda)]]
}

// The OpenQASM 2 definition of U(θ, φ, λ).
fn u3(theta: f64, phi: f64, lambda: f64) -> Matrix2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        [Complex64::new(c, 0.0), -Complex64::from_polar(s, lambda)],
        [Complex64::from_polar(s, phi), Complex64::from_polar(c, phi + lambda)],
    ]
}

pub fn single_qubit_matrix(kind: GateKind) -> Option<Matrix2> {
    Some(match kind {
        GateKind::H => hadamard(),
        GateKind::X => pauli_x(),
        GateKind::Z => pauli_z(),
        GateKind::S => phase(PI / 2.0),
        GateKind::Sdg => phase(-PI / 2.0),
        GateKind::T => phase(PI / 4.0),
        GateKind::Tdg => phase(-PI / 4.0),
        GateKind::Rx { angle } => rx(angle),
        GateKind::Rz { angle } => rz(angle),
        GateKind::U1 { lambda } => phase(lambda),
        GateKind::U2 { phi, lambda } => u3(PI / 2.0, phi, lambda),
        GateKind::U3 { theta, phi, lambda } => u3(theta, phi, lambda),
        _ => return None,
    })
}

pub fn simulate(c: &Circuit, initial: &StateVector) -> Result<StateVector, SimError> {
    if c.num_qubits > MAX_QUBITS {
        return Err(SimError::TooManyQubits(c.num_qubits));
    }
    let mut state = if initial.num_qubits() < c.num_qubits {
        initial.extended(c.num_qubits - initial.num_qubits())?
    } else {
        initial.clone()
    };
    for g in &c.gates {
        state.apply_gate(g)?;
    }
    Ok(state)
}

/// Dense unitary of `gates` on `n` qubits, one simulated column per basis state.
pub fn unitary_of(gates: &[Gate], n: usize) -> Result<Vec<Vec<Complex64>>, SimError> {
    let dim = 1usize << n;
    let mut columns = Vec::with_capacity(dim);
    for col in 0..dim {
        let mut s = StateVector::basis(n, col)?;
        for g in gates {
            s.apply_gate(g)?;
        }
        columns.push(s.amps);
    }
    Ok(columns)
}

/// Whether `a` and `b` commute as matrices, `‖AB − BA‖_max < 1e-10`.
pub fn matrix_commute_oracle(a: &Gate, b: &Gate, n: usize) -> Result<bool, SimError> {
    let ab = unitary_of(&[b.clone(), a.clone()], n)?;
    let ba = unitary_of(&[a.clone(), b.clone()], n)?;
    Ok(ab
        .iter()
        .flatten()
        .zip(ba.iter().flatten())
        .all(|(x, y)| (x - y).norm() < 1e-10))
}
