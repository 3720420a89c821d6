//! Statevector equivalence checking of compiled programs.

mod expand;
mod sim;

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::Circuit;

pub use expand::{expand_telegate, ExpandError, ExpandedProgram, Op};
pub use sim::{
    matrix_commute_oracle, simulate, single_qubit_matrix, unitary_of, Matrix2, SimError,
    StateVector, MAX_QUBITS,
};

const RANDOM_STATES: usize = 4;
const STATE_SEED: u64 = 0x5ee_d0f5_7a7e;
// branches closer than this are the same state and get merged
const MERGE_EPS: f64 = 1e-10;
// outcomes less likely than this are dropped
const NEGLIGIBLE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("original circuit must be unitary")]
    NonUnitaryOriginal,
    #[error("program has {program} data qubits, original has {original}")]
    WidthMismatch { program: usize, original: usize },
    #[error("communication qubits still entangled at branch end (leaked norm² {0:.3e})")]
    CommEntangled(f64),
    #[error("branch probabilities sum to {0}, not 1")]
    ProbabilityMass(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome {
    pub measurement_bits: Vec<bool>,
    pub post_state: StateVector,
    pub probability: f64,
}

struct Branch {
    state: StateVector,
    probability: f64,
    bits: Vec<bool>,
}

fn parity(bits: &[bool], of: &[usize]) -> bool {
    of.iter().fold(false, |acc, &b| acc ^ bits[b])
}

// index of the op that reads each bit last
fn last_reads(program: &ExpandedProgram) -> Vec<Option<usize>> {
    let mut last = vec![None; program.num_bits];
    for (i, op) in program.ops.iter().enumerate() {
        match op {
            Op::CondX { bits, .. } | Op::CondZ { bits, .. } => {
                for &b in bits {
                    last[b] = Some(i);
                }
            }
            Op::Measure { bit, .. } => {
                last[*bit] = last[*bit].or(Some(i));
            }
            Op::Gate(_) => {}
        }
    }
    last
}

/// Runs `program` on `initial` (padded with |0⟩ communication wires),
/// forking at every measurement.
///
/// With `merge`, branches that agree on every measurement bit still to be
/// read and whose states coincide are folded together, which keeps
/// TeleGate-heavy programs from growing 2^m branches; the returned bits are
/// then those of one representative.
pub fn enumerate_branches(
    program: &ExpandedProgram,
    initial: &StateVector,
    merge: bool,
) -> Result<Vec<BranchOutcome>, VerifyError> {
    let state = initial.extended(program.num_wires - initial.num_qubits())?;
    let last = last_reads(program);
    let mut branches = vec![Branch {
        state,
        probability: 1.0,
        bits: vec![false; program.num_bits],
    }];
    let mut dead = vec![false; program.num_bits];
    for (i, op) in program.ops.iter().enumerate() {
        match op {
            Op::Gate(g) => {
                for b in &mut branches {
                    b.state.apply_gate(g)?;
                }
            }
            Op::CondX { wire, bits } | Op::CondZ { wire, bits } => {
                let m = if matches!(op, Op::CondX { .. }) { sim::pauli_x() } else { sim::pauli_z() };
                for b in &mut branches {
                    if parity(&b.bits, bits) {
                        b.state.apply_1q(*wire, &m)?;
                    }
                }
            }
            Op::Measure { wire, bit } => {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for b in branches {
                    let p1 = b.state.prob_one(*wire);
                    for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
                        if p < NEGLIGIBLE {
                            continue;
                        }
                        let mut state = b.state.clone();
                        state.project(*wire, outcome);
                        state.normalize();
                        let mut bits = b.bits.clone();
                        bits[*bit] = outcome;
                        next.push(Branch { state, probability: b.probability * p, bits });
                    }
                }
                branches = next;
            }
        }
        let mut killed = false;
        for (b, l) in last.iter().enumerate() {
            if *l == Some(i) {
                dead[b] = true;
                killed = true;
            }
        }
        if merge && killed && branches.len() > 1 {
            branches = merge_branches(branches, &dead);
        }
    }
    Ok(branches
        .into_iter()
        .map(|b| BranchOutcome {
            measurement_bits: b.bits,
            post_state: b.state,
            probability: b.probability,
        })
        .collect())
}

fn merge_branches(branches: Vec<Branch>, dead: &[bool]) -> Vec<Branch> {
    let live_key = |b: &Branch| -> Vec<bool> {
        b.bits
            .iter()
            .zip(dead)
            .map(|(&bit, &d)| bit && !d)
            .collect()
    };
    let mut by_key: HashMap<Vec<bool>, Vec<Branch>> = HashMap::new();
    let mut order = Vec::new();
    for b in branches {
        let key = live_key(&b);
        let bucket = by_key.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        match bucket
            .iter_mut()
            .find(|kept| kept.state.fidelity(&b.state) >= 1.0 - MERGE_EPS)
        {
            Some(kept) => kept.probability += b.probability,
            None => bucket.push(b),
        }
    }
    order
        .into_iter()
        .flat_map(|k| by_key.remove(&k).unwrap_or_default())
        .collect()
}

/// Fixed test inputs: up to 16 computational basis states plus a few
/// seeded random states.
pub fn initial_states(n: usize) -> Result<Vec<StateVector>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(STATE_SEED ^ n as u64);
    let dim = 1usize << n;
    let mut indices: Vec<usize> = if n <= 4 {
        (0..dim).collect()
    } else {
        sample(&mut rng, dim, 16).into_vec()
    };
    indices.sort_unstable();
    let mut out = indices
        .into_iter()
        .map(|i| StateVector::basis(n, i))
        .collect::<Result<Vec<_>, _>>()?;
    for _ in 0..RANDOM_STATES {
        out.push(StateVector::random(n, &mut rng)?);
    }
    Ok(out)
}

/// True iff every measurement branch of `compiled`, on every test input,
/// leaves the communication wires in |0⟩ and the data wires in the state
/// `original` produces, up to global phase within `tol`.
pub fn verify_equivalence(
    original: &Circuit,
    compiled: &ExpandedProgram,
    tol: f64,
) -> Result<bool, VerifyError> {
    if !original.is_unitary() {
        return Err(VerifyError::NonUnitaryOriginal);
    }
    if compiled.num_data != original.num_qubits {
        return Err(VerifyError::WidthMismatch {
            program: compiled.num_data,
            original: original.num_qubits,
        });
    }
    if compiled.num_wires > MAX_QUBITS {
        return Err(SimError::TooManyQubits(compiled.num_wires).into());
    }
    let inputs = initial_states(original.num_qubits)?;
    let verdicts = inputs
        .par_iter()
        .map(|input| check_input(original, compiled, input, tol))
        .collect::<Result<Vec<bool>, VerifyError>>()?;
    Ok(verdicts.into_iter().all(|ok| ok))
}

fn check_input(
    original: &Circuit,
    compiled: &ExpandedProgram,
    input: &StateVector,
    tol: f64,
) -> Result<bool, VerifyError> {
    let expected = simulate(original, input)?;
    let branches = enumerate_branches(compiled, input, true)?;
    let mass: f64 = branches.iter().map(|b| b.probability).sum();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(VerifyError::ProbabilityMass(mass));
    }
    let mut ok = true;
    for b in &branches {
        let (mut data, leaked) = b.post_state.truncated(compiled.num_data);
        if leaked > tol {
            return Err(VerifyError::CommEntangled(leaked));
        }
        data.normalize();
        ok &= data.fidelity(&expected) >= 1.0 - tol;
    }
    Ok(ok)
}
