//! Compiler for distributed quantum circuits.
//!
//! A circuit is parsed from OpenQASM 2, rewritten into a small basis,
//! partitioned over the QPUs of a network, its non-local gates grouped into
//! shared TeleGate sessions, and finally scheduled as timed communication
//! primitives. [`pipeline::compile`] runs the whole chain; [`verify`] checks
//! compiled output against the input by statevector simulation.

pub mod circuit;
pub mod commutation;
pub mod corpus;
pub mod grouping;
pub mod network;
pub mod partition;
pub mod pipeline;
pub mod qasm;
pub mod schedule;
pub mod verify;

pub use circuit::{count_nonlocal, to_basis, Circuit, Gate, GateKind};
pub use commutation::{can_swap, commutes, CommutationVerdict, Rule};
pub use grouping::{epr_pairs_of, group_gates, GateGroup, GroupedCircuit, Item, SlotLimit};
pub use network::{epr_cost_of_path, NetworkConfig, NetworkError, QpuSpec, TopologyKind};
pub use partition::{
    assign_qubits, build_interaction_graph, cut_weight, InteractionGraph, PartitionError,
    QubitAssignment, WeightMode,
};
pub use pipeline::{compile, CompileError, CompileOptions, MetricsRecord, OptLevel};
pub use qasm::{parse_qasm, parse_qasm_file, QasmError};
pub use schedule::{depth_of, schedule, Primitive, PrimitiveKind, ScheduledCircuit};
