//! End-to-end compilation and the benchmark matrix runner.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{count_nonlocal, to_basis, Circuit};
use crate::grouping::{epr_pairs_of, group_gates, GroupedCircuit, SlotLimit};
use crate::network::{parse_qpu_type, NetworkConfig, NetworkError};
use crate::partition::{assign_qubits, build_interaction_graph, PartitionError, QubitAssignment, WeightMode};
use crate::qasm::{parse_qasm_file, QasmError};
use crate::schedule::{schedule, ScheduleError, ScheduledCircuit};

pub const DEFAULT_D_MAX: usize = 3;
pub const DEFAULT_COMM_QUBITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptLevel {
    None,
    Limited,
    Unlimited,
}

impl OptLevel {
    pub const ALL: [OptLevel; 3] = [OptLevel::None, OptLevel::Limited, OptLevel::Unlimited];

    pub fn as_str(self) -> &'static str {
        match self {
            OptLevel::None => "none",
            OptLevel::Limited => "limited",
            OptLevel::Unlimited => "unlimited",
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(OptLevel::None),
            "limited" => Ok(OptLevel::Limited),
            "unlimited" => Ok(OptLevel::Unlimited),
            other => Err(format!("unknown optimisation level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub opt_level: OptLevel,
    pub d_max: usize,
    pub reorder: bool,
    pub seed: u64,
}

impl CompileOptions {
    pub fn new(opt_level: OptLevel) -> Self {
        CompileOptions {
            opt_level,
            d_max: DEFAULT_D_MAX,
            reorder: true,
            seed: 0,
        }
    }

    pub fn limited(d_max: usize) -> Self {
        CompileOptions {
            d_max,
            ..Self::new(OptLevel::Limited)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn slot_limit(&self) -> SlotLimit {
        match self.opt_level {
            OptLevel::None => SlotLimit::Bounded(1),
            OptLevel::Limited => SlotLimit::Bounded(self.d_max.max(1)),
            OptLevel::Unlimited => SlotLimit::Unbounded,
        }
    }

    pub fn effective_reorder(&self) -> bool {
        self.opt_level != OptLevel::None && self.reorder
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("[parse] {0}")]
    Parse(#[from] QasmError),
    #[error("[network] {0}")]
    Network(#[from] NetworkError),
    #[error("[assign] {0}")]
    Partition(#[from] PartitionError),
    #[error("[schedule] {0}")]
    Schedule(#[from] ScheduleError),
    #[error("[check] grouping counts {grouping} EPR pairs but the schedule generates {schedule}")]
    EprMismatch { grouping: usize, schedule: usize },
    #[error("[config] {0}")]
    Config(String),
}

impl CompileError {
    pub fn pass(&self) -> &'static str {
        match self {
            CompileError::Parse(_) => "parse",
            CompileError::Network(_) => "network",
            CompileError::Partition(_) => "assign",
            CompileError::Schedule(_) => "schedule",
            CompileError::EprMismatch { .. } => "check",
            CompileError::Config(_) => "config",
        }
    }
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub circuit: String,
    pub n_q: usize,
    pub n_qpus: usize,
    pub qpu_type: String,
    pub opt_level: OptLevel,
    pub d_max: String,
    pub epr_pairs: Option<usize>,
    pub input_depth: Option<usize>,
    pub output_depth: Option<usize>,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
}

pub const CSV_HEADER: &str =
    "circuit,n_q,n_qpus,qpu_type,opt_level,d_max,epr_pairs,input_depth,output_depth,wall_time_ms,error";

#[derive(Debug, Clone)]
pub struct Compiled {
    pub basis: Circuit,
    pub assignment: QubitAssignment,
    pub weight_mode: WeightMode,
    pub grouped: GroupedCircuit,
    pub schedule: ScheduledCircuit,
    pub metrics: MetricsRecord,
}

fn d_max_label(opts: &CompileOptions) -> String {
    opts.slot_limit().to_string()
}

/// Full pass pipeline on an already parsed circuit.
///
/// Optimised levels try both the grouping-aware and the raw interaction
/// graph for qubit assignment and keep whichever yields fewer EPR pairs
/// after grouping (grouping-aware on ties).
pub fn compile(circuit: &Circuit, net: &NetworkConfig, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let started = Instant::now();
    let basis = to_basis(circuit);
    let limit = opts.slot_limit();
    let reorder = opts.effective_reorder();
    let modes: &[WeightMode] = match opts.opt_level {
        OptLevel::None => &[WeightMode::Raw],
        _ => &[WeightMode::GroupingAware, WeightMode::Raw],
    };
    let mut best: Option<(usize, WeightMode, QubitAssignment, GroupedCircuit)> = None;
    for &mode in modes {
        let graph = build_interaction_graph(&basis, mode, limit);
        let assignment = assign_qubits(&graph, net, basis.num_qubits, opts.seed)?;
        let grouped = group_gates(&basis, &assignment, net, limit, reorder);
        let epr = epr_pairs_of(&grouped, net);
        if best.as_ref().is_none_or(|(b, ..)| epr < *b) {
            best = Some((epr, mode, assignment, grouped));
        }
    }
    let (epr, weight_mode, assignment, grouped) = best.expect("at least one weight mode");
    let sc = schedule(&grouped, net)?;
    if sc.epr_pairs != epr {
        return Err(CompileError::EprMismatch {
            grouping: epr,
            schedule: sc.epr_pairs,
        });
    }
    debug_assert!(opts.opt_level != OptLevel::None || epr == count_nonlocal(&basis, &assignment).unwrap_or(epr));
    let metrics = MetricsRecord {
        circuit: circuit.name.clone(),
        n_q: circuit.num_qubits,
        n_qpus: net.num_qpus(),
        qpu_type: net.qpu_type_label(),
        opt_level: opts.opt_level,
        d_max: d_max_label(opts),
        epr_pairs: Some(sc.epr_pairs),
        input_depth: Some(basis.depth()),
        output_depth: Some(sc.depth),
        wall_time_ms: Some(started.elapsed().as_secs_f64() * 1e3),
        error: None,
    };
    Ok(Compiled {
        basis,
        assignment,
        weight_mode,
        grouped,
        schedule: sc,
        metrics,
    })
}

pub fn compile_file(source: &Path, net: &NetworkConfig, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let circuit = parse_qasm_file(source)?;
    compile(&circuit, net, opts)
}

/// A network column of the benchmark matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSpec {
    File {
        file: PathBuf,
    },
    Grid {
        n_qpus: usize,
        /// `grid_<nd>_<nc>`, or `auto` for ⌈n_q / n_qpus⌉ data qubits.
        #[serde(default = "auto")]
        qpu_type: String,
        #[serde(default)]
        comm_qubits: Option<usize>,
    },
}

fn auto() -> String {
    "auto".to_string()
}

impl NetworkSpec {
    pub fn resolve(&self, n_q: usize) -> Result<NetworkConfig, CompileError> {
        match self {
            NetworkSpec::File { file } => Ok(NetworkConfig::from_json_file(file)?),
            NetworkSpec::Grid {
                n_qpus,
                qpu_type,
                comm_qubits,
            } => {
                if *n_qpus == 0 {
                    return Err(CompileError::Config("n_qpus must be positive".into()));
                }
                let (nd, nc) = if qpu_type == "auto" {
                    (n_q.div_ceil(*n_qpus).max(1), DEFAULT_COMM_QUBITS)
                } else {
                    parse_qpu_type(qpu_type)?
                };
                Ok(NetworkConfig::homogeneous(*n_qpus, nd, comm_qubits.unwrap_or(nc))?)
            }
        }
    }

    fn describe(&self) -> (usize, String) {
        match self {
            NetworkSpec::File { file } => (0, file.display().to_string()),
            NetworkSpec::Grid { n_qpus, qpu_type, .. } => (*n_qpus, qpu_type.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub opt: OptLevel,
    #[serde(default)]
    pub d_max: Option<usize>,
    #[serde(default)]
    pub reorder: Option<bool>,
}

impl OptionSpec {
    pub fn to_options(self, seed: u64) -> CompileOptions {
        CompileOptions {
            opt_level: self.opt,
            d_max: self.d_max.unwrap_or(DEFAULT_D_MAX),
            reorder: self.reorder.unwrap_or(true),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub networks: Vec<NetworkSpec>,
    #[serde(default = "default_options")]
    pub options: Vec<OptionSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_options() -> Vec<OptionSpec> {
    OptLevel::ALL
        .iter()
        .map(|&opt| OptionSpec { opt, d_max: None, reorder: None })
        .collect()
}

impl MatrixConfig {
    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        serde_json::from_str(text).map_err(|e| CompileError::Config(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, CompileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CompileError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// `.qasm` files of `dir`, sorted by file name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, CompileError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CompileError::Config(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .collect();
    files.sort();
    Ok(files)
}

fn error_row(name: &str, n_q: usize, net: &NetworkSpec, opts: &CompileOptions, err: &CompileError) -> MetricsRecord {
    let (n_qpus, qpu_type) = net.describe();
    MetricsRecord {
        circuit: name.to_string(),
        n_q,
        n_qpus,
        qpu_type,
        opt_level: opts.opt_level,
        d_max: d_max_label(opts),
        epr_pairs: None,
        input_depth: None,
        output_depth: None,
        wall_time_ms: None,
        error: Some(err.to_string()),
    }
}

/// Runs every (circuit, network, option) cell. Rows come out circuit-major
/// in input order; `wall_time_ms` is only filled when `timing` is set, so
/// that untimed runs are byte-reproducible.
pub fn bench_circuits(
    circuits: &[(String, Result<Circuit, CompileError>)],
    matrix: &MatrixConfig,
    timing: bool,
) -> Vec<MetricsRecord> {
    let mut cells = Vec::new();
    for (ci, _) in circuits.iter().enumerate() {
        for net in &matrix.networks {
            for opt in &matrix.options {
                cells.push((ci, net, opt.to_options(matrix.seed)));
            }
        }
    }
    cells
        .par_iter()
        .map(|(ci, net, opts)| {
            let (name, parsed) = &circuits[*ci];
            let circuit = match parsed {
                Ok(c) => c,
                Err(e) => return error_row(name, 0, net, opts, e),
            };
            let run = net.resolve(circuit.num_qubits).and_then(|n| compile(circuit, &n, opts));
            match run {
                Ok(compiled) => {
                    let mut m = compiled.metrics;
                    if !timing {
                        m.wall_time_ms = None;
                    }
                    m
                }
                Err(e) => error_row(name, circuit.num_qubits, net, opts, &e),
            }
        })
        .collect()
}

pub fn bench(corpus_dir: &Path, matrix: &MatrixConfig, timing: bool) -> Result<Vec<MetricsRecord>, CompileError> {
    let circuits: Vec<(String, Result<Circuit, CompileError>)> = corpus_files(corpus_dir)?
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (name, parse_qasm_file(p).map_err(CompileError::from))
        })
        .collect();
    Ok(bench_circuits(&circuits, matrix, timing))
}

pub fn to_csv(rows: &[MetricsRecord]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory CSV write");
    }
    let body = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
    format!("{CSV_HEADER}\n{body}")
}

pub fn from_csv(text: &str) -> Result<Vec<MetricsRecord>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

pub fn to_json(rows: &[MetricsRecord]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}
