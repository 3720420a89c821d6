//! QPU inventory and connectivity graph, with repeater path lookup.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("QPU {0} needs at least one data qubit and one communication qubit")]
    EmptyQpu(usize),
    #[error("QPU ids must be 0..{expected}, found {found:?}")]
    BadIds { expected: usize, found: Vec<usize> },
    #[error("edge ({0}, {1}) references an unknown QPU or is a self-loop")]
    BadEdge(usize, usize),
    #[error("network is not connected: QPU {0} unreachable from QPU 0")]
    Disconnected(usize),
    #[error("no path between QPU {0} and QPU {1}")]
    NoPath(usize, usize),
    #[error("unknown QPU type `{0}` (expected grid_<data>_<comm>)")]
    BadQpuType(String),
    #[error("network has no QPUs")]
    Empty,
    #[error("invalid network description: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QpuSpec {
    pub id: usize,
    pub data_qubits: usize,
    pub comm_qubits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Complete,
    Custom,
}

/// Parses the `grid_<nd>_<nc>` QPU type shorthand into `(data, comm)`.
/// The grid coupling map itself plays no role in compilation.
pub fn parse_qpu_type(name: &str) -> Result<(usize, usize), NetworkError> {
    let bad = || NetworkError::BadQpuType(name.to_string());
    let rest = name.strip_prefix("grid_").ok_or_else(bad)?;
    let (nd, nc) = rest.split_once('_').ok_or_else(bad)?;
    let nd: usize = nd.parse().map_err(|_| bad())?;
    let nc: usize = nc.parse().map_err(|_| bad())?;
    if nd == 0 || nc == 0 {
        return Err(bad());
    }
    Ok((nd, nc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    qpus: Vec<QpuSpec>,
    edges: BTreeSet<(usize, usize)>,
    topology: TopologyKind,
    adjacency: Vec<Vec<usize>>,
}

impl NetworkConfig {
    /// Fully connected network.
    pub fn complete(qpus: Vec<QpuSpec>) -> Result<Self, NetworkError> {
        let n = qpus.len();
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        Self::build(qpus, edges, TopologyKind::Complete)
    }

    /// Network with explicit links. Must be connected.
    pub fn custom(
        qpus: Vec<QpuSpec>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, NetworkError> {
        let n = qpus.len();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(NetworkError::BadEdge(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Self::build(qpus, set, TopologyKind::Custom)
    }

    /// `n` identical QPUs on a complete graph.
    pub fn homogeneous(n: usize, data_qubits: usize, comm_qubits: usize) -> Result<Self, NetworkError> {
        Self::complete(
            (0..n)
                .map(|id| QpuSpec {
                    id,
                    data_qubits,
                    comm_qubits,
                })
                .collect(),
        )
    }

    fn build(
        mut qpus: Vec<QpuSpec>,
        edges: BTreeSet<(usize, usize)>,
        topology: TopologyKind,
    ) -> Result<Self, NetworkError> {
        if qpus.is_empty() {
            return Err(NetworkError::Empty);
        }
        qpus.sort_by_key(|q| q.id);
        if qpus.iter().enumerate().any(|(i, q)| q.id != i) {
            return Err(NetworkError::BadIds {
                expected: qpus.len(),
                found: qpus.iter().map(|q| q.id).collect(),
            });
        }
        if let Some(q) = qpus.iter().find(|q| q.data_qubits == 0 || q.comm_qubits == 0) {
            return Err(NetworkError::EmptyQpu(q.id));
        }
        let mut adjacency = vec![Vec::new(); qpus.len()];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut topology = topology;
        let n = qpus.len();
        if edges.len() == n * (n - 1) / 2 {
            topology = TopologyKind::Complete;
        }
        let net = NetworkConfig {
            qpus,
            edges,
            topology,
            adjacency,
        };
        let dist = net.hops_from(0);
        if let Some(unreachable) = dist.iter().position(Option::is_none) {
            return Err(NetworkError::Disconnected(unreachable));
        }
        Ok(net)
    }

    pub fn qpus(&self) -> &[QpuSpec] {
        &self.qpus
    }

    pub fn num_qpus(&self) -> usize {
        self.qpus.len()
    }

    pub fn qpu(&self, id: usize) -> &QpuSpec {
        &self.qpus[id]
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn topology(&self) -> TopologyKind {
        self.topology
    }

    pub fn neighbors(&self, qpu: usize) -> &[usize] {
        &self.adjacency[qpu]
    }

    pub fn total_data_qubits(&self) -> usize {
        self.qpus.iter().map(|q| q.data_qubits).sum()
    }

    /// `grid_<nd>_<nc>` when every QPU is alike, otherwise `mixed`.
    pub fn qpu_type_label(&self) -> String {
        let first = self.qpus[0];
        if self
            .qpus
            .iter()
            .all(|q| q.data_qubits == first.data_qubits && q.comm_qubits == first.comm_qubits)
        {
            format!("grid_{}_{}", first.data_qubits, first.comm_qubits)
        } else {
            "mixed".to_string()
        }
    }

    /// Same topology, every QPU with `comm_qubits` communication qubits.
    pub fn with_comm_qubits(&self, comm_qubits: usize) -> Result<Self, NetworkError> {
        let qpus = self
            .qpus
            .iter()
            .map(|q| QpuSpec { comm_qubits, ..*q })
            .collect();
        Self::build(qpus, self.edges.clone(), self.topology)
    }

    fn hops_from(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.qpus.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Minimum-hop path `from -> to`. Among equal-length paths the
    /// lexicographically smallest node sequence wins.
    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Vec<usize>, NetworkError> {
        let n = self.qpus.len();
        if from >= n || to >= n || from == to {
            return Err(NetworkError::NoPath(from, to));
        }
        if self.edges.contains(&(from.min(to), from.max(to))) {
            return Ok(vec![from, to]);
        }
        let dist = self.hops_from(to);
        let mut d = dist[from].ok_or(NetworkError::NoPath(from, to))?;
        let mut path = vec![from];
        let mut cur = from;
        while d > 0 {
            // adjacency lists are sorted, so the first hit is the smallest id
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&v| dist[v] == Some(d - 1))
                .expect("BFS layer has a predecessor");
            path.push(cur);
            d -= 1;
        }
        Ok(path)
    }
}

/// EPR pairs consumed to connect the path's endpoints: one per hop, joined by
/// entanglement swapping at the intermediate QPUs.
pub fn epr_cost_of_path(path: &[usize]) -> usize {
    path.len().saturating_sub(1)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TopologyFile {
    Named(String),
    Edges { edges: Vec<[usize; 2]> },
}

#[derive(Debug, Clone, Deserialize)]
struct QpuFile {
    id: usize,
    data_qubits: Option<usize>,
    comm_qubits: Option<usize>,
    qpu_type: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    qpus: Option<Vec<QpuFile>>,
    n_qpus: Option<usize>,
    qpu_type: Option<String>,
    topology: Option<TopologyFile>,
}

impl NetworkConfig {
    /// Parses the JSON network description:
    ///
    /// ```json
    /// { "qpus": [{"id": 0, "data_qubits": 8, "comm_qubits": 2},
    ///            {"id": 1, "qpu_type": "grid_8_2"}],
    ///   "topology": "complete" }
    /// ```
    ///
    /// `topology` may also be `{"edges": [[0, 1], ...]}`. Instead of a `qpus`
    /// list, `n_qpus` plus a top-level `qpu_type` describes identical QPUs.
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
        let qpus = match (file.qpus, file.n_qpus, file.qpu_type.as_deref()) {
            (Some(list), _, default_type) => list
                .into_iter()
                .map(|q| {
                    let sugar = q.qpu_type.as_deref().or(default_type).map(parse_qpu_type).transpose()?;
                    let data_qubits = q.data_qubits.or(sugar.map(|s| s.0));
                    let comm_qubits = q.comm_qubits.or(sugar.map(|s| s.1));
                    match (data_qubits, comm_qubits) {
                        (Some(data_qubits), Some(comm_qubits)) => Ok(QpuSpec {
                            id: q.id,
                            data_qubits,
                            comm_qubits,
                        }),
                        _ => Err(NetworkError::Parse(format!(
                            "QPU {} needs data_qubits/comm_qubits or qpu_type",
                            q.id
                        ))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(n), Some(kind)) => {
                let (data_qubits, comm_qubits) = parse_qpu_type(kind)?;
                (0..n)
                    .map(|id| QpuSpec {
                        id,
                        data_qubits,
                        comm_qubits,
                    })
                    .collect()
            }
            _ => {
                return Err(NetworkError::Parse(
                    "expected `qpus` or `n_qpus` with `qpu_type`".into(),
                ))
            }
        };
        match file.topology {
            None => Self::complete(qpus),
            Some(TopologyFile::Named(name)) if name == "complete" => Self::complete(qpus),
            Some(TopologyFile::Named(name)) => {
                Err(NetworkError::Parse(format!("unknown topology `{name}`")))
            }
            Some(TopologyFile::Edges { edges }) => {
                Self::custom(qpus, edges.into_iter().map(|[a, b]| (a, b)))
            }
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetworkError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Inverse of [`NetworkConfig::from_json`].
    pub fn to_json(&self) -> serde_json::Value {
        let topology = match self.topology {
            TopologyKind::Complete => serde_json::json!("complete"),
            TopologyKind::Custom => serde_json::json!({
                "edges": self.edges.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()
            }),
        };
        serde_json::json!({ "qpus": self.qpus, "topology": topology })
    }
}
