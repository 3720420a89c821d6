use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dqc_core::corpus;
use dqc_core::network::parse_qpu_type;
use dqc_core::pipeline::{
    self, compile_file, CompileOptions, MatrixConfig, NetworkSpec, OptLevel, OptionSpec,
    DEFAULT_COMM_QUBITS, DEFAULT_D_MAX,
};
use dqc_core::{parse_qasm_file, NetworkConfig, QpuSpec};

#[derive(Parser)]
#[command(name = "dqc", version, about = "Compile quantum circuits for a network of QPUs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one OpenQASM 2 file.
    Compile(CompileArgs),
    /// Run a circuits x networks x options matrix and write CSV/JSON tables.
    Bench(BenchArgs),
    /// Write the generated benchmark circuits as .qasm files.
    GenCorpus {
        #[arg(default_value = "corpus")]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Opt {
    None,
    Limited,
    Unlimited,
}

impl From<Opt> for OptLevel {
    fn from(o: Opt) -> Self {
        match o {
            Opt::None => OptLevel::None,
            Opt::Limited => OptLevel::Limited,
            Opt::Unlimited => OptLevel::Unlimited,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Metrics,
    Schedule,
    Both,
}

#[derive(Args)]
struct NetworkArgs {
    /// Number of QPUs.
    #[arg(long, default_value_t = 2)]
    qpus: usize,
    /// `grid_<nd>_<nc>`, or `auto` for ceil(n_q / qpus) data qubits and 4 comm qubits.
    #[arg(long, default_value = "auto")]
    qpu_type: String,
    /// `complete`, or `file:<path>` with a JSON edge list.
    #[arg(long, default_value = "complete")]
    topology: String,
    /// Full network description (JSON); overrides the three flags above.
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct CompileArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "limited")]
    opt: Opt,
    /// EPR lifetime in slots for `--opt limited`.
    #[arg(long, default_value_t = DEFAULT_D_MAX)]
    dmax: usize,
    /// Disable commutation-based reordering.
    #[arg(long)]
    no_reorder: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, value_enum, default_value = "metrics")]
    emit: Emit,
    /// Write `<circuit>.metrics.csv` / `<circuit>.schedule.json` here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .qasm files.
    corpus: PathBuf,
    /// Matrix description (JSON). Without it, one network from the flags
    /// below is run at every optimisation level.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long, default_value_t = DEFAULT_D_MAX)]
    dmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fill the wall_time_ms column (makes the output run-dependent).
    #[arg(long)]
    timing: bool,
    /// Write bench.csv and bench.json here instead of printing CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn edges_from_file(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let list = value.get("edges").unwrap_or(&value);
    let pairs: Vec<[usize; 2]> = serde_json::from_value(list.clone())
        .with_context(|| format!("{}: expected [[a, b], ...] or {{\"edges\": ...}}", path.display()))?;
    Ok(pairs.into_iter().map(|[a, b]| (a, b)).collect())
}

fn network_for(args: &NetworkArgs, n_q: usize) -> Result<NetworkConfig> {
    if let Some(path) = &args.network {
        return Ok(NetworkConfig::from_json_file(path)?);
    }
    if args.qpus == 0 {
        bail!("--qpus must be positive");
    }
    let (nd, nc) = if args.qpu_type == "auto" {
        (n_q.div_ceil(args.qpus).max(1), DEFAULT_COMM_QUBITS)
    } else {
        parse_qpu_type(&args.qpu_type)?
    };
    let qpus: Vec<QpuSpec> = (0..args.qpus)
        .map(|id| QpuSpec { id, data_qubits: nd, comm_qubits: nc })
        .collect();
    match args.topology.as_str() {
        "complete" => Ok(NetworkConfig::complete(qpus)?),
        other => match other.strip_prefix("file:") {
            Some(path) => Ok(NetworkConfig::custom(qpus, edges_from_file(Path::new(path))?)?),
            None => bail!("unknown topology `{other}` (expected `complete` or `file:<path>`)"),
        },
    }
}

fn run_compile(args: CompileArgs) -> Result<ExitCode> {
    let circuit = parse_qasm_file(&args.file).map_err(pipeline::CompileError::from)?;
    let net = network_for(&args.net, circuit.num_qubits)?;
    let opts = CompileOptions {
        opt_level: args.opt.into(),
        d_max: args.dmax,
        reorder: !args.no_reorder,
        seed: args.seed,
    };
    let compiled = compile_file(&args.file, &net, &opts)?;
    let mut metrics = compiled.metrics.clone();
    metrics.wall_time_ms = None;
    let csv = pipeline::to_csv(&[metrics]);
    let schedule = serde_json::to_string_pretty(&compiled.schedule.to_json())?;
    let want_metrics = args.emit != Emit::Schedule;
    let want_schedule = args.emit != Emit::Metrics;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let stem = &compiled.metrics.circuit;
            if want_metrics {
                fs::write(dir.join(format!("{stem}.metrics.csv")), &csv)?;
            }
            if want_schedule {
                fs::write(dir.join(format!("{stem}.schedule.json")), schedule + "\n")?;
            }
        }
        None => {
            if want_metrics {
                print!("{csv}");
            }
            if want_schedule {
                println!("{schedule}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode> {
    let matrix = match &args.matrix {
        Some(path) => MatrixConfig::from_json_file(path)?,
        None => {
            let network = match &args.net.network {
                Some(file) => NetworkSpec::File { file: file.clone() },
                None if args.net.topology == "complete" => NetworkSpec::Grid {
                    n_qpus: args.net.qpus,
                    qpu_type: args.net.qpu_type.clone(),
                    comm_qubits: None,
                },
                None => bail!("bench supports custom topologies through --network or --matrix"),
            };
            MatrixConfig {
                networks: vec![network],
                options: OptLevel::ALL
                    .iter()
                    .map(|&opt| OptionSpec { opt, d_max: Some(args.dmax), reorder: None })
                    .collect(),
                seed: args.seed,
            }
        }
    };
    let rows = pipeline::bench(&args.corpus, &matrix, args.timing)?;
    let csv = pipeline::to_csv(&rows);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("bench.csv"), &csv)?;
            fs::write(dir.join("bench.json"), pipeline::to_json(&rows) + "\n")?;
        }
        None => print!("{csv}"),
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", rows.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_gen_corpus(dir: &Path) -> Result<ExitCode> {
    fs::create_dir_all(dir)?;
    for c in corpus::standard_corpus() {
        fs::write(dir.join(format!("{}.qasm", c.name)), c.to_qasm())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(args) => run_compile(args),
        Command::Bench(args) => run_bench(args),
        Command::GenCorpus { dir } => run_gen_corpus(&dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(qpus: usize, qpu_type: &str, topology: &str) -> NetworkArgs {
        NetworkArgs { qpus, qpu_type: qpu_type.into(), topology: topology.into(), network: None }
    }

    #[test]
    fn auto_sizes_qpus_to_the_circuit() {
        let net = network_for(&args(3, "auto", "complete"), 10).unwrap();
        assert_eq!(net.qpu_type_label(), "grid_4_4");
        assert_eq!(net.num_qpus(), 3);
    }

    #[test]
    fn explicit_qpu_type_wins() {
        let net = network_for(&args(2, "grid_8_2", "complete"), 3).unwrap();
        assert_eq!((net.qpu(1).data_qubits, net.qpu(1).comm_qubits), (8, 2));
    }

    #[test]
    fn bad_network_flags_are_rejected() {
        assert!(network_for(&args(0, "auto", "complete"), 4).is_err());
        assert!(network_for(&args(2, "grid_x", "complete"), 4).is_err());
        assert!(network_for(&args(2, "auto", "star"), 4).is_err());
        assert!(network_for(&args(2, "auto", "file:/nonexistent/edges.json"), 4).is_err());
    }
}
