use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqc")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn corpus_file(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn metrics_row(args: &[&str]) -> Vec<String> {
    let out = dqc(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("circuit,n_q,n_qpus,qpu_type,opt_level,d_max,epr_pairs,input_depth,output_depth,wall_time_ms,error")
    );
    let row: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    assert_eq!(lines.next(), None);
    row
}

#[test]
fn compile_reports_epr_pairs_per_level() {
    let three_cz = corpus_file("three_cz_n2.qasm");
    let none = metrics_row(&["compile", &three_cz, "--opt", "none"]);
    assert_eq!(&none[..7], ["three_cz_n2", "2", "2", "grid_1_4", "none", "1", "3"]);
    let unl = metrics_row(&["compile", &three_cz, "--opt", "unlimited"]);
    assert_eq!((unl[5].as_str(), unl[6].as_str()), ("unbounded", "1"));
    let no_reorder = metrics_row(&["compile", &three_cz, "--opt", "unlimited", "--no-reorder"]);
    assert_eq!(no_reorder[6], "2");
    let lim = metrics_row(&["compile", &three_cz, "--dmax", "5"]);
    assert_eq!((lim[4].as_str(), lim[5].as_str(), lim[6].as_str()), ("limited", "5", "1"));
}

#[test]
fn compile_writes_schedule_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_string_lossy().into_owned();
    let out = dqc(&["compile", &corpus_file("ghz_n8.qasm"), "--qpus", "4", "--emit", "both", "--out", &out_dir]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let csv = fs::read_to_string(dir.path().join("ghz_n8.metrics.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("ghz_n8,8,4,grid_2_4,limited,3,3,"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ghz_n8.schedule.json")).unwrap()).unwrap();
    let prims = json["primitives"].as_array().unwrap();
    let eprs = prims.iter().filter(|p| p["kind"] == "EPR_GEN").count();
    assert_eq!(eprs, 3);
    assert_eq!(json["epr_pairs"], 3);
    assert!(json["depth"].as_u64().unwrap() > 0);
}

#[test]
fn compile_accepts_topology_and_network_files() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("line.json");
    fs::write(&edges, "[[0, 1], [1, 2]]").unwrap();
    let topology = format!("file:{}", edges.display());
    let ghz = corpus_file("ghz_n8.qasm");
    let line = metrics_row(&["compile", &ghz, "--qpus", "3", "--topology", &topology, "--opt", "none"]);
    let complete = metrics_row(&["compile", &ghz, "--qpus", "3", "--opt", "none"]);
    assert!(line[6].parse::<usize>().unwrap() >= complete[6].parse::<usize>().unwrap());

    let network = dir.path().join("net.json");
    fs::write(&network, r#"{"n_qpus": 2, "qpu_type": "grid_4_1", "topology": "complete"}"#).unwrap();
    let row = metrics_row(&["compile", &ghz, "--network", &network.to_string_lossy()]);
    assert_eq!((row[2].as_str(), row[3].as_str(), row[6].as_str()), ("2", "grid_4_1", "1"));
}

#[test]
fn compile_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qasm");
    fs::write(&bad, "OPENQASM 2.0;\nqreg q[1];\ncx q[0];\n").unwrap();
    let out = dqc(&["compile", &bad.to_string_lossy()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[parse]"));

    let out = dqc(&["compile", &corpus_file("ghz_n8.qasm"), "--qpu-type", "grid_2_2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[assign]"));

    let out = dqc(&["compile", &corpus_file("ghz_n8.qasm"), "--topology", "ring"]);
    assert!(!out.status.success());
}

fn copy_small_corpus(dir: &Path) {
    for name in ["three_cz_n2.qasm", "ghz_n8.qasm", "qft_n6.qasm", "swap_test_n7.qasm"] {
        fs::copy(corpus_file(name), dir.join(name)).unwrap();
    }
}

#[test]
fn bench_is_deterministic_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    copy_small_corpus(dir.path());
    let corpus = dir.path().to_string_lossy().into_owned();
    let first = dqc(&["bench", &corpus, "--qpus", "2"]);
    let second = dqc(&["bench", &corpus, "--qpus", "2"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(stdout(&first).lines().count(), 1 + 4 * 3);

    let out_dir: PathBuf = dir.path().join("tables");
    let out = dqc(&["bench", &corpus, "--qpus", "2", "--out", &out_dir.to_string_lossy()]);
    assert!(out.status.success());
    assert_eq!(fs::read(out_dir.join("bench.csv")).unwrap(), first.stdout);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bench.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 12);
}

#[test]
fn bench_reads_a_matrix_and_flags_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    copy_small_corpus(dir.path());
    fs::write(dir.path().join("broken.qasm"), "OPENQASM 2.0;\nqreg q[2];\nh q[5];\n").unwrap();
    let matrix = dir.path().join("matrix.json");
    fs::write(&matrix, r#"{"networks": [{"n_qpus": 2}, {"n_qpus": 3}], "options": [{"opt": "unlimited"}]}"#).unwrap();
    let out = dqc(&["bench", &dir.path().to_string_lossy(), "--matrix", &matrix.to_string_lossy()]);
    assert!(!out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 5 * 2);
    let broken: Vec<&str> = text.lines().filter(|l| l.starts_with("broken,")).collect();
    assert_eq!(broken.len(), 2);
    assert!(broken.iter().all(|l| l.contains("[parse]")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 of 10 cells failed"));
}

#[test]
fn gen_corpus_reproduces_the_shipped_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dqc(&["gen-corpus", &dir.path().to_string_lossy()]);
    assert!(out.status.success());
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut count = 0;
    for entry in fs::read_dir(&shipped).unwrap() {
        let entry = entry.unwrap();
        let generated = fs::read(dir.path().join(entry.file_name())).unwrap();
        assert_eq!(generated, fs::read(entry.path()).unwrap(), "{:?}", entry.file_name());
        count += 1;
    }
    assert_eq!(count, fs::read_dir(dir.path()).unwrap().count());
}
