use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use excode_core::Scheme;
use excode_sim::{load_config, parse_config, read_csv, run_plan, write_outputs, SweepVariable, Workload};

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_excode-sim"))
}

#[test]
fn shipped_configs_load() {
    let sweep = load_config(&repo_file("configs/flows_sweep.toml")).unwrap();
    assert!(matches!(sweep.workload, Workload::Random(_)));
    assert_eq!(
        sweep.sweep,
        Some((SweepVariable::Flows, vec![2.0, 4.0, 6.0, 8.0, 10.0]))
    );
    assert_eq!(sweep.cells().len(), 5 * 3 * 5);

    let chain = load_config(&repo_file("configs/chain.toml")).unwrap();
    let Workload::Explicit(s) = &chain.workload else {
        panic!("chain is explicit")
    };
    assert_eq!(s.flows.len(), 2);
    assert!(chain.trace);
}

const SMALL_SWEEP: &str = r#"
[traffic]
rate = 40.0
[run]
seed_count = 5
duration = 2.0
[sweep]
variable = "flows"
values = [2, 4, 6, 8, 10]
"#;

#[test]
fn sweep_writes_one_row_per_cell_and_is_reproducible() {
    let plan = parse_config(SMALL_SWEEP).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let results = run_plan(&plan);
        write_outputs(&plan, &results, dir).unwrap();
    }
    let csv_a = fs::read(a.path().join("results.csv")).unwrap();
    let csv_b = fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(csv_a, csv_b);

    let rows = read_csv(&csv_a[..]).unwrap();
    assert_eq!(rows.len(), 75);
    for (row, cell) in rows.iter().zip(plan.cells()) {
        assert_eq!(row.scheme, cell.scheme.name());
        assert_eq!(row.seed, cell.seed);
        assert_eq!(row.flows as f64, cell.sweep_value.unwrap());
        assert_eq!(row.decode_failures, 0);
    }
    for stem in ["throughput", "encoded_fraction", "delivery_ratio", "mean_delay"] {
        let svg = fs::read_to_string(a.path().join(format!("{stem}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"), "{stem}");
        assert!(
            svg.contains("excode") && svg.contains("cope") && svg.contains("none"),
            "{stem}"
        );
    }
}

#[test]
fn run_subcommand_filters_and_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(repo_file("configs/chain.toml"))
        .args(["--scheme", "excode", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].scheme, Scheme::Excode.name());
    assert_eq!(rows[0].seed, 3);
    assert!(rows[0].encodes > 0);
    let trace = fs::read_to_string(dir.path().join("trace_excode_3.csv")).unwrap();
    assert!(trace.starts_with("time,node,event,packet_uid,detail\n"));
    assert!(trace.contains(",1,encode,"));
}

#[test]
fn header_overhead_flag_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(repo_file("configs/chain.toml"))
        .args(["--scheme", "excode", "--count-header-overhead", "--out"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let with = read_csv(fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    let plain = tempfile::tempdir().unwrap();
    bin()
        .args(["run", "--config"])
        .arg(repo_file("configs/chain.toml"))
        .args(["--scheme", "excode", "--out"])
        .arg(plain.path())
        .output()
        .unwrap();
    let without = read_csv(fs::File::open(plain.path().join("results.csv")).unwrap()).unwrap();
    // longer frames push the mean delay up
    assert!(with[0].mean_delay_s.unwrap() > without[0].mean_delay_s.unwrap());
}

#[test]
fn figures_and_charts_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["figures", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["chain", "x", "remote", "crossing"] {
        assert!(dir.path().join(name).join("results.csv").exists(), "{name}");
        assert!(dir.path().join(name).join("trace_excode_0.csv").exists(), "{name}");
    }
    let checks = fs::read_to_string(dir.path().join("checks.txt")).unwrap();
    assert!(!checks.contains("FAIL"), "{checks}");
    assert_eq!(
        read_csv(fs::File::open(dir.path().join("sweep/results.csv")).unwrap())
            .unwrap()
            .len(),
        15
    );
    let redraw = dir.path().join("redraw");
    let status = bin()
        .args(["charts", "--csv"])
        .arg(dir.path().join("remote/results.csv"))
        .arg("--out")
        .arg(&redraw)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(redraw.join("throughput.svg").exists());
}

#[test]
fn bad_input_exits_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[traffic]\nrate = 0.0\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("traffic.rate"), "{err}");

    let out = bin().args(["run", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--scheme", "xor"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
