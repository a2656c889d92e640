use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use excode_core::Scheme;
use excode_sim::charts::write_charts;
use excode_sim::{load_config, read_csv, run_figures, run_plan, write_outputs, ExperimentPlan, Workload};

#[derive(Parser)]
#[command(
    name = "excode-sim",
    version,
    about = "Network coding simulator for multi-hop wireless flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write results.csv plus charts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Only this scheme (excode, cope or none).
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Charge coding header bytes against airtime.
        #[arg(long)]
        count_header_overhead: bool,
        /// Write one trace file per run.
        #[arg(long)]
        trace: bool,
    },
    /// Run the built-in topologies and a 16-node load sweep under every
    /// scheme and check the expected coding behavior.
    Figures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Redraw the charts from an existing results.csv.
    Charts {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

type BoxError = Box<dyn std::error::Error>;

fn set_overhead(plan: &mut ExperimentPlan) {
    match &mut plan.workload {
        Workload::Random(r) => r.count_header_overhead = true,
        Workload::Explicit(s) => s.count_header_overhead = true,
        // fixtures keep their own settings
        Workload::Builtin(_) => {}
    }
}

fn execute(plan: &ExperimentPlan, out: &Path) -> Result<(), BoxError> {
    let results = run_plan(plan);
    let csv = write_outputs(plan, &results, out)?;
    for r in &results.runs {
        let m = &r.report;
        println!(
            "{:<7} seed {:<4} flows {:<3} thr {:>9.1} kb/s  pdr {:.3}  enc {:.3}  decode failures {}",
            m.scheme.name(),
            m.seed,
            m.flows,
            m.throughput_kbps,
            m.delivery_ratio,
            m.encoded_fraction,
            m.decode_failures,
        );
    }
    for f in &results.failures {
        eprintln!("skipped {} seed {}: {}", f.cell.scheme, f.cell.seed, f.error);
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), BoxError> {
    match cli.command {
        Command::Run {
            config,
            scheme,
            seed,
            out,
            count_header_overhead,
            trace,
        } => {
            let mut plan = load_config(&config)?.restricted(scheme, seed);
            if count_header_overhead {
                set_overhead(&mut plan);
            }
            plan.trace |= trace;
            let dir = out.unwrap_or_else(|| plan.output_dir.clone());
            execute(&plan, &dir)
        }
        Command::Figures { out, seeds } => {
            if seeds == 0 {
                return Err("--seeds must be at least 1".into());
            }
            let checks = run_figures(&out, seeds)?;
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {}", out.display());
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(format!("{failed} check(s) failed").into());
            }
            Ok(())
        }
        Command::Charts { csv, out } => {
            let file = fs::File::open(&csv).map_err(|e| format!("cannot read {}: {e}", csv.display()))?;
            let rows = read_csv(file)?;
            fs::create_dir_all(&out)?;
            write_charts(&rows, &out)?;
            println!("wrote charts to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
