use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crossguard::harness::{
    format_table, load_scenario, metrics_from_trace, read_trace, run, sweep, write_trace, MetricsSummary,
    SweepParam,
};

/// Robot-mediated pedestrian crossing simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; exits non-zero if any conflict occurred.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event trace (one JSON record per line).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the metrics summary as JSON.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Run a scenario once per parameter value and print a metrics table.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values, e.g. 0,0.5,1
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Parse and validate a scenario file.
    Validate { scenario: PathBuf },
    /// Recompute metrics from a stored trace.
    Replay { trace: PathBuf },
}

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn print_metrics(m: &MetricsSummary) {
    println!("pedestrian_wait_ticks    {}", m.pedestrian_wait_ticks);
    println!("crossing_completed       {}", m.crossing_completed);
    println!("denm_count               {}", m.denm_count);
    println!("denm_delivery_ratio      {:.4}", m.denm_delivery_ratio);
    match m.min_ped_vehicle_distance {
        Some(d) => println!("min_ped_vehicle_distance {d:.3}"),
        None => println!("min_ped_vehicle_distance -"),
    }
    println!("violations               {}", m.violations);
}

fn verdict(m: &MetricsSummary) -> ExitCode {
    if m.violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VIOLATIONS)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))
}

fn execute(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Run {
            scenario,
            seed,
            trace,
            metrics,
        } => {
            let mut s = load_scenario(&scenario).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let out = run(&s);
            if let Some(path) = trace {
                write_trace(create(&path)?, &out.trace).map_err(|e| e.to_string())?;
            }
            if let Some(path) = metrics {
                serde_json::to_writer_pretty(create(&path)?, &out.metrics).map_err(|e| e.to_string())?;
            }
            println!("scenario {} (seed {})", s.name, s.seed);
            print_metrics(&out.metrics);
            Ok(verdict(&out.metrics))
        }
        Command::Sweep {
            scenario,
            param,
            values,
        } => {
            let s = load_scenario(&scenario).map_err(|e| e.to_string())?;
            let rows = sweep(&s, param, &values).map_err(|e| e.to_string())?;
            print!("{}", format_table(param, &rows));
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario).map_err(|e| e.to_string())?;
            println!(
                "{}: ok ({} vehicles, {} pedestrians, {} roadside units, {} ticks)",
                s.name,
                s.vehicles.len(),
                s.pedestrians.len(),
                s.roadside_units.len(),
                s.duration_ticks
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { trace } => {
            let f = File::open(&trace).map_err(|e| format!("cannot open {}: {e}", trace.display()))?;
            let events = read_trace(BufReader::new(f)).map_err(|e| e.to_string())?;
            let m = metrics_from_trace(&events);
            print_metrics(&m);
            Ok(verdict(&m))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
