//! Command-line driver: simulate scenarios, monitor report streams through
//! the SMT encoder, sweep parameters, query the brute-force oracle, and
//! generate satisfiability-reduction instances.

use std::error::Error;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use hlcmon::monitor::{
    capacity_estimate, monitor_reports, sweep, sweep_csv, MonitorWindowing, SweepAxis,
};
use hlcmon::oracle::{find_valid_snapshot_in_window, gen_satisfiability_instance, OracleLimits};
use hlcmon::predicate::{parse_predicate_spec, CnfFormula, Predicate};
use hlcmon::report::{read_reports, trace_to_reports, write_reports, WindowData};
use hlcmon::scenario::parse_scenario;
use hlcmon::sim::{run as simulate, ScenarioConfig};
use hlcmon::smt::{EncoderConfig, SolverConfig};

#[derive(Parser)]
#[command(
    name = "hlcmon",
    about = "Simulate partially synchronous systems and monitor them for latent concurrency bugs via SMT",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and persist its instrumentation trace (JSONL).
    Run(RunArgs),
    /// Check a trace for valid snapshots window by window with a solver.
    Monitor(MonitorArgs),
    /// Sweep one system parameter and emit per-value solver statistics (CSV).
    Sweep(SweepArgs),
    /// Brute-force ground truth on a small trace.
    Oracle(OracleArgs),
    /// Generate a satisfiability-reduction trace from a DIMACS CNF file.
    GenSat(GenSatArgs),
}

#[derive(Args, Clone)]
struct ScenarioFlags {
    /// Scenario file (key = value lines); flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    /// Clock skew bound in ticks.
    #[arg(long)]
    epsilon: Option<u64>,
    /// Fixed message delay in ticks (sets both bounds).
    #[arg(long)]
    delta: Option<u64>,
    #[arg(long)]
    delta_min: Option<u64>,
    #[arg(long)]
    delta_max: Option<u64>,
    /// Per-tick send probability.
    #[arg(long)]
    mfr: Option<f64>,
    /// Run length in ticks.
    #[arg(long)]
    duration: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `synthetic` or `exclusive`.
    #[arg(long)]
    workload: Option<String>,
    /// Synthetic: per-tick change probability.
    #[arg(long)]
    beta: Option<f64>,
    /// Synthetic: minimum hold ticks after a change.
    #[arg(long)]
    interval: Option<u64>,
    /// Synthetic: `bool` or `int`.
    #[arg(long)]
    domain: Option<String>,
    /// Exclusive access: slot length in ticks.
    #[arg(long)]
    slot: Option<u64>,
    /// Exclusive access: guard ticks at the end of each slot.
    #[arg(long)]
    guard: Option<u64>,
    /// Exclusive access: overrun ticks when the fault fires.
    #[arg(long)]
    overrun: Option<u64>,
    #[arg(long)]
    overrun_prob: Option<f64>,
}

impl ScenarioFlags {
    fn build(&self) -> Result<ScenarioConfig, Box<dyn Error>> {
        let mut config = ScenarioConfig::synthetic_defaults(1);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            config = parse_scenario(&text, &config)?;
        }
        // Flags reuse the file syntax so overrides behave identically.
        let mut overrides = String::new();
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                overrides.push_str(&format!("{key} = {v}\n"));
            }
        };
        push("workload", self.workload.clone());
        push("n", self.n.map(|v| v.to_string()));
        push("epsilon", self.epsilon.map(|v| v.to_string()));
        push("delta", self.delta.map(|v| v.to_string()));
        push("delta_min", self.delta_min.map(|v| v.to_string()));
        push("delta_max", self.delta_max.map(|v| v.to_string()));
        push("mfr", self.mfr.map(|v| v.to_string()));
        push("duration", self.duration.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("interval", self.interval.map(|v| v.to_string()));
        push("domain", self.domain.clone());
        push("slot", self.slot.map(|v| v.to_string()));
        push("guard", self.guard.map(|v| v.to_string()));
        push("overrun", self.overrun.map(|v| v.to_string()));
        push("overrun_prob", self.overrun_prob.map(|v| v.to_string()));
        Ok(parse_scenario(&overrides, &config)?)
    }
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Solver command line, e.g. "z3" (script path is appended). Defaults to
    /// HLCMON_SOLVER, then z3 on PATH, then the bundled hlcmon-solver.
    #[arg(long)]
    solver: Option<String>,
    /// Per-window solver timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
}

impl SolverFlags {
    fn build(&self) -> Result<SolverConfig, Box<dyn Error>> {
        let mut config = match &self.solver {
            Some(spec) => {
                let command: Vec<String> = spec.split_whitespace().map(str::to_string).collect();
                if command.is_empty() {
                    return Err("empty --solver command".into());
                }
                SolverConfig::new(command)
            }
            None => SolverConfig::resolve()?,
        };
        config.timeout = Duration::from_secs(self.timeout_secs);
        Ok(config)
    }
}

#[derive(Args, Clone)]
struct EncoderFlags {
    /// Fold (l, c) into one nl variable per process.
    #[arg(long)]
    combine: bool,
    /// Requested c' for the combined encoding (raised per window if needed).
    #[arg(long, default_value_t = 4)]
    c_prime: u64,
    /// Write each window's SMT-LIB2 script into this directory.
    #[arg(long)]
    dump_smt: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct WindowFlags {
    /// Ticks per solver invocation.
    #[arg(long, default_value_t = 100_000)]
    period: u64,
    /// Ticks carried across window boundaries (at least epsilon).
    #[arg(long)]
    overlap: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Output trace file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    /// Trace file to monitor; `-` reads from stdin.
    #[arg(long)]
    trace: PathBuf,
    /// Clock skew bound in ticks.
    #[arg(long)]
    epsilon: u64,
    /// conj | exactly:K | atleast:K | sumeq:K | sumgeq:K | pairwise | cnf:FILE
    #[arg(long)]
    predicate: String,
    #[command(flatten)]
    windowing: WindowFlags,
    #[command(flatten)]
    encoder: EncoderFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Milliseconds of real time per tick, for the capacity estimate.
    #[arg(long, default_value_t = 0.01)]
    tick_ms: f64,
    /// Simulate out-of-order cross-process arrival at the monitor by
    /// re-interleaving the report stream with this seed (per-process FIFO
    /// order is preserved; verdicts must not change).
    #[arg(long)]
    shuffle_arrival: Option<u64>,
    /// Output file for per-window reports (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// mfr | delta | beta | interval | epsilon
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Comma-separated seeds, one run per (value, seed).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
    #[command(flatten)]
    scenario: ScenarioFlags,
    #[arg(long)]
    predicate: String,
    #[command(flatten)]
    windowing: WindowFlags,
    #[command(flatten)]
    encoder: EncoderFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Output CSV file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Trace file to search; `-` reads from stdin.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    epsilon: u64,
    #[arg(long)]
    predicate: String,
    #[arg(long, default_value_t = 4)]
    max_processes: u32,
    #[arg(long, default_value_t = 40)]
    max_ticks: u64,
    #[arg(long, default_value_t = 6)]
    max_events: usize,
}

#[derive(Args)]
struct GenSatArgs {
    /// DIMACS CNF input.
    #[arg(long)]
    cnf: PathBuf,
    /// Clock skew bound; flips are placed at distinct ticks inside (0, epsilon).
    #[arg(long, default_value_t = 20)]
    epsilon: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output trace file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_predicate(spec: &str) -> Result<Predicate, Box<dyn Error>> {
    Ok(parse_predicate_spec(spec)?)
}

fn read_trace(path: &PathBuf) -> Result<Vec<hlcmon::report::ReportMessage>, Box<dyn Error>> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(read_reports(text.as_bytes())?)
    } else {
        let file = std::fs::File::open(path)?;
        Ok(read_reports(BufReader::new(file))?)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Box<dyn Error>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Monitor(args) => cmd_monitor(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::GenSat(args) => cmd_gen_sat(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Box<dyn Error>> {
    let config = args.scenario.build()?;
    let trace = simulate(&config)?;
    let reports = trace_to_reports(&trace)?;
    let mut out = output(&args.out)?;
    write_reports(&mut out, &reports)?;
    out.flush()?;
    eprintln!(
        "simulated {} ticks, {} processes: {} events, {} messages, {} reports",
        config.duration,
        config.n,
        trace.event_count(),
        trace.messages.len(),
        reports.len()
    );
    Ok(())
}

fn cmd_monitor(args: MonitorArgs) -> Result<(), Box<dyn Error>> {
    let mut reports = read_trace(&args.trace)?;
    if let Some(seed) = args.shuffle_arrival {
        reports = hlcmon::report::shuffle_arrival(&reports, seed);
    }
    let predicate = parse_predicate(&args.predicate)?;
    let solver = args.solver.build()?;
    let mut encoder = EncoderConfig::new(args.epsilon);
    encoder.combine = args.encoder.combine;
    encoder.c_prime = args.encoder.c_prime;
    let windowing = MonitorWindowing {
        period: args.windowing.period,
        overlap: args.windowing.overlap.unwrap_or(args.epsilon),
    };
    let window_reports = monitor_reports(
        &reports,
        args.epsilon,
        &windowing,
        &predicate,
        &encoder,
        &solver,
        args.encoder.dump_smt.as_deref(),
    )?;
    let mut out = output(&args.out)?;
    for report in &window_reports {
        serde_json::to_writer(&mut out, report)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let full = WindowData::from_reports(&reports)?;
    let simulated_seconds = full.horizon.l as f64 * args.tick_ms / 1000.0;
    let capacity = capacity_estimate(&window_reports, simulated_seconds, full.n);
    let sat = window_reports.iter().filter(|r| r.is_sat()).count();
    eprintln!(
        "{} windows: {} sat, {} unsat/error; solver {:.3}s per simulated second; \
         standalone monitors needed: {}; combined overhead: {:.1}%",
        window_reports.len(),
        sat,
        window_reports.len() - sat,
        capacity.solver_seconds_per_second,
        capacity.standalone_monitors,
        capacity.combined_overhead_fraction * 100.0
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Box<dyn Error>> {
    let axis: SweepAxis = args.axis.parse()?;
    let base = args.scenario.build()?;
    let predicate = parse_predicate(&args.predicate)?;
    let solver = args.solver.build()?;
    let mut encoder = EncoderConfig::new(base.epsilon);
    encoder.combine = args.encoder.combine;
    encoder.c_prime = args.encoder.c_prime;
    let windowing = MonitorWindowing {
        period: args.windowing.period,
        overlap: args.windowing.overlap.unwrap_or(base.epsilon),
    };
    let points = sweep(
        axis,
        &args.values,
        &base,
        &args.seeds,
        &windowing,
        &predicate,
        &encoder,
        &solver,
    );
    let mut out = output(&args.out)?;
    out.write_all(sweep_csv(&points).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Box<dyn Error>> {
    let reports = read_trace(&args.trace)?;
    let predicate = parse_predicate(&args.predicate)?;
    let window = WindowData::from_reports(&reports)?;
    let limits = OracleLimits {
        max_processes: args.max_processes,
        max_ticks: args.max_ticks,
        max_events_per_process: args.max_events,
    };
    if window.n > limits.max_processes {
        return Err(format!(
            "trace has {} processes, oracle limit is {}",
            window.n, limits.max_processes
        )
        .into());
    }
    if window.horizon.l > limits.max_ticks {
        return Err(format!(
            "trace horizon {} exceeds oracle tick limit {}",
            window.horizon.l, limits.max_ticks
        )
        .into());
    }
    let witness = find_valid_snapshot_in_window(&window, &predicate, args.epsilon)?;
    println!("{}", serde_json::to_string(&witness)?);
    Ok(())
}

fn cmd_gen_sat(args: GenSatArgs) -> Result<(), Box<dyn Error>> {
    let text = std::fs::read_to_string(&args.cnf)?;
    let formula = CnfFormula::parse_dimacs(&text)?;
    let (trace, _predicate) = gen_satisfiability_instance(&formula, args.epsilon, args.seed)?;
    let reports = trace_to_reports(&trace)?;
    let mut out = output(&args.out)?;
    write_reports(&mut out, &reports)?;
    out.flush()?;
    eprintln!(
        "generated {}-process instance from {} clauses; monitor it with \
         --predicate cnf:{} --epsilon {}",
        formula.num_vars,
        formula.clauses.len(),
        args.cnf.display(),
        args.epsilon
    );
    Ok(())
}
