//! `gwplace`: generate scenarios, place gateways, evaluate and benchmark.
//!
//! Exit codes: 0 success, 2 usage or unreadable input, 3 scenario generation
//! failed, 4 infeasible placement or invalid solution, 1 anything else.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gwplace::bench::{self, Algorithm, BenchPlan, TrackingAllocator};
use gwplace::eval::{cdf, ccdf};
use gwplace::format::fmt_sig9;
use gwplace::{
    evaluate_with_load, generate, oracle_solve, solve_fgwp, solve_gwp, EvaluationReport, OracleConfig,
    PlacementProblem, PlacementSolution, RadioConfig, Scenario, ScenarioError, SolverStatus, Venue,
};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

/// Radio config file used by `gen` when `--radio` is not given.
const RADIO_ENV: &str = "GWPLACE_RADIO";

#[derive(Parser)]
#[command(name = "gwplace", version, about = "Gateway placement for UAV flying networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario.
    Gen {
        #[arg(long)]
        faps: usize,
        #[arg(long)]
        seed: u64,
        /// Venue size in metres, `XxYxZ`.
        #[arg(long, default_value = "15x15x20", value_parser = parse_venue)]
        venue: Venue,
        /// Radio config JSON; defaults to $GWPLACE_RADIO, then built-in values.
        #[arg(long)]
        radio: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Place the gateway for a scenario.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Oracle grid spacing in metres.
        #[arg(long, default_value_t = 0.25)]
        grid_step: f64,
        /// Skip the oracle's local polish.
        #[arg(long)]
        no_polish: bool,
    },
    /// Evaluate the network performance of a solution.
    Eval {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scale every demand by this factor.
        #[arg(long, default_value_t = 1.0)]
        load: f64,
    },
    /// Time the solvers over a matrix of generated scenarios.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,15,20")]
        sizes: Vec<usize>,
        /// Inclusive range `A..B` or a comma-separated list.
        #[arg(long, default_value = "0..9", value_parser = parse_seeds)]
        seeds: SeedList,
        #[arg(long, value_delimiter = ',', default_value = "gwp,fgwp", value_enum)]
        algos: Vec<Algo>,
        #[arg(long, default_value_t = bench::DEFAULT_WARMUP)]
        warmup: usize,
        #[arg(long, default_value_t = bench::DEFAULT_REPS)]
        reps: usize,
        /// Per-scenario records CSV.
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV; defaults to `<out>` with a `.summary.csv` suffix.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Aggregate evaluation reports into a distribution table.
    Distributions {
        /// Glob matching report files.
        #[arg(long)]
        reports: String,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Gwp,
    Fgwp,
    Oracle,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Gwp => Algorithm::Gwp,
            Algo::Fgwp => Algorithm::Fgwp,
            Algo::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// CCDF of the aggregate throughput of each report.
    Throughput,
    /// CDF of the per-flow delay estimates.
    Delay,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_venue(s: &str) -> Result<Venue, String> {
    let dims: Vec<f64> = s
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match dims[..] {
        [x, y, z] if [x, y, z].iter().all(|d| d.is_finite() && *d > 0.0) => Ok(Venue::new(x, y, z)),
        _ => Err(format!("expected three positive sizes like 15x15x20, got `{s}`")),
    }
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("`{t}`: {e}"));
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range `{s}`"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    Ok(SeedList(seeds))
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Display) -> Failure {
    Failure { code, message: message.to_string() }
}

const USAGE: u8 = 2;
const GENERATION: u8 = 3;
const INFEASIBLE: u8 = 4;
const OTHER: u8 = 1;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail(OTHER, format!("{}: {e}", path.display())))
}

fn kv(key: &str, value: impl Display) {
    println!("{key}={value}");
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    gwplace::scenario::load(path).map_err(|e| match e {
        ScenarioError::Io { .. } | ScenarioError::Parse(_) => fail(USAGE, e),
        other => fail(OTHER, other),
    })
}

fn radio_config(explicit: Option<PathBuf>) -> Result<RadioConfig, Failure> {
    let path = explicit.or_else(|| std::env::var_os(RADIO_ENV).map(PathBuf::from));
    let Some(path) = path else { return Ok(RadioConfig::default()) };
    let radio = RadioConfig::from_json(&read(&path)?, &path.display().to_string()).map_err(|e| fail(USAGE, e))?;
    radio.validate().map_err(|e| fail(USAGE, e))?;
    Ok(radio)
}

fn cmd_gen(faps: usize, seed: u64, venue: Venue, radio: Option<PathBuf>, out: &Path) -> Result<(), Failure> {
    if faps == 0 {
        return Err(fail(USAGE, "--faps must be at least 1"));
    }
    let radio = radio_config(radio)?;
    let s = generate(faps, seed, venue, radio).map_err(|e| match e {
        ScenarioError::InvalidVenue(_) | ScenarioError::Radio(_) => fail(USAGE, e),
        other => fail(GENERATION, other),
    })?;
    write(out, &s.to_json())?;
    kv("faps", s.faps.len());
    kv("seed", s.seed);
    kv("total_demand_bps", s.total_demand_bps());
    kv("out", out.display());
    Ok(())
}

fn cmd_solve(algo: Algo, scenario: &Path, out: Option<&Path>, grid_step: f64, no_polish: bool) -> Result<(), Failure> {
    let s = load_scenario(scenario)?;
    let prob = PlacementProblem::from_scenario(&s);
    let sol: PlacementSolution = match algo {
        Algo::Gwp => solve_gwp(&prob),
        Algo::Fgwp => solve_fgwp(&prob),
        Algo::Oracle => {
            let cfg = OracleConfig { grid_step_m: grid_step, polish: !no_polish, ..OracleConfig::default() };
            oracle_solve(&prob, &cfg).map_err(|e| fail(USAGE, e))?
        }
    };
    if let Some(out) = out {
        write(out, &sol.to_json())?;
    }
    kv("algo", Algorithm::from(algo));
    kv("p_t_dbm", fmt_sig9(sol.p_t_dbm));
    kv("status", sol.status);
    kv(
        "fgw",
        format!(
            "{},{},{}",
            fmt_sig9(sol.fgw_position.x),
            fmt_sig9(sol.fgw_position.y),
            fmt_sig9(sol.fgw_position.z)
        ),
    );
    kv("iterations", sol.iterations);
    kv("elapsed_s", fmt_sig9(sol.elapsed.as_secs_f64()));
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(fail(INFEASIBLE, format!("no placement within p_max ({})", sol.status)))
    }
}

fn cmd_eval(scenario: &Path, solution: &Path, out: Option<&Path>, load: f64) -> Result<(), Failure> {
    let s = load_scenario(scenario)?;
    let sol = PlacementSolution::from_json(&read(solution)?, &solution.display().to_string())
        .map_err(|e| fail(USAGE, e))?;
    let report = evaluate_with_load(&s, &sol, load).map_err(|e| fail(INFEASIBLE, e))?;
    if let Some(out) = out {
        write(out, &report.to_json())?;
    }
    kv("aggregate_throughput_bps", fmt_sig9(report.aggregate_throughput_bps));
    kv("mean_delay_s", report.mean_delay_s.map(fmt_sig9).unwrap_or_else(|| "none".into()));
    kv("saturated", report.saturated);
    kv("flows", report.flows.len());
    Ok(())
}

fn cmd_bench(plan: BenchPlan, out: &Path, summary: Option<PathBuf>) -> Result<(), Failure> {
    if plan.sizes.is_empty() || plan.sizes.contains(&0) {
        return Err(fail(USAGE, "--sizes needs positive FAP counts"));
    }
    if plan.reps == 0 || plan.algorithms.is_empty() || plan.seeds.is_empty() {
        return Err(fail(USAGE, "--reps, --algos and --seeds must be non-empty"));
    }
    let summary_path = summary.unwrap_or_else(|| out.with_extension("summary.csv"));
    let records = bench::run_plan(&plan);
    write(out, &bench::records_csv(&records))?;
    let rows = bench::summarize(&records);
    write(&summary_path, &bench::summary_csv(&rows))?;
    kv("records", records.len());
    kv("failed", records.iter().filter(|r| r.status != SolverStatus::Optimal).count());
    kv("out", out.display());
    kv("summary", summary_path.display());
    Ok(())
}

fn cmd_distributions(pattern: &str, metric: Metric, out: &Path) -> Result<(), Failure> {
    let paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| fail(USAGE, format!("bad glob `{pattern}`: {e}")))?
        .filter_map(Result::ok)
        .collect();
    if paths.is_empty() {
        return Err(fail(USAGE, format!("no reports match `{pattern}`")));
    }
    let mut reports = Vec::with_capacity(paths.len());
    for p in &paths {
        reports.push(EvaluationReport::from_json(&read(p)?, &p.display().to_string()).map_err(|e| fail(USAGE, e))?);
    }
    let (header, rows, skipped) = match metric {
        Metric::Throughput => {
            let values: Vec<f64> = reports.iter().map(|r| r.aggregate_throughput_bps).collect();
            ("throughput_bps,ccdf", ccdf(&values), 0)
        }
        Metric::Delay => {
            let all: Vec<Option<f64>> = reports.iter().flat_map(|r| r.flows.iter().map(|f| f.delay_s)).collect();
            let values: Vec<f64> = all.iter().flatten().copied().collect();
            ("delay_s,cdf", cdf(&values), all.len() - values.len())
        }
    };
    let mut csv = format!("{header}\n");
    for (x, fraction) in &rows {
        csv.push_str(&format!("{},{}\n", fmt_sig9(*x), fmt_sig9(*fraction)));
    }
    write(out, &csv)?;
    kv("reports", reports.len());
    kv("rows", rows.len());
    if matches!(metric, Metric::Delay) {
        kv("skipped_unstable", skipped);
    }
    kv("out", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { faps, seed, venue, radio, out } => cmd_gen(faps, seed, venue, radio, &out),
        Command::Solve { algo, scenario, out, grid_step, no_polish } => {
            cmd_solve(algo, &scenario, out.as_deref(), grid_step, no_polish)
        }
        Command::Eval { scenario, solution, out, load } => cmd_eval(&scenario, &solution, out.as_deref(), load),
        Command::Bench { sizes, seeds, algos, warmup, reps, out, summary } => {
            let plan = BenchPlan {
                warmup,
                reps,
                ..BenchPlan::new(sizes, seeds.0, algos.into_iter().map(Algorithm::from).collect())
            };
            cmd_bench(plan, &out, summary)
        }
        Command::Distributions { reports, metric, out } => cmd_distributions(&reports, metric, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
