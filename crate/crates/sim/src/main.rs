use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use star_tunnel_sim::outputs::{emit_outputs, read_trace, run_and_collect};
use star_tunnel_sim::scenario::Scenario;
use star_tunnel_sim::sim::TraceRecord;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "star-tunnel",
    version,
    about = "Closed-loop simulator: star-world workspace modification, \
modulated reference paths, tunnel-following MPC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace, diagnostics, and plots.
    Run {
        /// Scenario TOML file.
        scenario: PathBuf,
        /// Output directory. Defaults to $STAR_TUNNEL_OUT, then
        /// ./out/<scenario-name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// World-snapshot times, seconds (comma separated).
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Simulate and print the invariant sweep, writing nothing.
    Check {
        /// Scenario TOML file.
        scenario: PathBuf,
    },
    /// Re-emit diagnostics and plots from a recorded trace.
    Replay {
        /// trace.jsonl written by `run`.
        trace: PathBuf,
        /// Output directory. Defaults to $STAR_TUNNEL_OUT, then
        /// ./out/<scenario-name>-replay.
        #[arg(long)]
        out: Option<PathBuf>,
        /// World-snapshot times, seconds (comma separated). Snapshots
        /// re-simulate the recorded scenario; the run is deterministic.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            snapshots,
        } => run(&scenario, out, &snapshots),
        Command::Check { scenario } => check(&scenario),
        Command::Replay {
            trace,
            out,
            snapshots,
        } => replay(&trace, out, &snapshots),
    }
}

fn out_dir(flag: Option<PathBuf>, name: &str) -> PathBuf {
    flag.or_else(|| std::env::var_os("STAR_TUNNEL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(name))
}

fn run(path: &Path, out: Option<PathBuf>, snapshots: &[f64]) -> Result<()> {
    let (scenario, file) =
        Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let (result, frames) = run_and_collect(&scenario, snapshots)
        .with_context(|| format!("simulating {}", scenario.name))?;
    print_summary(&scenario.name, result.reached_goal, result.arrival_time, &result.records);

    let dir = out_dir(out, &file.name);
    let written = emit_outputs(&dir, &file, &result, &frames)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn check(path: &Path) -> Result<()> {
    let (scenario, _) =
        Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let result = star_tunnel_sim::sim::simulate(&scenario)
        .with_context(|| format!("simulating {}", scenario.name))?;
    let records = &result.records;
    print_summary(&scenario.name, result.reached_goal, result.arrival_time, records);

    let min_dist = records
        .iter()
        .filter_map(|r| r.min_obstacle_distance)
        .min_by(|a, b| a.total_cmp(b));
    let max_trivial = records
        .iter()
        .filter_map(|r| r.trivial_residual)
        .max_by(|a, b| a.total_cmp(b));
    let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *statuses.entry(r.solver_status.as_str()).or_default() += 1;
    }
    let mut totals: Vec<f64> = records.iter().map(|r| r.timings.total_ms).collect();
    totals.sort_by(f64::total_cmp);
    let median_ms = totals.get(totals.len() / 2).copied().unwrap_or(0.0);

    match min_dist {
        Some(d) => println!("min obstacle distance: {d:.4} m"),
        None => println!("min obstacle distance: n/a (empty world)"),
    }
    match max_trivial {
        Some(rmax) => println!("max trivial-solution residual: {rmax:.2e}"),
        None => println!("max trivial-solution residual: n/a"),
    }
    println!("median step time: {median_ms:.2} ms");
    print!("solver statuses:");
    for (s, n) in &statuses {
        print!(" {s}={n}");
    }
    println!();

    if min_dist.is_some_and(|d| d <= 0.0) {
        bail!("safety violated: min obstacle distance {min_dist:?}");
    }
    if max_trivial.is_some_and(|r| r > 1e-6) {
        bail!("trivial-solution residual above 1e-6: {max_trivial:?}");
    }
    println!("check passed");
    Ok(())
}

fn replay(path: &Path, out: Option<PathBuf>, snapshots: &[f64]) -> Result<()> {
    let (file, result) =
        read_trace(path).with_context(|| format!("reading {}", path.display()))?;
    print_summary(&file.name, result.reached_goal, result.arrival_time, &result.records);

    let frames = if snapshots.is_empty() {
        Vec::new()
    } else {
        let scenario = Scenario::from_file(&file).context("trace header scenario is invalid")?;
        let (_, frames) = run_and_collect(&scenario, snapshots).context("re-simulating trace")?;
        frames
    };

    let dir = out_dir(out, &format!("{}-replay", file.name));
    let written = emit_outputs(&dir, &file, &result, &frames)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(name: &str, reached: bool, arrival: Option<f64>, records: &[TraceRecord]) {
    match (reached, arrival) {
        (true, Some(t)) => println!("{name}: goal reached at t = {t:.2} s ({} steps)", records.len()),
        _ => println!("{name}: goal not reached in {} steps", records.len()),
    }
}
