//! Command-line front end for the mesh power-gating simulator.
//!
//! Subcommands: `run` executes the configured (policy, pattern, rate) grid
//! and writes results.json/results.csv; `compare` does the same with the
//! ungated baseline added and ratio columns filled in; `verify` runs the
//! built-in self-check suite; `dump-qtables` snapshots the learned routing
//! tables at a fixed cycle interval.
//!
//! Exit codes: 0 success, 1 validation failure, 2 deadlock, 3 timeout.

mod config_file;
mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use nocgate::engine::compare::{compare, run_grid, CellStatus};
use nocgate::engine::{CellKey, Sim};
use nocgate::{Pattern, SimConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nocgate", version, about = "Cycle-driven 2D-mesh power-gating simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; missing sections fall back to defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set traffic.pirs=[0.001,0.01]
    /// (repeatable; applied after the file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory for result files.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel simulation workers (0 = machine parallelism).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured policy/pattern/rate grid.
    Run(CommonArgs),
    /// Run the grid with the no-gating baseline and normalized columns.
    Compare(CommonArgs),
    /// Run the built-in acceptance suite (optionally filtered by name).
    Verify {
        /// Only run criteria whose name contains this substring.
        filter: Option<String>,
    },
    /// Periodically dump learned routing tables to qtables-<cycle>.csv.
    DumpQtables {
        #[command(flatten)]
        common: CommonArgs,
        /// Snapshot interval in cycles.
        #[arg(long, default_value_t = 1000)]
        interval: u64,
    },
}

fn load_config(common: &CommonArgs) -> Result<SimConfig> {
    let mut cfg = config_file::load(common.config.as_deref(), &common.sets)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    for warning in cfg.validate().map_err(|e| anyhow::anyhow!(e.to_string()))? {
        eprintln!("warning: {warning}");
    }
    Ok(cfg)
}

fn exit_for(status: CellStatus) -> ExitCode {
    match status {
        CellStatus::Ok => ExitCode::SUCCESS,
        CellStatus::Deadlock => ExitCode::from(2),
        CellStatus::Timeout => ExitCode::from(3),
        CellStatus::Error => ExitCode::from(1),
    }
}

fn run_or_compare(common: &CommonArgs, with_baseline: bool) -> Result<ExitCode> {
    let cfg = load_config(common)?;
    let comparison = if with_baseline {
        compare(&cfg, common.jobs)
    } else {
        run_grid(&cfg, common.jobs, false)
    }
    .map_err(|e| anyhow::anyhow!(e.to_string()))?;

    for cell in &comparison.cells {
        match (&cell.status, &cell.metrics) {
            (CellStatus::Ok, Some(m)) => {
                let norm = cell
                    .normalized_energy
                    .map(|v| format!(", {v:.3}x baseline energy"))
                    .unwrap_or_default();
                println!(
                    "{:>16} {:>14} pir {:<6}: {} cycles, {} packets, avg latency {:.1}, energy {:.0}{}",
                    cell.policy,
                    cell.pattern,
                    cell.pir,
                    m.cycles,
                    m.packets_ejected,
                    m.avg_latency,
                    m.energy.total,
                    norm
                );
            }
            (status, _) => {
                println!(
                    "{:>16} {:>14} pir {:<6}: {:?} — {}",
                    cell.policy,
                    cell.pattern,
                    cell.pir,
                    status,
                    cell.error
                        .as_deref()
                        .unwrap_or("unknown")
                        .lines()
                        .next()
                        .unwrap_or("")
                );
            }
        }
    }
    output::write_results(&common.out_dir, &cfg, &comparison)?;
    println!(
        "wrote {} and {}",
        common.out_dir.join("results.json").display(),
        common.out_dir.join("results.csv").display()
    );

    // The event log is a debugging aid (non-stable format): replay each
    // completed cell — runs are deterministic — and write its power events.
    if cfg.run.record_events {
        for cell in &comparison.cells {
            if cell.status != CellStatus::Ok {
                continue;
            }
            let pattern = cfg
                .traffic
                .patterns
                .iter()
                .copied()
                .find(|p| p.name() == cell.pattern)
                .unwrap_or(Pattern::UniformRandom);
            let policy = nocgate::Policy::ALL
                .into_iter()
                .find(|p| p.name() == cell.policy);
            let Some(policy) = policy else { continue };
            let out = nocgate::run(
                &cfg,
                CellKey {
                    policy,
                    pattern,
                    pir: cell.pir,
                },
            )
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            if let Some(events) = &out.events {
                let name = format!("{}-{}-{}", cell.policy, cell.pattern, cell.pir);
                output::write_events(&common.out_dir, &name, events)?;
            }
        }
    }
    Ok(exit_for(comparison.worst_status()))
}

fn verify(filter: Option<&str>) -> ExitCode {
    let reports = nocgate::acceptance::run_all(filter.unwrap_or(""));
    if reports.is_empty() {
        eprintln!("no criterion matches '{}'", filter.unwrap_or(""));
        return ExitCode::from(1);
    }
    let mut all_passed = true;
    for report in &reports {
        println!(
            "[{}] criterion {:>2} {:<28} ({:.1}s): {}",
            if report.passed { "PASS" } else { "FAIL" },
            report.id,
            report.name,
            report.seconds,
            report.details.lines().next().unwrap_or("")
        );
        for line in report.details.lines().skip(1).filter(|l| !l.is_empty()) {
            println!("       {line}");
        }
        all_passed &= report.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn dump_qtables(common: &CommonArgs, interval: u64) -> Result<ExitCode> {
    let cfg = load_config(common)?;
    let policy = cfg.run.policies[0];
    if !policy.uses_marl() {
        anyhow::bail!("no Q-tables under this policy ({policy})");
    }
    let pattern = cfg.traffic.patterns[0];
    let pir = if pattern == Pattern::Trace {
        0.0
    } else {
        cfg.traffic.pirs[0]
    };
    let mut sim = Sim::new(&cfg, CellKey { policy, pattern, pir })
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    output::write_qtables(&common.out_dir, 0, &sim.qtable_dump())?;
    let mut next = interval;
    let mut snapshots = 1;
    let end = loop {
        if sim.done() {
            // final snapshot for offline convergence analysis
            output::write_qtables(&common.out_dir, sim.cycle, &sim.qtable_dump())?;
            snapshots += 1;
            break CellStatus::Ok;
        }
        if let Err(e) = sim.step() {
            eprintln!("{e}");
            break match e {
                nocgate::SimError::Deadlock { .. } => CellStatus::Deadlock,
                nocgate::SimError::Timeout { .. } => CellStatus::Timeout,
                _ => CellStatus::Error,
            };
        }
        if sim.cycle >= next {
            output::write_qtables(&common.out_dir, sim.cycle, &sim.qtable_dump())?;
            snapshots += 1;
            next += interval;
        }
    };
    println!(
        "wrote {snapshots} snapshots to {}/qtables-*.csv",
        common.out_dir.display()
    );
    Ok(exit_for(end))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => run_or_compare(common, false),
        Command::Compare(common) => run_or_compare(common, true),
        Command::Verify { filter } => return verify(filter.as_deref()),
        Command::DumpQtables { common, interval } => dump_qtables(common, *interval),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
