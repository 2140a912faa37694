//! Result file writers: results.json (full metrics tree with the resolved
//! config echoed for provenance), results.csv (flat comparison table) and
//! Q-table snapshot CSVs.

use anyhow::{Context, Result};
use nocgate::engine::compare::{CellStatus, Comparison};
use nocgate::engine::QTableDump;
use nocgate::SimConfig;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Serialize)]
struct ResultsFile<'a> {
    version: &'a str,
    seed: u64,
    config: &'a SimConfig,
    cells: &'a [nocgate::engine::compare::CompareCell],
}

pub fn write_results(out_dir: &Path, cfg: &SimConfig, comparison: &Comparison) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let json = serde_json::to_string_pretty(&ResultsFile {
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.run.seed,
        config: cfg,
        cells: &comparison.cells,
    })?;
    std::fs::write(out_dir.join("results.json"), json + "\n")?;
    std::fs::write(out_dir.join("results.csv"), results_csv(comparison))?;
    Ok(())
}

fn results_csv(comparison: &Comparison) -> String {
    let mut out = String::from(
        "policy,pattern,pir,status,cycles,packets_injected,packets_ejected,\
         avg_latency,p50_latency,p95_latency,p99_latency,max_latency,\
         energy_total,energy_static,energy_dynamic,energy_wakeup,energy_overhead,\
         fine_wakes,coarse_wakes,normalized_energy,normalized_latency,normalized_exec_time\n",
    );
    for cell in &comparison.cells {
        let _ = write!(out, "{},{},{},", cell.policy, cell.pattern, cell.pir);
        let status = match cell.status {
            CellStatus::Ok => "ok",
            CellStatus::Deadlock => "deadlock",
            CellStatus::Timeout => "timeout",
            CellStatus::Error => "error",
        };
        let _ = write!(out, "{status},");
        match &cell.metrics {
            Some(m) => {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    m.cycles,
                    m.packets_injected,
                    m.packets_ejected,
                    m.avg_latency,
                    m.p50_latency,
                    m.p95_latency,
                    m.p99_latency,
                    m.max_latency,
                    m.energy.total,
                    m.energy.static_leakage,
                    m.energy.dynamic,
                    m.energy.wakeup,
                    m.energy.overhead,
                    m.fine_wakes,
                    m.coarse_wakes,
                );
            }
            None => {
                let _ = write!(out, ",,,,,,,,,,,,,,");
            }
        }
        for norm in [
            cell.normalized_energy,
            cell.normalized_latency,
            cell.normalized_exec_time,
        ] {
            match norm {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_qtables(out_dir: &Path, cycle: u64, dumps: &[QTableDump]) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = String::from("router,state_key,action,q_value\n");
    for dump in dumps {
        for (key, action, value) in &dump.entries {
            let _ = writeln!(out, "{},{key},{action},{value}", dump.router);
        }
    }
    let path = out_dir.join(format!("qtables-{cycle}.csv"));
    std::fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_events(
    out_dir: &Path,
    cell_name: &str,
    events: &[nocgate::engine::EventRecord],
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = String::from("cycle,router,event\n");
    for e in events {
        let _ = writeln!(out, "{},{},{}", e.cycle, e.router, e.kind);
    }
    std::fs::write(out_dir.join(format!("events-{cell_name}.csv")), out)?;
    Ok(())
}
