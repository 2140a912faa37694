//! Multi-policy comparison runs with normalized results.
//!
//! Runs every (policy, pattern, pir) cell of the config grid, optionally on
//! parallel workers (cells share nothing and merge by index, so parallelism
//! never changes results), and normalizes each cell against the NoPg
//! baseline of the same pattern and rate. NoPg is added to the policy list
//! when missing — it defines the normalization.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::SimError;
use crate::traffic::Pattern;

use super::{run, CellKey, Metrics, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Deadlock,
    Timeout,
    Error,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareCell {
    pub policy: String,
    pub pattern: String,
    pub pir: f64,
    pub status: CellStatus,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
    /// Ratios against the NoPg cell with the same pattern and rate.
    pub normalized_energy: Option<f64>,
    pub normalized_latency: Option<f64>,
    pub normalized_exec_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub cells: Vec<CompareCell>,
}

impl Comparison {
    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.status != CellStatus::Ok)
    }

    /// Most severe failure across cells, for exit-code mapping.
    pub fn worst_status(&self) -> CellStatus {
        let mut worst = CellStatus::Ok;
        for c in &self.cells {
            worst = match (worst, c.status) {
                (CellStatus::Deadlock, _) | (_, CellStatus::Deadlock) => CellStatus::Deadlock,
                (CellStatus::Timeout, _) | (_, CellStatus::Timeout) => CellStatus::Timeout,
                (CellStatus::Error, _) | (_, CellStatus::Error) => CellStatus::Error,
                _ => CellStatus::Ok,
            };
        }
        worst
    }
}

fn run_cell(cfg: &SimConfig, key: CellKey) -> (CellStatus, Option<Metrics>, Option<String>) {
    match run(cfg, key) {
        Ok(output) => (CellStatus::Ok, Some(output.metrics), None),
        Err(SimError::Deadlock { cycle, report }) => (
            CellStatus::Deadlock,
            None,
            Some(format!("deadlock at cycle {cycle}:\n{report}")),
        ),
        Err(SimError::Timeout { cycle, partial }) => (
            CellStatus::Timeout,
            Some(*partial),
            Some(format!("max_cycles ({cycle}) reached before drain")),
        ),
        Err(e) => (CellStatus::Error, None, Some(e.to_string())),
    }
}

/// Execute the whole grid with up to `jobs` worker threads (0 picks the
/// machine's parallelism), normalizing against NoPg (added when missing).
pub fn compare(cfg: &SimConfig, jobs: usize) -> Result<Comparison, SimError> {
    run_grid(cfg, jobs, true)
}

/// Run the configured (policy, pattern, pir) grid as-is, without the
/// baseline injection; cells are normalized only when a NoPg row exists.
pub fn run_grid(cfg: &SimConfig, jobs: usize, ensure_baseline: bool) -> Result<Comparison, SimError> {
    cfg.validate()?;
    let mut policies: Vec<Policy> = Vec::new();
    if ensure_baseline && !cfg.run.policies.contains(&Policy::NoPg) {
        policies.push(Policy::NoPg);
    }
    policies.extend(cfg.run.policies.iter().copied());

    let mut keys: Vec<CellKey> = Vec::new();
    for &pattern in &cfg.traffic.patterns {
        let pirs: &[f64] = if pattern == Pattern::Trace {
            &[0.0] // traces carry their own load
        } else {
            &cfg.traffic.pirs
        };
        for &pir in pirs {
            for &policy in &policies {
                keys.push(CellKey {
                    policy,
                    pattern,
                    pir,
                });
            }
        }
    }

    let jobs = if jobs == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        jobs
    };
    let jobs = jobs.min(keys.len()).max(1);

    let results: Mutex<Vec<Option<(CellStatus, Option<Metrics>, Option<String>)>>> =
        Mutex::new(vec![None; keys.len()]);
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= keys.len() {
                    break;
                }
                let outcome = run_cell(cfg, keys[i]);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let results = results.into_inner().unwrap();
    let mut cells: Vec<CompareCell> = keys
        .iter()
        .zip(results)
        .map(|(key, outcome)| {
            let (status, metrics, error) = outcome.expect("cell executed");
            CompareCell {
                policy: key.policy.name().to_string(),
                pattern: key.pattern.name().to_string(),
                pir: key.pir,
                status,
                metrics,
                error,
                normalized_energy: None,
                normalized_latency: None,
                normalized_exec_time: None,
            }
        })
        .collect();

    // Normalize against the NoPg row of the same (pattern, pir).
    let baselines: Vec<(String, f64, f64, f64, u64)> = cells
        .iter()
        .filter(|c| c.policy == Policy::NoPg.name() && c.status == CellStatus::Ok)
        .map(|c| {
            let m = c.metrics.as_ref().expect("ok cell has metrics");
            (
                c.pattern.clone(),
                c.pir,
                m.energy.total,
                m.avg_latency,
                m.cycles,
            )
        })
        .collect();
    for cell in cells.iter_mut() {
        if cell.status != CellStatus::Ok {
            continue;
        }
        let Some((_, _, base_energy, base_latency, base_cycles)) = baselines
            .iter()
            .find(|(pattern, pir, ..)| *pattern == cell.pattern && *pir == cell.pir)
        else {
            continue;
        };
        let m = cell.metrics.as_ref().expect("ok cell has metrics");
        cell.normalized_energy = ratio(m.energy.total, *base_energy);
        cell.normalized_latency = ratio(m.avg_latency, *base_latency);
        cell.normalized_exec_time = ratio(m.cycles as f64, *base_cycles as f64);
    }

    Ok(Comparison { cells })
}

fn ratio(value: f64, base: f64) -> Option<f64> {
    if base > 0.0 {
        Some(value / base)
    } else {
        None
    }
}
