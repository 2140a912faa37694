//! Run statistics: latency distribution, drain time, power-gating activity
//! and the energy ledger summary.

use serde::{Deserialize, Serialize};

use crate::energy::EnergySummary;

/// Histogram cap for the turns-per-epoch distribution; larger rewards land
/// in the last bucket.
pub const EPOCH_HIST_BUCKETS: usize = 65;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Metrics {
    pub policy: String,
    pub pattern: String,
    pub pir: f64,
    pub seed: u64,
    /// Cycles executed.
    pub cycles: u64,
    pub packets_injected: u64,
    pub packets_ejected: u64,
    pub flits_ejected: u64,
    /// Latency from source-queue entry to tail ejection, in cycles.
    pub avg_latency: f64,
    pub p50_latency: u64,
    pub p95_latency: u64,
    pub p99_latency: u64,
    pub max_latency: u64,
    pub energy: EnergySummary,
    /// Gated-to-waking transitions of individual input buffers.
    pub fine_wakes: u64,
    /// Gated-to-waking transitions of whole routers.
    pub coarse_wakes: u64,
    /// Router-cycles spent in each gating mode.
    pub mode_residency_fine: u64,
    pub mode_residency_coarse: u64,
    /// index = number of strictly Active input buffers at a router during a
    /// cycle (0..=5); value = router-cycle count.
    pub active_buffer_histogram: Vec<u64>,
    /// index = reward emitted when an epoch closed (last bucket collects
    /// everything larger); value = epoch count.
    pub turns_per_epoch_histogram: Vec<u64>,
    pub epochs_closed: u64,
    /// Occupancy integral: sum over cycles of input buffers drawing static
    /// power. With only `static_buffer_per_cycle` nonzero this equals the
    /// buffer share of total energy.
    pub powered_buffer_cycles: u64,
}

/// In-flight accumulator the engine updates each cycle.
#[derive(Debug, Clone)]
pub struct StatsCollector {
    pub latencies: Vec<u64>,
    pub flits_ejected: u64,
    pub fine_wakes: u64,
    pub coarse_wakes: u64,
    pub mode_residency_fine: u64,
    pub mode_residency_coarse: u64,
    pub active_buffer_histogram: [u64; 6],
    pub turns_per_epoch_histogram: [u64; EPOCH_HIST_BUCKETS],
    pub epochs_closed: u64,
    pub powered_buffer_cycles: u64,
}

impl Default for StatsCollector {
    fn default() -> Self {
        StatsCollector {
            latencies: Vec::new(),
            flits_ejected: 0,
            fine_wakes: 0,
            coarse_wakes: 0,
            mode_residency_fine: 0,
            mode_residency_coarse: 0,
            active_buffer_histogram: [0; 6],
            turns_per_epoch_histogram: [0; EPOCH_HIST_BUCKETS],
            epochs_closed: 0,
            powered_buffer_cycles: 0,
        }
    }
}

impl StatsCollector {
    pub fn record_epoch(&mut self, reward: u64) {
        self.epochs_closed += 1;
        let bucket = (reward as usize).min(EPOCH_HIST_BUCKETS - 1);
        self.turns_per_epoch_histogram[bucket] += 1;
    }

    fn percentile(sorted: &[u64], pct: u64) -> u64 {
        if sorted.is_empty() {
            return 0;
        }
        let idx = ((sorted.len() as u64 - 1) * pct) / 100;
        sorted[idx as usize]
    }

    pub fn finish(
        mut self,
        policy: String,
        pattern: String,
        pir: f64,
        seed: u64,
        cycles: u64,
        packets_injected: u64,
        packets_ejected: u64,
        energy: EnergySummary,
    ) -> Metrics {
        self.latencies.sort_unstable();
        let avg = if self.latencies.is_empty() {
            0.0
        } else {
            self.latencies.iter().sum::<u64>() as f64 / self.latencies.len() as f64
        };
        Metrics {
            policy,
            pattern,
            pir,
            seed,
            cycles,
            packets_injected,
            packets_ejected,
            flits_ejected: self.flits_ejected,
            avg_latency: avg,
            p50_latency: Self::percentile(&self.latencies, 50),
            p95_latency: Self::percentile(&self.latencies, 95),
            p99_latency: Self::percentile(&self.latencies, 99),
            max_latency: self.latencies.last().copied().unwrap_or(0),
            energy,
            fine_wakes: self.fine_wakes,
            coarse_wakes: self.coarse_wakes,
            mode_residency_fine: self.mode_residency_fine,
            mode_residency_coarse: self.mode_residency_coarse,
            active_buffer_histogram: self.active_buffer_histogram.to_vec(),
            turns_per_epoch_histogram: self.turns_per_epoch_histogram.to_vec(),
            epochs_closed: self.epochs_closed,
            powered_buffer_cycles: self.powered_buffer_cycles,
        }
    }
}
