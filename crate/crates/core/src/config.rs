//! Simulation configuration.
//!
//! Every field has a default, so an empty config file runs the reference
//! setup: an 8x8 mesh, 5-port routers with 4 VCs of 4 flits, fine-grained
//! gating thresholds of 2/2 cycles, coarse thresholds of 4/8 cycles, reward
//! epochs of 16 cycles, learning rate 0.01 and exploration rate 0.05. The
//! fully resolved config is echoed into every results file.

use serde::{Deserialize, Serialize};

use crate::energy::EnergyCoefficients;
use crate::engine::Policy;
use crate::error::SimError;
use crate::powergate::break_even_time;
use crate::traffic::Pattern;

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub mesh: MeshSection,
    pub router: RouterSection,
    pub pg: PgSection,
    pub marl: MarlSection,
    pub energy: EnergyCoefficients,
    pub traffic: TrafficSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub rows: usize,
    pub cols: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { rows: 8, cols: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RouterSection {
    /// Virtual channels per input port. Must be even when a policy uses
    /// XY/YX routing, because VC partitioning splits them into two classes.
    pub vcs_per_port: usize,
    /// Buffer depth per VC, in flits.
    pub flits_per_vc: usize,
    /// Flit width in bits. Metadata only; the energy model is per flit.
    pub flit_width_bits: u32,
    /// Cycles from buffer write to switch traversal for a head flit
    /// (route computation, VC allocation, switch allocation, traversal).
    pub pipeline_depth: u64,
    /// Cycles per bypass hop, latch to next router, wire included.
    pub bypass_latency: u64,
}

impl Default for RouterSection {
    fn default() -> Self {
        RouterSection {
            vcs_per_port: 4,
            flits_per_vc: 4,
            flit_width_bits: 128,
            pipeline_depth: 4,
            bypass_latency: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PgSection {
    /// Idle cycles before an input buffer gates (fine-grained).
    pub fine_t_idle: u64,
    /// Wake-up latency of a single input buffer.
    pub fine_t_on: u64,
    /// Idle cycles before the whole router gates (coarse-grained).
    pub coarse_t_idle: u64,
    /// Wake-up latency of the whole router.
    pub coarse_t_on: u64,
    /// Distinct input buffers that must request wake-up within
    /// `mode_window` cycles to push a router into coarse mode.
    pub mode_up_threshold: usize,
    /// Sliding window, in cycles, for counting distinct wake requests. A
    /// blocked head re-requests every cycle it waits, so a window on the
    /// order of the wake latency detects concurrent wake demand — the case
    /// coarse gating masks — without pairing up unrelated events at light
    /// load.
    pub mode_window: u64,
    /// Consecutive quiet cycles (every window below the threshold) before a
    /// coarse-mode router falls back to fine mode.
    pub mode_quiet: u64,
}

impl Default for PgSection {
    fn default() -> Self {
        PgSection {
            fine_t_idle: 2,
            fine_t_on: 2,
            coarse_t_idle: 4,
            coarse_t_on: 8,
            mode_up_threshold: 2,
            mode_window: 2,
            mode_quiet: 128,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MarlSection {
    /// Q-learning rate, in (0, 1].
    pub alpha: f64,
    /// Exploration probability, in [0, 1).
    pub epsilon: f64,
    /// Reward epoch length in cycles.
    pub t_epoch: u64,
    /// Clamp and round Q-values to a 4-bit grid after each update,
    /// mirroring a hardware register-array table. Off by default.
    pub quantize_4bit: bool,
    /// Deliver reward flits to every recipient on the closing cycle instead
    /// of one hop per cycle. Ablation switch.
    pub zero_latency_broadcast: bool,
    /// Count ejecting packets as turns for epoch triggering and rewards.
    pub count_ejects_as_turns: bool,
}

impl Default for MarlSection {
    fn default() -> Self {
        MarlSection {
            alpha: 0.01,
            epsilon: 0.05,
            t_epoch: 16,
            quantize_4bit: false,
            zero_latency_broadcast: false,
            count_ejects_as_turns: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub patterns: Vec<Pattern>,
    /// Packet injection rates to sweep, packets per node per cycle.
    pub pirs: Vec<f64>,
    /// Flits per packet: head, bodies, tail.
    pub packet_length: usize,
    /// Drain target: the run ends once this many packets have been ejected.
    pub total_packets: u64,
    /// CSV trace path, required when a pattern is `trace`.
    pub trace_path: Option<String>,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            patterns: vec![Pattern::UniformRandom],
            pirs: vec![0.01],
            packet_length: 5,
            total_packets: 1_000_000,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Stop when `total_packets` have been ejected; hitting `max_cycles`
    /// first is a timeout error.
    Drain,
    /// Run exactly `max_cycles` cycles; the drain target is ignored.
    Cycles,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub policies: Vec<Policy>,
    pub mode: RunMode,
    pub max_cycles: u64,
    /// Master seed; all subsystem streams derive from it.
    pub seed: u64,
    /// Cycles excluded from latency statistics at the start of the run.
    pub warmup_cycles: u64,
    /// Keep per-packet records (inject/eject cycles, route action).
    pub record_packets: bool,
    /// Keep power-gating transition events (wake/gate, per router).
    pub record_events: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            policies: vec![Policy::CafeenFull],
            mode: RunMode::Drain,
            max_cycles: 100_000_000,
            seed: 12345,
            warmup_cycles: 0,
            record_packets: false,
            record_events: false,
        }
    }
}

impl SimConfig {
    /// Check cross-field invariants. Returns non-fatal warnings (for
    /// example, an idle threshold below the break-even time).
    pub fn validate(&self) -> Result<Vec<String>, SimError> {
        let mut warnings = Vec::new();
        if self.mesh.rows < 2 || self.mesh.cols < 2 {
            return Err(SimError::Validation(format!(
                "mesh must be at least 2x2, got {}x{}",
                self.mesh.rows, self.mesh.cols
            )));
        }
        if self.router.vcs_per_port == 0 {
            return Err(SimError::Validation("vcs_per_port must be >= 1".into()));
        }
        let needs_partitioning = self.run.policies.iter().any(|p| p.uses_marl());
        if needs_partitioning && self.router.vcs_per_port % 2 != 0 {
            return Err(SimError::Validation(
                "vcs_per_port must be even for VC partitioning".into(),
            ));
        }
        if self.router.flits_per_vc == 0 {
            return Err(SimError::Validation("flits_per_vc must be >= 1".into()));
        }
        if self.router.pipeline_depth == 0 || self.router.bypass_latency == 0 {
            return Err(SimError::Validation(
                "pipeline_depth and bypass_latency must be >= 1".into(),
            ));
        }
        for (name, v) in [
            ("pg.fine_t_idle", self.pg.fine_t_idle),
            ("pg.fine_t_on", self.pg.fine_t_on),
            ("pg.coarse_t_idle", self.pg.coarse_t_idle),
            ("pg.coarse_t_on", self.pg.coarse_t_on),
            ("pg.mode_window", self.pg.mode_window),
            ("pg.mode_quiet", self.pg.mode_quiet),
        ] {
            if v == 0 {
                return Err(SimError::Validation(format!("{name} must be >= 1")));
            }
        }
        if !(self.marl.alpha > 0.0 && self.marl.alpha <= 1.0) {
            return Err(SimError::Validation(format!(
                "marl.alpha must be in (0, 1], got {}",
                self.marl.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.marl.epsilon) {
            return Err(SimError::Validation(format!(
                "marl.epsilon must be in [0, 1), got {}",
                self.marl.epsilon
            )));
        }
        if self.marl.t_epoch == 0 {
            return Err(SimError::Validation("marl.t_epoch must be >= 1".into()));
        }
        self.energy.validate()?;
        if self.traffic.patterns.is_empty() {
            return Err(SimError::Validation("traffic.patterns is empty".into()));
        }
        for &pir in &self.traffic.pirs {
            if !(0.0..=1.0).contains(&pir) {
                return Err(SimError::Validation(format!(
                    "pir must be in [0, 1], got {pir}"
                )));
            }
        }
        if self.traffic.pirs.is_empty() {
            return Err(SimError::Validation("traffic.pirs is empty".into()));
        }
        if self.traffic.packet_length == 0 {
            return Err(SimError::Validation("packet_length must be >= 1".into()));
        }
        if self.run.mode == RunMode::Drain && self.traffic.total_packets == 0 {
            return Err(SimError::Validation(
                "total_packets must be >= 1 for a drain run".into(),
            ));
        }
        let nodes = self.mesh.rows * self.mesh.cols;
        for pattern in &self.traffic.patterns {
            if pattern.needs_power_of_two() && !nodes.is_power_of_two() {
                return Err(SimError::Validation(format!(
                    "pattern {pattern:?} requires a power-of-two node count, got {nodes}"
                )));
            }
            if *pattern == Pattern::Transpose && nodes.is_power_of_two() {
                let n_bits = nodes.trailing_zeros();
                if n_bits % 2 != 0 {
                    return Err(SimError::Validation(format!(
                        "transpose requires an even address width, got {n_bits} bits"
                    )));
                }
            }
            if *pattern == Pattern::Trace && self.traffic.trace_path.is_none() {
                return Err(SimError::Validation(
                    "pattern trace requires traffic.trace_path".into(),
                ));
            }
        }
        if self.run.policies.is_empty() {
            return Err(SimError::Validation("run.policies is empty".into()));
        }
        if self.run.max_cycles == 0 {
            return Err(SimError::Validation("max_cycles must be >= 1".into()));
        }

        // Break-even sanity: gating earlier than the break-even time wastes
        // energy on the transition. Warn, never fail.
        if self.energy.static_buffer_per_cycle > 0.0 {
            let bet = break_even_time(self.energy.wake_buffer, self.energy.static_buffer_per_cycle)
                .expect("positive static power");
            if self.pg.fine_t_idle < bet {
                warnings.push(format!(
                    "pg.fine_t_idle ({}) is below the fine break-even time ({bet} cycles)",
                    self.pg.fine_t_idle
                ));
            }
        }
        let coarse_static = self.energy.static_router_misc_per_cycle
            + 5.0 * self.energy.static_buffer_per_cycle;
        if coarse_static > 0.0 {
            let bet = break_even_time(self.energy.wake_router, coarse_static)
                .expect("positive static power");
            if self.pg.coarse_t_idle < bet {
                warnings.push(format!(
                    "pg.coarse_t_idle ({}) is below the coarse break-even time ({bet} cycles)",
                    self.pg.coarse_t_idle
                ));
            }
        }
        Ok(warnings)
    }

    /// Number of nodes in the configured mesh.
    pub fn nodes(&self) -> usize {
        self.mesh.rows * self.mesh.cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_reference_setup() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.mesh.rows, 8);
        assert_eq!(cfg.mesh.cols, 8);
        assert_eq!(cfg.router.vcs_per_port, 4);
        assert_eq!(cfg.router.flits_per_vc, 4);
        assert_eq!(cfg.router.flit_width_bits, 128);
        assert_eq!(cfg.pg.fine_t_idle, 2);
        assert_eq!(cfg.pg.fine_t_on, 2);
        assert_eq!(cfg.pg.coarse_t_idle, 4);
        assert_eq!(cfg.pg.coarse_t_on, 8);
        assert_eq!(cfg.marl.t_epoch, 16);
        assert_eq!(cfg.marl.alpha, 0.01);
        assert_eq!(cfg.marl.epsilon, 0.05);
        assert!(cfg.validate().unwrap().is_empty());
    }

    #[test]
    fn odd_vcs_rejected_for_marl_policy() {
        let mut cfg = SimConfig::default();
        cfg.router.vcs_per_port = 3;
        cfg.run.policies = vec![Policy::CafeenFull];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("vcs_per_port must be even"));
        // XY-only policies accept odd VC counts.
        cfg.run.policies = vec![Policy::NoPg, Policy::TootCoarse];
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn bit_pattern_needs_power_of_two_nodes() {
        let mut cfg = SimConfig::default();
        cfg.mesh.rows = 3;
        cfg.mesh.cols = 4;
        cfg.traffic.patterns = vec![Pattern::BitReversal];
        assert!(cfg.validate().is_err());
        cfg.traffic.patterns = vec![Pattern::UniformRandom];
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn early_gating_warns() {
        let mut cfg = SimConfig::default();
        cfg.pg.fine_t_idle = 1; // break-even is 2 with default coefficients
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("break-even"));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SimConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
