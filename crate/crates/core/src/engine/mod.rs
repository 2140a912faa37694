//! Deterministic cycle-driven simulation loop.
//!
//! Each cycle advances through a fixed phase order:
//!   1. traffic injection into source queues
//!   2. power-state ticks (mode controller, then fine or coarse units)
//!   3. reward-flit delivery and Q-table updates
//!   4. router read phase: switch/bypass arbitration and movement resolution
//!   5. router write phase: commits, credits, ownership, wake requests
//!   6. reward-epoch bookkeeping (turn counts, opens, closes, broadcasts)
//!   7. energy charging
//!   8. metrics, watchdog and termination checks
//!
//! Nothing in phase k observes phase k+1 writes of the same cycle, and a
//! run is a pure function of its config: identical config and seed give
//! bit-identical results.

pub mod compare;
pub mod invariants;
pub mod metrics;
mod movement;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{RunMode, SimConfig};
use crate::energy::{EnergyEvent, EnergyLedger};
use crate::error::SimError;
use crate::marl::{self, QTable, RewardDelivery, RewardEpoch};
use crate::powergate::{GateUnit, ModeController, PgEvent, PgMode, PowerState};
use crate::rng::{Rng, STREAM_AGENT};
use crate::router::{PacketId, RouterState, PORTS};
use crate::topology::{Coord, Dir, HopKind, MeshConfig, RouteAction};
use crate::traffic::{Packet, Pattern, TrafficSource, TrafficSpec};

pub use metrics::Metrics;

/// Gating and routing policy under evaluation.
///
/// - `NoPg`: no gating at all, XY routing, no bypass.
/// - `ConvXy`: coarse router gating, no bypass — routers wake on any
///   arrival, straight traffic and injection included. XY routing.
/// - `TootCoarse`: coarse gating plus the bypass; only turning or ejecting
///   packets wake a router. XY routing.
/// - `CafeenFineOnly`: per-buffer fine gating plus the bypass, XY routing.
/// - `CafeenFull`: per-router fine/coarse mode switching, bypass, and
///   learned XY/YX routing with VC partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    NoPg,
    ConvXy,
    TootCoarse,
    CafeenFineOnly,
    CafeenFull,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::NoPg,
        Policy::ConvXy,
        Policy::TootCoarse,
        Policy::CafeenFineOnly,
        Policy::CafeenFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::NoPg => "no_pg",
            Policy::ConvXy => "conv_xy",
            Policy::TootCoarse => "toot_coarse",
            Policy::CafeenFineOnly => "cafeen_fine_only",
            Policy::CafeenFull => "cafeen_full",
        }
    }

    /// Straight packets cross gated routers through a latch instead of the
    /// buffered pipeline.
    pub fn has_bypass(self) -> bool {
        !matches!(self, Policy::NoPg | Policy::ConvXy)
    }

    pub fn gated(self) -> bool {
        self != Policy::NoPg
    }

    pub fn uses_marl(self) -> bool {
        self == Policy::CafeenFull
    }

    /// VC partitioning only applies when both route classes exist;
    /// XY-only policies keep all VCs usable.
    pub fn partitioned_vcs(self) -> bool {
        self.uses_marl()
    }

    /// `None` means the router switches modes at runtime.
    pub fn fixed_mode(self) -> Option<PgMode> {
        match self {
            Policy::NoPg => Some(PgMode::Coarse), // unused; nothing ever gates
            Policy::ConvXy | Policy::TootCoarse => Some(PgMode::Coarse),
            Policy::CafeenFineOnly => Some(PgMode::Fine),
            Policy::CafeenFull => None,
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub policy: Policy,
    pub pattern: Pattern,
    pub pir: f64,
}

/// Per-packet bookkeeping held by the engine.
#[derive(Debug, Clone)]
struct PacketInfo {
    src: Coord,
    dst: Coord,
    len: u16,
    inject_cycle: u64,
    action: RouteAction,
    committed: bool,
    vc: u8,
    flits_ejected: u16,
}

/// Source-side node state: the PE-to-router interface.
#[derive(Debug, Clone)]
struct NodeState {
    queue: std::collections::VecDeque<PacketId>,
    /// Flits of the front packet already emitted into the network.
    emitted: u16,
    /// Free slots in the router's Local input buffer, per VC (buffered
    /// injection only).
    inj_credits: Vec<u8>,
    vc_rr: usize,
}

/// Per-router power machinery.
#[derive(Debug)]
struct RouterPower {
    mode: PgMode,
    ctl: Option<ModeController>,
    coarse: GateUnit,
    fine: Vec<GateUnit>,
}

impl RouterPower {
    /// Can the input buffer behind `port` accept flits right now?
    fn buffer_active(&self, policy: Policy, port: Dir) -> bool {
        if !policy.gated() {
            return true;
        }
        match self.mode {
            PgMode::Fine => self.fine[port.index()].state.is_active(),
            PgMode::Coarse => self.coarse.state.is_active(),
        }
    }

    fn draws_static(&self, policy: Policy, port: Dir) -> bool {
        if !policy.gated() {
            return true;
        }
        match self.mode {
            PgMode::Fine => self.fine[port.index()].state.draws_static(),
            PgMode::Coarse => self.coarse.state.draws_static(),
        }
    }
}

/// Record of one ejected packet, kept when `run.record_packets` is set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PacketRecord {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub action: RouteAction,
    pub length: usize,
    pub inject_cycle: u64,
    pub eject_cycle: u64,
}

/// Power/mode event, kept when `run.record_events` is set. The format is
/// for debugging and not stable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EventRecord {
    pub cycle: u64,
    pub router: usize,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunOutput {
    pub metrics: Metrics,
    /// Final Q-tables (policies with agents only): router flat id ->
    /// entries.
    pub qtables: Option<Vec<QTableDump>>,
    pub packets: Option<Vec<PacketRecord>>,
    pub events: Option<Vec<EventRecord>>,
}

/// Serializable Q-table snapshot for one router.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QTableDump {
    pub router: usize,
    /// (state label, action name, value) triples in table order.
    pub entries: Vec<(String, String, f64)>,
}

/// Convenience wrapper: build a [`Sim`] and run it to completion.
pub fn run(cfg: &SimConfig, key: CellKey) -> Result<RunOutput, SimError> {
    let mut sim = Sim::new(cfg, key)?;
    sim.run_to_completion()?;
    Ok(sim.into_output())
}

/// How a finished run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunEnd {
    Drained,
    CycleLimit,
}

pub struct Sim {
    cfg: SimConfig,
    key: CellKey,
    mesh: MeshConfig,
    policy: Policy,
    routers: Vec<RouterState>,
    power: Vec<RouterPower>,
    nodes: Vec<NodeState>,
    packets: Vec<PacketInfo>,
    traffic: TrafficSource,
    qtables: Vec<QTable>,
    agent_rngs: Vec<Rng>,
    epochs: Vec<Option<RewardEpoch>>,
    pending_rewards: BTreeMap<u64, Vec<RewardDelivery>>,
    ledger: EnergyLedger,
    stats: metrics::StatsCollector,
    pub cycle: u64,
    injected: u64,
    ejected: u64,
    flits_emitted: u64,
    flits_ejected: u64,
    last_move_cycle: u64,
    injection_buf: Vec<Packet>,
    scratch: movement::Scratch,
    // per-cycle event carriers (cleared each cycle)
    regated: Vec<bool>,
    wake_cause: Vec<Option<HopKind>>,
    switched_to_fine: Vec<bool>,
    turn_events: Vec<u32>,
    packet_records: Option<Vec<PacketRecord>>,
    event_records: Option<Vec<EventRecord>>,
    end: Option<RunEnd>,
}

/// Watchdog window: a run with packets in flight but no flit movement for
/// this many consecutive cycles is declared deadlocked.
pub const WATCHDOG_CYCLES: u64 = 10_000;

impl Sim {
    pub fn new(cfg: &SimConfig, key: CellKey) -> Result<Self, SimError> {
        cfg.validate()?;
        let mesh = MeshConfig::new(cfg.mesh.rows, cfg.mesh.cols)?;
        let n = mesh.nodes();
        let vcs = cfg.router.vcs_per_port;
        let depth = cfg.router.flits_per_vc;
        let policy = key.policy;

        if policy.partitioned_vcs() && vcs % 2 != 0 {
            return Err(SimError::Validation(
                "vcs_per_port must be even for VC partitioning".into(),
            ));
        }

        let traffic = match key.pattern {
            Pattern::Trace => {
                let path = cfg.traffic.trace_path.as_ref().ok_or_else(|| {
                    SimError::Validation("pattern trace requires traffic.trace_path".into())
                })?;
                TrafficSource::from_trace(mesh, Path::new(path))?
            }
            pattern => TrafficSource::synthetic(
                mesh,
                TrafficSpec {
                    pattern,
                    pir: key.pir,
                    packet_length: cfg.traffic.packet_length,
                    packet_limit: match cfg.run.mode {
                        RunMode::Drain => cfg.traffic.total_packets,
                        RunMode::Cycles => u64::MAX,
                    },
                    seed: cfg.run.seed,
                },
            )?,
        };

        let routers = (0..n)
            .map(|i| RouterState::new(mesh.coord(i), vcs, depth))
            .collect();
        let power = (0..n)
            .map(|_| {
                let initial = if policy.gated() {
                    // An idle mesh starts gated; the first arrivals pay the
                    // wake-up cost.
                    PowerState::Gated
                } else {
                    PowerState::Active
                };
                let mode = policy.fixed_mode().unwrap_or(PgMode::Fine);
                RouterPower {
                    mode,
                    ctl: if policy.fixed_mode().is_none() {
                        Some(ModeController::new(
                            cfg.pg.mode_up_threshold,
                            cfg.pg.mode_window,
                            cfg.pg.mode_quiet,
                        ))
                    } else {
                        None
                    },
                    coarse: GateUnit::new(cfg.pg.coarse_t_idle, cfg.pg.coarse_t_on, initial),
                    fine: (0..PORTS)
                        .map(|_| GateUnit::new(cfg.pg.fine_t_idle, cfg.pg.fine_t_on, initial))
                        .collect(),
                }
            })
            .collect();
        let nodes = (0..n)
            .map(|_| NodeState {
                queue: std::collections::VecDeque::new(),
                emitted: 0,
                inj_credits: vec![depth as u8; vcs],
                vc_rr: 0,
            })
            .collect();
        let qtables = if policy.uses_marl() {
            (0..n)
                .map(|_| QTable::new(mesh.rows, mesh.cols, cfg.marl.quantize_4bit))
                .collect()
        } else {
            Vec::new()
        };
        let agent_rngs = (0..n)
            .map(|i| Rng::stream(cfg.run.seed, STREAM_AGENT + i as u64))
            .collect();

        Ok(Sim {
            cfg: cfg.clone(),
            key,
            mesh,
            policy,
            routers,
            power,
            nodes,
            packets: Vec::new(),
            traffic,
            qtables,
            agent_rngs,
            epochs: vec![None; n],
            pending_rewards: BTreeMap::new(),
            ledger: EnergyLedger::new(n),
            stats: metrics::StatsCollector::default(),
            cycle: 0,
            injected: 0,
            ejected: 0,
            flits_emitted: 0,
            flits_ejected: 0,
            last_move_cycle: 0,
            injection_buf: Vec::new(),
            scratch: movement::Scratch::default(),
            regated: vec![false; n],
            wake_cause: vec![None; n],
            switched_to_fine: vec![false; n],
            turn_events: vec![0; n],
            packet_records: if cfg.run.record_packets {
                Some(Vec::new())
            } else {
                None
            },
            event_records: if cfg.run.record_events {
                Some(Vec::new())
            } else {
                None
            },
            end: None,
        })
    }

    pub fn done(&self) -> bool {
        self.end.is_some()
    }

    pub fn run_to_completion(&mut self) -> Result<(), SimError> {
        while self.end.is_none() {
            self.step()?;
        }
        Ok(())
    }

    /// Advance one cycle through all eight phases.
    pub fn step(&mut self) -> Result<(), SimError> {
        debug_assert!(self.end.is_none());
        let cycle = self.cycle;
        for flag in self.regated.iter_mut() {
            *flag = false;
        }
        for cause in self.wake_cause.iter_mut() {
            *cause = None;
        }
        for flag in self.switched_to_fine.iter_mut() {
            *flag = false;
        }
        for count in self.turn_events.iter_mut() {
            *count = 0;
        }

        self.phase1_injection(cycle);
        self.phase2_power(cycle);
        self.phase3_rewards(cycle)?;
        movement::resolve_cycle(self, cycle)?; // phases 4 + 5
        self.phase6_epochs(cycle)?;
        self.phase7_energy();
        self.phase8_finish(cycle)?;

        self.cycle += 1;
        Ok(())
    }

    fn phase1_injection(&mut self, cycle: u64) {
        self.injection_buf.clear();
        self.traffic.next_injections(cycle, &mut self.injection_buf);
        for packet in self.injection_buf.drain(..) {
            let id = self.packets.len() as PacketId;
            self.packets.push(PacketInfo {
                src: packet.src,
                dst: packet.dst,
                len: packet.length as u16,
                inject_cycle: packet.inject_cycle,
                action: packet.route_action.unwrap_or(RouteAction::Xy),
                committed: packet.route_action.is_some(),
                vc: 0,
                flits_ejected: 0,
            });
            let node = self.mesh.flat(packet.src);
            self.nodes[node].queue.push_back(id);
            self.injected += 1;
        }
    }

    fn phase2_power(&mut self, cycle: u64) {
        if !self.policy.gated() {
            return;
        }
        for r in 0..self.routers.len() {
            // Mode controller first, so the surviving machine ticks under
            // the mode the router runs this cycle.
            if let Some(ctl) = self.power[r].ctl.as_mut() {
                if let Some(new_mode) = ctl.tick(cycle) {
                    self.apply_mode_switch(r, new_mode, cycle);
                }
            }
            let mut busy_ports = [false; PORTS];
            for p in 0..PORTS {
                busy_ports[p] = self.port_busy(r, Dir::from_index(p));
            }
            match self.power[r].mode {
                PgMode::Coarse => {
                    let busy = busy_ports.iter().any(|&b| b);
                    match self.power[r].coarse.tick(busy) {
                        Some(PgEvent::Gated) => {
                            self.regated[r] = true;
                            self.record_event(cycle, r, "coarse_gate");
                        }
                        Some(PgEvent::WakeFinished) => {
                            self.record_event(cycle, r, "coarse_wake_done");
                        }
                        _ => {}
                    }
                }
                PgMode::Fine => {
                    for (p, &busy) in busy_ports.iter().enumerate() {
                        match self.power[r].fine[p].tick(busy) {
                            Some(PgEvent::Gated) => {
                                self.record_event(cycle, r, "fine_gate");
                            }
                            Some(PgEvent::WakeFinished) => {
                                self.record_event(cycle, r, "fine_wake_done");
                            }
                            _ => {}
                        }
                    }
                }
            }
            // Busy flags were consumed by the tick above.
            for buf in self.routers[r].bufs.iter_mut() {
                buf.busy_flag = false;
            }
        }
    }

    /// A port's buffer pool counts as busy while it holds flits, moved any
    /// this cycle, or an incomplete wormhole is still streaming toward it
    /// (the upstream channel is owned); gating mid-packet is never allowed.
    fn port_busy(&self, r: usize, port: Dir) -> bool {
        let router = &self.routers[r];
        let vcs = router.vcs;
        let base = port.index() * vcs;
        if router.bufs[base..base + vcs]
            .iter()
            .any(|b| !b.fifo.is_empty() || b.busy_flag)
        {
            return true;
        }
        // Inbound ownership check.
        if port == Dir::Local {
            let node = &self.nodes[r];
            if !self.policy.has_bypass() && node.emitted > 0 {
                return true;
            }
        } else if let Some(up) = self.neighbor(r, port) {
            let up_router = &self.routers[up];
            let out = port.opposite();
            let base = out.index() * vcs;
            if up_router.owner[base..base + vcs].iter().any(|o| o.is_some()) {
                return true;
            }
        }
        false
    }

    fn apply_mode_switch(&mut self, r: usize, new_mode: PgMode, cycle: u64) {
        self.power[r].mode = new_mode;
        match new_mode {
            PgMode::Coarse => {
                // Adopt the most-awake fine state so no packet loses its
                // in-progress wake.
                let mut adopted = PowerState::Gated;
                let mut max_waking = 0;
                for unit in &self.power[r].fine {
                    match unit.state {
                        PowerState::Active => adopted = PowerState::Active,
                        PowerState::Waking(k) => max_waking = max_waking.max(k),
                        PowerState::Gated => {}
                    }
                }
                if adopted != PowerState::Active && max_waking > 0 {
                    adopted = PowerState::Waking(max_waking);
                }
                self.power[r].coarse.force(adopted);
                self.record_event(cycle, r, "mode_to_coarse");
            }
            PgMode::Fine => {
                let state = self.power[r].coarse.state;
                for unit in self.power[r].fine.iter_mut() {
                    unit.force(state);
                }
                self.switched_to_fine[r] = true;
                self.record_event(cycle, r, "mode_to_fine");
            }
        }
    }

    fn phase3_rewards(&mut self, cycle: u64) -> Result<(), SimError> {
        if let Some(deliveries) = self.pending_rewards.remove(&cycle) {
            for d in deliveries {
                self.apply_reward(&d)?;
            }
        }
        Ok(())
    }

    fn apply_reward(&mut self, d: &RewardDelivery) -> Result<(), SimError> {
        let agent = self.mesh.flat(d.agent);
        marl::apply_update(
            &mut self.qtables[agent],
            d.agent,
            d.turning_router,
            d.reward,
            self.cfg.marl.alpha,
        )
    }

    fn phase6_epochs(&mut self, cycle: u64) -> Result<(), SimError> {
        if !self.policy.uses_marl() {
            return Ok(());
        }
        let t_epoch = self.cfg.marl.t_epoch;
        for r in 0..self.routers.len() {
            // Count this cycle's completed turns while the window is open.
            if self.turn_events[r] > 0 {
                if let Some(ep) = self.epochs[r].as_mut() {
                    if cycle < ep.deadline {
                        for _ in 0..self.turn_events[r] {
                            ep.record_turn();
                        }
                    }
                }
            }
            // A qualifying wake transition opens a fresh epoch.
            if let Some(kind) = self.wake_cause[r] {
                let qualifies = match kind {
                    HopKind::Turning => true,
                    HopKind::Ejecting => self.cfg.marl.count_ejects_as_turns,
                    HopKind::Straight => false,
                };
                if qualifies && self.epochs[r].is_none() {
                    self.epochs[r] = Some(RewardEpoch::open(
                        self.routers[r].coord,
                        cycle,
                        t_epoch,
                    ));
                    self.record_event(cycle, r, "epoch_open");
                }
            }
            // Close on deadline, re-gate, or fall-back to fine mode.
            let close = match self.epochs[r].as_ref() {
                Some(ep) => ep.due(cycle) || self.regated[r] || self.switched_to_fine[r],
                None => false,
            };
            if close {
                let ep = self.epochs[r].take().expect("epoch present");
                let reward = ep.turn_count;
                self.stats.record_epoch(reward);
                self.record_event(cycle, r, "epoch_close");
                let (schedule, hops) = marl::broadcast_schedule(
                    self.mesh,
                    ep.turning_router,
                    reward,
                    cycle,
                    self.cfg.marl.zero_latency_broadcast,
                );
                for _ in 0..hops {
                    self.ledger
                        .charge_event(&self.cfg.energy, r, EnergyEvent::RewardFlitHop);
                }
                for d in schedule {
                    if d.deliver_cycle <= cycle {
                        self.apply_reward(&d)?;
                    } else {
                        self.pending_rewards
                            .entry(d.deliver_cycle)
                            .or_default()
                            .push(d);
                    }
                }
            }
        }
        Ok(())
    }

    fn phase7_energy(&mut self) {
        let coeffs = self.cfg.energy.clone();
        let marl_on = self.policy.uses_marl();
        for r in 0..self.routers.len() {
            let power = &self.power[r];
            let (powered_bufs, misc_on, active_bufs) = if !self.policy.gated() {
                (PORTS, true, PORTS)
            } else {
                match power.mode {
                    PgMode::Coarse => {
                        let on = power.coarse.state.draws_static();
                        let active = power.coarse.state.is_active();
                        (
                            if on { PORTS } else { 0 },
                            on,
                            if active { PORTS } else { 0 },
                        )
                    }
                    PgMode::Fine => {
                        let powered =
                            power.fine.iter().filter(|u| u.state.draws_static()).count();
                        let active =
                            power.fine.iter().filter(|u| u.state.is_active()).count();
                        (powered, powered > 0, active)
                    }
                }
            };
            let qtable_on = marl_on && power.mode == PgMode::Coarse;
            self.ledger
                .charge_cycle(&coeffs, r, powered_bufs, misc_on, qtable_on);
            self.stats.powered_buffer_cycles += powered_bufs as u64;
            self.stats.active_buffer_histogram[active_bufs] += 1;
            if self.policy.gated() {
                match power.mode {
                    PgMode::Fine => self.stats.mode_residency_fine += 1,
                    PgMode::Coarse => self.stats.mode_residency_coarse += 1,
                }
            }
        }
    }

    fn phase8_finish(&mut self, cycle: u64) -> Result<(), SimError> {
        #[cfg(debug_assertions)]
        invariants::check(self);

        // Watchdog: packets exist but nothing has moved for a long time.
        if self.injected > self.ejected && cycle.saturating_sub(self.last_move_cycle) >= WATCHDOG_CYCLES
        {
            return Err(SimError::Deadlock {
                cycle,
                report: self.deadlock_report(),
            });
        }

        match self.cfg.run.mode {
            RunMode::Drain => {
                if self.ejected >= self.cfg.traffic.total_packets
                    || (self.traffic.exhausted() && self.injected == self.ejected)
                {
                    self.end = Some(RunEnd::Drained);
                } else if cycle + 1 >= self.cfg.run.max_cycles {
                    return Err(SimError::Timeout {
                        cycle: cycle + 1,
                        partial: Box::new(self.build_metrics(cycle + 1)),
                    });
                }
            }
            RunMode::Cycles => {
                if cycle + 1 >= self.cfg.run.max_cycles {
                    self.end = Some(RunEnd::CycleLimit);
                }
            }
        }
        Ok(())
    }

    fn record_event(&mut self, cycle: u64, router: usize, kind: &str) {
        if let Some(events) = self.event_records.as_mut() {
            events.push(EventRecord {
                cycle,
                router,
                kind: kind.to_string(),
            });
        }
    }

    pub(crate) fn neighbor(&self, r: usize, toward: Dir) -> Option<usize> {
        let c = self.routers[r].coord;
        let ok = match toward {
            Dir::North => c.row > 0,
            Dir::South => c.row + 1 < self.mesh.rows,
            Dir::East => c.col + 1 < self.mesh.cols,
            Dir::West => c.col > 0,
            Dir::Local => return None,
        };
        if ok {
            Some(self.mesh.flat(crate::topology::step(c, toward)))
        } else {
            None
        }
    }

    fn build_metrics(&self, cycles: u64) -> Metrics {
        self.stats.clone().finish(
            self.policy.name().to_string(),
            self.key.pattern.name().to_string(),
            self.key.pir,
            self.cfg.run.seed,
            cycles,
            self.injected,
            self.ejected,
            self.ledger.summary(),
        )
    }

    pub fn into_output(self) -> RunOutput {
        let cycles = self.cycle;
        let metrics = self.build_metrics(cycles);
        RunOutput {
            metrics,
            qtables: if self.policy.uses_marl() {
                Some(self.qtable_dump())
            } else {
                None
            },
            packets: self.packet_records,
            events: self.event_records,
        }
    }

    /// Snapshot all agent tables (empty for non-learning policies).
    pub fn qtable_dump(&self) -> Vec<QTableDump> {
        self.qtables
            .iter()
            .enumerate()
            .map(|(router, q)| QTableDump {
                router,
                entries: q
                    .entries()
                    .map(|(key, action, value)| (key.label(), action.to_string(), value))
                    .collect(),
            })
            .collect()
    }

    /// Direct access to a router's Q-table (learning policies only).
    pub fn qtable(&self, router: usize) -> Option<&QTable> {
        self.qtables.get(router)
    }

    /// Override the exploration rate mid-run. Supports annealed evaluation:
    /// train with exploration, then settle and read the greedy policy.
    pub fn set_exploration(&mut self, epsilon: f64) {
        self.cfg.marl.epsilon = epsilon;
    }

    /// Override the learning rate mid-run, for annealing schedules.
    pub fn set_learning_rate(&mut self, alpha: f64) {
        self.cfg.marl.alpha = alpha;
    }

    /// Greedy route choice the agent at `src` would make for `dst` with
    /// exploration disabled. Usable for offline evaluation of a trained run.
    pub fn greedy_route(&self, src: Coord, dst: Coord) -> RouteAction {
        match self.qtables.get(self.mesh.flat(src)) {
            Some(q) => marl::greedy_action(q, src, dst),
            None => RouteAction::Xy,
        }
    }

    fn deadlock_report(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} packets injected, {} ejected, {} in flight",
            self.injected,
            self.ejected,
            self.injected - self.ejected
        );
        let mut lines = 0;
        'outer: for router in self.routers.iter() {
            for port in 0..PORTS {
                for vc in 0..router.vcs {
                    let slot = port * router.vcs + vc;
                    if let Some(front) = router.bufs[slot].fifo.first() {
                        let info = &self.packets[front.packet as usize];
                        let _ = writeln!(
                            out,
                            "router {} port {} vc {vc}: packet {} flit {} ({} -> {}, {}), {} queued",
                            router.coord,
                            Dir::from_index(port),
                            front.packet,
                            front.index,
                            info.src,
                            info.dst,
                            info.action,
                            router.bufs[slot].fifo.len(),
                        );
                        lines += 1;
                    }
                    if let Some(flit) = &router.latches[slot] {
                        let info = &self.packets[flit.packet as usize];
                        let _ = writeln!(
                            out,
                            "router {} latch {} vc {vc}: packet {} flit {} ({} -> {})",
                            router.coord,
                            Dir::from_index(port),
                            flit.packet,
                            flit.index,
                            info.src,
                            info.dst,
                        );
                        lines += 1;
                    }
                    if lines > 200 {
                        let _ = writeln!(out, "... (truncated)");
                        break 'outer;
                    }
                }
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.queue.is_empty() {
                let _ = writeln!(
                    out,
                    "node {}: {} packets queued at source",
                    self.mesh.coord(i),
                    node.queue.len()
                );
                lines += 1;
                if lines > 250 {
                    break;
                }
            }
        }
        out
    }
}
