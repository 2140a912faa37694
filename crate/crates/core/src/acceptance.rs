//! Built-in self-check suite.
//!
//! Ten criteria exercise the simulator end to end: update-rule arithmetic,
//! learned-routing optimality against a brute-force oracle, fine-grained
//! gating opportunity, wake-latency masking, energy orderings at low and
//! high load, deadlock freedom under saturation, determinism, latency
//! sanity and the state-space bound. Each criterion returns a report with
//! its measured evidence; `nocgate verify` prints one line per criterion
//! and the `acceptance` test target asserts them.

use std::fmt::Write as _;
use std::time::Instant;

use crate::config::{RunMode, SimConfig};
use crate::engine::{run, CellKey, Sim};
use crate::error::SimError;
use crate::marl::{QTable, StateKey};
use crate::rng::Rng;
use crate::topology::{Coord, MeshConfig, RouteAction};
use crate::traffic::Pattern;
use crate::Policy;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionReport {
    fn finish(id: usize, name: &'static str, passed: bool, details: String, t0: Instant) -> Self {
        CriterionReport {
            id,
            name,
            passed,
            details,
            seconds: t0.elapsed().as_secs_f64(),
        }
    }
}

pub const CRITERIA: [(usize, &str, fn() -> CriterionReport); 10] = [
    (1, "update_rule_arithmetic", criterion_1),
    (2, "oracle_optimality", criterion_2),
    (3, "fine_grained_opportunity", criterion_3),
    (4, "wake_latency_masking", criterion_4),
    (5, "energy_ordering_low_load", criterion_5),
    (6, "high_load_adaptive_benefit", criterion_6),
    (7, "deadlock_freedom", criterion_7),
    (8, "determinism", criterion_8),
    (9, "latency_sanity", criterion_9),
    (10, "state_space_bound", criterion_10),
];

/// Run every criterion whose name contains `filter` (all when empty).
pub fn run_all(filter: &str) -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .filter(|(_, name, _)| name.contains(filter))
        .map(|(_, _, f)| f())
        .collect()
}

fn write_temp_trace(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!(
        "nocgate_accept_{name}_{}.csv",
        std::process::id()
    ));
    std::fs::write(&path, body).expect("temp trace written");
    path.to_string_lossy().into_owned()
}

/// Criterion 1: the single-step update matches (1 - a)Q + a*r to 1e-12 on
/// 1000 randomized triples, and constant-reward iteration converges
/// geometrically: |Q_k - r| = (1 - a)^k |Q_0 - r|.
fn criterion_1() -> CriterionReport {
    let t0 = Instant::now();
    let mut rng = Rng::stream(0xACC1, 1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q0 = rng.next_f64() * 20.0;
        let alpha = (rng.next_f64() * 0.999) + 0.001;
        let r = rng.gen_range(64) as f64;
        let mut table = QTable::new(8, 8, false);
        table.update(StateKey::Col(3), RouteAction::Xy, q0, 1.0); // seed Q = q0
        table.update(StateKey::Col(3), RouteAction::Xy, r, alpha);
        let got = table.get(StateKey::Col(3), RouteAction::Xy);
        let expect = (1.0 - alpha) * q0 + alpha * r;
        worst = worst.max((got - expect).abs());
    }
    let arithmetic_ok = worst < 1e-12;

    let alpha = 0.05;
    let r = 9.0;
    let q0 = 2.0;
    let mut table = QTable::new(4, 4, false);
    table.update(StateKey::Row(1), RouteAction::Yx, q0, 1.0);
    let mut geometric_ok = true;
    let mut worst_geo = 0.0f64;
    for k in 1..=500u32 {
        table.update(StateKey::Row(1), RouteAction::Yx, r, alpha);
        let expect = (q0 - r).abs() * (1.0 - alpha).powi(k as i32);
        let got = (table.get(StateKey::Row(1), RouteAction::Yx) - r).abs();
        let err = (got - expect).abs();
        worst_geo = worst_geo.max(err);
        if err > 1e-9 {
            geometric_ok = false;
        }
    }
    CriterionReport::finish(
        1,
        "update_rule_arithmetic",
        arithmetic_ok && geometric_ok,
        format!("worst update error {worst:.2e}; worst geometric deviation {worst_geo:.2e}"),
        t0,
    )
}

fn random_flow_set(mesh: MeshConfig, count: usize, rng: &mut Rng) -> Vec<(Coord, Coord)> {
    let mut flows: Vec<(Coord, Coord)> = Vec::new();
    while flows.len() < count {
        let src = mesh.coord(rng.gen_range(mesh.nodes() as u64) as usize);
        let dst = mesh.coord(rng.gen_range(mesh.nodes() as u64) as usize);
        // Aligned pairs have no XY/YX choice; draw flows with a real
        // decision to learn.
        if src.row == dst.row || src.col == dst.col {
            continue;
        }
        if flows.contains(&(src, dst)) {
            continue;
        }
        flows.push((src, dst));
    }
    flows
}

/// Turning router of a flow under an assignment, written out directly so
/// the oracle stays independent of the topology module.
fn oracle_turn(src: Coord, dst: Coord, yx: bool) -> Coord {
    if yx {
        Coord::new(dst.row, src.col)
    } else {
        Coord::new(src.row, dst.col)
    }
}

/// Minimum number of distinct turning routers over all 2^F assignments.
fn oracle_min_turning(flows: &[(Coord, Coord)]) -> usize {
    let f = flows.len();
    let mut best = usize::MAX;
    for mask in 0..(1u32 << f) {
        let mut routers: Vec<Coord> = Vec::with_capacity(f);
        for (i, &(src, dst)) in flows.iter().enumerate() {
            let t = oracle_turn(src, dst, mask & (1 << i) != 0);
            if !routers.contains(&t) {
                routers.push(t);
            }
        }
        best = best.min(routers.len());
    }
    best
}

/// Criterion 2: on a 4x4 mesh with 20 random sets of 3..=10 persistent
/// flows, training with exploration 0.05 for 200k cycles and then reading
/// the steady-state greedy assignment under annealed (zero) exploration
/// must match the brute-force minimum of distinct turning routers in at
/// least 18 of 20 sets and stay within +1 router on the rest.
///
/// Scenario configuration pins the cooperative regime: the mode-up
/// threshold is zero so every router runs its agent for the whole run;
/// ejection wake-ups do not open reward epochs, so the reward measures
/// exactly what the oracle counts — packet turns; and the learning rate is
/// raised to 0.3 so value fluctuations can hop between assignment basins
/// (at the table default of 0.01 the assignment freezes in the first
/// local optimum it reaches).
fn criterion_2() -> CriterionReport {
    let t0 = Instant::now();
    let mesh = MeshConfig::new(4, 4).unwrap();
    let mut exact = 0;
    let mut within_one = 0;
    let mut lines = String::new();
    const SETS: usize = 20;
    const TRAIN_CYCLES: u64 = 200_000;
    const SETTLE_CYCLES: u64 = 20_000;
    for set in 0..SETS {
        let mut rng = Rng::stream(0xACC2, set as u64);
        let count = 3 + (rng.gen_range(8) as usize); // 3..=10
        let flows = random_flow_set(mesh, count, &mut rng);

        // Persistent single-flit flows at 0.2 packets/cycle each.
        let mut trace = String::from("cycle,src,dst,length\n");
        for cycle in 0..TRAIN_CYCLES + SETTLE_CYCLES {
            for &(src, dst) in &flows {
                if rng.gen_bool(0.2) {
                    let _ = writeln!(trace, "{cycle},{},{},1", mesh.flat(src), mesh.flat(dst));
                }
            }
        }
        let path = write_temp_trace(&format!("oracle_{set}"), &trace);

        let mut cfg = SimConfig::default();
        cfg.mesh.rows = 4;
        cfg.mesh.cols = 4;
        cfg.traffic.patterns = vec![Pattern::Trace];
        cfg.traffic.trace_path = Some(path.clone());
        cfg.run.mode = RunMode::Cycles;
        cfg.run.max_cycles = TRAIN_CYCLES + SETTLE_CYCLES;
        cfg.run.seed = 7_000 + set as u64;
        cfg.pg.mode_up_threshold = 0;
        cfg.marl.count_ejects_as_turns = false;
        cfg.marl.alpha = 0.3;

        let key = CellKey {
            policy: Policy::CafeenFull,
            pattern: Pattern::Trace,
            pir: 0.0,
        };
        // Train with exploration, then anneal to zero and read the modal
        // greedy assignment over the settle window (the steady state, not
        // one instantaneous snapshot).
        let mut yx_votes = vec![0u32; flows.len()];
        let mut samples = 0u32;
        let result = Sim::new(&cfg, key).and_then(|mut sim| {
            while !sim.done() {
                if sim.cycle == TRAIN_CYCLES {
                    sim.set_exploration(0.0);
                }
                if sim.cycle > TRAIN_CYCLES + SETTLE_CYCLES / 2 && sim.cycle % 500 == 0 {
                    for (i, &(src, dst)) in flows.iter().enumerate() {
                        if sim.greedy_route(src, dst) == RouteAction::Yx {
                            yx_votes[i] += 1;
                        }
                    }
                    samples += 1;
                }
                sim.step()?;
            }
            Ok(())
        });
        let _ = std::fs::remove_file(&path);
        if let Err(e) = result {
            return CriterionReport::finish(
                2,
                "oracle_optimality",
                false,
                format!("set {set} failed: {e}"),
                t0,
            );
        }

        let mut learned: Vec<Coord> = Vec::new();
        let mut assignment = Vec::new();
        for (i, &(src, dst)) in flows.iter().enumerate() {
            let yx = yx_votes[i] * 2 > samples;
            assignment.push(if yx { RouteAction::Yx } else { RouteAction::Xy });
            let t = oracle_turn(src, dst, yx);
            if !learned.contains(&t) {
                learned.push(t);
            }
        }
        let optimal = oracle_min_turning(&flows);
        let got = learned.len();
        if got == optimal {
            exact += 1;
            within_one += 1;
        } else if got == optimal + 1 {
            within_one += 1;
        } else {
            let _ = writeln!(
                lines,
                "set {set}: learned {got} turning routers vs optimum {optimal}; flows {flows:?} assignment {assignment:?}"
            );
        }
    }
    let passed = exact >= 18 && within_one == SETS;
    CriterionReport::finish(
        2,
        "oracle_optimality",
        passed,
        format!("{exact}/{SETS} sets optimal, {within_one}/{SETS} within +1\n{lines}"),
        t0,
    )
}

/// Criterion 3: transpose traffic at 0.005 on an 8x8 mesh under fine-only
/// gating; among router-cycles with at least one Active input buffer, the
/// share with exactly one must reach 80%.
fn criterion_3() -> CriterionReport {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.run.mode = RunMode::Cycles;
    cfg.run.max_cycles = 150_000;
    let out = match run(
        &cfg,
        CellKey {
            policy: Policy::CafeenFineOnly,
            pattern: Pattern::Transpose,
            pir: 0.005,
        },
    ) {
        Ok(out) => out,
        Err(e) => {
            return CriterionReport::finish(
                3,
                "fine_grained_opportunity",
                false,
                e.to_string(),
                t0,
            )
        }
    };
    let hist = &out.metrics.active_buffer_histogram;
    let with_any: u64 = hist[1..].iter().sum();
    let exactly_one = hist[1];
    let fraction = exactly_one as f64 / with_any.max(1) as f64;
    CriterionReport::finish(
        3,
        "fine_grained_opportunity",
        fraction >= 0.80 && with_any > 0,
        format!(
            "{:.1}% of active router-cycles use exactly one input buffer ({} packets observed)",
            fraction * 100.0,
            out.metrics.packets_ejected
        ),
        t0,
    )
}

/// Criterion 4: three turning/ejecting packets reach one gated router on
/// three different ports within two cycles. Coarse gating pays one 8-cycle
/// wake shared by all three; fine gating pays three separate 2-cycle
/// wakes. Ejection times are asserted against hand-derived values.
fn criterion_4() -> CriterionReport {
    let t0 = Instant::now();
    let trace = "cycle,src,dst,length\n0,32,60,1\n0,39,4,1\n0,4,36,1\n";
    let path = write_temp_trace("masking", trace);
    let mut cfg = SimConfig::default();
    cfg.traffic.patterns = vec![Pattern::Trace];
    cfg.traffic.trace_path = Some(path.clone());
    cfg.traffic.total_packets = u64::MAX;
    cfg.run.max_cycles = 10_000;
    cfg.run.record_packets = true;
    cfg.run.record_events = true;

    let key = |policy| CellKey {
        policy,
        pattern: Pattern::Trace,
        pir: 0.0,
    };
    let coarse = run(&cfg, key(Policy::TootCoarse));
    let fine = run(&cfg, key(Policy::CafeenFineOnly));
    let _ = std::fs::remove_file(&path);
    let (coarse, fine) = match (coarse, fine) {
        (Ok(c), Ok(f)) => (c, f),
        (c, f) => {
            return CriterionReport::finish(
                4,
                "wake_latency_masking",
                false,
                format!(
                    "runs failed: {:?} {:?}",
                    c.err().map(|e| e.to_string()),
                    f.err().map(|e| e.to_string())
                ),
                t0,
            )
        }
    };

    let shared = 4 * 8 + 4; // (4,4)
    let ejects = |out: &crate::RunOutput| -> Vec<(usize, u64)> {
        let mut v: Vec<(usize, u64)> = out
            .packets
            .as_ref()
            .unwrap()
            .iter()
            .map(|p| (p.src, p.eject_cycle))
            .collect();
        v.sort();
        v
    };
    let wakes_at = |out: &crate::RunOutput, kind: &str| {
        out.events
            .as_ref()
            .unwrap()
            .iter()
            .filter(|e| e.kind == kind && e.router == shared)
            .count()
    };

    let coarse_ejects = ejects(&coarse);
    let fine_ejects = ejects(&fine);
    let coarse_ok = wakes_at(&coarse, "coarse_wake") == 1
        && coarse_ejects == vec![(4, 16), (32, 31), (39, 32)]
        && coarse.metrics.coarse_wakes == 3;
    let fine_ok = wakes_at(&fine, "fine_wake") == 3
        && fine_ejects == vec![(4, 11), (32, 20), (39, 20)]
        && fine.metrics.fine_wakes == 5;
    CriterionReport::finish(
        4,
        "wake_latency_masking",
        coarse_ok && fine_ok,
        format!(
            "coarse: 1 shared wake, ejects {coarse_ejects:?}; fine: 3 wakes, ejects {fine_ejects:?}"
        ),
        t0,
    )
}

fn energy_and_latency(
    cfg: &SimConfig,
    policy: Policy,
    pattern: Pattern,
    pir: f64,
) -> Result<(f64, f64), SimError> {
    let out = run(cfg, CellKey { policy, pattern, pir })?;
    Ok((out.metrics.energy.total, out.metrics.avg_latency))
}

/// Criterion 5: at near-idle uniform load (0.002, 100k packets) total
/// energy is strictly ordered NoPg > ConvXy > TootCoarse > CafeenFineOnly,
/// and mode switching leaves CafeenFull within 2% of CafeenFineOnly.
fn criterion_5() -> CriterionReport {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.traffic.total_packets = 100_000;
    cfg.run.max_cycles = 5_000_000;
    let mut values = Vec::new();
    for policy in Policy::ALL {
        match energy_and_latency(&cfg, policy, Pattern::UniformRandom, 0.002) {
            Ok((energy, _)) => values.push((policy, energy)),
            Err(e) => {
                return CriterionReport::finish(
                    5,
                    "energy_ordering_low_load",
                    false,
                    format!("{policy}: {e}"),
                    t0,
                )
            }
        }
    }
    let get = |p: Policy| values.iter().find(|(q, _)| *q == p).unwrap().1;
    let (no_pg, conv, toot, fine, full) = (
        get(Policy::NoPg),
        get(Policy::ConvXy),
        get(Policy::TootCoarse),
        get(Policy::CafeenFineOnly),
        get(Policy::CafeenFull),
    );
    let ordered = no_pg > conv && conv > toot && toot > fine;
    let full_close = (full - fine).abs() / fine <= 0.02;
    CriterionReport::finish(
        5,
        "energy_ordering_low_load",
        ordered && full_close,
        format!(
            "no_pg {no_pg:.0} > conv_xy {conv:.0} > toot {toot:.0} > fine_only {fine:.0}; full {full:.0} ({:+.2}% of fine_only)",
            (full - fine) / fine * 100.0
        ),
        t0,
    )
}

/// Criterion 6: at high patterned load (transpose, 0.05) the adaptive
/// policy beats coarse-gated XY on total energy. Uniform random at 0.1 is
/// the documented exception: deterministic XY may win there, so that
/// comparison is recorded but never fails the criterion.
fn criterion_6() -> CriterionReport {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.traffic.total_packets = 100_000;
    cfg.run.max_cycles = 5_000_000;
    let full = energy_and_latency(&cfg, Policy::CafeenFull, Pattern::Transpose, 0.05);
    let toot = energy_and_latency(&cfg, Policy::TootCoarse, Pattern::Transpose, 0.05);
    let (full, toot) = match (full, toot) {
        (Ok((f, _)), Ok((t, _))) => (f, t),
        (f, t) => {
            return CriterionReport::finish(
                6,
                "high_load_adaptive_benefit",
                false,
                format!(
                    "runs failed: {:?} {:?}",
                    f.err().map(|e| e.to_string()),
                    t.err().map(|e| e.to_string())
                ),
                t0,
            )
        }
    };
    let adaptive_wins = full < toot;

    let full_u = energy_and_latency(&cfg, Policy::CafeenFull, Pattern::UniformRandom, 0.1);
    let toot_u = energy_and_latency(&cfg, Policy::TootCoarse, Pattern::UniformRandom, 0.1);
    let exception_note = match (full_u, toot_u) {
        (Ok((f, _)), Ok((t, _))) => format!(
            "uniform@0.1: toot {t:.0} vs full {f:.0} ({})",
            if t <= f {
                "deterministic XY ahead, as permitted"
            } else {
                "adaptive ahead"
            }
        ),
        _ => "uniform@0.1 exception runs failed".to_string(),
    };
    CriterionReport::finish(
        6,
        "high_load_adaptive_benefit",
        adaptive_wins,
        format!("transpose@0.05: full {full:.0} < toot {toot:.0}; {exception_note}"),
        t0,
    )
}

/// Criterion 7: every policy and pattern at saturating injection (0.2) for
/// 200k cycles; the watchdog must stay quiet. Structural invariants assert
/// every cycle in debug builds.
fn criterion_7() -> CriterionReport {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.run.mode = RunMode::Cycles;
    cfg.run.max_cycles = 200_000;
    let mut runs = 0;
    for policy in Policy::ALL {
        for pattern in [
            Pattern::UniformRandom,
            Pattern::Transpose,
            Pattern::BitReversal,
            Pattern::Shuffle,
        ] {
            match run(
                &cfg,
                CellKey {
                    policy,
                    pattern,
                    pir: 0.2,
                },
            ) {
                Ok(_) => runs += 1,
                Err(e) => {
                    return CriterionReport::finish(
                        7,
                        "deadlock_freedom",
                        false,
                        format!("{policy}/{}: {e}", pattern.name()),
                        t0,
                    )
                }
            }
        }
    }
    CriterionReport::finish(
        7,
        "deadlock_freedom",
        runs == 20,
        format!("{runs}/20 saturated runs completed without the watchdog firing"),
        t0,
    )
}

/// Criterion 8: repeating a run with the same seed reproduces the entire
/// serialized output byte for byte.
fn criterion_8() -> CriterionReport {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.traffic.total_packets = 10_000;
    cfg.run.max_cycles = 1_000_000;
    let key = CellKey {
        policy: Policy::CafeenFull,
        pattern: Pattern::Transpose,
        pir: 0.05,
    };
    let once = run(&cfg, key)
        .and_then(|o| serde_json::to_string(&o).map_err(|e| SimError::Internal(e.to_string())));
    let twice = run(&cfg, key)
        .and_then(|o| serde_json::to_string(&o).map_err(|e| SimError::Internal(e.to_string())));
    match (once, twice) {
        (Ok(a), Ok(b)) => CriterionReport::finish(
            8,
            "determinism",
            a == b,
            format!("{} bytes of serialized output compared", a.len()),
            t0,
        ),
        (a, b) => CriterionReport::finish(
            8,
            "determinism",
            false,
            format!(
                "runs failed: {:?} {:?}",
                a.err().map(|e| e.to_string()),
                b.err().map(|e| e.to_string())
            ),
            t0,
        ),
    }
}

/// Criterion 9: at light transpose load the gated policies cost at most
/// 25% extra average latency over the ungated baseline.
fn criterion_9() -> CriterionReport {
    let t0 = Instant::now();
    let mut cfg = SimConfig::default();
    cfg.traffic.total_packets = 20_000;
    cfg.run.max_cycles = 5_000_000;
    let mut lat = Vec::new();
    for policy in [Policy::NoPg, Policy::CafeenFineOnly, Policy::CafeenFull] {
        match energy_and_latency(&cfg, policy, Pattern::Transpose, 0.005) {
            Ok((_, latency)) => lat.push(latency),
            Err(e) => {
                return CriterionReport::finish(
                    9,
                    "latency_sanity",
                    false,
                    format!("{policy}: {e}"),
                    t0,
                )
            }
        }
    }
    let (base, fine, full) = (lat[0], lat[1], lat[2]);
    let passed = fine <= 1.25 * base && full <= 1.25 * base;
    CriterionReport::finish(
        9,
        "latency_sanity",
        passed,
        format!(
            "no_pg {base:.1} cycles; fine_only {fine:.1} ({:.2}x); full {full:.1} ({:.2}x)",
            fine / base,
            full / base
        ),
        t0,
    )
}

/// Criterion 10: the value table is linear in mesh size — exactly R + C
/// states with two actions each, 16 states on an 8x8 mesh.
fn criterion_10() -> CriterionReport {
    let t0 = Instant::now();
    let mut ok = true;
    let mut details = String::new();
    for (rows, cols) in [(8usize, 8usize), (4, 4), (4, 6), (16, 8)] {
        let q = QTable::new(rows, cols, false);
        let states = q.state_count();
        let actions = q.actions_per_state();
        let entries = q.entries().count();
        if states != rows + cols || actions != 2 || entries != 2 * (rows + cols) {
            ok = false;
        }
        let _ = write!(details, "{rows}x{cols}: {states} states x {actions}; ");
    }
    CriterionReport::finish(10, "state_space_bound", ok, details, t0)
}
