//! Read/write phases of one cycle: arbitration and flit movement.
//!
//! The read phase collects movement candidates from buffers, bypass latches
//! and source queues, grants one switch traversal per output port
//! (round-robin, one buffer read per input port) and one bypass forward per
//! otherwise-idle output port, then resolves which granted flits actually
//! move with a monotone fixpoint: a flit may move into a slot that another
//! moving flit frees in the same cycle, so wormholes advance as chains.
//! Buffered traffic always beats bypass traffic for an output channel.
//!
//! The write phase commits the moves: FIFO pops and pushes, credit and
//! ownership updates, ejections, turn bookkeeping, energy events, and wake
//! requests for every head flit left stalled against an unpowered buffer.

use crate::energy::EnergyEvent;
use crate::error::SimError;
use crate::powergate::{PgEvent, PgMode};
use crate::router::{class_vc_range, Flit, PORTS};
use crate::topology::{classify_at, next_dir, Dir, HopKind};
use crate::traffic::Pattern;

use super::Sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Buf { port: Dir, vc: usize },
    Latch { port: Dir, vc: usize },
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Eject,
    RemoteBuf { nb: usize, port: Dir, vc: usize },
    RemoteLatch { nb: usize, port: Dir, vc: usize },
    LocalBuf { vc: usize },
    LocalLatch { vc: usize },
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    router: usize,
    from: Source,
    out: Dir,
    vc: usize,
    flit: Flit,
    target: Target,
    /// Packet classification at the router whose buffer the move needs;
    /// `None` when the target is a latch or ejection sink.
    wake_kind: Option<HopKind>,
}

/// Reusable per-cycle working memory; allocation-free in steady state.
#[derive(Debug, Default)]
pub(super) struct Scratch {
    cands: Vec<Cand>,
    /// Switch-traversal request chains, indexed `router * PORTS + out`;
    /// -1 terminates. Entries link candidate indices.
    st_head: Vec<i32>,
    by_head: Vec<i32>,
    req_next: Vec<i32>,
    st_grant: Vec<[Option<usize>; PORTS]>,
    bypass_grant: Vec<[Option<usize>; PORTS]>,
    queue_cands: Vec<usize>,
    moved: Vec<bool>,
    buf_freeing: Vec<bool>,
    latch_vacating: Vec<bool>,
    latch_claimed: Vec<bool>,
}

/// Phases 4 and 5 for one cycle.
pub(super) fn resolve_cycle(sim: &mut Sim, cycle: u64) -> Result<(), SimError> {
    let mut scratch = std::mem::take(&mut sim.scratch);
    commit_pending_routes(sim, cycle);
    collect(sim, cycle, &mut scratch.cands)?;
    grant(sim, &mut scratch);
    fixpoint(sim, &mut scratch);
    commit(sim, cycle, &scratch.cands, &scratch.moved)?;
    wake_scan(sim, cycle, &scratch.cands, &scratch.moved);
    sim.scratch = scratch;
    Ok(())
}

/// Commit the route action and VC of every queue-front packet on its first
/// injection attempt. Agents are consulted here, after this cycle's reward
/// deliveries, so fresh Q-values steer the choice.
fn commit_pending_routes(sim: &mut Sim, cycle: u64) {
    let partitioned = sim.policy.partitioned_vcs();
    let vcs = sim.cfg.router.vcs_per_port;
    let epsilon = sim.cfg.marl.epsilon;
    for r in 0..sim.nodes.len() {
        let Some(&pid) = sim.nodes[r].queue.front() else {
            continue;
        };
        let info = &sim.packets[pid as usize];
        if info.committed || cycle < info.inject_cycle + 1 {
            continue;
        }
        let (src, dst) = (info.src, info.dst);
        let action = if sim.policy.uses_marl() && sim.power[r].mode == PgMode::Coarse {
            crate::marl::select_action(&sim.qtables[r], src, dst, epsilon, &mut sim.agent_rngs[r])
        } else {
            crate::topology::RouteAction::Xy
        };
        let range = class_vc_range(action, vcs, partitioned);
        let vc = range.start + sim.nodes[r].vc_rr % range.len();
        sim.nodes[r].vc_rr = sim.nodes[r].vc_rr.wrapping_add(1);
        let info = &mut sim.packets[pid as usize];
        info.action = action;
        info.vc = vc as u8;
        info.committed = true;
    }
}

/// Where a flit leaving `router` through `out` lands, given the packet's
/// interaction with the next router.
fn downstream_target(
    sim: &Sim,
    router: usize,
    out: Dir,
    vc: usize,
    packet: u32,
) -> Result<(Target, Option<HopKind>), SimError> {
    if out == Dir::Local {
        return Ok((Target::Eject, None));
    }
    let nb = sim
        .neighbor(router, out)
        .ok_or_else(|| SimError::Internal(format!("route leaves the mesh at router {router}")))?;
    let info = &sim.packets[packet as usize];
    let kind = classify_at(info.src, info.dst, info.action, sim.routers[nb].coord)?;
    let port = out.opposite();
    if kind == HopKind::Straight && sim.policy.has_bypass() {
        Ok((Target::RemoteLatch { nb, port, vc }, None))
    } else {
        Ok((Target::RemoteBuf { nb, port, vc }, Some(kind)))
    }
}

fn collect(sim: &Sim, cycle: u64, cands: &mut Vec<Cand>) -> Result<(), SimError> {
    cands.clear();
    let vcs = sim.cfg.router.vcs_per_port;
    let depth = sim.cfg.router.pipeline_depth;
    let bypass_latency = sim.cfg.router.bypass_latency;
    for r in 0..sim.routers.len() {
        let router = &sim.routers[r];
        let coord = router.coord;
        if router.flit_count == 0 {
            queue_candidate(sim, r, cycle, cands);
            continue;
        }
        for port_idx in 0..PORTS {
            let port = Dir::from_index(port_idx);
            for vc in 0..vcs {
                let slot = port_idx * vcs + vc;
                // Buffered head: needs its pipeline powered and the wormhole
                // channel free (heads) or owned by itself (bodies).
                if let Some(front) = router.bufs[slot].fifo.first() {
                    let ready = if front.is_head() {
                        cycle >= front.arrival + depth
                    } else {
                        cycle >= front.arrival + 1
                    };
                    if ready && sim.power[r].buffer_active(sim.policy, port) {
                        let info = &sim.packets[front.packet as usize];
                        let out = next_dir(info.dst, info.action, coord);
                        let ch = out.index() * vcs + vc;
                        // Mesh channels are owned head-to-tail; the local
                        // port is not (the PE reassembles packets, so
                        // ejections may interleave across input ports).
                        let owner_ok = out == Dir::Local
                            || if front.is_head() {
                                router.owner[ch].is_none()
                            } else {
                                router.owner[ch] == Some(front.packet)
                            };
                        if owner_ok {
                            let (target, wake_kind) =
                                downstream_target(sim, r, out, vc, front.packet)?;
                            cands.push(Cand {
                                router: r,
                                from: Source::Buf { port, vc },
                                out,
                                vc,
                                flit: *front,
                                target,
                                wake_kind,
                            });
                        }
                    }
                }
                // Latched straight flit: forwards over the bypass wire.
                if let Some(flit) = &router.latches[slot] {
                    debug_assert!(sim.policy.has_bypass());
                    if cycle >= flit.arrival + bypass_latency {
                        let info = &sim.packets[flit.packet as usize];
                        let out = next_dir(info.dst, info.action, coord);
                        debug_assert_ne!(out, Dir::Local, "latched flit cannot eject");
                        let ch = out.index() * vcs + vc;
                        let owner_ok = if flit.is_head() {
                            router.owner[ch].is_none()
                        } else {
                            router.owner[ch] == Some(flit.packet)
                        };
                        if owner_ok {
                            let (target, wake_kind) =
                                downstream_target(sim, r, out, vc, flit.packet)?;
                            cands.push(Cand {
                                router: r,
                                from: Source::Latch { port, vc },
                                out,
                                vc,
                                flit: *flit,
                                target,
                                wake_kind,
                            });
                        }
                    }
                }
            }
        }
        queue_candidate(sim, r, cycle, cands);
    }
    Ok(())
}

/// Source queue: one flit per node per cycle through the local port.
fn queue_candidate(sim: &Sim, r: usize, cycle: u64, cands: &mut Vec<Cand>) {
    let node = &sim.nodes[r];
    if let Some(&pid) = node.queue.front() {
        let info = &sim.packets[pid as usize];
        if info.committed && cycle >= info.inject_cycle + 1 {
            let index = node.emitted;
            let flit = Flit {
                packet: pid,
                index,
                is_tail: index as usize == info.len as usize - 1,
                arrival: info.inject_cycle,
            };
            let vc = info.vc as usize;
            let (target, wake_kind) = if sim.policy.has_bypass() {
                (Target::LocalLatch { vc }, None)
            } else {
                // Buffered injection wakes the local input buffer; the
                // packet is straight at its source.
                (Target::LocalBuf { vc }, Some(HopKind::Straight))
            };
            cands.push(Cand {
                router: r,
                from: Source::Queue,
                out: Dir::Local,
                vc,
                flit,
                target,
                wake_kind,
            });
        }
    }
}

fn source_slot(cand: &Cand, vcs: usize) -> usize {
    match cand.from {
        Source::Buf { port, vc } | Source::Latch { port, vc } => port.index() * vcs + vc,
        Source::Queue => 0,
    }
}

/// Switch allocation and bypass arbitration: one winner per (router,
/// output) from each class, round-robin over source slots. Queue candidates
/// bypass arbitration — the PE-router port is dedicated.
fn grant(sim: &mut Sim, scratch: &mut Scratch) {
    let n = sim.routers.len();
    let vcs = sim.cfg.router.vcs_per_port;
    let slots = PORTS * vcs;

    scratch.st_head.clear();
    scratch.st_head.resize(n * PORTS, -1);
    scratch.by_head.clear();
    scratch.by_head.resize(n * PORTS, -1);
    scratch.req_next.clear();
    scratch.req_next.resize(scratch.cands.len(), -1);
    scratch.st_grant.clear();
    scratch.st_grant.resize(n, [None; PORTS]);
    scratch.bypass_grant.clear();
    scratch.bypass_grant.resize(n, [None; PORTS]);
    scratch.queue_cands.clear();

    let mut touched: Vec<usize> = Vec::with_capacity(scratch.cands.len());
    for (i, cand) in scratch.cands.iter().enumerate() {
        let key = cand.router * PORTS + cand.out.index();
        match cand.from {
            Source::Buf { .. } => {
                scratch.req_next[i] = scratch.st_head[key];
                scratch.st_head[key] = i as i32;
                touched.push(key);
            }
            Source::Latch { .. } => {
                scratch.req_next[i] = scratch.by_head[key];
                scratch.by_head[key] = i as i32;
                touched.push(key);
            }
            Source::Queue => scratch.queue_cands.push(i),
        }
    }

    let cands = &scratch.cands;
    let pick = |head: i32, pointer: usize| -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        let mut m = head;
        while m >= 0 {
            let i = m as usize;
            let dist = (source_slot(&cands[i], vcs) + slots - pointer) % slots;
            if best.map(|(d, _)| dist < d).unwrap_or(true) {
                best = Some((dist, i));
            }
            m = scratch.req_next[i];
        }
        best.map(|(_, i)| i)
    };

    for key in touched {
        let (r, out) = (key / PORTS, key % PORTS);
        if scratch.st_grant[r][out].is_none() && scratch.st_head[key] >= 0 {
            let pointer = sim.routers[r].rr_sa[out];
            let w = pick(scratch.st_head[key], pointer).expect("nonempty chain");
            scratch.st_grant[r][out] = Some(w);
            sim.routers[r].rr_sa[out] = (source_slot(&cands[w], vcs) + 1) % slots;
        }
        // Bypass arbitration runs on every port; whether the winner may
        // transmit depends on the switch grant actually moving.
        if scratch.bypass_grant[r][out].is_none() && scratch.by_head[key] >= 0 {
            let pointer = sim.routers[r].rr_bypass[out];
            let w = pick(scratch.by_head[key], pointer).expect("nonempty chain");
            scratch.bypass_grant[r][out] = Some(w);
            sim.routers[r].rr_bypass[out] = (source_slot(&cands[w], vcs) + 1) % slots;
        }
    }
}

/// Monotone relaxation: starting from "nobody moves", repeatedly admit
/// granted flits whose destination slot is free now or freed by another
/// admitted move, until stable.
fn fixpoint(sim: &Sim, scratch: &mut Scratch) {
    let n = sim.routers.len();
    let vcs = sim.cfg.router.vcs_per_port;
    let global = |r: usize, port: Dir, vc: usize| (r * PORTS + port.index()) * vcs + vc;

    let cands = &scratch.cands;
    let st = &scratch.st_grant;
    let bypass = &scratch.bypass_grant;
    let queue_cands = &scratch.queue_cands;

    scratch.moved.clear();
    scratch.moved.resize(cands.len(), false);
    let moved = &mut scratch.moved;
    for v in [
        &mut scratch.buf_freeing,
        &mut scratch.latch_vacating,
        &mut scratch.latch_claimed,
    ] {
        v.clear();
        v.resize(n * PORTS * vcs, false);
    }
    let buf_freeing = &mut scratch.buf_freeing;
    let latch_vacating = &mut scratch.latch_vacating;
    let latch_claimed = &mut scratch.latch_claimed;

    let admissible = |cand: &Cand,
                      buf_freeing: &[bool],
                      latch_vacating: &[bool],
                      latch_claimed: &[bool]| match cand.target {
        Target::Eject => true,
        Target::RemoteBuf { nb, port, vc } => {
            if !sim.power[nb].buffer_active(sim.policy, port) {
                return false;
            }
            let credit = sim.routers[cand.router].credits[cand.out.index() * vcs + vc];
            credit > 0 || buf_freeing[global(nb, port, vc)]
        }
        Target::RemoteLatch { nb, port, vc } => {
            let g = global(nb, port, vc);
            if latch_claimed[g] {
                return false;
            }
            match &sim.routers[nb].latches[port.index() * vcs + vc] {
                None => true,
                Some(_) => latch_vacating[g],
            }
        }
        Target::LocalBuf { vc } => {
            if !sim.power[cand.router].buffer_active(sim.policy, Dir::Local) {
                return false;
            }
            sim.nodes[cand.router].inj_credits[vc] > 0
                || buf_freeing[global(cand.router, Dir::Local, vc)]
        }
        Target::LocalLatch { vc } => {
            let g = global(cand.router, Dir::Local, vc);
            if latch_claimed[g] {
                return false;
            }
            match &sim.routers[cand.router].latches[Dir::Local.index() * vcs + vc] {
                None => true,
                Some(_) => latch_vacating[g],
            }
        }
    };

    fn try_move(
        i: usize,
        cands: &[Cand],
        admissible: &dyn Fn(&Cand, &[bool], &[bool], &[bool]) -> bool,
        moved: &mut [bool],
        buf_freeing: &mut [bool],
        latch_vacating: &mut [bool],
        latch_claimed: &mut [bool],
        global: &dyn Fn(usize, Dir, usize) -> usize,
    ) -> bool {
        if moved[i] {
            return false;
        }
        let cand = &cands[i];
        if !admissible(cand, buf_freeing, latch_vacating, latch_claimed) {
            return false;
        }
        moved[i] = true;
        match cand.from {
            Source::Buf { port, vc } => {
                buf_freeing[global(cand.router, port, vc)] = true;
            }
            Source::Latch { port, vc } => {
                latch_vacating[global(cand.router, port, vc)] = true;
            }
            Source::Queue => {}
        }
        match cand.target {
            Target::RemoteLatch { nb, port, vc } => {
                latch_claimed[global(nb, port, vc)] = true;
            }
            Target::LocalLatch { vc } => {
                latch_claimed[global(cand.router, Dir::Local, vc)] = true;
            }
            _ => {}
        }
        true
    }

    // Round 1: switch traversals (buffered traffic has channel priority)
    // plus injections.
    loop {
        let mut progress = false;
        for r in 0..n {
            for out in 0..PORTS {
                if let Some(i) = st[r][out] {
                    progress |= try_move(
                        i,
                        cands,
                        &admissible,
                        moved,
                        buf_freeing,
                        latch_vacating,
                        latch_claimed,
                        &global,
                    );
                }
            }
        }
        for &i in queue_cands {
            progress |= try_move(
                i,
                cands,
                &admissible,
                moved,
                buf_freeing,
                latch_vacating,
                latch_claimed,
                &global,
            );
        }
        if !progress {
            break;
        }
    }

    // Round 2: bypass forwards take any output channel whose switch grant
    // went unused this cycle. A grant that cannot transmit does not hold
    // the wire idle, which keeps latch chains draining behind stalled
    // buffered traffic.
    loop {
        let mut progress = false;
        for r in 0..n {
            for out in 0..PORTS {
                let st_used = st[r][out].map(|i| moved[i]).unwrap_or(false);
                if st_used {
                    continue;
                }
                if let Some(i) = bypass[r][out] {
                    progress |= try_move(
                        i,
                        cands,
                        &admissible,
                        moved,
                        buf_freeing,
                        latch_vacating,
                        latch_claimed,
                        &global,
                    );
                }
            }
        }
        for &i in queue_cands {
            progress |= try_move(
                i,
                cands,
                &admissible,
                moved,
                buf_freeing,
                latch_vacating,
                latch_claimed,
                &global,
            );
        }
        if !progress {
            break;
        }
    }
}

fn commit(sim: &mut Sim, cycle: u64, cands: &[Cand], moved: &[bool]) -> Result<(), SimError> {
    let vcs = sim.cfg.router.vcs_per_port;
    let coeffs = sim.cfg.energy.clone();
    let count_ejects = sim.cfg.marl.count_ejects_as_turns;
    let marl_on = sim.policy.uses_marl();

    // First pass: pops, credit returns and ownership. All slots freed this
    // cycle must be credited back before any landing consumes them,
    // otherwise a chained advance would transiently drive a counter below
    // zero.
    for (i, cand) in cands.iter().enumerate() {
        if !moved[i] {
            continue;
        }
        let r = cand.router;
        let flit = cand.flit;
        match cand.from {
            Source::Buf { port, vc } => {
                sim.routers[r].flit_count -= 1;
                let popped = sim.routers[r].buf_mut(port, vc).pop();
                debug_assert_eq!(popped.packet, flit.packet);
                debug_assert_eq!(popped.index, flit.index);
                // The freed slot's credit goes back to whoever feeds this
                // buffer.
                if port == Dir::Local {
                    sim.nodes[r].inj_credits[vc] += 1;
                } else if let Some(up) = sim.neighbor(r, port) {
                    let ch = port.opposite().index() * vcs + vc;
                    sim.routers[up].credits[ch] += 1;
                }
                sim.ledger.charge_event(&coeffs, r, EnergyEvent::BufferRead);
                sim.ledger
                    .charge_event(&coeffs, r, EnergyEvent::CrossbarTraversal);
                if cand.out != Dir::Local {
                    sim.ledger.charge_event(&coeffs, r, EnergyEvent::LinkTraversal);
                }
            }
            Source::Latch { port, vc } => {
                sim.routers[r].flit_count -= 1;
                let slot = port.index() * vcs + vc;
                debug_assert!(sim.routers[r].latches[slot].is_some());
                sim.routers[r].latches[slot] = None;
            }
            Source::Queue => {
                let node = &mut sim.nodes[r];
                node.emitted += 1;
                sim.flits_emitted += 1;
                if flit.is_tail {
                    node.queue.pop_front();
                    node.emitted = 0;
                }
            }
        }

        // Wormhole ownership of mesh output channels, head to tail.
        if matches!(
            cand.target,
            Target::RemoteBuf { .. } | Target::RemoteLatch { .. }
        ) {
            let ch = cand.out.index() * vcs + cand.vc;
            if flit.is_head() && !flit.is_tail {
                sim.routers[r].owner[ch] = Some(flit.packet);
            } else if flit.is_tail {
                sim.routers[r].owner[ch] = None;
            }
        }
    }

    // Second pass: land every moved flit.
    for (i, cand) in cands.iter().enumerate() {
        if !moved[i] {
            continue;
        }
        let r = cand.router;
        let mut flit = cand.flit;

        // Switch traversals spend the next cycle on the link; bypass and
        // injection moves land within this cycle.
        let via_link = matches!(cand.from, Source::Buf { .. });
        match cand.target {
            Target::Eject => {
                let info = &mut sim.packets[flit.packet as usize];
                info.flits_ejected += 1;
                sim.flits_ejected += 1;
                sim.stats.flits_ejected += 1;
                if flit.is_tail {
                    sim.ejected += 1;
                    let latency = cycle - info.inject_cycle;
                    debug_assert!(
                        latency
                            >= (info.src.row.abs_diff(info.dst.row)
                                + info.src.col.abs_diff(info.dst.col)) as u64
                    );
                    if info.inject_cycle >= sim.cfg.run.warmup_cycles {
                        sim.stats.latencies.push(latency);
                    }
                    let record = sim.packet_records.is_some();
                    if record {
                        let rec = super::PacketRecord {
                            id: flit.packet as u64,
                            src: sim.mesh.flat(info.src),
                            dst: sim.mesh.flat(info.dst),
                            action: info.action,
                            length: info.len as usize,
                            inject_cycle: info.inject_cycle,
                            eject_cycle: cycle,
                        };
                        sim.packet_records.as_mut().unwrap().push(rec);
                    }
                }
            }
            Target::RemoteBuf { nb, port, vc } => {
                flit.arrival = cycle + u64::from(via_link);
                sim.routers[nb].flit_count += 1;
                sim.routers[nb].buf_mut(port, vc).push(flit);
                let ch = cand.out.index() * vcs + vc;
                debug_assert!(sim.routers[r].credits[ch] > 0);
                sim.routers[r].credits[ch] -= 1;
                sim.ledger.charge_event(&coeffs, nb, EnergyEvent::BufferWrite);
            }
            Target::RemoteLatch { nb, port, vc } => {
                flit.arrival = cycle + u64::from(via_link);
                sim.routers[nb].flit_count += 1;
                let slot = port.index() * vcs + vc;
                debug_assert!(sim.routers[nb].latches[slot].is_none());
                sim.routers[nb].latches[slot] = Some(flit);
                sim.ledger
                    .charge_event(&coeffs, nb, EnergyEvent::BypassTraversal);
            }
            Target::LocalBuf { vc } => {
                flit.arrival = cycle;
                sim.routers[r].flit_count += 1;
                sim.routers[r].buf_mut(Dir::Local, vc).push(flit);
                debug_assert!(sim.nodes[r].inj_credits[vc] > 0);
                sim.nodes[r].inj_credits[vc] -= 1;
                sim.ledger.charge_event(&coeffs, r, EnergyEvent::BufferWrite);
            }
            Target::LocalLatch { vc } => {
                flit.arrival = cycle;
                sim.routers[r].flit_count += 1;
                let slot = Dir::Local.index() * vcs + vc;
                debug_assert!(sim.routers[r].latches[slot].is_none());
                sim.routers[r].latches[slot] = Some(flit);
                sim.ledger
                    .charge_event(&coeffs, r, EnergyEvent::BypassTraversal);
            }
        }

        // Turn bookkeeping for reward epochs.
        if marl_on && flit.is_head() {
            let info = &sim.packets[flit.packet as usize];
            match classify_at(info.src, info.dst, info.action, sim.routers[r].coord)? {
                HopKind::Turning => sim.turn_events[r] += 1,
                HopKind::Ejecting if count_ejects => sim.turn_events[r] += 1,
                _ => {}
            }
        }

        sim.last_move_cycle = cycle;
    }
    Ok(())
}

/// Every head flit still stalled against a gated or waking buffer raises a
/// wake request at that buffer's router. Requests are per (router, port)
/// per cycle; the first against a gated unit starts the wake transition.
fn wake_scan(sim: &mut Sim, cycle: u64, cands: &[Cand], moved: &[bool]) {
    if !sim.policy.gated() {
        return;
    }
    // (router, port, kind) for blocked buffer-bound flits, deduped by port.
    let mut blocked: Vec<(usize, Dir, HopKind)> = Vec::new();
    for (i, cand) in cands.iter().enumerate() {
        if moved[i] {
            continue;
        }
        let Some(kind) = cand.wake_kind else { continue };
        let (router, port) = match cand.target {
            Target::RemoteBuf { nb, port, .. } => (nb, port),
            Target::LocalBuf { .. } => (cand.router, Dir::Local),
            _ => continue,
        };
        if sim.power[router].buffer_active(sim.policy, port) {
            continue; // stalled on credits or arbitration, not power
        }
        blocked.push((router, port, kind));
    }

    let mut started: Vec<(usize, bool)> = Vec::new(); // (router, coarse transition)
    let mut seen_ports: Vec<(usize, Dir)> = Vec::new();
    for &(router, port, _) in &blocked {
        if seen_ports.contains(&(router, port)) {
            continue;
        }
        seen_ports.push((router, port));
        if let Some(ctl) = sim.power[router].ctl.as_mut() {
            ctl.record_wake_request(cycle, port);
        }
        let power = &mut sim.power[router];
        match power.mode {
            PgMode::Fine => {
                if power.fine[port.index()].request_wake() == Some(PgEvent::WakeStarted) {
                    sim.stats.fine_wakes += 1;
                    sim.ledger
                        .charge_event(&sim.cfg.energy, router, EnergyEvent::WakeBuffer);
                    sim.record_event(cycle, router, "fine_wake");
                }
            }
            PgMode::Coarse => {
                if power.coarse.request_wake() == Some(PgEvent::WakeStarted) {
                    sim.stats.coarse_wakes += 1;
                    sim.ledger
                        .charge_event(&sim.cfg.energy, router, EnergyEvent::WakeRouter);
                    sim.record_event(cycle, router, "coarse_wake");
                    started.push((router, true));
                }
            }
        }
    }

    // A coarse wake transition opens a reward epoch when any of the packets
    // that hit the gated router this cycle qualifies.
    if sim.policy.uses_marl() {
        for (router, _) in started {
            let mut best: Option<HopKind> = None;
            for &(rb, _, kind) in &blocked {
                if rb != router {
                    continue;
                }
                best = Some(match (best, kind) {
                    (Some(HopKind::Turning), _) | (_, HopKind::Turning) => HopKind::Turning,
                    (Some(HopKind::Ejecting), _) | (_, HopKind::Ejecting) => HopKind::Ejecting,
                    _ => HopKind::Straight,
                });
            }
            sim.wake_cause[router] = best;
        }
    }
}

impl Sim {
    /// Total flits currently resident in network structures; used by the
    /// invariant checks and tests.
    pub fn flits_in_network(&self) -> u64 {
        let mut count = 0u64;
        for router in &self.routers {
            for buf in &router.bufs {
                count += buf.fifo.len() as u64;
            }
            count += router.latches.iter().flatten().count() as u64;
        }
        count
    }

    /// True when the run key's pattern replays a trace.
    pub fn is_trace(&self) -> bool {
        self.key.pattern == Pattern::Trace
    }
}
