//! Cycle-level structural invariants, checked in debug builds after every
//! cycle: credit conservation, wormhole integrity, power/occupancy
//! consistency and flit conservation.

use crate::router::PORTS;
use crate::topology::Dir;

use super::Sim;

pub fn check(sim: &Sim) {
    let vcs = sim.cfg.router.vcs_per_port;
    let depth = sim.cfg.router.flits_per_vc as usize;

    for r in 0..sim.routers.len() {
        let router = &sim.routers[r];
        // Credit conservation: sender-side credits plus downstream occupancy
        // equals the buffer depth, for every (link, VC).
        for out in Dir::MESH {
            if let Some(nb) = sim.neighbor(r, out) {
                for vc in 0..vcs {
                    let credits = router.credits[out.index() * vcs + vc] as usize;
                    let occupancy = sim.routers[nb].buf(out.opposite(), vc).fifo.len();
                    assert_eq!(
                        credits + occupancy,
                        depth,
                        "credit conservation broken at router {} out {} vc {}",
                        router.coord,
                        out,
                        vc
                    );
                }
            }
        }
        for vc in 0..vcs {
            let credits = sim.nodes[r].inj_credits[vc] as usize;
            let occupancy = router.buf(Dir::Local, vc).fifo.len();
            assert_eq!(
                credits + occupancy,
                depth,
                "injection credit conservation broken at {}",
                router.coord
            );
        }

        for port in 0..PORTS {
            let mut occupied_port = false;
            for vc in 0..vcs {
                let fifo = &router.bufs[port * vcs + vc].fifo;
                occupied_port |= !fifo.is_empty();
                // Wormhole integrity: flits in a VC FIFO belong to whole
                // packets in order; a packet switch only happens after a
                // tail.
                for pair in fifo.windows(2) {
                    if pair[0].packet == pair[1].packet {
                        assert_eq!(
                            pair[0].index + 1,
                            pair[1].index,
                            "flit order broken at {}",
                            router.coord
                        );
                    } else {
                        assert!(
                            pair[0].is_tail && pair[1].is_head(),
                            "packets interleaved on one VC at {}",
                            router.coord
                        );
                    }
                }
            }
            // Occupied storage is never gated.
            if occupied_port && sim.policy.gated() {
                assert!(
                    sim.power[r].draws_static(sim.policy, Dir::from_index(port)),
                    "occupied buffer gated at {} port {}",
                    router.coord,
                    Dir::from_index(port)
                );
            }
        }
    }

    // Flit conservation: everything emitted is either still in the network
    // or ejected, and the per-router occupancy counters agree with the
    // structures they summarize.
    assert_eq!(
        sim.flits_in_network(),
        sim.flits_emitted - sim.flits_ejected,
        "flit conservation broken"
    );
    for router in sim.routers.iter() {
        let actual = router.bufs.iter().map(|b| b.fifo.len()).sum::<usize>()
            + router.latches.iter().flatten().count();
        assert_eq!(
            router.flit_count as usize, actual,
            "stale flit counter at {}",
            router.coord
        );
    }
}
