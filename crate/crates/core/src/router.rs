//! Wormhole router state: virtual-channel input buffers, per-VC bypass
//! latches, sender-side credits and channel ownership.
//!
//! Timing contract (all defaults, cycle granularity):
//! - A head flit written into a buffer at the end of cycle `t` may traverse
//!   the switch during `t + pipeline_depth` at the earliest (route
//!   computation, VC allocation, switch allocation, then traversal). Body
//!   flits inherit the head's route and may follow from `t + 1`, one per
//!   cycle, in order.
//! - Switch traversal during cycle `u` puts the flit on the link; it lands
//!   in the downstream structure at the end of `u + 1`.
//! - A flit latched into the bypass at the end of `t` is forwarded during
//!   `t + bypass_latency`; the bypass wire delivers within the same cycle,
//!   so a bypass hop costs exactly `bypass_latency` cycles end to end.
//!
//! Deadlock freedom: when a policy routes both XY and YX, the VC set is
//! split into two halves and each packet is pinned to a VC of its route
//! class for its whole lifetime. Each class then carries only
//! dimension-ordered traffic, whose channel-dependence graph is acyclic.
//! XY-only policies leave all VCs usable by every packet.

use crate::topology::{Coord, Dir, RouteAction};

/// Index into the engine's packet table.
pub type PacketId = u32;

/// One flit in flight. `arrival` is the cycle it landed in its current
/// structure (buffer slot, latch, or source queue).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flit {
    pub packet: PacketId,
    /// 0 is the head.
    pub index: u16,
    pub is_tail: bool,
    pub arrival: u64,
}

impl Flit {
    pub fn is_head(&self) -> bool {
        self.index == 0
    }
}

/// Deadlock-avoidance class a VC belongs to when partitioning is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcClass {
    ClassXy,
    ClassYx,
}

/// Class of VC `vc` under partitioning: the lower half serves XY packets,
/// the upper half YX.
pub fn vc_class(vc: usize, vcs_per_port: usize) -> VcClass {
    if vc < vcs_per_port / 2 {
        VcClass::ClassXy
    } else {
        VcClass::ClassYx
    }
}

/// The VC range a packet with `action` may use. With partitioning disabled
/// (XY-only policies) every VC is usable, so baselines keep full capacity.
pub fn class_vc_range(
    action: RouteAction,
    vcs_per_port: usize,
    partitioned: bool,
) -> std::ops::Range<usize> {
    if !partitioned {
        return 0..vcs_per_port;
    }
    match action {
        RouteAction::Xy => 0..vcs_per_port / 2,
        RouteAction::Yx => vcs_per_port / 2..vcs_per_port,
    }
}

/// One virtual-channel FIFO on an input port.
#[derive(Debug, Clone, Default)]
pub struct VcBuffer {
    pub fifo: Vec<Flit>,
    /// Set during commits when the buffer saw any push or pop this cycle;
    /// consumed by the power tick.
    pub busy_flag: bool,
}

impl VcBuffer {
    pub fn front(&self) -> Option<&Flit> {
        self.fifo.first()
    }

    pub fn push(&mut self, flit: Flit) {
        self.fifo.push(flit);
        self.busy_flag = true;
    }

    pub fn pop(&mut self) -> Flit {
        self.busy_flag = true;
        self.fifo.remove(0)
    }
}

pub const PORTS: usize = 5;

/// Full per-router state. Credits and ownership are sender-side views of
/// the downstream input buffer reached through each output port.
#[derive(Debug, Clone)]
pub struct RouterState {
    pub coord: Coord,
    pub vcs: usize,
    /// Input buffers, indexed `port * vcs + vc`.
    pub bufs: Vec<VcBuffer>,
    /// Bypass latches, one flit wide per VC per input port, always powered.
    pub latches: Vec<Option<Flit>>,
    /// Free slots in the downstream buffer per (output port, VC). The Local
    /// column backs ejection and stays untouched (the PE is a sink).
    pub credits: Vec<u8>,
    /// Wormhole ownership per (output port, VC): held by a packet from its
    /// head's first traversal until its tail passes. Covers both the regular
    /// link and the bypass wire, so packets never interleave on a VC.
    pub owner: Vec<Option<PacketId>>,
    /// Round-robin pointers for switch allocation, one per output port.
    pub rr_sa: [usize; PORTS],
    /// Round-robin pointers for bypass forwarding, one per output port.
    pub rr_bypass: [usize; PORTS],
    /// Flits resident in this router's buffers and latches; lets the
    /// movement engine skip idle routers.
    pub flit_count: u32,
}

impl RouterState {
    pub fn new(coord: Coord, vcs: usize, flits_per_vc: usize) -> Self {
        RouterState {
            coord,
            vcs,
            bufs: vec![VcBuffer::default(); PORTS * vcs],
            latches: vec![None; PORTS * vcs],
            credits: vec![flits_per_vc as u8; PORTS * vcs],
            owner: vec![None; PORTS * vcs],
            rr_sa: [0; PORTS],
            rr_bypass: [0; PORTS],
            flit_count: 0,
        }
    }

    #[inline]
    pub fn slot(&self, port: Dir, vc: usize) -> usize {
        port.index() * self.vcs + vc
    }

    pub fn buf(&self, port: Dir, vc: usize) -> &VcBuffer {
        &self.bufs[self.slot(port, vc)]
    }

    pub fn buf_mut(&mut self, port: Dir, vc: usize) -> &mut VcBuffer {
        let i = self.slot(port, vc);
        &mut self.bufs[i]
    }

    /// Any flit resident in any input buffer of `port`.
    pub fn port_occupied(&self, port: Dir) -> bool {
        let base = port.index() * self.vcs;
        self.bufs[base..base + self.vcs].iter().any(|b| !b.fifo.is_empty())
    }

    /// Any flit resident in any input buffer. Latch traffic does not count;
    /// straight packets crossing the bypass never hold a router awake.
    pub fn any_buf_occupied(&self) -> bool {
        self.bufs.iter().any(|b| !b.fifo.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vc_classes_split_in_half() {
        assert_eq!(vc_class(0, 4), VcClass::ClassXy);
        assert_eq!(vc_class(1, 4), VcClass::ClassXy);
        assert_eq!(vc_class(2, 4), VcClass::ClassYx);
        assert_eq!(vc_class(3, 4), VcClass::ClassYx);
    }

    #[test]
    fn partitioned_ranges() {
        assert_eq!(class_vc_range(RouteAction::Xy, 4, true), 0..2);
        assert_eq!(class_vc_range(RouteAction::Yx, 4, true), 2..4);
        // partitioning disabled: all four VCs usable
        assert_eq!(class_vc_range(RouteAction::Xy, 4, false), 0..4);
        assert_eq!(class_vc_range(RouteAction::Yx, 4, false), 0..4);
    }

    #[test]
    fn router_state_layout() {
        let r = RouterState::new(Coord::new(1, 2), 4, 4);
        assert_eq!(r.bufs.len(), 20);
        assert_eq!(r.latches.len(), 20);
        assert!(r.credits.iter().all(|&c| c == 4));
        assert!(!r.any_buf_occupied());
    }
}
