//! Packet generation: synthetic patterns and CSV trace replay.
//!
//! Injection is Bernoulli per node per cycle at the configured packet
//! injection rate. Bit-permutation patterns follow the usual interconnect
//! conventions on row-major flat ids: transpose swaps the high and low
//! halves of the address, bit-reversal mirrors it, shuffle rotates left by
//! one. Nodes whose pattern maps to themselves stay silent, which keeps the
//! patterns pure permutations.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::rng::{Rng, STREAM_TRAFFIC};
use crate::topology::{Coord, MeshConfig, RouteAction};

/// A multi-flit wormhole packet. The head flit carries the route metadata;
/// the tail flit closes the wormhole. The route action is committed when the
/// packet enters the network, not when it enters the source queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub src: Coord,
    pub dst: Coord,
    /// Flit count, at least 1.
    pub length: usize,
    /// Cycle the packet entered its source queue; latency counts from here.
    pub inject_cycle: u64,
    pub route_action: Option<RouteAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    UniformRandom,
    Transpose,
    BitReversal,
    Shuffle,
    Trace,
}

impl Pattern {
    /// Bit-permutation patterns only exist on power-of-two node counts.
    pub fn needs_power_of_two(self) -> bool {
        matches!(self, Pattern::Transpose | Pattern::BitReversal | Pattern::Shuffle)
    }

    pub fn name(self) -> &'static str {
        match self {
            Pattern::UniformRandom => "uniform_random",
            Pattern::Transpose => "transpose",
            Pattern::BitReversal => "bit_reversal",
            Pattern::Shuffle => "shuffle",
            Pattern::Trace => "trace",
        }
    }
}

/// Destination of `src_flat` under a bit-permutation pattern over `n_bits`
/// address bits. Returns `None` for fixed points (the node stays silent).
pub fn pattern_dest(src_flat: usize, pattern: Pattern, n_bits: u32) -> Option<usize> {
    debug_assert!(n_bits > 0 && src_flat < (1usize << n_bits));
    let x = src_flat;
    let mask = (1usize << n_bits) - 1;
    let dst = match pattern {
        Pattern::Transpose => {
            let half = n_bits / 2;
            let lo = x & ((1 << half) - 1);
            let hi = x >> half;
            (lo << half) | hi
        }
        Pattern::BitReversal => (x.reverse_bits() >> (usize::BITS - n_bits)) & mask,
        Pattern::Shuffle => ((x << 1) | (x >> (n_bits - 1))) & mask,
        Pattern::UniformRandom | Pattern::Trace => {
            panic!("pattern_dest is only defined for bit permutations")
        }
    };
    if dst == x {
        None
    } else {
        Some(dst)
    }
}

/// Per-run traffic parameters, resolved from the config sweep lists.
#[derive(Debug, Clone)]
pub struct TrafficSpec {
    pub pattern: Pattern,
    pub pir: f64,
    pub packet_length: usize,
    /// Injection stops once this many packets have been produced.
    pub packet_limit: u64,
    pub seed: u64,
}

pub enum TrafficSource {
    Synthetic(SyntheticTraffic),
    Trace(TraceTraffic),
}

impl TrafficSource {
    pub fn synthetic(mesh: MeshConfig, spec: TrafficSpec) -> Result<Self, SimError> {
        Ok(TrafficSource::Synthetic(SyntheticTraffic::new(mesh, spec)?))
    }

    pub fn from_trace(mesh: MeshConfig, path: &Path) -> Result<Self, SimError> {
        Ok(TrafficSource::Trace(TraceTraffic::load(mesh, path)?))
    }

    /// Append the packets every node injects this cycle. Returns how many
    /// were produced.
    pub fn next_injections(&mut self, cycle: u64, out: &mut Vec<Packet>) -> usize {
        match self {
            TrafficSource::Synthetic(s) => s.next_injections(cycle, out),
            TrafficSource::Trace(t) => t.next_injections(cycle, out),
        }
    }

    /// True once no further packet can ever be injected.
    pub fn exhausted(&self) -> bool {
        match self {
            TrafficSource::Synthetic(s) => {
                s.injected >= s.spec.packet_limit || s.spec.pir <= 0.0
            }
            TrafficSource::Trace(t) => t.next_row >= t.rows.len(),
        }
    }
}

pub struct SyntheticTraffic {
    mesh: MeshConfig,
    spec: TrafficSpec,
    rng: Rng,
    n_bits: u32,
    next_id: u64,
    injected: u64,
}

impl SyntheticTraffic {
    pub fn new(mesh: MeshConfig, spec: TrafficSpec) -> Result<Self, SimError> {
        let nodes = mesh.nodes();
        if spec.pattern.needs_power_of_two() && !nodes.is_power_of_two() {
            return Err(SimError::Validation(format!(
                "pattern {} requires a power-of-two node count, got {nodes}",
                spec.pattern.name()
            )));
        }
        let n_bits = nodes.trailing_zeros();
        let rng = Rng::stream(spec.seed, STREAM_TRAFFIC);
        Ok(SyntheticTraffic {
            mesh,
            spec,
            rng,
            n_bits,
            next_id: 0,
            injected: 0,
        })
    }

    fn next_injections(&mut self, cycle: u64, out: &mut Vec<Packet>) -> usize {
        if self.injected >= self.spec.packet_limit {
            return 0;
        }
        let nodes = self.mesh.nodes();
        let mut produced = 0;
        for src_flat in 0..nodes {
            if self.injected >= self.spec.packet_limit {
                break;
            }
            if !self.rng.gen_bool(self.spec.pir) {
                continue;
            }
            let dst_flat = match self.spec.pattern {
                Pattern::UniformRandom => {
                    // Uniform over all nodes except the source.
                    let mut d = self.rng.gen_range(nodes as u64 - 1) as usize;
                    if d >= src_flat {
                        d += 1;
                    }
                    Some(d)
                }
                Pattern::Trace => unreachable!("trace handled by TraceTraffic"),
                p => pattern_dest(src_flat, p, self.n_bits),
            };
            let Some(dst_flat) = dst_flat else {
                continue; // pattern fixed point: silent node
            };
            out.push(Packet {
                id: self.next_id,
                src: self.mesh.coord(src_flat),
                dst: self.mesh.coord(dst_flat),
                length: self.spec.packet_length,
                inject_cycle: cycle,
                route_action: None,
            });
            self.next_id += 1;
            self.injected += 1;
            produced += 1;
        }
        produced
    }
}

#[derive(Debug)]
pub struct TraceTraffic {
    rows: Vec<Packet>,
    next_row: usize,
    next_id: u64,
}

impl TraceTraffic {
    /// Parse a trace file: UTF-8 CSV with header `cycle,src,dst,length`,
    /// flat node ids in decimal. Rows are replayed sorted by cycle.
    pub fn load(mesh: MeshConfig, path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path)
            .map_err(|e| SimError::Trace(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(mesh, &text)
    }

    pub fn parse(mesh: MeshConfig, text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "cycle,src,dst,length" => {}
            Some((_, header)) => {
                return Err(SimError::Trace(format!(
                    "expected header 'cycle,src,dst,length', got '{header}'"
                )))
            }
            None => return Err(SimError::Trace("empty trace file".into())),
        }
        let nodes = mesh.nodes();
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1; // 1-based, header is line 1
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(SimError::Trace(format!(
                    "expected 4 fields, got {}, line {lineno}",
                    fields.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<u64, SimError> {
                s.trim().parse::<u64>().map_err(|_| {
                    SimError::Trace(format!("bad {what} '{}', line {lineno}", s.trim()))
                })
            };
            let cycle = parse(fields[0], "cycle")?;
            let src = parse(fields[1], "src")? as usize;
            let dst = parse(fields[2], "dst")? as usize;
            let length = parse(fields[3], "length")? as usize;
            if src >= nodes || dst >= nodes {
                return Err(SimError::Trace(format!(
                    "node id out of range for {nodes} nodes, line {lineno}"
                )));
            }
            if src == dst {
                return Err(SimError::Trace(format!(
                    "source equals destination, line {lineno}"
                )));
            }
            if length == 0 {
                return Err(SimError::Trace(format!("length must be >= 1, line {lineno}")));
            }
            rows.push(Packet {
                id: 0,
                src: mesh.coord(src),
                dst: mesh.coord(dst),
                length,
                inject_cycle: cycle,
                route_action: None,
            });
        }
        rows.sort_by_key(|p| p.inject_cycle);
        Ok(TraceTraffic {
            rows,
            next_row: 0,
            next_id: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn next_injections(&mut self, cycle: u64, out: &mut Vec<Packet>) -> usize {
        let mut produced = 0;
        while let Some(row) = self.rows.get(self.next_row) {
            if row.inject_cycle > cycle {
                break;
            }
            let mut packet = row.clone();
            packet.id = self.next_id;
            packet.inject_cycle = cycle; // late rows enter the queue now
            self.next_id += 1;
            self.next_row += 1;
            out.push(packet);
            produced += 1;
        }
        produced
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh8() -> MeshConfig {
        MeshConfig::new(8, 8).unwrap()
    }

    fn spec(pattern: Pattern, pir: f64) -> TrafficSpec {
        TrafficSpec {
            pattern,
            pir,
            packet_length: 5,
            packet_limit: u64::MAX,
            seed: 99,
        }
    }

    #[test]
    fn transpose_swaps_halves() {
        assert_eq!(pattern_dest(0b000111, Pattern::Transpose, 6), Some(0b111000));
        assert_eq!(pattern_dest(7, Pattern::Transpose, 6), Some(56));
    }

    #[test]
    fn bit_reversal_mirrors() {
        assert_eq!(pattern_dest(1, Pattern::BitReversal, 6), Some(32));
    }

    #[test]
    fn shuffle_rotates_left() {
        assert_eq!(pattern_dest(32, Pattern::Shuffle, 6), Some(1));
    }

    #[test]
    fn fixed_points_are_silent() {
        assert_eq!(pattern_dest(0, Pattern::Transpose, 6), None);
        assert_eq!(pattern_dest(0b111111, Pattern::BitReversal, 6), None);
    }

    #[test]
    fn bit_patterns_are_permutations() {
        for pattern in [Pattern::Transpose, Pattern::BitReversal, Pattern::Shuffle] {
            let mut seen = vec![false; 64];
            for src in 0..64usize {
                let dst = pattern_dest(src, pattern, 6).unwrap_or(src);
                assert!(!seen[dst], "{pattern:?} not injective at {src}");
                seen[dst] = true;
            }
        }
        // transpose and bit_reversal are involutions
        for pattern in [Pattern::Transpose, Pattern::BitReversal] {
            for src in 0..64usize {
                let once = pattern_dest(src, pattern, 6).unwrap_or(src);
                let twice = pattern_dest(once, pattern, 6).unwrap_or(once);
                assert_eq!(twice, src);
            }
        }
    }

    #[test]
    fn zero_rate_injects_nothing() {
        let mut src = TrafficSource::synthetic(mesh8(), spec(Pattern::UniformRandom, 0.0)).unwrap();
        let mut out = Vec::new();
        for cycle in 0..100 {
            assert_eq!(src.next_injections(cycle, &mut out), 0);
        }
        assert!(out.is_empty());
    }

    #[test]
    fn certain_rate_injects_all_nodes() {
        let mut src = TrafficSource::synthetic(mesh8(), spec(Pattern::UniformRandom, 1.0)).unwrap();
        let mut out = Vec::new();
        assert_eq!(src.next_injections(0, &mut out), 64);
        for p in &out {
            assert_ne!(p.src, p.dst);
            assert_eq!(p.length, 5);
            assert_eq!(p.inject_cycle, 0);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let run = || {
            let mut src =
                TrafficSource::synthetic(mesh8(), spec(Pattern::UniformRandom, 0.3)).unwrap();
            let mut out = Vec::new();
            for cycle in 0..200 {
                src.next_injections(cycle, &mut out);
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn packet_limit_caps_injection() {
        let mut s = spec(Pattern::UniformRandom, 1.0);
        s.packet_limit = 10;
        let mut src = TrafficSource::synthetic(mesh8(), s).unwrap();
        let mut out = Vec::new();
        src.next_injections(0, &mut out);
        src.next_injections(1, &mut out);
        assert_eq!(out.len(), 10);
        assert!(src.exhausted());
    }

    #[test]
    fn uniform_destinations_roughly_uniform() {
        // Loose sanity check, not a strict statistical assertion.
        let mut src = TrafficSource::synthetic(mesh8(), spec(Pattern::UniformRandom, 1.0)).unwrap();
        let mut out = Vec::new();
        for cycle in 0..2000 {
            src.next_injections(cycle, &mut out);
        }
        let mesh = mesh8();
        let mut counts = vec![0usize; 64];
        for p in &out {
            counts[mesh.flat(p.dst)] += 1;
        }
        let expected = out.len() as f64 / 64.0;
        for (node, &c) in counts.iter().enumerate() {
            let ratio = c as f64 / expected;
            assert!(
                (0.7..1.3).contains(&ratio),
                "node {node} saw {c} packets, expected ~{expected:.0}"
            );
        }
    }

    #[test]
    fn trace_row_parses() {
        let t = TraceTraffic::parse(mesh8(), "cycle,src,dst,length\n10,0,63,5\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.rows[0].src, Coord::new(0, 0));
        assert_eq!(t.rows[0].dst, Coord::new(7, 7));
        assert_eq!(t.rows[0].length, 5);
        assert_eq!(t.rows[0].inject_cycle, 10);
    }

    #[test]
    fn trace_header_only_is_empty() {
        let t = TraceTraffic::parse(mesh8(), "cycle,src,dst,length\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn trace_self_addressed_rejected() {
        let err = TraceTraffic::parse(mesh8(), "cycle,src,dst,length\n10,0,63,5\n5,3,3,1\n")
            .unwrap_err();
        assert_eq!(
            err.to_string(),
            "trace error: source equals destination, line 3"
        );
    }

    #[test]
    fn trace_malformed_row_names_line() {
        let err =
            TraceTraffic::parse(mesh8(), "cycle,src,dst,length\n10,0,sixty,5\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn trace_rows_replay_in_cycle_order() {
        let mut t = TraceTraffic::parse(
            mesh8(),
            "cycle,src,dst,length\n20,1,2,1\n5,3,4,1\n20,5,6,1\n",
        )
        .unwrap();
        let mut out = Vec::new();
        for cycle in 0..30 {
            t.next_injections(cycle, &mut out);
        }
        let cycles: Vec<u64> = out.iter().map(|p| p.inject_cycle).collect();
        assert_eq!(cycles, vec![5, 20, 20]);
    }
}
