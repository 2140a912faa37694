//! Cycle-driven 2D-mesh network-on-chip simulator centered on power gating.
//!
//! The simulator models wormhole routers with virtual channels, credit-based
//! flow control and a per-VC bypass latch that lets straight packets cross
//! gated routers. On top of that it layers per-input-buffer fine-grained
//! gating for light load and whole-router coarse-grained gating for heavy
//! load, with per-router agents that learn to pick between the XY and YX
//! dimension-order paths so packet turns concentrate on already-awake
//! routers. Five policies (`no_pg`, `conv_xy`, `toot_coarse`,
//! `cafeen_fine_only`, `cafeen_full`) share the same fabric and a
//! parameterized energy model, so their energy/latency trade-offs are
//! directly comparable.
//!
//! Entry points: [`engine::run`] for a single cell,
//! [`engine::compare::compare`] for a policy grid, and [`acceptance`] for
//! the self-check suite behind `nocgate verify`.

pub mod acceptance;
pub mod config;
pub mod energy;
pub mod engine;
pub mod error;
pub mod marl;
pub mod powergate;
pub mod rng;
pub mod router;
pub mod topology;
pub mod traffic;

pub use config::SimConfig;
pub use engine::{compare::compare, run, CellKey, Metrics, Policy, RunOutput, Sim};
pub use error::SimError;
pub use topology::{Coord, Dir, MeshConfig, RouteAction};
pub use traffic::{Packet, Pattern};
