//! Simulator error taxonomy. Validation failures come from bad configs or
//! inputs; deadlock and timeout carry diagnostics from an aborted run;
//! internal errors indicate a simulator bug.

use std::fmt;

use crate::engine::metrics::Metrics;

#[derive(Debug)]
pub enum SimError {
    /// Configuration or input rejected before the run started.
    Validation(String),
    /// Trace file problem, with the offending line when known.
    Trace(String),
    /// Watchdog fired: no flit moved for the watchdog window while packets
    /// were in flight. Carries a dump of blocked packets and VC states.
    Deadlock { cycle: u64, report: String },
    /// `max_cycles` elapsed before the drain target was met.
    Timeout { cycle: u64, partial: Box<Metrics> },
    /// Simulator invariant broken; always a bug.
    Internal(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Validation(msg) => write!(f, "validation error: {msg}"),
            SimError::Trace(msg) => write!(f, "trace error: {msg}"),
            SimError::Deadlock { cycle, report } => {
                write!(f, "deadlock detected at cycle {cycle}:\n{report}")
            }
            SimError::Timeout { cycle, .. } => {
                write!(f, "max_cycles ({cycle}) reached before drain target")
            }
            SimError::Internal(msg) => write!(f, "internal simulator error: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}
