//! Power-state machines for fine-grained (per-input-buffer) and
//! coarse-grained (whole-router) gating, plus the per-router mode controller
//! that switches between the two regimes.
//!
//! Cycle contract: `tick` runs in the power phase at the start of a cycle,
//! before any flit moves. `request_wake` fires during the movement phase of
//! the same cycle when a head flit is blocked on a gated unit. A unit woken
//! at cycle `t` therefore becomes Active in the power phase of `t + t_on`,
//! and the blocked flit enters the buffer exactly `t_on` cycles later than
//! it would have with the unit powered.

use std::collections::VecDeque;

use crate::error::SimError;
use crate::topology::Dir;

/// Gating state of one unit (an input buffer, or a whole router in coarse
/// mode). `Waking(k)` counts down by one per power phase; `Waking(0)` is
/// never observed — the unit transitions to Active in the same phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerState {
    Active,
    Gated,
    Waking(u64),
}

impl PowerState {
    pub fn is_active(self) -> bool {
        self == PowerState::Active
    }

    /// Powered units accrue static energy; this includes Waking units
    /// (the conservative choice for ramp behavior).
    pub fn draws_static(self) -> bool {
        self != PowerState::Gated
    }
}

/// What happened to a unit during a tick or wake request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgEvent {
    /// Idle threshold reached; the unit just gated.
    Gated,
    /// A wake request hit a gated unit; waking started this cycle.
    WakeStarted,
    /// Countdown finished; the unit is active again this cycle.
    WakeFinished,
}

/// One power-gating state machine with an idle counter.
#[derive(Debug, Clone)]
pub struct GateUnit {
    pub state: PowerState,
    idle: u64,
    t_idle: u64,
    t_on: u64,
}

impl GateUnit {
    pub fn new(t_idle: u64, t_on: u64, state: PowerState) -> Self {
        GateUnit {
            state,
            idle: 0,
            t_idle,
            t_on,
        }
    }

    /// Power-phase advance. `busy_last_cycle` is true when the unit held or
    /// received any flit during the previous cycle; occupied storage never
    /// gates.
    pub fn tick(&mut self, busy_last_cycle: bool) -> Option<PgEvent> {
        match self.state {
            PowerState::Waking(k) => {
                debug_assert!(k > 0);
                if k == 1 {
                    self.state = PowerState::Active;
                    self.idle = 0;
                    Some(PgEvent::WakeFinished)
                } else {
                    self.state = PowerState::Waking(k - 1);
                    None
                }
            }
            PowerState::Active => {
                if busy_last_cycle {
                    self.idle = 0;
                    None
                } else {
                    self.idle += 1;
                    if self.idle >= self.t_idle {
                        self.state = PowerState::Gated;
                        self.idle = 0;
                        Some(PgEvent::Gated)
                    } else {
                        None
                    }
                }
            }
            PowerState::Gated => None,
        }
    }

    /// Movement-phase wake request. Starts the countdown when gated;
    /// requests against waking or active units are no-ops.
    pub fn request_wake(&mut self) -> Option<PgEvent> {
        if self.state == PowerState::Gated {
            self.state = PowerState::Waking(self.t_on);
            Some(PgEvent::WakeStarted)
        } else {
            None
        }
    }

    /// Force a state, clearing the idle counter. Used on mode switches.
    pub fn force(&mut self, state: PowerState) {
        self.state = state;
        self.idle = 0;
    }
}

/// Gating regime a router currently runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgMode {
    Fine,
    Coarse,
}

/// Decides fine/coarse transitions from wake-request pressure.
///
/// A router moves to coarse mode when wake requests hit at least
/// `up_threshold` distinct input buffers within the trailing `window`
/// cycles, and falls back to fine mode after `quiet` consecutive cycles in
/// which no window crossed the threshold.
#[derive(Debug, Clone)]
pub struct ModeController {
    mode: PgMode,
    up_threshold: usize,
    window: u64,
    quiet_after: u64,
    requests: VecDeque<(u64, Dir)>,
    quiet: u64,
}

impl ModeController {
    pub fn new(up_threshold: usize, window: u64, quiet_after: u64) -> Self {
        ModeController {
            mode: PgMode::Fine,
            up_threshold,
            window,
            quiet_after,
            requests: VecDeque::new(),
            quiet: 0,
        }
    }

    pub fn mode(&self) -> PgMode {
        self.mode
    }

    /// Record a wake request against the input buffer on `port`. Repeated
    /// requests from the same port only count once per window.
    pub fn record_wake_request(&mut self, cycle: u64, port: Dir) {
        self.requests.push_back((cycle, port));
    }

    fn distinct_ports_in_window(&mut self, cycle: u64) -> usize {
        while let Some(&(c, _)) = self.requests.front() {
            if c + self.window <= cycle {
                self.requests.pop_front();
            } else {
                break;
            }
        }
        let mut seen = [false; 5];
        let mut distinct = 0;
        for &(_, port) in &self.requests {
            let i = port.index();
            if !seen[i] {
                seen[i] = true;
                distinct += 1;
            }
        }
        distinct
    }

    /// Power-phase evaluation. Returns the new mode when a switch fires.
    pub fn tick(&mut self, cycle: u64) -> Option<PgMode> {
        let distinct = self.distinct_ports_in_window(cycle);
        if distinct >= self.up_threshold {
            self.quiet = 0;
            if self.mode == PgMode::Fine {
                self.mode = PgMode::Coarse;
                return Some(PgMode::Coarse);
            }
        } else {
            self.quiet += 1;
            if self.mode == PgMode::Coarse && self.quiet >= self.quiet_after {
                self.mode = PgMode::Fine;
                self.quiet = 0;
                self.requests.clear();
                return Some(PgMode::Fine);
            }
        }
        None
    }
}

/// Cycles a component must stay gated for the leakage savings to repay the
/// transition energy: ceil(e_transition / p_static).
pub fn break_even_time(e_transition: f64, p_static: f64) -> Result<u64, SimError> {
    if p_static <= 0.0 {
        return Err(SimError::Validation(format!(
            "break-even time needs positive static power, got {p_static}"
        )));
    }
    if e_transition <= 0.0 {
        return Ok(0);
    }
    Ok((e_transition / p_static).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates_after_idle_threshold() {
        let mut unit = GateUnit::new(2, 2, PowerState::Active);
        assert_eq!(unit.tick(true), None);
        assert_eq!(unit.tick(false), None); // 1 idle cycle observed
        assert_eq!(unit.tick(false), Some(PgEvent::Gated)); // 2nd idle cycle
        assert_eq!(unit.state, PowerState::Gated);
    }

    #[test]
    fn occupied_buffer_never_gates() {
        let mut unit = GateUnit::new(2, 2, PowerState::Active);
        for _ in 0..100 {
            assert_eq!(unit.tick(true), None);
        }
        assert_eq!(unit.state, PowerState::Active);
    }

    #[test]
    fn wake_takes_t_on_cycles() {
        let mut unit = GateUnit::new(2, 2, PowerState::Gated);
        assert_eq!(unit.request_wake(), Some(PgEvent::WakeStarted));
        assert_eq!(unit.state, PowerState::Waking(2));
        assert_eq!(unit.tick(false), None);
        assert_eq!(unit.state, PowerState::Waking(1));
        assert_eq!(unit.tick(false), Some(PgEvent::WakeFinished));
        assert_eq!(unit.state, PowerState::Active);
    }

    #[test]
    fn repeated_wake_requests_are_one_transition() {
        let mut unit = GateUnit::new(4, 8, PowerState::Gated);
        assert_eq!(unit.request_wake(), Some(PgEvent::WakeStarted));
        assert_eq!(unit.request_wake(), None);
        assert_eq!(unit.request_wake(), None);
        assert_eq!(unit.state, PowerState::Waking(8));
        for _ in 0..7 {
            unit.tick(false);
        }
        assert_eq!(unit.tick(false), Some(PgEvent::WakeFinished));
    }

    #[test]
    fn coarse_thresholds() {
        // coarse defaults: gate after 4 idle, wake in 8
        let mut unit = GateUnit::new(4, 8, PowerState::Active);
        for _ in 0..3 {
            assert_eq!(unit.tick(false), None);
        }
        assert_eq!(unit.tick(false), Some(PgEvent::Gated));
    }

    #[test]
    fn two_distinct_buffers_flip_to_coarse() {
        let mut ctl = ModeController::new(2, 32, 128);
        ctl.record_wake_request(10, Dir::North);
        assert_eq!(ctl.tick(10), None);
        ctl.record_wake_request(30, Dir::West);
        assert_eq!(ctl.tick(30), Some(PgMode::Coarse));
        assert_eq!(ctl.mode(), PgMode::Coarse);
    }

    #[test]
    fn single_buffer_repeating_stays_fine() {
        let mut ctl = ModeController::new(2, 32, 128);
        for cycle in 0..500 {
            if cycle % 5 == 0 {
                ctl.record_wake_request(cycle, Dir::East);
            }
            assert_eq!(ctl.tick(cycle), None);
        }
        assert_eq!(ctl.mode(), PgMode::Fine);
    }

    #[test]
    fn quiet_run_falls_back_to_fine() {
        let mut ctl = ModeController::new(2, 32, 128);
        ctl.record_wake_request(0, Dir::North);
        ctl.record_wake_request(0, Dir::South);
        assert_eq!(ctl.tick(0), Some(PgMode::Coarse));
        let mut switched_at = None;
        for cycle in 1..400 {
            if let Some(PgMode::Fine) = ctl.tick(cycle) {
                switched_at = Some(cycle);
                break;
            }
        }
        // window empties at cycle 32; 128 quiet cycles later it flips back
        assert_eq!(switched_at, Some(159));
        assert_eq!(ctl.mode(), PgMode::Fine);
    }

    #[test]
    fn requests_outside_window_expire() {
        let mut ctl = ModeController::new(2, 32, 128);
        ctl.record_wake_request(0, Dir::North);
        for cycle in 0..=32 {
            ctl.tick(cycle);
        }
        // the first request is out of the window by now
        ctl.record_wake_request(33, Dir::West);
        assert_eq!(ctl.tick(33), None);
        assert_eq!(ctl.mode(), PgMode::Fine);
    }

    #[test]
    fn zero_threshold_pins_coarse() {
        let mut ctl = ModeController::new(0, 32, 128);
        assert_eq!(ctl.tick(0), Some(PgMode::Coarse));
        for cycle in 1..1000 {
            assert_eq!(ctl.tick(cycle), None);
        }
        assert_eq!(ctl.mode(), PgMode::Coarse);
    }

    #[test]
    fn break_even_examples() {
        assert_eq!(break_even_time(10.0, 5.0).unwrap(), 2);
        assert_eq!(break_even_time(0.0, 5.0).unwrap(), 0);
        assert_eq!(break_even_time(7.0, 2.0).unwrap(), 4);
        assert!(break_even_time(1.0, 0.0).is_err());
        assert!(break_even_time(1.0, -2.0).is_err());
    }
}
