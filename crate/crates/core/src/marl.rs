//! Cooperative per-router learning agents.
//!
//! Each router keeps a table of expected rewards over `rows + cols` states
//! (one per destination row id and one per destination column id) and two
//! actions (XY, YX) — linear in mesh size, never quadratic. When a router in
//! coarse mode is woken by a turning packet it opens a reward epoch, counts
//! the packets that turn there until the deadline or until it re-gates, and
//! broadcasts the count as a shared reward along its row and column on a
//! dedicated always-on channel. Row-mates fold the reward into
//! Q(col-of-turning-router, XY), column-mates into Q(row-of-turning-router,
//! YX), both with the single-step update Q <- (1-a)Q + a*r.

use crate::error::SimError;
use crate::rng::Rng;
use crate::topology::{Coord, MeshConfig, RouteAction};

/// State index: the destination's row id or column id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKey {
    Row(usize),
    Col(usize),
}

impl StateKey {
    pub fn label(self) -> String {
        match self {
            StateKey::Row(r) => format!("row{r}"),
            StateKey::Col(c) => format!("col{c}"),
        }
    }
}

/// Per-router Q-value table: `(rows + cols)` states, two actions each,
/// zero-initialized. Optionally quantized to a 4-bit grid after every
/// update to mirror a register-array implementation.
#[derive(Debug, Clone)]
pub struct QTable {
    rows: usize,
    cols: usize,
    values: Vec<[f64; 2]>,
    quantize_4bit: bool,
}

impl QTable {
    pub fn new(rows: usize, cols: usize, quantize_4bit: bool) -> Self {
        QTable {
            rows,
            cols,
            values: vec![[0.0; 2]; rows + cols],
            quantize_4bit,
        }
    }

    pub fn state_count(&self) -> usize {
        self.rows + self.cols
    }

    pub fn actions_per_state(&self) -> usize {
        2
    }

    fn index(&self, key: StateKey) -> usize {
        match key {
            StateKey::Row(r) => {
                debug_assert!(r < self.rows);
                r
            }
            StateKey::Col(c) => {
                debug_assert!(c < self.cols);
                self.rows + c
            }
        }
    }

    pub fn get(&self, key: StateKey, action: RouteAction) -> f64 {
        self.values[self.index(key)][action.index()]
    }

    /// Single-step update: Q <- (1 - alpha) * Q + alpha * reward.
    pub fn update(&mut self, key: StateKey, action: RouteAction, reward: f64, alpha: f64) {
        let idx = self.index(key);
        let slot = &mut self.values[idx][action.index()];
        *slot = (1.0 - alpha) * *slot + alpha * reward;
        if self.quantize_4bit {
            *slot = slot.clamp(0.0, 15.0).round();
        }
    }

    /// Iterate `(state, action, value)` in a stable order for dumps.
    pub fn entries(&self) -> impl Iterator<Item = (StateKey, RouteAction, f64)> + '_ {
        (0..self.values.len()).flat_map(move |i| {
            let key = if i < self.rows {
                StateKey::Row(i)
            } else {
                StateKey::Col(i - self.rows)
            };
            [
                (key, RouteAction::Xy, self.values[i][0]),
                (key, RouteAction::Yx, self.values[i][1]),
            ]
        })
    }
}

/// Greedy routing choice, a pure function of the table and endpoints.
/// Aligned flows have a single minimal path and always take XY; otherwise
/// compare the XY value keyed by the destination column against the YX value
/// keyed by the destination row, breaking ties toward XY.
pub fn greedy_action(q: &QTable, src: Coord, dst: Coord) -> RouteAction {
    if src.row == dst.row || src.col == dst.col {
        return RouteAction::Xy;
    }
    let q_xy = q.get(StateKey::Col(dst.col), RouteAction::Xy);
    let q_yx = q.get(StateKey::Row(dst.row), RouteAction::Yx);
    if q_yx > q_xy {
        RouteAction::Yx
    } else {
        RouteAction::Xy
    }
}

/// Epsilon-greedy selection. Aligned flows short-circuit to XY without
/// consuming randomness; with `epsilon == 0` this is exactly
/// [`greedy_action`] and also draws nothing.
pub fn select_action(
    q: &QTable,
    src: Coord,
    dst: Coord,
    epsilon: f64,
    rng: &mut Rng,
) -> RouteAction {
    if src.row == dst.row || src.col == dst.col {
        return RouteAction::Xy;
    }
    if epsilon > 0.0 && rng.gen_bool(epsilon) {
        if rng.gen_range(2) == 0 {
            RouteAction::Xy
        } else {
            RouteAction::Yx
        }
    } else {
        greedy_action(q, src, dst)
    }
}

/// Why an epoch closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochClose {
    Deadline,
    Regated,
}

/// An open reward-accumulation window at one turning router. At most one
/// exists per router at a time.
#[derive(Debug, Clone)]
pub struct RewardEpoch {
    pub turning_router: Coord,
    pub start_cycle: u64,
    pub deadline: u64,
    pub turn_count: u64,
}

impl RewardEpoch {
    /// Open an epoch at the router just woken by a turning packet. The
    /// triggering packet's own turn counts once it completes.
    pub fn open(turning_router: Coord, cycle: u64, t_epoch: u64) -> Self {
        RewardEpoch {
            turning_router,
            start_cycle: cycle,
            deadline: cycle + t_epoch,
            turn_count: 0,
        }
    }

    pub fn record_turn(&mut self) {
        self.turn_count += 1;
    }

    pub fn due(&self, cycle: u64) -> bool {
        cycle >= self.deadline
    }
}

/// One pending reward-flit delivery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardDelivery {
    pub deliver_cycle: u64,
    pub agent: Coord,
    pub turning_router: Coord,
    pub reward: u64,
}

/// Delivery schedule for a closed epoch's reward. A single-flit reward
/// travels each direction along the turning router's row and column at one
/// hop per cycle on the dedicated channel; it is never blocked and never
/// turns. The turning router itself receives the reward at delay zero.
/// Returns the schedule and the total hop count traveled (for energy).
pub fn broadcast_schedule(
    mesh: MeshConfig,
    turning_router: Coord,
    reward: u64,
    close_cycle: u64,
    zero_latency: bool,
) -> (Vec<RewardDelivery>, u64) {
    let mut schedule = Vec::with_capacity(mesh.rows + mesh.cols - 1);
    let mut push = |agent: Coord, distance: u64| {
        let delay = if zero_latency { 0 } else { distance };
        schedule.push(RewardDelivery {
            deliver_cycle: close_cycle + delay,
            agent,
            turning_router,
            reward,
        });
    };
    push(turning_router, 0);
    for col in 0..mesh.cols {
        if col != turning_router.col {
            let dist = col.abs_diff(turning_router.col) as u64;
            push(Coord::new(turning_router.row, col), dist);
        }
    }
    for row in 0..mesh.rows {
        if row != turning_router.row {
            let dist = row.abs_diff(turning_router.row) as u64;
            push(Coord::new(row, turning_router.col), dist);
        }
    }
    // Flits run to the row and column edges regardless of who listens.
    let hops = (mesh.cols - 1 + mesh.rows - 1) as u64;
    (schedule, hops)
}

/// Apply a received reward at `agent`. Agents in the turning router's row
/// update the XY value for its column state; agents in its column update the
/// YX value for its row state; the turning router itself applies both.
pub fn apply_update(
    q: &mut QTable,
    agent: Coord,
    turning_router: Coord,
    reward: u64,
    alpha: f64,
) -> Result<(), SimError> {
    let same_row = agent.row == turning_router.row;
    let same_col = agent.col == turning_router.col;
    if !same_row && !same_col {
        return Err(SimError::Internal(format!(
            "reward for {turning_router} delivered to unrelated agent {agent}"
        )));
    }
    if same_row {
        q.update(
            StateKey::Col(turning_router.col),
            RouteAction::Xy,
            reward as f64,
            alpha,
        );
    }
    if same_col {
        q.update(
            StateKey::Row(turning_router.row),
            RouteAction::Yx,
            reward as f64,
            alpha,
        );
    }
    Ok(())
}
