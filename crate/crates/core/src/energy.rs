//! Parameterized energy accounting.
//!
//! All coefficients are abstract units supplied by the config; results are
//! meant to be compared across policies, not read as joules. Static leakage
//! accrues per powered component per cycle (waking components charge full
//! static power), dynamic energy per event, wake-up energy once per
//! gated-to-waking transition. Bypass and Q-table costs are booked under a
//! separate overhead category so the adaptive machinery's price stays
//! visible. The bypass latch and its controller are treated as part of every
//! modeled router and are always powered.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Per-event and per-cycle energy coefficients, abstract units.
///
/// The defaults put the fine break-even time at 2 cycles and the coarse one
/// near 4, consistent with the default idle thresholds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCoefficients {
    pub static_buffer_per_cycle: f64,
    /// Crossbar plus allocators.
    pub static_router_misc_per_cycle: f64,
    /// Bypass latch plus its controller; always on.
    pub static_bypass_per_cycle: f64,
    /// Charged only while a router sits in coarse mode.
    pub static_qtable_per_cycle: f64,
    pub dyn_buffer_rw_per_flit: f64,
    pub dyn_xbar_per_flit: f64,
    pub dyn_link_per_flit: f64,
    pub dyn_bypass_per_flit: f64,
    pub dyn_reward_flit_per_hop: f64,
    pub wake_buffer: f64,
    pub wake_router: f64,
}

impl Default for EnergyCoefficients {
    fn default() -> Self {
        EnergyCoefficients {
            static_buffer_per_cycle: 1.0,
            static_router_misc_per_cycle: 2.0,
            static_bypass_per_cycle: 0.1,
            static_qtable_per_cycle: 0.2,
            dyn_buffer_rw_per_flit: 0.5,
            dyn_xbar_per_flit: 0.3,
            dyn_link_per_flit: 0.2,
            dyn_bypass_per_flit: 0.1,
            dyn_reward_flit_per_hop: 0.05,
            wake_buffer: 2.0,
            wake_router: 12.0,
        }
    }
}

impl EnergyCoefficients {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("static_buffer_per_cycle", self.static_buffer_per_cycle),
            ("static_router_misc_per_cycle", self.static_router_misc_per_cycle),
            ("static_bypass_per_cycle", self.static_bypass_per_cycle),
            ("static_qtable_per_cycle", self.static_qtable_per_cycle),
            ("dyn_buffer_rw_per_flit", self.dyn_buffer_rw_per_flit),
            ("dyn_xbar_per_flit", self.dyn_xbar_per_flit),
            ("dyn_link_per_flit", self.dyn_link_per_flit),
            ("dyn_bypass_per_flit", self.dyn_bypass_per_flit),
            ("dyn_reward_flit_per_hop", self.dyn_reward_flit_per_hop),
            ("wake_buffer", self.wake_buffer),
            ("wake_router", self.wake_router),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::Validation(format!(
                    "energy.{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Static,
    Dynamic,
    Wakeup,
    Overhead,
}

const N_CAT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Buffer,
    RouterMisc,
    Bypass,
    QTable,
    Link,
    RewardChannel,
}

const N_COMP: usize = 6;

/// A countable energy event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyEvent {
    BufferWrite,
    BufferRead,
    CrossbarTraversal,
    LinkTraversal,
    BypassTraversal,
    RewardFlitHop,
    /// Gated-to-waking transition of one input buffer (fine mode).
    WakeBuffer,
    /// Gated-to-waking transition of a whole router (coarse mode); charged
    /// once per transition regardless of how many packets triggered it.
    WakeRouter,
}

impl EnergyEvent {
    fn classify(self, coeffs: &EnergyCoefficients) -> (Category, Component, f64) {
        match self {
            EnergyEvent::BufferWrite | EnergyEvent::BufferRead => {
                (Category::Dynamic, Component::Buffer, coeffs.dyn_buffer_rw_per_flit)
            }
            EnergyEvent::CrossbarTraversal => {
                (Category::Dynamic, Component::RouterMisc, coeffs.dyn_xbar_per_flit)
            }
            EnergyEvent::LinkTraversal => {
                (Category::Dynamic, Component::Link, coeffs.dyn_link_per_flit)
            }
            EnergyEvent::BypassTraversal => {
                (Category::Overhead, Component::Bypass, coeffs.dyn_bypass_per_flit)
            }
            EnergyEvent::RewardFlitHop => (
                Category::Overhead,
                Component::RewardChannel,
                coeffs.dyn_reward_flit_per_hop,
            ),
            EnergyEvent::WakeBuffer => (Category::Wakeup, Component::Buffer, coeffs.wake_buffer),
            EnergyEvent::WakeRouter => {
                (Category::Wakeup, Component::RouterMisc, coeffs.wake_router)
            }
        }
    }
}

/// Accumulated energy, category x component, with a per-router breakdown.
/// Monotonically non-decreasing; totals always equal the sum of per-router
/// entries.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    matrix: [[f64; N_COMP]; N_CAT],
    per_router: Vec<f64>,
}

impl EnergyLedger {
    pub fn new(routers: usize) -> Self {
        EnergyLedger {
            matrix: [[0.0; N_COMP]; N_CAT],
            per_router: vec![0.0; routers],
        }
    }

    fn charge(&mut self, cat: Category, comp: Component, router: usize, amount: f64) {
        debug_assert!(amount >= 0.0);
        self.matrix[cat as usize][comp as usize] += amount;
        self.per_router[router] += amount;
    }

    /// Static charges for one router-cycle. `active_buffers` counts input
    /// buffers drawing static power (Active or Waking), `misc_on` covers the
    /// crossbar and allocators, `qtable_on` is true in coarse mode only. The
    /// bypass latch and controller charge unconditionally.
    pub fn charge_cycle(
        &mut self,
        coeffs: &EnergyCoefficients,
        router: usize,
        active_buffers: usize,
        misc_on: bool,
        qtable_on: bool,
    ) {
        if active_buffers > 0 {
            self.charge(
                Category::Static,
                Component::Buffer,
                router,
                active_buffers as f64 * coeffs.static_buffer_per_cycle,
            );
        }
        if misc_on {
            self.charge(
                Category::Static,
                Component::RouterMisc,
                router,
                coeffs.static_router_misc_per_cycle,
            );
        }
        self.charge(
            Category::Overhead,
            Component::Bypass,
            router,
            coeffs.static_bypass_per_cycle,
        );
        if qtable_on {
            self.charge(
                Category::Overhead,
                Component::QTable,
                router,
                coeffs.static_qtable_per_cycle,
            );
        }
    }

    pub fn charge_event(&mut self, coeffs: &EnergyCoefficients, router: usize, event: EnergyEvent) {
        let (cat, comp, amount) = event.classify(coeffs);
        self.charge(cat, comp, router, amount);
    }

    pub fn total(&self) -> f64 {
        self.matrix.iter().flatten().sum()
    }

    pub fn category(&self, cat: Category) -> f64 {
        self.matrix[cat as usize].iter().sum()
    }

    pub fn component(&self, comp: Component) -> f64 {
        self.matrix.iter().map(|row| row[comp as usize]).sum()
    }

    pub fn cell(&self, cat: Category, comp: Component) -> f64 {
        self.matrix[cat as usize][comp as usize]
    }

    pub fn per_router(&self) -> &[f64] {
        &self.per_router
    }

    /// Flat, serialization-friendly view.
    pub fn summary(&self) -> EnergySummary {
        EnergySummary {
            total: self.total(),
            static_leakage: self.category(Category::Static),
            dynamic: self.category(Category::Dynamic),
            wakeup: self.category(Category::Wakeup),
            overhead: self.category(Category::Overhead),
            buffers: self.component(Component::Buffer),
            router_misc: self.component(Component::RouterMisc),
            bypass: self.component(Component::Bypass),
            qtable: self.component(Component::QTable),
            links: self.component(Component::Link),
            reward_channel: self.component(Component::RewardChannel),
            per_router: self.per_router.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnergySummary {
    pub total: f64,
    pub static_leakage: f64,
    pub dynamic: f64,
    pub wakeup: f64,
    pub overhead: f64,
    pub buffers: f64,
    pub router_misc: f64,
    pub bypass: f64,
    pub qtable: f64,
    pub links: f64,
    pub reward_channel: f64,
    pub per_router: Vec<f64>,
}
