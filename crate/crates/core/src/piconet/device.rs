use std::collections::BTreeMap;

use crate::attacks::{Key128, Pin};
use crate::baseband::{AfhMap, BdAddr, ClockState};
use crate::SLOT_US;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Master,
    Slave,
    Idle,
}

/// Slave timing error allowed before a resync, in µs.
pub const DRIFT_BOUND_US: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Device {
    pub addr: BdAddr,
    pub role: Role,
    /// Native clock.
    pub clock: ClockState,
    /// Ticks to add to the native clock to get the master's clock. Zero for
    /// the master itself.
    pub clock_offset_to_master: i64,
    pub afh_map: AfhMap,
    pub link_keys: BTreeMap<BdAddr, Key128>,
    pub discoverable: bool,
    pub connectable: bool,
    /// Crystal error in parts per million.
    pub drift_ppm: f64,
    /// Hard-coded PIN, if the device has one.
    pub fixed_pin: Option<Pin>,
    /// Current timing error against the master, in µs.
    pub sync_error_us: f64,
}

impl Device {
    pub fn new(addr: BdAddr, clock: ClockState) -> Self {
        Self {
            addr,
            role: Role::Idle,
            clock,
            clock_offset_to_master: 0,
            afh_map: AfhMap::all_unknown(),
            link_keys: BTreeMap::new(),
            discoverable: true,
            connectable: true,
            drift_ppm: 0.0,
            fixed_pin: None,
            sync_error_us: 0.0,
        }
    }

    pub fn with_drift(mut self, ppm: f64) -> Self {
        self.drift_ppm = ppm;
        self
    }

    pub fn with_pin(mut self, pin: Pin) -> Self {
        self.fixed_pin = Some(pin);
        self
    }

    pub fn non_discoverable(mut self) -> Self {
        self.discoverable = false;
        self
    }

    /// The master clock as this device believes it to be.
    pub fn master_clock_estimate(&self) -> ClockState {
        let raw =
            (self.clock.raw() as i64 + self.clock_offset_to_master).rem_euclid(crate::baseband::CLOCK_MODULUS as i64);
        ClockState::new(raw as u32)
    }

    /// Advances the native clock by one slot and accumulates drift against
    /// the master.
    pub(crate) fn tick_slot(&mut self) {
        self.clock = self.clock.add_slots(1);
        if self.role == Role::Slave {
            self.sync_error_us += self.drift_ppm * 1e-6 * SLOT_US as f64;
        }
    }

    /// Realigns on a packet from the master; `residual_us` is the leftover
    /// error of the timing estimate.
    pub(crate) fn resync(&mut self, residual_us: f64) {
        self.sync_error_us = residual_us;
    }
}
