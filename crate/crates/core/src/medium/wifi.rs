//! A single saturating or ramping Wi-Fi station modelled at slot quanta.
//!
//! Frames span `frame_quanta` slots and are separated by an inter-frame
//! space. The station senses the previous slot before starting a frame and
//! defers while anything in its mask is busy. A lost frame doubles the
//! contention window (binary exponential backoff); a delivered frame resets
//! it. On top of that sits a rate controller: every epoch the loss ratio of
//! the last second is checked and the offered load is halved above
//! `loss_threshold`, otherwise raised additively towards the target.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Emitter, Transmission};
use crate::SLOTS_PER_SECOND;

/// Throughput units reported for a station delivering frames back to back.
pub const WIFI_THROUGHPUT_CAL: f64 = 41.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WifiMode {
    /// Starts at the target load.
    Saturating,
    /// Starts at `ramp_start_load` and climbs towards the target.
    Ramping,
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WifiConfig {
    /// 2.4 GHz Wi-Fi channel, 1..=13.
    pub channel: u8,
    pub width_mhz: u8,
    pub mode: WifiMode,
    pub target_load: f64,
    pub ramp_start_load: f64,
    pub min_load: f64,
    pub power_dbm: i32,
    pub cca_threshold_dbm: i32,
    pub frame_quanta: u32,
    pub ifs_quanta: u32,
    pub cw_min: u32,
    pub cw_max: u32,
    pub max_retries: u32,
    pub epoch_slots: u64,
    pub loss_window_slots: u64,
    pub loss_threshold: f64,
    pub decrease_factor: f64,
    pub increase_step: f64,
}

impl Default for WifiConfig {
    fn default() -> Self {
        Self {
            channel: 6,
            width_mhz: 20,
            mode: WifiMode::Saturating,
            target_load: 1.0,
            ramp_start_load: 0.05,
            min_load: 0.01,
            power_dbm: -62,
            cca_threshold_dbm: -82,
            frame_quanta: 10,
            ifs_quanta: 1,
            cw_min: 1,
            cw_max: 4,
            max_retries: 7,
            epoch_slots: 800,
            loss_window_slots: 1600,
            loss_threshold: 0.3,
            decrease_factor: 0.5,
            increase_step: 0.1,
        }
    }
}

/// Bluetooth channel nearest the centre of Wi-Fi channel `c`
/// (2412 + 5(c-1) MHz against 2402 + k MHz).
pub fn wifi_center_channel(c: u8) -> u8 {
    5 * c + 5
}

/// Bluetooth channels covered by a Wi-Fi channel of the given width.
pub fn wifi_block(c: u8, width_mhz: u8) -> RangeInclusive<u8> {
    let center = wifi_center_channel(c) as i32;
    let (below, above) = if width_mhz >= 40 { (21, 20) } else { (11, 10) };
    let lo = (center - below).max(0) as u8;
    let hi = (center + above).min(78) as u8;
    lo..=hi
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    /// Waiting until the given slot before sensing.
    Waiting(u64),
    /// Frame on air from `start` for `frame_quanta` slots.
    Sending { start: u64, corrupted: bool },
}

#[derive(Clone, Debug)]
pub struct WifiInterferer {
    cfg: WifiConfig,
    rng: ChaCha8Rng,
    state: State,
    load: f64,
    cw: u32,
    retries: u32,
    active_from: u64,
    next_epoch: u64,
    /// (end slot, delivered) for frames in the loss window.
    history: std::collections::VecDeque<(u64, bool)>,
    delivered_quanta: u64,
    /// Delivered quanta per slot at which each frame finished.
    deliveries: Vec<(u64, u32)>,
    frames_sent: u64,
    frames_lost: u64,
}

impl WifiInterferer {
    /// Station that starts contending at `start_slot`.
    pub fn new(cfg: WifiConfig, seed: u64, start_slot: u64) -> Self {
        let load = match cfg.mode {
            WifiMode::Saturating => cfg.target_load,
            WifiMode::Ramping => cfg.ramp_start_load,
            WifiMode::Off => 0.0,
        };
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: State::Waiting(start_slot),
            load,
            cw: cfg.cw_min,
            retries: 0,
            active_from: start_slot,
            next_epoch: start_slot + cfg.epoch_slots,
            history: Default::default(),
            delivered_quanta: 0,
            deliveries: Vec::new(),
            frames_sent: 0,
            frames_lost: 0,
            cfg,
        }
    }

    pub fn config(&self) -> &WifiConfig {
        &self.cfg
    }

    pub fn block(&self) -> RangeInclusive<u8> {
        wifi_block(self.cfg.channel, self.cfg.width_mhz)
    }

    pub fn load(&self) -> f64 {
        self.load
    }

    pub fn frames_sent(&self) -> u64 {
        self.frames_sent
    }

    pub fn frames_lost(&self) -> u64 {
        self.frames_lost
    }

    pub fn delivered_quanta(&self) -> u64 {
        self.delivered_quanta
    }

    /// Decides whether the station occupies `slot`. `busy_prev` is the
    /// carrier-sense result for the previous slot over the station's mask.
    pub fn step(&mut self, slot: u64, busy_prev: bool) -> Option<Transmission> {
        if self.cfg.mode == WifiMode::Off || slot < self.active_from {
            return None;
        }
        if slot >= self.next_epoch {
            self.adjust_load(slot);
            self.next_epoch = slot + self.cfg.epoch_slots;
        }
        if let State::Waiting(until) = self.state {
            if slot < until {
                return None;
            }
            if busy_prev {
                self.state = State::Waiting(slot + 1);
                return None;
            }
            self.state = State::Sending {
                start: slot,
                corrupted: false,
            };
        }
        Some(Transmission {
            emitter: Emitter::Wifi,
            channels: self.block(),
            power_dbm: self.cfg.power_dbm,
        })
    }

    /// Feeds back the medium outcome for the slot just stepped.
    pub fn finish_slot(&mut self, slot: u64, lost: bool) {
        let State::Sending { start, corrupted } = self.state else {
            return;
        };
        let corrupted = corrupted || lost;
        if slot + 1 < start + self.cfg.frame_quanta as u64 {
            self.state = State::Sending { start, corrupted };
            return;
        }
        self.frames_sent += 1;
        self.history.push_back((slot, !corrupted));
        let wait = if corrupted {
            self.frames_lost += 1;
            self.retries += 1;
            if self.retries > self.cfg.max_retries {
                // Dropped: the next frame waits like a fresh one.
                self.retries = 0;
                self.cw = self.cfg.cw_min;
                self.cfg.ifs_quanta as u64 + self.idle_gap()
            } else {
                self.cw = (self.cw * 2 + 1).min(self.cfg.cw_max);
                self.cfg.ifs_quanta as u64 + self.rng.gen_range(0..=self.cw) as u64
            }
        } else {
            self.delivered_quanta += self.cfg.frame_quanta as u64;
            self.deliveries.push((slot, self.cfg.frame_quanta));
            self.retries = 0;
            self.cw = self.cfg.cw_min;
            self.cfg.ifs_quanta as u64 + self.idle_gap()
        };
        self.state = State::Waiting(slot + 1 + wait);
    }

    /// Extra idle time that brings the duty cycle down to the offered load.
    fn idle_gap(&mut self) -> u64 {
        if self.load >= 1.0 {
            return 0;
        }
        let per_frame = (self.cfg.frame_quanta + self.cfg.ifs_quanta) as f64;
        let mean = per_frame * (1.0 / self.load.max(1e-6) - 1.0);
        let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
        (-mean * u.ln()).round() as u64
    }

    fn adjust_load(&mut self, slot: u64) {
        let window_start = slot.saturating_sub(self.cfg.loss_window_slots);
        while self.history.front().is_some_and(|(s, _)| *s < window_start) {
            self.history.pop_front();
        }
        let n = self.history.len();
        if n == 0 {
            return;
        }
        let lost = self.history.iter().filter(|(_, ok)| !ok).count();
        if lost as f64 / n as f64 > self.cfg.loss_threshold {
            self.load = (self.load * self.cfg.decrease_factor).max(self.cfg.min_load);
        } else {
            self.load = (self.load + self.cfg.increase_step).min(self.cfg.target_load);
        }
    }

    /// Throughput in calibrated units over slots `[from, to)`.
    pub fn throughput(&self, from: u64, to: u64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let quanta: u64 = self
            .deliveries
            .iter()
            .filter(|(s, _)| *s >= from && *s < to)
            .map(|(_, q)| *q as u64)
            .sum();
        let full = self.cfg.frame_quanta as f64 / (self.cfg.frame_quanta + self.cfg.ifs_quanta) as f64;
        WIFI_THROUGHPUT_CAL * quanta as f64 / ((to - from) as f64 * full)
    }

    /// Throughput per whole second since `origin`, one entry per second.
    pub fn throughput_series(&self, origin: u64, seconds: u64) -> Vec<f64> {
        (0..seconds)
            .map(|i| {
                let a = origin + i * SLOTS_PER_SECOND;
                self.throughput(a, a + SLOTS_PER_SECOND)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::deliver_slot;

    #[test]
    fn channel_mapping() {
        assert_eq!(wifi_center_channel(1), 10);
        assert_eq!(wifi_center_channel(6), 35);
        assert_eq!(wifi_center_channel(13), 70);
        assert_eq!(wifi_block(6, 20), 24..=45);
        assert_eq!(wifi_block(1, 20), 0..=20);
        assert_eq!(wifi_block(13, 20), 59..=78);
        for c in 1..=13 {
            let b = wifi_block(c, 20);
            assert!(b.end() - b.start() < 22);
        }
    }

    fn run_alone(cfg: WifiConfig, slots: u64) -> WifiInterferer {
        let mut w = WifiInterferer::new(cfg, 1, 0);
        for s in 0..slots {
            let tx = w.step(s, false);
            if let Some(t) = tx {
                let o = deliver_slot(&[t]);
                w.finish_slot(s, !o[0].received());
            }
        }
        w
    }

    #[test]
    fn saturated_alone_hits_calibration() {
        let w = run_alone(WifiConfig::default(), 16_000);
        let tp = w.throughput(1600, 16_000);
        assert!((tp - WIFI_THROUGHPUT_CAL).abs() < 0.5, "{tp}");
        assert_eq!(w.frames_lost(), 0);
    }

    #[test]
    fn ramping_alone_climbs_to_target() {
        let cfg = WifiConfig {
            mode: WifiMode::Ramping,
            ..WifiConfig::default()
        };
        let w = run_alone(cfg, 32_000);
        assert!((w.load() - 1.0).abs() < 1e-9);
        assert!(w.throughput(24_000, 32_000) > 39.0);
        assert!(w.throughput(0, 1600) < 20.0);
    }

    #[test]
    fn carrier_sense_defers() {
        let mut w = WifiInterferer::new(WifiConfig::default(), 1, 0);
        assert!(w.step(0, true).is_none());
        assert!(w.step(1, true).is_none());
        assert!(w.step(2, false).is_some());
    }

    #[test]
    fn off_never_transmits() {
        let cfg = WifiConfig {
            mode: WifiMode::Off,
            ..WifiConfig::default()
        };
        let mut w = WifiInterferer::new(cfg, 1, 0);
        assert!((0..1000).all(|s| w.step(s, false).is_none()));
    }
}
