//! Spectrum-analyser style trace: a few sweeps per second, each sampling
//! every channel once, reduced to the per-second peak.

use std::fmt::Write;

use super::{NOISE_FLOOR_DBM, STRONG_SIGNAL_DBM};
use crate::SLOTS_PER_SECOND;

/// Slots between samples of adjacent channels within one sweep.
const SAMPLE_STRIDE: u64 = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumRow {
    pub second: u64,
    pub dbm: [i32; 79],
}

impl SpectrumRow {
    /// `<sim_time_s> <79 dBm values>`.
    pub fn to_line(&self) -> String {
        let mut s = self.second.to_string();
        for v in self.dbm {
            write!(s, " {v}").unwrap();
        }
        s
    }

    pub fn parse(line: &str) -> Option<Self> {
        let mut it = line.split_whitespace();
        let second = it.next()?.parse().ok()?;
        let vals: Vec<i32> = it.map(|t| t.parse().ok()).collect::<Option<_>>()?;
        let dbm: [i32; 79] = vals.try_into().ok()?;
        Some(Self { second, dbm })
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumRecorder {
    sweep_slots: u64,
    origin: u64,
    current: [i32; 79],
    rows: Vec<SpectrumRow>,
}

impl SpectrumRecorder {
    /// Trace starting at `origin` with `sweeps_per_second` sweeps (at most 4,
    /// since a sweep needs 79 * 5 slots).
    pub fn new(origin: u64, sweeps_per_second: u64) -> Self {
        let sweeps = sweeps_per_second.clamp(1, 4);
        Self {
            sweep_slots: SLOTS_PER_SECOND / sweeps,
            origin,
            current: [NOISE_FLOOR_DBM; 79],
            rows: Vec::new(),
        }
    }

    /// Channel sampled in `slot`, if any.
    pub fn sample_channel(&self, slot: u64) -> Option<u8> {
        if slot < self.origin {
            return None;
        }
        let pos = (slot - self.origin) % self.sweep_slots;
        (pos.is_multiple_of(SAMPLE_STRIDE) && pos / SAMPLE_STRIDE < 79).then_some((pos / SAMPLE_STRIDE) as u8)
    }

    /// Records the measured energy for `slot` (ignored unless a channel is
    /// sampled then) and closes the row at each second boundary.
    pub fn record(&mut self, slot: u64, energy: impl Fn(u8) -> i32) {
        if let Some(ch) = self.sample_channel(slot) {
            let v = energy(ch).clamp(NOISE_FLOOR_DBM, STRONG_SIGNAL_DBM);
            let c = &mut self.current[ch as usize];
            *c = (*c).max(v);
        }
        if slot >= self.origin && (slot - self.origin + 1).is_multiple_of(SLOTS_PER_SECOND) {
            self.rows.push(SpectrumRow {
                second: (slot - self.origin + 1) / SLOTS_PER_SECOND - 1,
                dbm: self.current,
            });
            self.current = [NOISE_FLOOR_DBM; 79];
        }
    }

    pub fn rows(&self) -> &[SpectrumRow] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }
}
