//! Channel map estimation from what a scanning radio sees.
//!
//! The 20 channels with the highest packet rate are taken as Good. A
//! channel is Bad when its rate is well below the Top-20 mean and the
//! window holds enough listening time for that to mean something, or when
//! it is noisy without carrying the piconet's traffic.

use std::collections::VecDeque;

use crate::baseband::{AfhMap, ChannelClass, MIN_USABLE_CHANNELS, NUM_CHANNELS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoutConfig {
    pub dwell_slots: u64,
    pub window_s: u64,
    pub noise_threshold_dbm: i32,
    /// Fraction of noisy listening slots that makes a quiet channel Bad.
    pub noise_fraction: f64,
    /// Rate below this multiple of the Top-20 mean counts as "well below".
    pub rate_cutoff: f64,
    /// Packets the Top-20 mean rate predicts over the channel's listening
    /// time before a missing rate is believed.
    pub min_expected: f64,
    /// Listening slots needed before the noise path applies.
    pub min_listen_slots: u64,
}

impl Default for ScoutConfig {
    fn default() -> Self {
        Self {
            dwell_slots: 4,
            window_s: 10,
            noise_threshold_dbm: -75,
            noise_fraction: 0.3,
            rate_cutoff: 0.5,
            min_expected: 8.0,
            min_listen_slots: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelTally {
    pub listened: [u64; NUM_CHANNELS],
    pub packets: [u64; NUM_CHANNELS],
    pub noisy: [u64; NUM_CHANNELS],
}

impl Default for ChannelTally {
    fn default() -> Self {
        Self {
            listened: [0; NUM_CHANNELS],
            packets: [0; NUM_CHANNELS],
            noisy: [0; NUM_CHANNELS],
        }
    }
}

impl ChannelTally {
    pub fn add(&mut self, other: &ChannelTally) {
        for i in 0..NUM_CHANNELS {
            self.listened[i] += other.listened[i];
            self.packets[i] += other.packets[i];
            self.noisy[i] += other.noisy[i];
        }
    }

    fn rate(&self, ch: usize) -> f64 {
        if self.listened[ch] == 0 {
            0.0
        } else {
            self.packets[ch] as f64 / self.listened[ch] as f64
        }
    }
}

pub fn infer_afh_map(t: &ChannelTally, cfg: &ScoutConfig) -> AfhMap {
    let mut order: Vec<usize> = (0..NUM_CHANNELS).collect();
    order.sort_by(|a, b| t.rate(*b).total_cmp(&t.rate(*a)).then(a.cmp(b)));
    let top: Vec<usize> = order[..MIN_USABLE_CHANNELS].to_vec();
    let mean20 = top.iter().map(|c| t.rate(*c)).sum::<f64>() / MIN_USABLE_CHANNELS as f64;

    let mut e = [ChannelClass::Unknown; NUM_CHANNELS];
    for &c in &top {
        if t.packets[c] > 0 {
            e[c] = ChannelClass::Good;
        }
    }
    for c in 0..NUM_CHANNELS {
        if e[c] == ChannelClass::Good {
            continue;
        }
        let expected = mean20 * t.listened[c] as f64;
        let low_rate = (t.packets[c] as f64) < cfg.rate_cutoff * expected;
        let rate_bad = expected >= cfg.min_expected && low_rate;
        let noisy = t.listened[c] >= cfg.min_listen_slots
            && t.noisy[c] as f64 > cfg.noise_fraction * t.listened[c] as f64
            && (low_rate || mean20 == 0.0);
        if rate_bad || noisy {
            e[c] = ChannelClass::Bad;
        }
    }
    // Keep 20 usable: give back the Bad channels with the best rate first.
    let mut usable = e.iter().filter(|c| **c != ChannelClass::Bad).count();
    for &c in &order {
        if usable >= MIN_USABLE_CHANNELS {
            break;
        }
        if e[c] == ChannelClass::Bad {
            e[c] = ChannelClass::Unknown;
            usable += 1;
        }
    }
    AfhMap::from_entries(e).expect("at least 20 usable by construction")
}

/// Survey radio: per-period tallies over a sliding window.
#[derive(Clone, Debug, Default)]
pub struct Scout {
    cfg: ScoutConfig,
    window_periods: usize,
    periods: VecDeque<ChannelTally>,
    current: ChannelTally,
}

impl Scout {
    /// `periods_per_second` estimates are produced each second.
    pub fn new(cfg: ScoutConfig, periods_per_second: u32) -> Self {
        Self {
            window_periods: (cfg.window_s.max(1) * periods_per_second.max(1) as u64) as usize,
            cfg,
            periods: VecDeque::new(),
            current: ChannelTally::default(),
        }
    }

    pub fn config(&self) -> &ScoutConfig {
        &self.cfg
    }

    /// Channel the scout radio listens on, `n` slots after it started.
    pub fn channel(&self, n: u64) -> u8 {
        ((n / self.cfg.dwell_slots.max(1)) % NUM_CHANNELS as u64) as u8
    }

    pub fn listen(&mut self, ch: u8, packet: bool, noisy: bool) {
        let i = ch as usize;
        self.current.listened[i] += 1;
        self.current.packets[i] += packet as u64;
        self.current.noisy[i] += (noisy && !packet) as u64;
    }

    /// Closes the current period and returns the estimate over the window.
    pub fn roll(&mut self) -> AfhMap {
        self.periods.push_back(std::mem::take(&mut self.current));
        while self.periods.len() > self.window_periods {
            self.periods.pop_front();
        }
        let mut sum = ChannelTally::default();
        for s in &self.periods {
            sum.add(s);
        }
        infer_afh_map(&sum, &self.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_traffic_no_bad() {
        let mut t = ChannelTally::default();
        for c in 0..NUM_CHANNELS {
            t.listened[c] = 200;
            t.packets[c] = 10 + (c as u64 % 3);
        }
        let m = infer_afh_map(&t, &ScoutConfig::default());
        assert!(m.bad_channels().is_empty());
    }

    #[test]
    fn silent_block_with_strong_evidence() {
        let mut t = ChannelTally::default();
        for c in 0..NUM_CHANNELS {
            t.listened[c] = 200;
            t.packets[c] = if (24..=45).contains(&c) { 0 } else { 20 };
        }
        let m = infer_afh_map(&t, &ScoutConfig::default());
        assert_eq!(m.bad_channels(), (24..=45).collect::<Vec<u8>>());
    }

    #[test]
    fn noise_only_marks_block() {
        let mut t = ChannelTally::default();
        for c in 0..NUM_CHANNELS {
            t.listened[c] = 100;
            if (24..=45).contains(&c) {
                t.noisy[c] = 90;
            }
        }
        let m = infer_afh_map(&t, &ScoutConfig::default());
        assert_eq!(m.bad_channels(), (24..=45).collect::<Vec<u8>>());
    }

    #[test]
    fn keeps_twenty_usable() {
        let mut t = ChannelTally::default();
        for c in 0..NUM_CHANNELS {
            t.listened[c] = 100;
            t.noisy[c] = 100;
        }
        let m = infer_afh_map(&t, &ScoutConfig::default());
        assert_eq!(m.usable_count(), 20);
    }
}
