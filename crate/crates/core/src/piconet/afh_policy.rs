//! Master-side channel classification.

use std::collections::VecDeque;

use crate::baseband::{AfhMap, ChannelClass, MIN_USABLE_CHANNELS, NUM_CHANNELS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfhPolicy {
    /// Sliding window per channel, in slots.
    pub window_slots: u64,
    pub per_threshold: f64,
    pub min_attempts: usize,
    /// Also mark channels where foreign energy is often present.
    pub use_energy: bool,
    pub energy_threshold_dbm: i32,
    pub energy_fraction: f64,
    pub eval_interval_slots: u64,
    /// One Bad channel is put back on trial this often.
    pub probe_interval_slots: u64,
    /// Slots between LMP_Set_AFH and the switch.
    pub instant_delay_slots: u64,
}

impl AfhPolicy {
    /// Packet loss only. Foreign energy that does not cost packets is ignored.
    pub fn aggressive() -> Self {
        Self {
            window_slots: 1600,
            per_threshold: 0.5,
            min_attempts: 4,
            use_energy: false,
            energy_threshold_dbm: -80,
            energy_fraction: 0.3,
            eval_interval_slots: 160,
            probe_interval_slots: 3200,
            instant_delay_slots: 16,
        }
    }

    /// Loss or sensed energy.
    pub fn cooperative() -> Self {
        Self {
            use_energy: true,
            ..Self::aggressive()
        }
    }
}

impl Default for AfhPolicy {
    fn default() -> Self {
        Self::aggressive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Sample {
    slot: u64,
    lost: bool,
    interfered: bool,
}

/// Per-channel link quality over a sliding window.
#[derive(Clone, Debug, Default)]
pub struct ChannelStats {
    samples: Vec<VecDeque<Sample>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChannelQuality {
    pub attempts: usize,
    pub lost: usize,
    pub interfered: usize,
}

impl ChannelQuality {
    pub fn per(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.lost as f64 / self.attempts as f64
        }
    }

    pub fn interference_fraction(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.interfered as f64 / self.attempts as f64
        }
    }
}

impl ChannelStats {
    pub fn new() -> Self {
        Self {
            samples: vec![VecDeque::new(); NUM_CHANNELS],
        }
    }

    pub fn record(&mut self, channel: u8, slot: u64, lost: bool, interfered: bool) {
        self.samples[channel as usize].push_back(Sample { slot, lost, interfered });
    }

    pub fn clear(&mut self, channel: u8) {
        self.samples[channel as usize].clear();
    }

    pub fn prune(&mut self, now: u64, window: u64) {
        let start = now.saturating_sub(window);
        for q in &mut self.samples {
            while q.front().is_some_and(|s| s.slot < start) {
                q.pop_front();
            }
        }
    }

    pub fn quality(&self, channel: u8) -> ChannelQuality {
        let q = &self.samples[channel as usize];
        ChannelQuality {
            attempts: q.len(),
            lost: q.iter().filter(|s| s.lost).count(),
            interfered: q.iter().filter(|s| s.interfered).count(),
        }
    }
}

/// Probe bookkeeping carried between evaluations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProbeState {
    pub next_probe: u64,
    /// Slot at which each channel was last marked Bad.
    pub marked_at: Vec<Option<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AfhUpdate {
    pub map: AfhMap,
    pub newly_bad: Vec<u8>,
    pub restored: Vec<u8>,
}

impl AfhUpdate {
    pub fn changed(&self) -> bool {
        !self.newly_bad.is_empty() || !self.restored.is_empty()
    }
}

fn failing(q: &ChannelQuality, policy: &AfhPolicy) -> bool {
    if q.attempts < policy.min_attempts {
        return false;
    }
    q.per() > policy.per_threshold || (policy.use_energy && q.interference_fraction() > policy.energy_fraction)
}

/// One classification pass. Never takes the usable count below 20; when
/// more channels fail than can be dropped, the worst go first.
pub fn update_afh(
    map: &AfhMap,
    stats: &mut ChannelStats,
    policy: &AfhPolicy,
    now: u64,
    probe: &mut ProbeState,
) -> AfhUpdate {
    if probe.marked_at.len() != NUM_CHANNELS {
        probe.marked_at = vec![None; NUM_CHANNELS];
    }
    stats.prune(now, policy.window_slots);
    let mut next = *map;
    let mut failing_chs: Vec<(f64, u8)> = (0..NUM_CHANNELS as u8)
        .filter(|ch| map.is_usable(*ch))
        .filter_map(|ch| {
            let q = stats.quality(ch);
            failing(&q, policy).then(|| (q.per().max(q.interference_fraction()), ch))
        })
        .collect();
    failing_chs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut newly_bad = Vec::new();
    for (_, ch) in failing_chs {
        if next.usable_count() <= MIN_USABLE_CHANNELS {
            break;
        }
        next.set(ch, ChannelClass::Bad).expect("usable count checked above");
        probe.marked_at[ch as usize] = Some(now);
        newly_bad.push(ch);
    }

    let mut restored = Vec::new();
    if now >= probe.next_probe {
        let oldest = next
            .bad_channels()
            .into_iter()
            .filter(|ch| !newly_bad.contains(ch))
            .min_by_key(|ch| (probe.marked_at[*ch as usize].unwrap_or(0), *ch));
        if let Some(ch) = oldest {
            next.set(ch, ChannelClass::Unknown)
                .expect("adding a channel cannot underflow");
            probe.marked_at[ch as usize] = None;
            stats.clear(ch);
            restored.push(ch);
            probe.next_probe = now + policy.probe_interval_slots;
        }
    }
    newly_bad.sort_unstable();
    AfhUpdate {
        map: next,
        newly_bad,
        restored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossy(chs: impl Iterator<Item = u8>, now: u64) -> ChannelStats {
        let mut s = ChannelStats::new();
        let chs: Vec<u8> = chs.collect();
        for ch in 0..NUM_CHANNELS as u8 {
            for i in 0..10 {
                s.record(ch, now - 100 + i, chs.contains(&ch) && i % 5 != 0, false);
            }
        }
        s
    }

    fn no_probe() -> ProbeState {
        ProbeState {
            next_probe: u64::MAX,
            marked_at: Vec::new(),
        }
    }

    #[test]
    fn marks_lossy_block() {
        let mut stats = lossy(20..=41, 10_000);
        let up = update_afh(
            &AfhMap::all_unknown(),
            &mut stats,
            &AfhPolicy::aggressive(),
            10_000,
            &mut no_probe(),
        );
        assert_eq!(up.newly_bad, (20..=41).collect::<Vec<_>>());
        assert_eq!(up.map.usable_count(), 57);
    }

    #[test]
    fn floor_of_twenty() {
        let mut stats = lossy(0..70, 10_000);
        let up = update_afh(
            &AfhMap::all_unknown(),
            &mut stats,
            &AfhPolicy::aggressive(),
            10_000,
            &mut no_probe(),
        );
        assert_eq!(up.newly_bad.len(), 59);
        assert_eq!(up.map.usable_count(), 20);
    }

    #[test]
    fn clean_stays_unknown() {
        let mut stats = lossy(std::iter::empty(), 10_000);
        let up = update_afh(
            &AfhMap::all_unknown(),
            &mut stats,
            &AfhPolicy::cooperative(),
            10_000,
            &mut ProbeState::default(),
        );
        assert!(!up.changed());
    }

    #[test]
    fn energy_only_with_cooperative() {
        let mut s = ChannelStats::new();
        for i in 0..10 {
            s.record(5, 900 + i, false, true);
        }
        let agg = update_afh(
            &AfhMap::all_unknown(),
            &mut s.clone(),
            &AfhPolicy::aggressive(),
            1000,
            &mut no_probe(),
        );
        assert!(agg.newly_bad.is_empty());
        let coop = update_afh(
            &AfhMap::all_unknown(),
            &mut s,
            &AfhPolicy::cooperative(),
            1000,
            &mut no_probe(),
        );
        assert_eq!(coop.newly_bad, vec![5]);
    }

    #[test]
    fn probe_restores_oldest() {
        let map = AfhMap::with_bad([3u8, 4]).unwrap();
        let mut probe = ProbeState {
            next_probe: 0,
            marked_at: vec![None; NUM_CHANNELS],
        };
        probe.marked_at[3] = Some(50);
        probe.marked_at[4] = Some(10);
        let up = update_afh(
            &map,
            &mut ChannelStats::new(),
            &AfhPolicy::aggressive(),
            100,
            &mut probe,
        );
        assert_eq!(up.restored, vec![4]);
        assert_eq!(probe.next_probe, 3300);
    }
}
