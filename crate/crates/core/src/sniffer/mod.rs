//! The passive observer.
//!
//! One capture radio either sits on a channel, sweeps, or runs the full
//! pipeline: Clock6 (and the UAP if unknown) from whitening, CLK27..1 by
//! hop-sequence matching, then following the piconet slot by slot. A
//! separate survey radio sweeps all channels and feeds the channel map
//! estimate that acquisition and following hop with.
//!
//! The sniffer has its own crystal. Slot positions are measured on the
//! local clock and re-anchored on every packet heard.

mod acquisition;
mod afh_inference;
mod console;
mod metrics;
mod recovery;
mod single_channel;

use std::collections::VecDeque;

use thiserror::Error;

pub use acquisition::{Acquisition, ChannelObservation, ClockSpace};
pub use afh_inference::{infer_afh_map, ChannelTally, Scout, ScoutConfig};
pub use console::{afh_map_bits, hex_prefix, Console};
pub use metrics::RunMetrics;
pub use recovery::{
    clock6_candidates, clock6_uap_pairs, has_checkable_crc, recover_clock6_uap, recover_uap, ObservedFrame,
    RecoveryError,
};
pub use single_channel::{analytic_any, single_channel_probability_check, union_bound, SingleChannelReport};

use crate::baseband::{parse_wire, AfhMap, BasebandPacket, ChannelClass, PacketType, ParseResult, NUM_CHANNELS};
use crate::hopping::{HopAddress, HopKernel, HopSelector};
use crate::medium::{Emitter, Outcome, Transmission};
use crate::piconet::AirPacket;
use crate::{SLOTS_PER_SECOND, SLOT_US};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnifferMode {
    SingleChannel(u8),
    Scan,
    Follow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnifferConfig {
    pub mode: SnifferMode,
    pub known_lap: Option<u32>,
    pub known_uap: Option<u8>,
    pub time_bound_s: u64,
    /// Channel map estimates per second.
    pub survey_rate: u32,
    pub kernel: HopKernel,
    pub clock_space: ClockSpace,
    /// Where acquisition starts listening.
    pub acquisition_channel: u8,
    /// Move to another channel after this long without a packet.
    pub rotate_after_slots: u64,
    pub drift_ppm: f64,
    /// Local time at the first slot, in µs.
    pub phase_us: f64,
    /// Observations a unique candidate must survive before lock.
    pub confirm_observations: u32,
    pub interval_slots: u64,
    /// Consecutive empty intervals that drop the lock.
    pub lost_lock_intervals: u32,
    pub miss_window: usize,
    pub miss_limit: usize,
    pub scout: ScoutConfig,
    pub start_epoch: u64,
    pub hires: bool,
}

impl Default for SnifferConfig {
    fn default() -> Self {
        Self {
            mode: SnifferMode::Follow,
            known_lap: None,
            known_uap: None,
            time_bound_s: 180,
            survey_rate: 1,
            kernel: HopKernel::BasicSpec,
            clock_space: ClockSpace::Full,
            acquisition_channel: 39,
            rotate_after_slots: 2 * SLOTS_PER_SECOND,
            drift_ppm: 0.0,
            phase_us: 0.0,
            confirm_observations: 3,
            interval_slots: 100,
            lost_lock_intervals: 16,
            miss_window: 79,
            miss_limit: 59,
            scout: ScoutConfig::default(),
            start_epoch: 0,
            hires: false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SnifferError {
    #[error("follow mode needs the LAP")]
    MissingLap,
    #[error("channel {0} out of range")]
    BadChannel(u8),
    #[error("survey rate must be 1..=1600 per second")]
    BadSurveyRate,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CaptureOutcome {
    Decoded(BasebandPacket),
    DecodedNull,
    DecodedPoll,
    /// Recognised as the piconet's but not recovered.
    FailedDecode,
    /// EDR payload.
    Undecodable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaptureRecord {
    /// Local time at the packet start, µs.
    pub sim_time: f64,
    /// Simulation slot the packet started in.
    pub slot: u64,
    pub channel: u8,
    pub outcome: CaptureOutcome,
    /// CLK27..1 the sniffer assigned to the slot.
    pub clock27: u32,
}

#[derive(Clone, Debug, Default)]
pub struct SnifferOutput {
    pub console: String,
    pub afhmap: String,
    pub metrics: RunMetrics,
    pub records: Vec<CaptureRecord>,
}

#[derive(Clone, Copy, Debug)]
struct Timebase {
    local_us: f64,
    rel: i64,
}

impl Timebase {
    fn rel_at(&self, local_us: f64) -> i64 {
        self.rel + ((local_us - self.local_us) / SLOT_US as f64).round() as i64
    }
}

#[derive(Clone, Debug)]
struct Lock {
    selector: HopSelector,
    space: ClockSpace,
    base: u32,
    ref_rel: i64,
}

impl Lock {
    fn clock_at(&self, rel: i64) -> u32 {
        self.space.wrap(self.base as i64 + rel - self.ref_rel)
    }
}

#[derive(Clone, Debug)]
enum Phase {
    Passive,
    Clock6 {
        frames: Vec<ObservedFrame>,
        obs: Vec<ChannelObservation>,
        alive: Option<Vec<u8>>,
    },
    Clock27 {
        /// Clock6 at rel slot 0.
        clock6: u8,
        acq: Option<Acquisition>,
        backlog: Vec<ChannelObservation>,
        confirmed: u32,
    },
    Follow {
        lock: Lock,
        since: u64,
        heard: bool,
        empty_run: u32,
        misses: VecDeque<bool>,
    },
}

#[derive(Clone, Debug)]
pub struct Sniffer {
    cfg: SnifferConfig,
    start_slot: u64,
    console: Console,
    afhmap: String,
    metrics: RunMetrics,
    records: Vec<CaptureRecord>,
    scout: Scout,
    estimate: AfhMap,
    survey_period: u64,
    next_survey: u64,
    tb: Option<Timebase>,
    phase: Phase,
    uap: Option<u8>,
    tuned: VecDeque<(u64, u8)>,
    acq_channel: u8,
    last_packet_slot: u64,
    now_slot: u64,
    ended: bool,
}

impl Sniffer {
    pub fn new(cfg: SnifferConfig, start_slot: u64) -> Result<Self, SnifferError> {
        if cfg.mode == SnifferMode::Follow && cfg.known_lap.is_none() {
            return Err(SnifferError::MissingLap);
        }
        if let SnifferMode::SingleChannel(ch) = cfg.mode {
            if ch as usize >= NUM_CHANNELS {
                return Err(SnifferError::BadChannel(ch));
            }
        }
        if cfg.acquisition_channel as usize >= NUM_CHANNELS {
            return Err(SnifferError::BadChannel(cfg.acquisition_channel));
        }
        if cfg.survey_rate == 0 || cfg.survey_rate as u64 > SLOTS_PER_SECOND {
            return Err(SnifferError::BadSurveyRate);
        }
        let mut console = Console::new(cfg.start_epoch, cfg.hires);
        let ch = match cfg.mode {
            SnifferMode::SingleChannel(c) => c,
            _ => cfg.acquisition_channel,
        };
        let lap = cfg.known_lap.map_or("unknown".to_string(), |l| format!("{l:06x}"));
        let uap = cfg.known_uap.map_or("unknown".to_string(), |u| format!("{u:02x}"));
        console.line(
            cfg.phase_us,
            &format!("ubertooth-rx capture start LAP={lap} UAP={uap} ch={ch}"),
        );
        let metrics = RunMetrics {
            start_time: console.seconds(cfg.phase_us),
            ..RunMetrics::default()
        };
        let phase = match cfg.mode {
            SnifferMode::Follow => Phase::Clock6 {
                frames: Vec::new(),
                obs: Vec::new(),
                alive: None,
            },
            _ => Phase::Passive,
        };
        let survey_period = SLOTS_PER_SECOND / cfg.survey_rate as u64;
        Ok(Self {
            scout: Scout::new(cfg.scout, cfg.survey_rate),
            estimate: AfhMap::all_unknown(),
            survey_period,
            next_survey: start_slot + survey_period,
            uap: cfg.known_uap,
            acq_channel: cfg.acquisition_channel,
            console,
            afhmap: String::new(),
            metrics,
            records: Vec::new(),
            tb: None,
            phase,
            tuned: VecDeque::new(),
            last_packet_slot: start_slot,
            now_slot: start_slot,
            ended: false,
            start_slot,
            cfg,
        })
    }

    pub fn config(&self) -> &SnifferConfig {
        &self.cfg
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn records(&self) -> &[CaptureRecord] {
        &self.records
    }

    pub fn estimate(&self) -> &AfhMap {
        &self.estimate
    }

    pub fn console(&self) -> &str {
        self.console.text()
    }

    pub fn is_locked(&self) -> bool {
        matches!(self.phase, Phase::Follow { .. })
    }

    pub fn is_done(&self) -> bool {
        self.ended
    }

    /// UAP in use: configured or recovered.
    pub fn uap(&self) -> Option<u8> {
        self.uap
    }

    /// CLK27..1 the sniffer currently assigns to `slot`, when locked.
    pub fn predicted_clock(&self, slot: u64) -> Option<u32> {
        match (&self.phase, &self.tb) {
            (Phase::Follow { lock, .. }, Some(tb)) => Some(lock.clock_at(tb.rel_at(self.local_us(slot)))),
            _ => None,
        }
    }

    /// Local time at the start of `slot`, µs.
    pub fn local_us(&self, slot: u64) -> f64 {
        let n = slot as f64 - self.start_slot as f64;
        self.cfg.phase_us + n * SLOT_US as f64 * (1.0 + self.cfg.drift_ppm * 1e-6)
    }

    fn lap(&self) -> u32 {
        self.cfg.known_lap.unwrap_or(0)
    }

    fn is_target(&self, e: &Emitter) -> bool {
        matches!(e, Emitter::Bluetooth(l) if Some(*l) == self.cfg.known_lap)
    }

    /// Processes one slot of the medium. `outcomes` pairs with
    /// `transmissions`; `completed` is the piconet packet that ended in
    /// this slot, if any.
    pub fn on_slot(
        &mut self,
        slot: u64,
        transmissions: &[Transmission],
        outcomes: &[Outcome],
        completed: Option<&AirPacket>,
    ) {
        if self.ended || slot < self.start_slot {
            return;
        }
        self.now_slot = slot;
        let local = self.local_us(slot);
        if local >= self.cfg.time_bound_s as f64 * 1e6 {
            self.end(local);
            return;
        }
        if slot >= self.next_survey {
            self.next_survey += self.survey_period;
            self.estimate = self.scout.roll();
            let line = format!("{} {}\n", self.console.systime(local), afh_map_bits(&self.estimate));
            self.afhmap.push_str(&line);
        }
        self.survey(slot, transmissions, outcomes);

        let ch = self.tune(slot, local);
        self.tuned.push_back((slot, ch));
        while self.tuned.len() > 8 {
            self.tuned.pop_front();
        }
        if let Some(air) = completed {
            let lap_ok = air.frame.lap() == self.cfg.known_lap || self.cfg.known_lap.is_none();
            let on = self
                .tuned
                .iter()
                .any(|(s, c)| *s == air.start_slot && *c == air.channel);
            if lap_ok && on {
                self.heard(air);
            }
        }
        self.housekeeping(slot, local);
    }

    fn survey(&mut self, slot: u64, transmissions: &[Transmission], outcomes: &[Outcome]) {
        let ch = self.scout.channel(slot - self.start_slot);
        let mut packet = false;
        let mut noisy = false;
        for (t, o) in transmissions.iter().zip(outcomes) {
            if !t.channels.contains(&ch) {
                continue;
            }
            if self.is_target(&t.emitter) {
                packet |= o.received();
            } else if t.power_dbm >= self.cfg.scout.noise_threshold_dbm {
                noisy = true;
            }
        }
        self.scout.listen(ch, packet, noisy);
    }

    fn tune(&self, slot: u64, local: f64) -> u8 {
        match (&self.cfg.mode, &self.phase) {
            (SnifferMode::SingleChannel(c), _) => *c,
            (SnifferMode::Scan, _) => self
                .scout
                .channel(slot - self.start_slot + 40 * self.cfg.scout.dwell_slots),
            (_, Phase::Follow { lock, .. }) => {
                let rel = self.tb.map_or(0, |tb| tb.rel_at(local));
                lock.selector.channel(lock.clock_at(rel))
            }
            _ => self.acq_channel,
        }
    }

    fn selector(&self, uap: u8) -> HopSelector {
        let sel = HopSelector::new(self.cfg.kernel, HopAddress::new(uap, self.lap()), Some(&self.estimate));
        sel.unwrap_or_else(|_| {
            HopSelector::new(self.cfg.kernel, HopAddress::new(uap, self.lap()), None).expect("basic mode")
        })
    }

    fn heard(&mut self, air: &AirPacket) {
        let local = self.local_us(air.start_slot);
        self.last_packet_slot = air.start_slot;
        if !air.outcome.received() && !matches!(self.phase, Phase::Follow { .. }) {
            // Access code lost in the collision.
            return;
        }
        let rel = match self.tb {
            Some(tb) => tb.rel_at(local),
            None => 0,
        };
        if air.outcome.received() {
            self.tb = Some(Timebase { local_us: local, rel });
        }
        if !matches!(self.phase, Phase::Follow { .. }) {
            let clkn = (local / (SLOT_US as f64 / 2.0)).floor() as u64 & 0x0fff_ffff;
            self.console.line(
                local,
                &format!(
                    "ch={} LAP={:06x} err=0 clkn={} s=-60 n=-90 snr=30",
                    air.channel,
                    self.lap(),
                    clkn
                ),
            );
        }
        let obs = ChannelObservation {
            rel_slot: rel,
            channel: air.channel,
        };
        match std::mem::replace(&mut self.phase, Phase::Passive) {
            Phase::Passive => {}
            Phase::Clock6 {
                mut frames,
                obs: mut obs_list,
                alive,
            } => {
                frames.push(ObservedFrame {
                    frame: air.frame.clone(),
                    rel_slot: rel,
                });
                obs_list.push(obs);
                self.phase = self.clock6_step(frames, obs_list, alive, local);
            }
            Phase::Clock27 {
                clock6,
                acq,
                backlog,
                confirmed,
            } => {
                self.phase = self.clock27_step(clock6, acq, backlog, confirmed, obs, local);
            }
            Phase::Follow {
                lock,
                since,
                empty_run,
                misses,
                ..
            } => {
                let clk = lock.clock_at(rel);
                self.capture(air, clk, local);
                self.phase = Phase::Follow {
                    lock,
                    since,
                    heard: true,
                    empty_run,
                    misses,
                };
            }
        }
    }

    fn clock6_step(
        &mut self,
        mut frames: Vec<ObservedFrame>,
        obs: Vec<ChannelObservation>,
        alive: Option<Vec<u8>>,
        local: f64,
    ) -> Phase {
        let last = frames.last().expect("just pushed").clone();
        let found = match self.uap {
            Some(uap) => {
                let shift = last.rel_slot.rem_euclid(64) as u8;
                let here: Vec<u8> = clock6_candidates(&last.frame, uap)
                    .into_iter()
                    .map(|c| (c + 64 - shift) % 64)
                    .collect();
                let alive: Vec<u8> = match alive {
                    None => here,
                    Some(prev) => prev.into_iter().filter(|c| here.contains(c)).collect(),
                };
                match alive.len() {
                    1 => Some(alive[0]),
                    0 => {
                        return Phase::Clock6 {
                            frames: Vec::new(),
                            obs: Vec::new(),
                            alive: None,
                        }
                    }
                    _ => {
                        return Phase::Clock6 {
                            frames,
                            obs,
                            alive: Some(alive),
                        }
                    }
                }
            }
            None => {
                if !has_checkable_crc(&last.frame) {
                    None
                } else {
                    match recover_clock6_uap(&frames) {
                        Ok((c6, uap)) => {
                            self.uap = Some(uap);
                            self.console.line(local, &format!("UAP = 0x{uap:02x}"));
                            Some(c6)
                        }
                        Err(RecoveryError::Inconsistent) => {
                            frames.clear();
                            None
                        }
                        Err(_) => None,
                    }
                }
            }
        };
        let Some(c6) = found else {
            return Phase::Clock6 {
                frames,
                obs,
                alive: None,
            };
        };
        let now = (c6 as i64 + last.rel_slot).rem_euclid(64);
        self.console.line(local, &format!("Clock 6 = {now}"));
        let mut phase = Phase::Clock27 {
            clock6: c6,
            acq: None,
            backlog: obs[..obs.len() - 1].to_vec(),
            confirmed: 0,
        };
        if let Phase::Clock27 {
            clock6,
            acq,
            backlog,
            confirmed,
        } = phase
        {
            phase = self.clock27_step(clock6, acq, backlog, confirmed, *obs.last().expect("nonempty"), local);
        }
        phase
    }

    fn clock27_step(
        &mut self,
        clock6: u8,
        acq: Option<Acquisition>,
        mut backlog: Vec<ChannelObservation>,
        mut confirmed: u32,
        obs: ChannelObservation,
        local: f64,
    ) -> Phase {
        let uap = self.uap.expect("clock6 phase sets the UAP");
        let acq = match acq {
            Some(mut a) => {
                let before = a.remaining();
                a.observe(obs);
                if a.remaining() == 0 {
                    None
                } else {
                    if before == 1 {
                        confirmed += 1;
                    }
                    Some(a)
                }
            }
            None => None,
        };
        let acq = match acq {
            Some(a) => a,
            None => {
                let c6 = (clock6 as i64 + obs.rel_slot).rem_euclid(64) as u8;
                let mut a = Acquisition::start(self.cfg.clock_space, self.selector(uap), c6, obs);
                self.metrics.clk27_guesses += 1;
                self.console
                    .line(local, &format!("{} initial CLK1-27 candidates", a.initial_count()));
                for b in backlog.drain(..) {
                    a.observe(b);
                }
                confirmed = 0;
                if a.remaining() == 0 {
                    return Phase::Clock27 {
                        clock6,
                        acq: None,
                        backlog,
                        confirmed,
                    };
                }
                a
            }
        };
        match acq.unique() {
            Some(c) if confirmed >= self.cfg.confirm_observations => {
                let lock = Lock {
                    selector: self.selector(uap),
                    space: acq.space(),
                    base: c,
                    ref_rel: acq.ref_slot(),
                };
                let clk = lock.clock_at(obs.rel_slot);
                self.console.line(local, &format!("Acquired CLK1-27 = 0x{clk:07x}"));
                if self.metrics.clk27_acquired.is_none() {
                    self.metrics.clk27_acquired = Some(self.console.seconds(local));
                }
                Phase::Follow {
                    lock,
                    since: self.now_slot,
                    heard: false,
                    empty_run: 0,
                    misses: VecDeque::new(),
                }
            }
            _ => Phase::Clock27 {
                clock6,
                acq: Some(acq),
                backlog,
                confirmed,
            },
        }
    }

    fn capture(&mut self, air: &AirPacket, clk: u32, local: f64) {
        let uap = self.uap.unwrap_or(0);
        let result = if air.outcome.received() {
            parse_wire(&air.frame, (clk & 0x3f) as u8, uap)
        } else {
            ParseResult::CrcMismatch
        };
        let head = format!("ch={} LAP={:06x} clk1=0x{clk:07x}", air.channel, self.lap());
        let outcome = match result {
            ParseResult::Decoded(p) => {
                self.metrics.packets_decoded += 1;
                if self.metrics.first_decode.is_none() {
                    self.metrics.first_decode = Some(self.console.seconds(local));
                }
                let body = match p.payload.is_empty() {
                    true => format!("{head} decoded type={} len=0", p.ptype.name()),
                    false => format!(
                        "{head} decoded type={} len={} data={}",
                        p.ptype.name(),
                        p.payload.len(),
                        hex_prefix(&p.payload, 8)
                    ),
                };
                self.console.line(local, &body);
                match p.ptype {
                    PacketType::Null => {
                        self.metrics.null_packets += 1;
                        CaptureOutcome::DecodedNull
                    }
                    PacketType::Poll => {
                        self.metrics.poll_packets += 1;
                        CaptureOutcome::DecodedPoll
                    }
                    t => {
                        if t.is_user_data() {
                            self.metrics.good_data_packets += 1;
                            self.metrics.good_data_bytes += p.payload.len() as u64;
                        }
                        CaptureOutcome::Decoded(p)
                    }
                }
            }
            ParseResult::Undecodable => {
                self.metrics.failed_decodes += 1;
                self.console.line(local, &format!("{head} failed (EDR)"));
                CaptureOutcome::Undecodable
            }
            _ => {
                self.metrics.failed_decodes += 1;
                self.console.line(local, &format!("{head} failed"));
                CaptureOutcome::FailedDecode
            }
        };
        self.records.push(CaptureRecord {
            sim_time: local,
            slot: air.start_slot,
            channel: air.channel,
            outcome,
            clock27: clk,
        });
    }

    fn housekeeping(&mut self, slot: u64, local: f64) {
        let (interval, limit_run, window, limit) = (
            self.cfg.interval_slots,
            self.cfg.lost_lock_intervals,
            self.cfg.miss_window,
            self.cfg.miss_limit,
        );
        let reset = match &mut self.phase {
            Phase::Follow {
                since,
                heard,
                empty_run,
                misses,
                ..
            } => {
                if slot <= *since || !(slot - *since).is_multiple_of(interval) {
                    return;
                }
                let hit = std::mem::take(heard);
                *empty_run = if hit { 0 } else { *empty_run + 1 };
                misses.push_back(!hit);
                while misses.len() > window {
                    misses.pop_front();
                }
                let missed = misses.iter().filter(|m| **m).count();
                let lost = *empty_run >= limit_run || (misses.len() >= window && missed > limit);
                if lost {
                    self.console.line(local, "lost lock");
                }
                lost
            }
            Phase::Clock6 { .. } | Phase::Clock27 { .. } => {
                if slot - self.last_packet_slot < self.cfg.rotate_after_slots {
                    return;
                }
                let mut c = self.acq_channel;
                for _ in 0..NUM_CHANNELS {
                    c = (c + 1) % NUM_CHANNELS as u8;
                    if self.estimate.class(c) != ChannelClass::Bad {
                        break;
                    }
                }
                self.acq_channel = c;
                true
            }
            Phase::Passive => false,
        };
        if reset {
            // Slot positions from before the gap are no longer trusted.
            self.tb = None;
            self.last_packet_slot = slot;
            self.phase = Phase::Clock6 {
                frames: Vec::new(),
                obs: Vec::new(),
                alive: None,
            };
        }
    }

    fn end(&mut self, local: f64) {
        if !self.ended {
            self.ended = true;
            self.console.line(local, "capture end");
        }
    }

    /// Closes the capture at `slot` if the time bound has not already.
    pub fn finish(mut self, slot: u64) -> SnifferOutput {
        let local = self.local_us(slot).min(self.cfg.time_bound_s as f64 * 1e6);
        self.end(local);
        SnifferOutput {
            console: self.console.into_text(),
            afhmap: self.afhmap,
            metrics: self.metrics.normalized(),
            records: self.records,
        }
    }
}
