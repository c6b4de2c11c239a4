//! The connected piconet: one master, one slave, slot by slot.
//!
//! The master transmits when its clock has CLK1 = 0 and the channel is
//! free. A slave answers in the slot right after a master packet it
//! received, so multi-slot packets keep the parity. Payload packets are
//! retransmitted until acknowledged; POLL and NULL are not.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::afh_policy::{update_afh, AfhPolicy, ChannelStats, ProbeState};
use super::device::{Device, Role};
use super::pairing::PairingRun;
use super::traffic::{generate_traffic, slave_control_packet, TrafficProfile};
use crate::baseband::{
    build_wire, parse_wire_as_peer, AfhMap, BasebandPacket, ChannelClass, ClockState, HeaderFlags, LmpOpcode,
    PacketType, ParseResult, WireFrame, NUM_CHANNELS,
};
use crate::hopping::{HopKernel, HopSelector};
use crate::medium::{Outcome, Transmission};

#[derive(Clone, Debug)]
pub struct PiconetConfig {
    pub kernel: HopKernel,
    pub traffic: TrafficProfile,
    /// `None` runs with basic hopping throughout.
    pub afh: Option<AfhPolicy>,
    pub lt_addr: u8,
    /// Range of processing delays between pairing messages, in slots.
    pub lmp_gap: (u64, u64),
    /// Timing error left after a slave resyncs, in µs.
    pub resync_jitter_us: f64,
    pub seed: u64,
}

impl Default for PiconetConfig {
    fn default() -> Self {
        Self {
            kernel: HopKernel::BasicSpec,
            traffic: TrafficProfile::idle(),
            afh: None,
            lt_addr: 1,
            lmp_gap: (16, 200),
            resync_jitter_us: 1.0,
            seed: 0,
        }
    }
}

/// A packet as it went over the air.
#[derive(Clone, Debug, PartialEq)]
pub struct AirPacket {
    pub start_slot: u64,
    /// Master clock at the first slot.
    pub clock: ClockState,
    pub channel: u8,
    pub sender: Role,
    pub packet: BasebandPacket,
    pub frame: WireFrame,
    /// Worst outcome over all occupied slots.
    pub outcome: Outcome,
    pub retransmission: bool,
}

impl AirPacket {
    pub fn slots(&self) -> u64 {
        self.packet.slots() as u64
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlotReport {
    pub slot: u64,
    pub clock: ClockState,
    pub transmitter: Option<Role>,
    pub channel: Option<u8>,
    /// A packet started in this slot.
    pub started: bool,
    /// Set in the last slot of a packet.
    pub completed: Option<AirPacket>,
    /// The addressed device received the completed packet.
    pub delivered: bool,
    pub afh_applied: bool,
}

/// Delivery counters for user data, as seen by the legitimate receiver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinkCounters {
    pub data_generated: u64,
    pub data_delivered: u64,
    pub data_bytes_generated: u64,
    pub data_bytes_delivered: u64,
    pub edr_generated: u64,
    pub retransmissions: u64,
    pub packets_sent: u64,
}

#[derive(Clone, Debug)]
struct OnAir {
    air: AirPacket,
    end_slot: u64,
    foreign_energy: bool,
    /// Channel the addressed device listened on.
    rx_channel: u8,
}

#[derive(Clone, Debug, Default)]
struct Arq {
    pending: Option<BasebandPacket>,
    seqn: bool,
    /// ARQN to put in the next outgoing header.
    ack_out: bool,
    /// SEQN of the last payload packet accepted from the peer.
    last_rx_seqn: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct Piconet {
    pub master: Device,
    pub slave: Device,
    cfg: PiconetConfig,
    rng: ChaCha8Rng,
    slot: u64,
    /// Master clock at `slot`.
    clock: ClockState,
    master_sel: HopSelector,
    slave_sel: HopSelector,
    on_air: Option<OnAir>,
    slave_responds: bool,
    last_master_ch: Option<u8>,
    master_queue: VecDeque<BasebandPacket>,
    slave_queue: VecDeque<BasebandPacket>,
    master_arq: Arq,
    slave_arq: Arq,
    last_master_tx: Option<u64>,
    stats: ChannelStats,
    probe: ProbeState,
    next_eval: u64,
    /// (instant slot, map) announced by the master.
    master_switch: Option<(u64, AfhMap)>,
    slave_switch: Option<(u64, AfhMap)>,
    pairing: Option<PairingRun>,
    counters: LinkCounters,
    history_bad: Vec<(u64, usize)>,
    switched: bool,
}

fn selector(kernel: HopKernel, master: &Device, map: &AfhMap) -> HopSelector {
    HopSelector::new(kernel, master.addr.into(), Some(map)).expect("maps always keep 20 channels")
}

impl Piconet {
    /// A piconet already in the connected state. The master clock is
    /// rounded down to a master slot.
    pub fn connected(mut master: Device, mut slave: Device, cfg: PiconetConfig) -> Self {
        let clock = ClockState::new(master.clock.raw() & !0x3);
        master.clock = clock;
        master.role = Role::Master;
        master.clock_offset_to_master = 0;
        slave.role = Role::Slave;
        slave.clock_offset_to_master = clock.offset_from(slave.clock) as i64;
        slave.afh_map = master.afh_map;
        let master_sel = selector(cfg.kernel, &master, &master.afh_map);
        let slave_sel = master_sel.clone();
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            slot: 0,
            clock,
            master_sel,
            slave_sel,
            on_air: None,
            slave_responds: false,
            last_master_ch: None,
            master_queue: VecDeque::new(),
            slave_queue: VecDeque::new(),
            master_arq: Arq::default(),
            slave_arq: Arq::default(),
            last_master_tx: None,
            stats: ChannelStats::new(),
            probe: ProbeState {
                next_probe: cfg.afh.map_or(u64::MAX, |p| p.probe_interval_slots),
                marked_at: vec![None; NUM_CHANNELS],
            },
            next_eval: cfg.afh.map_or(u64::MAX, |p| p.eval_interval_slots),
            master_switch: None,
            slave_switch: None,
            pairing: None,
            counters: LinkCounters::default(),
            history_bad: Vec::new(),
            switched: false,
            master,
            slave,
            cfg,
        }
    }

    pub fn config(&self) -> &PiconetConfig {
        &self.cfg
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn clock(&self) -> ClockState {
        self.clock
    }

    pub fn lap(&self) -> u32 {
        self.master.addr.lap
    }

    pub fn master_map(&self) -> &AfhMap {
        &self.master.afh_map
    }

    pub fn slave_map(&self) -> &AfhMap {
        &self.slave.afh_map
    }

    pub fn counters(&self) -> LinkCounters {
        self.counters
    }

    /// (slot, usable count) at every master map change.
    pub fn map_history(&self) -> &[(u64, usize)] {
        &self.history_bad
    }

    pub fn set_traffic(&mut self, t: TrafficProfile) {
        self.cfg.traffic = t;
    }

    pub fn pairing(&self) -> Option<&PairingRun> {
        self.pairing.as_ref()
    }

    pub(crate) fn start_pairing(&mut self, run: PairingRun) {
        self.pairing = Some(run);
    }

    pub(crate) fn take_pairing(&mut self) -> Option<PairingRun> {
        self.pairing.take()
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Channel the master uses at master clock `clock`.
    pub fn master_channel(&self, clock: ClockState) -> u8 {
        self.master_sel.channel(clock.clock27())
    }

    pub fn enqueue(&mut self, from: Role, p: BasebandPacket) {
        match from {
            Role::Master => self.master_queue.push_back(p),
            _ => self.slave_queue.push_back(p),
        }
    }

    fn apply_switches(&mut self) -> bool {
        let mut applied = false;
        if let Some((at, map)) = self.master_switch {
            if self.slot >= at {
                self.master.afh_map = map;
                self.master_sel = selector(self.cfg.kernel, &self.master, &map);
                self.master_switch = None;
                self.history_bad.push((self.slot, map.usable_count()));
                applied = true;
            }
        }
        if let Some((at, map)) = self.slave_switch {
            if self.slot >= at {
                self.slave.afh_map = map;
                self.slave_sel = selector(self.cfg.kernel, &self.master, &map);
                self.slave_switch = None;
                applied = true;
            }
        }
        applied
    }

    fn evaluate_afh(&mut self) {
        let Some(policy) = self.cfg.afh else { return };
        if self.slot < self.next_eval || self.master_switch.is_some() {
            return;
        }
        self.next_eval = self.slot + policy.eval_interval_slots;
        let up = update_afh(
            &self.master.afh_map,
            &mut self.stats,
            &policy,
            self.slot,
            &mut self.probe,
        );
        if !up.changed() {
            return;
        }
        let instant = self.slot + policy.instant_delay_slots;
        self.master_switch = Some((instant, up.map));
        let mut params = self
            .clock
            .add_slots(policy.instant_delay_slots as u32)
            .clock27()
            .to_le_bytes()
            .to_vec();
        params.extend_from_slice(&encode_map(&up.map));
        let lmp = BasebandPacket::lmp(self.lap(), self.cfg.lt_addr, LmpOpcode::SetAfh, &params);
        self.master_queue.push_front(lmp);
    }

    fn next_master_packet(&mut self) -> Option<(BasebandPacket, bool)> {
        if let Some(p) = &self.master_arq.pending {
            return Some((p.clone(), true));
        }
        let (slot, lap, lt) = (self.slot, self.lap(), self.cfg.lt_addr);
        if let Some(pr) = self.pairing.as_mut() {
            if let Some(p) = pr.due(Role::Master, slot, lap, lt) {
                self.master_queue.push_back(p);
            }
        }
        if let Some(p) = self.master_queue.pop_front() {
            return Some((p, false));
        }
        if let Some(p) = generate_traffic(&self.cfg.traffic, self.lap(), self.cfg.lt_addr, &mut self.rng) {
            self.counters.data_generated += 1;
            self.counters.data_bytes_generated += p.payload.len() as u64;
            if p.modulation == crate::baseband::Modulation::Edr {
                self.counters.edr_generated += 1;
            }
            return Some((p, false));
        }
        let wants_slave = self
            .pairing
            .as_ref()
            .is_some_and(|pr| pr.has_due(Role::Slave, self.slot))
            || !self.slave_queue.is_empty();
        if wants_slave
            || self
                .last_master_tx
                .is_none_or(|t| self.slot >= t + self.cfg.traffic.poll_interval as u64)
        {
            return Some((BasebandPacket::poll(self.lap(), self.cfg.lt_addr), false));
        }
        None
    }

    fn next_slave_packet(&mut self) -> (BasebandPacket, bool) {
        if let Some(p) = &self.slave_arq.pending {
            return (p.clone(), true);
        }
        let (slot, lap, lt) = (self.slot, self.lap(), self.cfg.lt_addr);
        if let Some(pr) = self.pairing.as_mut() {
            if let Some(p) = pr.due(Role::Slave, slot, lap, lt) {
                self.slave_queue.push_back(p);
            }
        }
        if let Some(p) = self.slave_queue.pop_front() {
            return (p, false);
        }
        if self.cfg.traffic.has_stream() && self.rng.gen_bool(self.cfg.traffic.slave_control_prob) {
            return (slave_control_packet(self.lap(), self.cfg.lt_addr, &mut self.rng), false);
        }
        (BasebandPacket::null(self.lap(), self.cfg.lt_addr), false)
    }

    /// Chooses what goes on air in the current slot.
    pub fn transmit(&mut self) -> Option<Transmission> {
        if let Some(oa) = &self.on_air {
            return Some(Transmission::bluetooth(self.lap(), oa.air.channel));
        }
        self.switched |= self.apply_switches();
        let (sender, packet, retrans) = if self.slave_responds {
            self.slave_responds = false;
            let (p, r) = self.next_slave_packet();
            (Role::Slave, p, r)
        } else if self.clock.clock1() == 0 {
            self.evaluate_afh();
            let (p, r) = self.next_master_packet()?;
            (Role::Master, p, r)
        } else {
            return None;
        };
        let (arq, tx_sel, rx_sel) = match sender {
            Role::Master => (&mut self.master_arq, &self.master_sel, &self.slave_sel),
            _ => (&mut self.slave_arq, &self.slave_sel, &self.master_sel),
        };
        let mut flags = HeaderFlags {
            flow: true,
            arqn: arq.ack_out,
            seqn: arq.seqn,
        };
        if packet.ptype.has_payload() {
            if !retrans {
                arq.seqn = !arq.seqn;
                flags.seqn = arq.seqn;
                arq.pending = Some(packet.clone());
            } else {
                self.counters.retransmissions += 1;
            }
        }
        arq.ack_out = false;
        let packet = packet.with_flags(flags);
        let clk27 = self.clock.clock27();
        let channel = tx_sel.channel(clk27);
        let rx_channel = rx_sel.channel(clk27);
        let frame = build_wire(&packet, self.clock.clock6(), self.master.addr.uap)
            .expect("scheduler only builds valid packets");
        if sender == Role::Master {
            self.last_master_tx = Some(self.slot);
            self.last_master_ch = Some(channel);
        }
        self.counters.packets_sent += 1;
        let end_slot = self.slot + packet.slots() as u64;
        self.on_air = Some(OnAir {
            air: AirPacket {
                start_slot: self.slot,
                clock: self.clock,
                channel,
                sender,
                packet,
                frame,
                outcome: Outcome::Clean,
                retransmission: retrans,
            },
            end_slot,
            foreign_energy: false,
            rx_channel,
        });
        Some(Transmission::bluetooth(self.lap(), channel))
    }

    /// Feeds back the medium result for the current slot and advances.
    /// `foreign_energy` is set when another emitter was sensed on the
    /// piconet's channel above the policy threshold.
    pub fn resolve(&mut self, outcome: Option<Outcome>, foreign_energy: bool) -> SlotReport {
        let mut report = SlotReport {
            slot: self.slot,
            clock: self.clock,
            ..SlotReport::default()
        };
        if let Some(oa) = self.on_air.as_mut() {
            report.transmitter = Some(oa.air.sender);
            report.channel = Some(oa.air.channel);
            report.started = oa.air.start_slot == self.slot;
            if let Some(o) = outcome {
                oa.air.outcome = worst(oa.air.outcome, o);
            }
            oa.foreign_energy |= foreign_energy;
            if self.slot + 1 == oa.end_slot {
                let oa = self.on_air.take().expect("checked above");
                report.delivered = self.complete(&oa);
                if let (PacketType::Pairing(_), Some(pr)) = (oa.air.packet.ptype, self.pairing.as_mut()) {
                    pr.note_air(&oa.air);
                }
                report.completed = Some(oa.air);
            }
        }
        report.afh_applied = std::mem::take(&mut self.switched);
        self.slot += 1;
        self.clock = self.clock.add_slots(1);
        self.master.tick_slot();
        self.slave.tick_slot();
        report
    }

    /// Convenience for a piconet alone on the medium plus `others`.
    pub fn step_slot(&mut self, others: &[Transmission]) -> SlotReport {
        let tx = self.transmit();
        let (outcome, foreign) = match tx {
            Some(t) => {
                let mut all = vec![t];
                all.extend_from_slice(others);
                let o = crate::medium::deliver_slot(&all)[0];
                let ch = *all[0].channels.start();
                let foreign = others.iter().any(|t| t.channels.contains(&ch));
                (Some(o), foreign)
            }
            None => (None, false),
        };
        self.resolve(outcome, foreign)
    }

    fn record_stats(&mut self, ch: u8, lost: bool, interfered: bool) {
        if self.cfg.afh.is_some() && self.master.afh_map.class(ch) != ChannelClass::Bad {
            self.stats.record(ch, self.slot, lost, interfered);
        }
    }

    fn complete(&mut self, oa: &OnAir) -> bool {
        let air = &oa.air;
        let on_channel = air.channel == oa.rx_channel;
        let received = on_channel && air.outcome.received();
        match air.sender {
            Role::Master => {
                if !received {
                    self.record_stats(air.channel, true, oa.foreign_energy);
                    return false;
                }
                let parsed = parse_wire_as_peer(&air.frame, air.clock.clock6(), self.master.addr.uap);
                let ParseResult::Decoded(p) = parsed else {
                    self.record_stats(air.channel, true, oa.foreign_energy);
                    return false;
                };
                let jitter = self
                    .rng
                    .gen_range(-self.cfg.resync_jitter_us..=self.cfg.resync_jitter_us);
                self.slave.resync(jitter);
                self.slave.clock_offset_to_master = self.clock.offset_from(self.slave.clock) as i64;
                self.receive(Role::Slave, &p);
                self.slave_responds = true;
                true
            }
            _ => {
                if let Some(mch) = self.last_master_ch {
                    self.record_stats(mch, false, false);
                }
                if !received {
                    self.record_stats(oa.rx_channel, true, oa.foreign_energy);
                    return false;
                }
                let parsed = parse_wire_as_peer(&air.frame, air.clock.clock6(), self.master.addr.uap);
                let ParseResult::Decoded(p) = parsed else {
                    self.record_stats(air.channel, true, oa.foreign_energy);
                    return false;
                };
                self.record_stats(air.channel, false, oa.foreign_energy);
                self.receive(Role::Master, &p);
                true
            }
        }
    }

    /// Handles a decoded packet at `receiver`.
    fn receive(&mut self, receiver: Role, p: &BasebandPacket) {
        let own = match receiver {
            Role::Master => &mut self.master_arq,
            _ => &mut self.slave_arq,
        };
        if p.flags.arqn {
            own.pending = None;
        }
        if !p.ptype.has_payload() {
            return;
        }
        own.ack_out = true;
        if own.last_rx_seqn == Some(p.flags.seqn) {
            return;
        }
        own.last_rx_seqn = Some(p.flags.seqn);
        match p.ptype {
            PacketType::Lmp => {
                if receiver == Role::Slave && p.lmp_opcode() == Some(LmpOpcode::SetAfh) {
                    if let Some((instant, map)) = decode_set_afh(&p.payload[1..]) {
                        let delta = (instant.wrapping_sub(self.clock.clock27()) & 0x7ff_ffff) as u64;
                        let at = if delta < (1 << 26) {
                            self.slot + delta
                        } else {
                            self.slot
                        };
                        self.slave_switch = Some((at, map));
                    }
                }
            }
            PacketType::Pairing(kind) => {
                let now = self.slot;
                let gap = self.cfg.lmp_gap;
                if let Some(mut pr) = self.pairing.take() {
                    pr.on_delivered(kind, &p.payload, now, gap, &mut self.rng);
                    if let Some(keys) = pr.completed_keys() {
                        self.master.link_keys.insert(self.slave.addr, keys.0);
                        self.slave.link_keys.insert(self.master.addr, keys.1);
                    }
                    self.pairing = Some(pr);
                }
            }
            _ => {
                if receiver == Role::Slave && p.ptype.is_user_data() {
                    self.counters.data_delivered += 1;
                    self.counters.data_bytes_delivered += p.payload.len() as u64;
                }
            }
        }
    }
}

fn worst(a: Outcome, b: Outcome) -> Outcome {
    match (a, b) {
        (Outcome::Collided, _) | (_, Outcome::Collided) => Outcome::Collided,
        (Outcome::Captured, _) | (_, Outcome::Captured) => Outcome::Captured,
        _ => Outcome::Clean,
    }
}

/// 79 usable bits, channel 0 in bit 0 of byte 0.
pub fn encode_map(map: &AfhMap) -> [u8; 10] {
    let mut out = [0u8; 10];
    for ch in 0..NUM_CHANNELS {
        if map.is_usable(ch as u8) {
            out[ch / 8] |= 1 << (ch % 8);
        }
    }
    out
}

pub fn decode_set_afh(params: &[u8]) -> Option<(u32, AfhMap)> {
    if params.len() < 14 {
        return None;
    }
    let instant = u32::from_le_bytes([params[0], params[1], params[2], params[3]]) & 0x7ff_ffff;
    let used = (0..NUM_CHANNELS as u8).filter(|ch| params[4 + *ch as usize / 8] >> (ch % 8) & 1 == 1);
    Some((instant, AfhMap::with_used(used).ok()?))
}
