//! Inquiry and paging, simulated per clock tick.
//!
//! Scanners open a listen window of `scan_window_slots` every
//! `scan_interval_slots` on a channel that moves once per 1.28 s. ID
//! packets are the only thing sent by the inquirer or pager; responses go
//! out one slot later on the channel the ID arrived on.

use rand::Rng;
use thiserror::Error;

use super::device::{Device, Role};
use super::link::{Piconet, PiconetConfig};
use crate::baseband::{BasebandPacket, BdAddr, ClockState};
use crate::hopping::{inquiry_hop, inquiry_scan_hop, page_hop, page_scan_hop, GIAC_LAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanConfig {
    pub scan_window_slots: u32,
    pub scan_interval_slots: u32,
    /// Inquiry responders wait a random 0..=max_backoff slots after the
    /// first ID before answering.
    pub max_backoff_slots: u32,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            scan_window_slots: 36,
            scan_interval_slots: 2048,
            max_backoff_slots: 127,
        }
    }
}

impl ScanConfig {
    fn scanning(&self, clock: ClockState) -> bool {
        let period = 2 * self.scan_interval_slots;
        clock.raw() % period < 2 * self.scan_window_slots
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FhsResponse {
    pub bd_addr: BdAddr,
    pub clock27: u32,
    /// Inquirer tick count at reception.
    pub at_tick: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScanState {
    Scanning,
    Backoff(u64),
    /// Answers the next ID heard, on any tick.
    Armed,
    Done,
}

/// Inquires for `duration_ticks`. Devices are advanced in step with the
/// inquirer and returned in the order their FHS arrived.
pub fn run_inquiry<R: Rng>(
    inquirer: &mut Device,
    devices: &mut [Device],
    cfg: ScanConfig,
    duration_ticks: u64,
    rng: &mut R,
) -> Vec<FhsResponse> {
    let mut state = vec![ScanState::Scanning; devices.len()];
    // (tick, channel, device index)
    let mut pending: Vec<(u64, u8, usize)> = Vec::new();
    let mut sent: Vec<(u64, u8)> = Vec::new();
    let mut out = Vec::new();
    for tick in 0..duration_ticks {
        let clk = inquirer.clock;
        // Responses due now, heard if the inquirer sent on that channel two
        // ticks ago and nobody else answered on top.
        let due: Vec<(u8, usize)> = pending
            .iter()
            .filter(|(t, _, _)| *t == tick)
            .map(|(_, ch, i)| (*ch, *i))
            .collect();
        pending.retain(|(t, _, _)| *t != tick);
        for (ch, i) in &due {
            let collided = due.iter().filter(|(c, _)| c == ch).count() > 1;
            let listened = sent.iter().any(|(t, c)| *t + 2 == tick && c == ch);
            if listened && !collided {
                let d = &devices[*i];
                let fhs = BasebandPacket::fhs(GIAC_LAP, d.addr, d.clock.clock27(), 0);
                let (bd_addr, clock27, _) = fhs.fhs_contents().expect("built as FHS");
                out.push(FhsResponse {
                    bd_addr,
                    clock27,
                    at_tick: tick,
                });
                state[*i] = ScanState::Done;
            } else if state[*i] == ScanState::Done {
                state[*i] = ScanState::Armed;
            }
        }
        if clk.clock1() == 0 {
            let ch = inquiry_hop(clk, None);
            sent.push((tick, ch));
            sent.retain(|(t, _)| *t + 4 > tick);
            for (i, d) in devices.iter().enumerate() {
                if !d.discoverable {
                    continue;
                }
                let listening = match state[i] {
                    ScanState::Scanning => cfg.scanning(d.clock),
                    ScanState::Backoff(until) => {
                        if tick >= until {
                            state[i] = ScanState::Armed;
                        }
                        false
                    }
                    ScanState::Armed => true,
                    ScanState::Done => false,
                };
                if !listening || inquiry_scan_hop(d.clock) != ch {
                    continue;
                }
                match state[i] {
                    ScanState::Scanning => {
                        let b = rng.gen_range(0..=cfg.max_backoff_slots) as u64;
                        state[i] = ScanState::Backoff(tick + 2 * b + 1);
                    }
                    ScanState::Armed => {
                        state[i] = ScanState::Done;
                        pending.push((tick + 2, ch, i));
                    }
                    _ => {}
                }
            }
        }
        inquirer.clock = inquirer.clock.add_ticks(1);
        for d in devices.iter_mut() {
            d.clock = d.clock.add_ticks(1);
        }
    }
    out
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PageError {
    #[error("target is not connectable")]
    NotConnectable,
    #[error("no page response within {0} slots")]
    Timeout(u64),
    #[error("connection confirmation failed")]
    NoConfirmation,
}

#[derive(Clone, Debug)]
pub struct ConnectionResult {
    pub piconet: Piconet,
    /// Ticks from the first page ID to the target's response.
    pub response_ticks: u64,
    /// Ticks until the POLL/NULL exchange completed.
    pub total_ticks: u64,
}

pub const PAGE_TIMEOUT_SLOTS: u64 = 8192;

/// Pages `target` using `clock_offset_estimate`, the pager's guess of
/// (target clock - own clock) in ticks. On success the initiator becomes
/// master of a new piconet.
pub fn run_page(
    initiator: Device,
    mut target: Device,
    clock_offset_estimate: i64,
    cfg: ScanConfig,
    link: PiconetConfig,
) -> Result<ConnectionResult, PageError> {
    if !target.connectable {
        return Err(PageError::NotConnectable);
    }
    let mut initiator = initiator;
    let target_hop = target.addr.into();
    let mut last_sent: Option<(u64, u8)> = None;
    let mut response: Option<u64> = None;
    for tick in 0..2 * PAGE_TIMEOUT_SLOTS {
        let clk = initiator.clock;
        if let Some((t, _)) = last_sent {
            if t + 2 == tick && response == Some(tick) {
                break;
            }
        }
        if clk.clock1() == 0 {
            let est = ClockState::new(
                (clk.raw() as i64 + clock_offset_estimate).rem_euclid(crate::baseband::CLOCK_MODULUS as i64) as u32,
            );
            let ch = page_hop(est, target_hop);
            last_sent = Some((tick, ch));
            if cfg.scanning(target.clock) && page_scan_hop(target.clock, target_hop) == ch {
                response = Some(tick + 2);
            }
        }
        initiator.clock = initiator.clock.add_ticks(1);
        target.clock = target.clock.add_ticks(1);
    }
    let Some(resp_tick) = response else {
        return Err(PageError::Timeout(PAGE_TIMEOUT_SLOTS));
    };
    // Response ID, then FHS and its ID acknowledgement: three more slots.
    for _ in 0..6 {
        initiator.clock = initiator.clock.add_ticks(1);
        target.clock = target.clock.add_ticks(1);
    }
    let mut total = resp_tick + 6;
    // Align to the next master slot.
    while initiator.clock.raw() & 0x3 != 0 {
        initiator.clock = initiator.clock.add_ticks(1);
        target.clock = target.clock.add_ticks(1);
        total += 1;
    }
    let mut net = Piconet::connected(initiator, target, link);
    for _ in 0..64 {
        let r = net.step_slot(&[]);
        total += 2;
        if r.delivered && r.transmitter == Some(Role::Slave) {
            return Ok(ConnectionResult {
                piconet: net,
                response_ticks: resp_tick,
                total_ticks: total,
            });
        }
    }
    Err(PageError::NoConfirmation)
}
