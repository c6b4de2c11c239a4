//! Legacy PIN pairing over the hopping link.
//!
//! Each side computes its own view with its own PIN. A wrong PIN shows up
//! as an SRES mismatch at message 5 (A checking B) or 7 (B checking A).

use rand::Rng;
use thiserror::Error;

use super::device::Role;
use super::link::{AirPacket, Piconet};
use crate::attacks::{
    derive_session, xor, CipherSuite, Key128, PairingTranscript, Pin, ReferenceStandIn, SessionKeys, SessionRandoms,
};
use crate::baseband::{BasebandPacket, BdAddr, PairingKind};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PairingError {
    #[error("SRES check failed at message {0}")]
    SresMismatch(u8),
    #[error("pairing did not finish within {0} slots")]
    Timeout(u64),
    #[error("a pairing is already running")]
    Busy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairingStatus {
    InProgress,
    Complete,
    Failed(PairingError),
}

/// Everything about one finished exchange.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingSession {
    pub pin: Pin,
    pub addr_a: BdAddr,
    pub addr_b: BdAddr,
    pub randoms: SessionRandoms,
    /// Initiator's view.
    pub keys: SessionKeys,
    pub transcript: PairingTranscript,
    /// First transmission of each message, in order.
    pub air: Vec<AirPacket>,
}

#[derive(Clone, Debug)]
pub struct PairingRun {
    suite: ReferenceStandIn,
    pin_a: Pin,
    pin_b: Pin,
    addr_a: BdAddr,
    addr_b: BdAddr,
    r: SessionRandoms,
    next: Option<(PairingKind, u64)>,
    k_init_a: Key128,
    k_init_b: Key128,
    /// LK_RAND_A as unmasked by B.
    lk_a_at_b: Key128,
    k_ab_a: Key128,
    k_ab_b: Key128,
    transcript: PairingTranscript,
    air: Vec<AirPacket>,
    status: PairingStatus,
}

fn random_key<R: Rng>(rng: &mut R) -> Key128 {
    let mut k = [0u8; 16];
    rng.fill(&mut k);
    k
}

fn sender(kind: PairingKind) -> Role {
    if kind.from_initiator() {
        Role::Master
    } else {
        Role::Slave
    }
}

impl PairingRun {
    pub fn new<R: Rng>(pin_a: Pin, pin_b: Pin, addr_a: BdAddr, addr_b: BdAddr, start_slot: u64, rng: &mut R) -> Self {
        let r = SessionRandoms {
            in_rand: random_key(rng),
            lk_rand_a: random_key(rng),
            lk_rand_b: random_key(rng),
            au_rand_a: random_key(rng),
            au_rand_b: random_key(rng),
        };
        Self {
            suite: ReferenceStandIn,
            pin_a,
            pin_b,
            addr_a,
            addr_b,
            r,
            next: Some((PairingKind::InRand, start_slot)),
            k_init_a: [0; 16],
            k_init_b: [0; 16],
            lk_a_at_b: [0; 16],
            k_ab_a: [0; 16],
            k_ab_b: [0; 16],
            transcript: PairingTranscript::new(),
            air: Vec::new(),
            status: PairingStatus::InProgress,
        }
    }

    pub fn status(&self) -> &PairingStatus {
        &self.status
    }

    pub fn randoms(&self) -> &SessionRandoms {
        &self.r
    }

    pub fn air(&self) -> &[AirPacket] {
        &self.air
    }

    pub fn transcript(&self) -> &PairingTranscript {
        &self.transcript
    }

    pub(crate) fn has_due(&self, role: Role, slot: u64) -> bool {
        matches!(self.next, Some((k, at)) if sender(k) == role && slot >= at)
    }

    /// The next message from `role`, if it is ready at `slot`.
    pub(crate) fn due(&mut self, role: Role, slot: u64, lap: u32, lt_addr: u8) -> Option<BasebandPacket> {
        if !self.has_due(role, slot) {
            return None;
        }
        let (kind, _) = self.next.take()?;
        let s = &self.suite;
        let value: Vec<u8> = match kind {
            PairingKind::InRand => {
                self.k_init_a = s.e22(&self.pin_a, self.addr_a, &self.r.in_rand);
                self.r.in_rand.to_vec()
            }
            PairingKind::CombKeyA => xor(&self.r.lk_rand_a, &self.k_init_a).to_vec(),
            PairingKind::CombKeyB => {
                self.k_ab_b = s.combine(
                    &s.e21(&self.lk_a_at_b, self.addr_a),
                    &s.e21(&self.r.lk_rand_b, self.addr_b),
                );
                xor(&self.r.lk_rand_b, &self.k_init_b).to_vec()
            }
            PairingKind::AuRandA => self.r.au_rand_a.to_vec(),
            PairingKind::SresB => s
                .sres(&self.k_ab_b, self.addr_b, &self.r.au_rand_a)
                .to_be_bytes()
                .to_vec(),
            PairingKind::AuRandB => self.r.au_rand_b.to_vec(),
            PairingKind::SresA => s
                .sres(&self.k_ab_a, self.addr_a, &self.r.au_rand_b)
                .to_be_bytes()
                .to_vec(),
        };
        Some(BasebandPacket::pairing(lap, lt_addr, kind, value))
    }

    /// Called once per message, on first successful delivery.
    pub(crate) fn on_delivered<R: Rng>(
        &mut self,
        kind: PairingKind,
        payload: &[u8],
        now: u64,
        gap: (u64, u64),
        rng: &mut R,
    ) {
        if self.status != PairingStatus::InProgress {
            return;
        }
        let _ = self.transcript.insert(kind, payload.to_vec());
        let s = &self.suite;
        let key = |p: &[u8]| -> Key128 { p.try_into().unwrap_or([0; 16]) };
        let sres = |p: &[u8]| u32::from_be_bytes(p.try_into().unwrap_or([0; 4]));
        let next = match kind {
            PairingKind::InRand => {
                self.k_init_b = s.e22(&self.pin_b, self.addr_a, &key(payload));
                Some(PairingKind::CombKeyA)
            }
            PairingKind::CombKeyA => {
                self.lk_a_at_b = xor(&key(payload), &self.k_init_b);
                Some(PairingKind::CombKeyB)
            }
            PairingKind::CombKeyB => {
                let lk_b = xor(&key(payload), &self.k_init_a);
                self.k_ab_a = s.combine(&s.e21(&self.r.lk_rand_a, self.addr_a), &s.e21(&lk_b, self.addr_b));
                Some(PairingKind::AuRandA)
            }
            PairingKind::AuRandA => Some(PairingKind::SresB),
            PairingKind::SresB => {
                if sres(payload) != s.sres(&self.k_ab_a, self.addr_b, &self.r.au_rand_a) {
                    self.status = PairingStatus::Failed(PairingError::SresMismatch(5));
                    None
                } else {
                    Some(PairingKind::AuRandB)
                }
            }
            PairingKind::AuRandB => Some(PairingKind::SresA),
            PairingKind::SresA => {
                if sres(payload) != s.sres(&self.k_ab_b, self.addr_a, &self.r.au_rand_b) {
                    self.status = PairingStatus::Failed(PairingError::SresMismatch(7));
                } else {
                    self.status = PairingStatus::Complete;
                }
                None
            }
        };
        self.next = next.map(|k| (k, now + rng.gen_range(gap.0..=gap.1)));
    }

    pub(crate) fn note_air(&mut self, air: &AirPacket) {
        if !air.retransmission {
            self.air.push(air.clone());
        }
    }

    /// (A's key, B's key) once both checks passed.
    pub fn completed_keys(&self) -> Option<(Key128, Key128)> {
        (self.status == PairingStatus::Complete).then_some((self.k_ab_a, self.k_ab_b))
    }

    pub fn into_session(self) -> Result<PairingSession, PairingError> {
        match self.status {
            PairingStatus::Complete => {}
            PairingStatus::Failed(e) => return Err(e),
            PairingStatus::InProgress => return Err(PairingError::Timeout(0)),
        }
        let keys = derive_session(&self.suite, &self.pin_a, self.addr_a, self.addr_b, &self.r);
        Ok(PairingSession {
            pin: self.pin_a,
            addr_a: self.addr_a,
            addr_b: self.addr_b,
            randoms: self.r,
            keys,
            transcript: self.transcript,
            air: self.air,
        })
    }
}

/// Runs a pairing on a connected piconet with nothing else on the medium.
/// The master is device A. Fails after `budget_slots` slots.
pub fn run_legacy_pairing(
    net: &mut Piconet,
    pin_master: Pin,
    pin_slave: Pin,
    budget_slots: u64,
) -> Result<PairingSession, PairingError> {
    begin_pairing(net, pin_master, pin_slave)?;
    let deadline = net.slot() + budget_slots;
    while net.slot() < deadline {
        net.step_slot(&[]);
        if net.pairing().is_some_and(|p| p.status != PairingStatus::InProgress) {
            break;
        }
    }
    finish_pairing(net, budget_slots)
}

/// Installs a pairing run; the piconet carries it from the next slot on.
pub fn begin_pairing(net: &mut Piconet, pin_master: Pin, pin_slave: Pin) -> Result<(), PairingError> {
    if net.pairing().is_some_and(|p| p.status == PairingStatus::InProgress) {
        return Err(PairingError::Busy);
    }
    let (a, b, slot) = (net.master.addr, net.slave.addr, net.slot());
    let pin_a = net.master.fixed_pin.unwrap_or(pin_master);
    let pin_b = net.slave.fixed_pin.unwrap_or(pin_slave);
    let run = PairingRun::new(pin_a, pin_b, a, b, slot, net.rng());
    net.start_pairing(run);
    Ok(())
}

/// Removes the run and converts it into a session.
pub fn finish_pairing(net: &mut Piconet, budget_slots: u64) -> Result<PairingSession, PairingError> {
    let run = net.take_pairing().ok_or(PairingError::Timeout(budget_slots))?;
    match run.status {
        PairingStatus::InProgress => Err(PairingError::Timeout(budget_slots)),
        _ => run.into_session(),
    }
}
