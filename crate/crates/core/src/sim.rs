//! One shared medium: a piconet, an optional Wi-Fi station and an optional
//! sniffer, advanced together one slot at a time.
//!
//! Slot numbers here are global. The piconet keeps its own count from the
//! slot it started in.

use crate::medium::{
    deliver_slot, energy_dbm, wifi_block, Accounting, Emitter, Outcome, SpectrumRecorder, Transmission, WifiInterferer,
};
use crate::piconet::{Piconet, SlotReport};
use crate::sniffer::Sniffer;

#[derive(Clone, Debug)]
pub struct World {
    pub piconet: Piconet,
    pub wifi: Option<WifiInterferer>,
    pub sniffer: Option<Sniffer>,
    pub spectrum: Option<SpectrumRecorder>,
    pub accounting: Accounting,
    slot: u64,
    bt_start: u64,
    busy_prev: bool,
}

impl World {
    /// The piconet transmits from `bt_start` on.
    pub fn new(piconet: Piconet, bt_start: u64) -> Self {
        Self {
            piconet,
            wifi: None,
            sniffer: None,
            spectrum: None,
            accounting: Accounting::default(),
            slot: 0,
            bt_start,
            busy_prev: false,
        }
    }

    pub fn with_wifi(mut self, wifi: WifiInterferer) -> Self {
        self.wifi = Some(wifi);
        self
    }

    pub fn with_spectrum(mut self, rec: SpectrumRecorder) -> Self {
        self.spectrum = Some(rec);
        self
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn bt_start(&self) -> u64 {
        self.bt_start
    }

    /// Attaches a sniffer; it only ever receives, never transmits.
    pub fn attach_sniffer(&mut self, s: Sniffer) {
        self.sniffer = Some(s);
    }

    pub fn take_sniffer(&mut self) -> Option<Sniffer> {
        self.sniffer.take()
    }

    /// Advances one slot. Returns the piconet's report, if it is running.
    pub fn step(&mut self) -> Option<SlotReport> {
        let slot = self.slot;
        let mut txs: Vec<Transmission> = Vec::with_capacity(2);
        let bt_running = slot >= self.bt_start;
        let mut bt_idx = None;
        if bt_running {
            if let Some(t) = self.piconet.transmit() {
                bt_idx = Some(txs.len());
                txs.push(t);
            }
        }
        let mut wifi_idx = None;
        if let Some(w) = self.wifi.as_mut() {
            if let Some(t) = w.step(slot, self.busy_prev) {
                wifi_idx = Some(txs.len());
                txs.push(t);
            }
        }
        let outcomes = deliver_slot(&txs);
        for o in &outcomes {
            self.accounting.record(*o);
        }
        let report = bt_running.then(|| {
            let threshold = self.piconet.config().afh.map_or(-80, |p| p.energy_threshold_dbm);
            let (outcome, foreign) = match bt_idx {
                Some(i) => {
                    let ch = *txs[i].channels.start();
                    let foreign = txs
                        .iter()
                        .enumerate()
                        .any(|(j, t)| j != i && t.channels.contains(&ch) && t.power_dbm >= threshold);
                    (Some(outcomes[i]), foreign)
                }
                None => (None, false),
            };
            self.piconet.resolve(outcome, foreign)
        });
        if let Some(w) = self.wifi.as_mut() {
            let lost = wifi_idx.is_some_and(|i| outcomes[i] == Outcome::Collided);
            w.finish_slot(slot, lost);
            let cfg = w.config();
            let mask = wifi_block(cfg.channel, cfg.width_mhz);
            self.busy_prev = txs.iter().any(|t| {
                t.emitter != Emitter::Wifi
                    && t.power_dbm >= cfg.cca_threshold_dbm
                    && t.channels.start() <= mask.end()
                    && mask.start() <= t.channels.end()
            });
        }
        if let Some(rec) = self.spectrum.as_mut() {
            rec.record(slot, |ch| energy_dbm(&txs, ch));
        }
        if let Some(s) = self.sniffer.as_mut() {
            let completed = report.as_ref().and_then(|r| r.completed.as_ref()).map(|a| {
                let mut a = a.clone();
                a.start_slot += self.bt_start;
                a
            });
            s.on_slot(slot, &txs, &outcomes, completed.as_ref());
        }
        self.slot += 1;
        report
    }

    pub fn run_until(&mut self, slot: u64) {
        while self.slot < slot {
            self.step();
        }
    }
}
