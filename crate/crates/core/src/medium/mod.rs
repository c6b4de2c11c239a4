//! The shared 79-channel medium at slot granularity.
//!
//! Every transmission occupies a contiguous channel span for one slot at a
//! fixed power. Two transmissions that overlap in a slot corrupt each other
//! unless one is at least [`CAPTURE_THRESHOLD_DB`] stronger, in which case
//! the stronger one is captured and the weaker one lost. There is no path
//! loss: the outcome of a transmission is the same at every receiver.

mod spectrum;
mod wifi;

use std::ops::RangeInclusive;

pub use spectrum::{SpectrumRecorder, SpectrumRow};
pub use wifi::{wifi_block, wifi_center_channel, WifiConfig, WifiInterferer, WifiMode, WIFI_THROUGHPUT_CAL};

pub const NOISE_FLOOR_DBM: i32 = -90;
pub const STRONG_SIGNAL_DBM: i32 = -60;
pub const BT_TX_POWER_DBM: i32 = -60;
pub const CAPTURE_THRESHOLD_DB: i32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Emitter {
    /// A Bluetooth device, identified by its LAP.
    Bluetooth(u32),
    Wifi,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub emitter: Emitter,
    pub channels: RangeInclusive<u8>,
    pub power_dbm: i32,
}

impl Transmission {
    pub fn bluetooth(lap: u32, channel: u8) -> Self {
        Self {
            emitter: Emitter::Bluetooth(lap),
            channels: channel..=channel,
            power_dbm: BT_TX_POWER_DBM,
        }
    }

    fn overlaps(&self, other: &Transmission) -> bool {
        self.channels.start() <= other.channels.end() && other.channels.start() <= self.channels.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Clean,
    Collided,
    /// Overlapped, but strong enough to be received anyway.
    Captured,
}

impl Outcome {
    pub fn received(self) -> bool {
        self != Outcome::Collided
    }
}

/// Resolves one slot. Returns one outcome per transmission, in order.
pub fn deliver_slot(transmissions: &[Transmission]) -> Vec<Outcome> {
    transmissions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let strongest_other = transmissions
                .iter()
                .enumerate()
                .filter(|(j, o)| *j != i && t.overlaps(o))
                .map(|(_, o)| o.power_dbm)
                .max();
            match strongest_other {
                None => Outcome::Clean,
                Some(p) if t.power_dbm >= p + CAPTURE_THRESHOLD_DB => Outcome::Captured,
                Some(_) => Outcome::Collided,
            }
        })
        .collect()
}

/// Energy seen on one channel during a slot.
pub fn energy_dbm(transmissions: &[Transmission], channel: u8) -> i32 {
    transmissions
        .iter()
        .filter(|t| t.channels.contains(&channel))
        .map(|t| t.power_dbm)
        .max()
        .unwrap_or(NOISE_FLOOR_DBM)
}

/// Per-transmission totals, for checking that every packet is accounted
/// for exactly once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Accounting {
    pub transmitted: u64,
    pub clean: u64,
    pub collided: u64,
    pub captured: u64,
}

impl Accounting {
    pub fn record(&mut self, o: Outcome) {
        self.transmitted += 1;
        match o {
            Outcome::Clean => self.clean += 1,
            Outcome::Collided => self.collided += 1,
            Outcome::Captured => self.captured += 1,
        }
    }

    pub fn balanced(&self) -> bool {
        self.clean + self.collided + self.captured == self.transmitted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wifi(power: i32) -> Transmission {
        Transmission {
            emitter: Emitter::Wifi,
            channels: 24..=45,
            power_dbm: power,
        }
    }

    #[test]
    fn lone_packet_is_clean() {
        assert_eq!(deliver_slot(&[Transmission::bluetooth(1, 30)]), vec![Outcome::Clean]);
    }

    #[test]
    fn rule_table() {
        // (bluetooth power, wifi power) -> (bluetooth outcome, wifi outcome)
        let cases = [
            (-60, -60, Outcome::Collided, Outcome::Collided),
            (-60, -62, Outcome::Collided, Outcome::Collided),
            (-60, -69, Outcome::Collided, Outcome::Collided),
            (-60, -70, Outcome::Captured, Outcome::Collided),
            (-60, -72, Outcome::Captured, Outcome::Collided),
            (-75, -60, Outcome::Collided, Outcome::Captured),
        ];
        for (bt, wf, obt, owf) in cases {
            let mut b = Transmission::bluetooth(1, 30);
            b.power_dbm = bt;
            assert_eq!(deliver_slot(&[b, wifi(wf)]), vec![obt, owf], "{bt} vs {wf}");
        }
    }

    #[test]
    fn outside_the_mask_is_clean() {
        let o = deliver_slot(&[Transmission::bluetooth(1, 60), wifi(-62)]);
        assert_eq!(o, vec![Outcome::Clean, Outcome::Clean]);
    }

    #[test]
    fn two_bluetooth_packets_collide() {
        let o = deliver_slot(&[Transmission::bluetooth(1, 5), Transmission::bluetooth(2, 5)]);
        assert_eq!(o, vec![Outcome::Collided, Outcome::Collided]);
    }

    #[test]
    fn energy_is_the_strongest_emitter() {
        let txs = [Transmission::bluetooth(1, 30), wifi(-62)];
        assert_eq!(energy_dbm(&txs, 30), -60);
        assert_eq!(energy_dbm(&txs, 25), -62);
        assert_eq!(energy_dbm(&txs, 70), NOISE_FLOOR_DBM);
    }
}
