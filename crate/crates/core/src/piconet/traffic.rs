use rand::Rng;

use crate::baseband::{BasebandPacket, Modulation, PacketType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrafficKind {
    AudioStream,
    PairingOnly,
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataRateClass {
    BasicRateOnly,
    MixedEdr,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficProfile {
    pub kind: TrafficKind,
    pub data_rate_class: DataRateClass,
    /// Fraction of data packets sent EDR modulated (MixedEdr only).
    pub edr_fraction: f64,
    /// Slots between master polls on an otherwise quiet link.
    pub poll_interval: u32,
    /// Probability that the slave answers a data packet with its own
    /// control packet instead of a NULL.
    pub slave_control_prob: f64,
}

impl TrafficProfile {
    pub fn idle() -> Self {
        Self {
            kind: TrafficKind::Idle,
            data_rate_class: DataRateClass::BasicRateOnly,
            edr_fraction: 0.0,
            poll_interval: 40,
            slave_control_prob: 0.0,
        }
    }

    pub fn pairing_only() -> Self {
        Self {
            kind: TrafficKind::PairingOnly,
            ..Self::idle()
        }
    }

    pub fn audio_basic_rate() -> Self {
        Self {
            kind: TrafficKind::AudioStream,
            slave_control_prob: 0.05,
            ..Self::idle()
        }
    }

    pub fn audio_mixed_edr(edr_fraction: f64) -> Self {
        Self {
            kind: TrafficKind::AudioStream,
            data_rate_class: DataRateClass::MixedEdr,
            edr_fraction,
            slave_control_prob: 0.05,
            ..Self::idle()
        }
    }

    pub fn has_stream(&self) -> bool {
        self.kind == TrafficKind::AudioStream
    }
}

/// Produces the next user-data packet for the streaming side. Returns
/// `None` for profiles without a stream; keep-alives are the scheduler's
/// business.
pub fn generate_traffic<R: Rng>(
    profile: &TrafficProfile,
    lap: u32,
    lt_addr: u8,
    rng: &mut R,
) -> Option<BasebandPacket> {
    if !profile.has_stream() {
        return None;
    }
    let p = match profile.data_rate_class {
        DataRateClass::BasicRateOnly => {
            if rng.gen_bool(0.1) {
                control_packet(lap, lt_addr, rng)
            } else {
                BasebandPacket::data(
                    lap,
                    lt_addr,
                    PacketType::Dh5,
                    random_bytes(rng, 339),
                    Modulation::BasicRate,
                )
            }
        }
        DataRateClass::MixedEdr => {
            if rng.gen_bool(profile.edr_fraction.clamp(0.0, 1.0)) {
                let len = rng.gen_range(560..=679);
                BasebandPacket::data(lap, lt_addr, PacketType::Dh5, random_bytes(rng, len), Modulation::Edr)
            } else {
                control_packet(lap, lt_addr, rng)
            }
        }
    };
    Some(p)
}

/// A short Basic Rate DH3/DH5 control message.
pub fn control_packet<R: Rng>(lap: u32, lt_addr: u8, rng: &mut R) -> BasebandPacket {
    let ptype = if rng.gen_bool(0.5) {
        PacketType::Dh3
    } else {
        PacketType::Dh5
    };
    let len = rng.gen_range(8..=27);
    BasebandPacket::data(lap, lt_addr, ptype, random_bytes(rng, len), Modulation::BasicRate)
}

/// A single-slot DH1 control message from the slave.
pub fn slave_control_packet<R: Rng>(lap: u32, lt_addr: u8, rng: &mut R) -> BasebandPacket {
    let len = rng.gen_range(4..=20);
    BasebandPacket::data(
        lap,
        lt_addr,
        PacketType::Dh1,
        random_bytes(rng, len),
        Modulation::BasicRate,
    )
}

fn random_bytes<R: Rng>(rng: &mut R, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill(v.as_mut_slice());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn idle_has_no_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(generate_traffic(&TrafficProfile::idle(), 1, 1, &mut rng).is_none());
    }

    #[test]
    fn edr_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let prof = TrafficProfile::audio_mixed_edr(0.65);
        let n = 10_000;
        let edr = (0..n)
            .filter(|_| generate_traffic(&prof, 1, 1, &mut rng).unwrap().modulation == Modulation::Edr)
            .count();
        let f = edr as f64 / n as f64;
        assert!((f - 0.65).abs() < 0.03, "{f}");
    }

    #[test]
    fn basic_rate_never_edr() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prof = TrafficProfile::audio_basic_rate();
        for _ in 0..5000 {
            let p = generate_traffic(&prof, 1, 1, &mut rng).unwrap();
            assert_eq!(p.modulation, Modulation::BasicRate);
            assert!(p.validate().is_ok());
        }
    }
}
