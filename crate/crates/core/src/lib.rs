//! Slot-accurate simulation of Bluetooth Classic piconets and of the passive
//! attacks that can be mounted against them.
//!
//! The crate is organised bottom-up:
//!
//! * [`baseband`]: address parts, the 28-bit clock, AFH maps and the
//!   bit-exact packet codec (whitening, HEC, CRC).
//! * [`hopping`]: hop selection kernels for the connection, inquiry and
//!   paging states.
//! * [`medium`]: the shared 79-channel medium, collision/capture rules, a
//!   CSMA/CA Wi-Fi interferer and spectrum traces.
//! * [`piconet`]: master/slave state machines with slot scheduling, traffic,
//!   AFH classification, inquiry/paging and legacy pairing.
//! * [`sniffer`]: the passive observer: Clock6/UAP recovery, Clock27
//!   acquisition, AFH map inference and follow-mode capture.
//! * [`attacks`]: the offline PIN brute force over a captured pairing.
//! * [`harness`]: scenario files, bounded repeated runs, console logs,
//!   AFH map export and CSV reporting.
//!
//! Everything is deterministic for a given seed.

pub mod attacks;
pub mod baseband;
pub mod harness;
pub mod hopping;
pub mod medium;
pub mod piconet;
pub mod sim;
pub mod sniffer;

/// Duration of one baseband slot in microseconds.
pub const SLOT_US: u64 = 625;
/// Slots per simulated second.
pub const SLOTS_PER_SECOND: u64 = 1600;
