//! Master and slave state machines: slot scheduling, inquiry and paging,
//! legacy pairing, AFH maintenance and traffic.

mod afh_policy;
mod device;
mod discovery;
mod link;
mod pairing;
mod snapshot;
mod traffic;

pub use afh_policy::{update_afh, AfhPolicy, AfhUpdate, ChannelQuality, ChannelStats, ProbeState};
pub use device::{Device, Role, DRIFT_BOUND_US};
pub use discovery::{run_inquiry, run_page, ConnectionResult, FhsResponse, PageError, ScanConfig, PAGE_TIMEOUT_SLOTS};
pub use link::{decode_set_afh, encode_map, AirPacket, LinkCounters, Piconet, PiconetConfig, SlotReport};
pub use pairing::{
    begin_pairing, finish_pairing, run_legacy_pairing, PairingError, PairingRun, PairingSession, PairingStatus,
};
pub use snapshot::{map_from_letters, map_to_letters, DeviceSnapshot, Snapshot, SnapshotError};
pub use traffic::{control_packet, generate_traffic, slave_control_packet, DataRateClass, TrafficKind, TrafficProfile};
