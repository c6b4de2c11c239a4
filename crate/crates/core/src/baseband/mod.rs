//! Bit-exact packet model: addresses, the device clock, AFH maps and the
//! whitening/HEC/CRC codec used to build and parse wire frames.

mod addr;
mod afh_map;
mod clock;
mod crc;
mod hec;
mod packet;
mod whitening;
mod wire;

pub use addr::{AddrParseError, BdAddr};
pub use afh_map::{AfhError, AfhMap, ChannelClass, MIN_USABLE_CHANNELS, NUM_CHANNELS};
pub use clock::{ClockState, CLOCK_MODULUS};
pub use crc::{compute_crc, CrcError, CRC_POLY};
pub use hec::{compute_hec, reverse_hec, HEC_POLY};
pub use packet::{BasebandPacket, HeaderFlags, LmpOpcode, Modulation, PacketError, PacketType, PairingKind};
pub use whitening::{derive_whitening_word, whiten, whiten_in_place, Keystream, WhiteningWord};
pub use wire::{
    build_wire, decode_header, parse_wire, parse_wire_as_peer, ParseResult, WireFrame, HEADER_BITS, LAP_BITS,
};
