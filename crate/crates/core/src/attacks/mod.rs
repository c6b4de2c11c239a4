//! Offline attacks on legacy pairing: the key-derivation suite, captured
//! transcripts and the PIN brute force.

mod crack;
mod suite;
mod transcript;

pub use crack::{crack_pin, CrackError, CrackOptions, CrackReport};
pub use suite::{
    derive_session, xor, CipherSuite, Key128, Pin, PinError, ReferenceStandIn, SessionKeys, SessionRandoms,
};
pub use transcript::{PairingTranscript, Side, TranscriptError, TranscriptPacket};
