//! UAP and Clock6 recovery from captured frames.
//!
//! A frame is whitened with one of 64 words. For a known UAP each word is
//! tested against the HEC, and against the CRC when the frame has one. For
//! an unknown UAP the HEC check always passes for some UAP (run the HEC
//! register backwards), so only the CRC can discriminate.

use thiserror::Error;

use crate::baseband::{decode_header, parse_wire, reverse_hec, ParseResult, WireFrame};

/// A captured frame and its position in slots relative to some reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservedFrame {
    pub frame: WireFrame,
    pub rel_slot: i64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecoveryError {
    #[error("no CRC-bearing frame")]
    Insufficient,
    #[error("{} (clock6, uap) pairs still consistent", .0.len())]
    Ambiguous(Vec<(u8, u8)>),
    #[error("no consistent (clock6, uap) pair")]
    Inconsistent,
}

/// UAP implied by the header of `frame` if it was whitened with `clock6`.
pub fn recover_uap(frame: &WireFrame, clock6: u8) -> Option<u8> {
    let (header, hec) = decode_header(frame, clock6)?;
    Some(reverse_hec(header, hec))
}

fn checkable(r: &ParseResult) -> bool {
    !matches!(r, ParseResult::Undecodable | ParseResult::Malformed)
}

/// True when the frame carries a payload the observer can run the CRC on.
pub fn has_checkable_crc(frame: &WireFrame) -> bool {
    frame.payload_region().len() > 16 && frame.modulation == crate::baseband::Modulation::BasicRate
}

/// Whitening candidates for one frame under a known UAP.
pub fn clock6_candidates(frame: &WireFrame, uap: u8) -> Vec<u8> {
    (0..64u8)
        .filter(|c| match parse_wire(frame, *c, uap) {
            ParseResult::Decoded(_) => true,
            // EDR: the header checked out, the payload is out of reach.
            ParseResult::Undecodable => true,
            _ => false,
        })
        .collect()
}

/// (clock6, uap) pairs under which a CRC-bearing frame decodes.
pub fn clock6_uap_pairs(frame: &WireFrame) -> Vec<(u8, u8)> {
    (0..64u8)
        .filter_map(|c| {
            let uap = recover_uap(frame, c)?;
            let r = parse_wire(frame, c, uap);
            (checkable(&r) && matches!(r, ParseResult::Decoded(_))).then_some((c, uap))
        })
        .collect()
}

/// Joint recovery. Clock6 is reported at `rel_slot` 0. Frames without a
/// checkable CRC are skipped.
pub fn recover_clock6_uap(frames: &[ObservedFrame]) -> Result<(u8, u8), RecoveryError> {
    let mut alive: Option<Vec<(u8, u8)>> = None;
    for f in frames.iter().filter(|f| has_checkable_crc(&f.frame)) {
        let shift = f.rel_slot.rem_euclid(64) as u8;
        let pairs: Vec<(u8, u8)> = clock6_uap_pairs(&f.frame)
            .into_iter()
            .map(|(c, u)| ((c + 64 - shift) % 64, u))
            .collect();
        alive = Some(match alive {
            None => pairs,
            Some(prev) => prev.into_iter().filter(|p| pairs.contains(p)).collect(),
        });
    }
    match alive {
        None => Err(RecoveryError::Insufficient),
        Some(v) if v.is_empty() => Err(RecoveryError::Inconsistent),
        Some(v) if v.len() == 1 => Ok(v[0]),
        Some(v) => Err(RecoveryError::Ambiguous(v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseband::{build_wire, BasebandPacket, Modulation, PacketType};

    #[test]
    fn null_only_is_insufficient() {
        let f = build_wire(&BasebandPacket::null(0xfd7fd1, 1), 9, 0xfb).unwrap();
        let obs = [ObservedFrame { frame: f, rel_slot: 0 }];
        assert_eq!(recover_clock6_uap(&obs), Err(RecoveryError::Insufficient));
    }

    #[test]
    fn dh1_recovers_pair() {
        let p = BasebandPacket::data(0xfd7fd1, 1, PacketType::Dh1, vec![1, 2, 3, 4, 5], Modulation::BasicRate);
        let f = build_wire(&p, 41, 0xfb).unwrap();
        let obs = [ObservedFrame { frame: f, rel_slot: 0 }];
        assert_eq!(recover_clock6_uap(&obs), Ok((41, 0xfb)));
    }

    #[test]
    fn offsets_fold_back_to_reference() {
        let p = BasebandPacket::data(0xfd7fd1, 1, PacketType::Dh1, vec![9; 12], Modulation::BasicRate);
        let a = build_wire(&p, 10, 0x33).unwrap();
        let b = build_wire(&p, (10 + 70) % 64, 0x33).unwrap();
        let obs = [
            ObservedFrame { frame: a, rel_slot: 0 },
            ObservedFrame { frame: b, rel_slot: 70 },
        ];
        assert_eq!(recover_clock6_uap(&obs), Ok((10, 0x33)));
    }

    #[test]
    fn known_uap_header_only() {
        let f = build_wire(&BasebandPacket::poll(0xfd7fd1, 1), 17, 0xfb).unwrap();
        assert!(clock6_candidates(&f, 0xfb).contains(&17));
    }
}
