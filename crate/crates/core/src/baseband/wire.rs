//! Wire frames.
//!
//! Layout, one bit per element, LSB first within every field:
//!
//! | bits        | field                                  | whitened |
//! |-------------|----------------------------------------|----------|
//! | 0..24       | LAP (access code)                      | no       |
//! | 24..34      | header: LT_ADDR, TYPE, FLOW, ARQN, SEQN | yes      |
//! | 34..42      | HEC                                    | yes      |
//! | 42..        | payload header, payload body           | yes      |
//! | last 16     | CRC over payload header and body       | yes      |
//!
//! An ID packet is the 24 access-code bits alone. POLL and NULL stop after
//! the HEC. The whitening keystream runs continuously from the first header
//! bit to the last CRC bit.
//!
//! The payload header is one byte: `0x02` user data, `0x03` link manager,
//! `0x04` pairing followed by a second byte holding the message index 1..7.
//! FHS has no payload header.

use super::crc::compute_crc;
use super::hec::compute_hec;
use super::packet::{BasebandPacket, Modulation, PacketError, PacketType, PairingKind};
use super::whitening::{derive_whitening_word, WhiteningWord};

pub const LAP_BITS: usize = 24;
/// Header content plus HEC.
pub const HEADER_BITS: usize = 18;
const CRC_BITS: usize = 16;

const TAG_USER: u8 = 0x02;
const TAG_LMP: u8 = 0x03;
const TAG_PAIRING: u8 = 0x04;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WireFrame {
    pub bits: Vec<u8>,
    pub modulation: Modulation,
}

impl WireFrame {
    pub fn lap(&self) -> Option<u32> {
        if self.bits.len() < LAP_BITS {
            return None;
        }
        Some(read_bits(&self.bits[..LAP_BITS]) as u32)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Whitened header and HEC bits, if present.
    pub fn header_region(&self) -> Option<&[u8]> {
        self.bits.get(LAP_BITS..LAP_BITS + HEADER_BITS)
    }

    /// Whitened payload and CRC bits (empty for payload-less frames).
    pub fn payload_region(&self) -> &[u8] {
        self.bits.get(LAP_BITS + HEADER_BITS..).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseResult {
    Decoded(BasebandPacket),
    HecMismatch,
    CrcMismatch,
    /// EDR payload: header checked out but the payload cannot be demodulated.
    Undecodable,
    /// Bit count or field values inconsistent with any packet.
    Malformed,
}

fn push_bits(out: &mut Vec<u8>, value: u64, n: usize) {
    for i in 0..n {
        out.push(((value >> i) & 1) as u8);
    }
}

fn read_bits(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, b)| acc | ((*b as u64 & 1) << i))
}

fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8).map(|c| read_bits(c) as u8).collect()
}

fn payload_bytes(p: &BasebandPacket) -> Vec<u8> {
    let mut out = Vec::with_capacity(p.payload.len() + 2);
    match p.ptype {
        PacketType::Fhs => {}
        PacketType::Lmp => out.push(TAG_LMP),
        PacketType::Pairing(k) => {
            out.push(TAG_PAIRING);
            out.push(k.index());
        }
        _ => out.push(TAG_USER),
    }
    out.extend_from_slice(&p.payload);
    out
}

pub fn build_wire(p: &BasebandPacket, clock6: u8, uap: u8) -> Result<WireFrame, PacketError> {
    p.validate()?;
    let mut bits = Vec::with_capacity(LAP_BITS + HEADER_BITS + 8 * (p.payload.len() + 4));
    push_bits(&mut bits, p.sync_lap as u64, LAP_BITS);
    let Some(header) = p.header_bits() else {
        return Ok(WireFrame {
            bits,
            modulation: p.modulation,
        });
    };
    push_bits(&mut bits, header as u64, 10);
    push_bits(&mut bits, compute_hec(header, uap) as u64, 8);
    if p.ptype.has_payload() {
        let body = payload_bytes(p);
        let crc = compute_crc(&body, uap).expect("payload header makes the body non-empty");
        for b in &body {
            push_bits(&mut bits, *b as u64, 8);
        }
        push_bits(&mut bits, crc as u64, CRC_BITS);
    }
    let w = derive_whitening_word(clock6);
    for (b, k) in bits[LAP_BITS..].iter_mut().zip(w.keystream()) {
        *b ^= k;
    }
    Ok(WireFrame {
        bits,
        modulation: p.modulation,
    })
}

/// De-whitens the header with `clock6` and returns (header content, HEC).
pub fn decode_header(frame: &WireFrame, clock6: u8) -> Option<(u16, u8)> {
    let region = frame.header_region()?;
    let mut ks = derive_whitening_word(clock6).keystream();
    let mut v: u32 = 0;
    for (i, (b, k)) in region.iter().zip(&mut ks).enumerate() {
        v |= ((b ^ k) as u32) << i;
    }
    Some(((v & 0x3ff) as u16, (v >> 10) as u8))
}

fn type_from_code(code: u8) -> Option<PacketType> {
    Some(match code {
        0x0 => PacketType::Null,
        0x1 => PacketType::Poll,
        0x2 => PacketType::Fhs,
        0x3 => PacketType::Dm1,
        0x4 => PacketType::Dh1,
        0xb => PacketType::Dh3,
        0xf => PacketType::Dh5,
        _ => return None,
    })
}

/// Third-party parse: EDR payloads come back as [`ParseResult::Undecodable`].
pub fn parse_wire(frame: &WireFrame, clock6_guess: u8, uap_guess: u8) -> ParseResult {
    parse(frame, clock6_guess, uap_guess, false)
}

/// Parse as the addressed peer, which can demodulate EDR payloads.
pub fn parse_wire_as_peer(frame: &WireFrame, clock6: u8, uap: u8) -> ParseResult {
    parse(frame, clock6, uap, true)
}

fn parse(frame: &WireFrame, clock6: u8, uap: u8, peer: bool) -> ParseResult {
    let bits = &frame.bits;
    if bits.len() < LAP_BITS {
        return ParseResult::Malformed;
    }
    let lap = read_bits(&bits[..LAP_BITS]) as u32;
    if bits.len() == LAP_BITS {
        return ParseResult::Decoded(BasebandPacket::id(lap));
    }
    if bits.len() < LAP_BITS + HEADER_BITS {
        return ParseResult::Malformed;
    }
    let word: WhiteningWord = derive_whitening_word(clock6);
    let mut ks = word.keystream();
    let clear: Vec<u8> = bits[LAP_BITS..].iter().zip(&mut ks).map(|(b, k)| b ^ k).collect();
    let header = read_bits(&clear[..10]) as u16;
    let hec = read_bits(&clear[10..18]) as u8;
    if compute_hec(header, uap) != hec {
        return ParseResult::HecMismatch;
    }
    let Some(ptype) = type_from_code(((header >> 3) & 0xf) as u8) else {
        return ParseResult::Malformed;
    };
    let mut packet = BasebandPacket {
        sync_lap: lap,
        lt_addr: (header & 0x7) as u8,
        ptype,
        flags: super::packet::HeaderFlags {
            flow: header >> 7 & 1 == 1,
            arqn: header >> 8 & 1 == 1,
            seqn: header >> 9 & 1 == 1,
        },
        payload: Vec::new(),
        modulation: frame.modulation,
    };
    let rest = &clear[HEADER_BITS..];
    if !ptype.has_payload() {
        return if rest.is_empty() && frame.modulation == Modulation::BasicRate {
            ParseResult::Decoded(packet)
        } else {
            ParseResult::Malformed
        };
    }
    if frame.modulation == Modulation::Edr && !ptype.supports_edr() {
        return ParseResult::Malformed;
    }
    if frame.modulation == Modulation::Edr && !peer {
        return ParseResult::Undecodable;
    }
    if rest.len() < 8 + CRC_BITS || !(rest.len() - CRC_BITS).is_multiple_of(8) {
        return ParseResult::Malformed;
    }
    let (body_bits, crc_bits) = rest.split_at(rest.len() - CRC_BITS);
    let body = bits_to_bytes(body_bits);
    if compute_crc(&body, uap).ok() != Some(read_bits(crc_bits) as u16) {
        return ParseResult::CrcMismatch;
    }
    let value = match ptype {
        PacketType::Fhs => body,
        _ => match body[0] {
            TAG_USER => body[1..].to_vec(),
            TAG_LMP if ptype == PacketType::Dm1 => {
                packet.ptype = PacketType::Lmp;
                body[1..].to_vec()
            }
            TAG_PAIRING if ptype == PacketType::Dm1 && body.len() >= 2 => {
                let Some(k) = PairingKind::from_index(body[1]) else {
                    return ParseResult::Malformed;
                };
                packet.ptype = PacketType::Pairing(k);
                body[2..].to_vec()
            }
            _ => return ParseResult::Malformed,
        },
    };
    packet.payload = value;
    if packet.validate().is_err() {
        return ParseResult::Malformed;
    }
    ParseResult::Decoded(packet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseband::{BdAddr, HeaderFlags, LmpOpcode};

    const LAP: u32 = 0xfd7fd1;
    const UAP: u8 = 0xfb;

    fn samples() -> Vec<BasebandPacket> {
        vec![
            BasebandPacket::id(LAP),
            BasebandPacket::poll(LAP, 1),
            BasebandPacket::null(LAP, 1).with_flags(HeaderFlags {
                flow: true,
                arqn: true,
                seqn: false,
            }),
            BasebandPacket::data(LAP, 1, PacketType::Dm1, vec![1, 2, 3], Modulation::BasicRate),
            BasebandPacket::data(LAP, 2, PacketType::Dh1, vec![0xaa; 27], Modulation::BasicRate),
            BasebandPacket::data(LAP, 3, PacketType::Dh3, vec![0x55; 100], Modulation::BasicRate),
            BasebandPacket::data(LAP, 7, PacketType::Dh5, vec![0x0f; 339], Modulation::BasicRate),
            BasebandPacket::data(LAP, 1, PacketType::Dh5, vec![0x3c; 600], Modulation::Edr),
            BasebandPacket::lmp(LAP, 1, LmpOpcode::SetAfh, &[0; 15]),
            BasebandPacket::pairing(LAP, 1, PairingKind::CombKeyB, vec![9; 16]),
            BasebandPacket::pairing(LAP, 1, PairingKind::SresA, vec![9; 4]),
            BasebandPacket::fhs(0x9e8b33, BdAddr::new(0, UAP, LAP), 0x123_4567, 1),
        ]
    }

    #[test]
    fn roundtrip_all_types() {
        for p in samples() {
            for c6 in [0u8, 3, 4, 63] {
                let f = build_wire(&p, c6, UAP).unwrap();
                assert_eq!(parse_wire_as_peer(&f, c6, UAP), ParseResult::Decoded(p.clone()));
                if p.modulation == Modulation::BasicRate {
                    assert_eq!(parse_wire(&f, c6, UAP), ParseResult::Decoded(p.clone()));
                } else {
                    assert_eq!(parse_wire(&f, c6, UAP), ParseResult::Undecodable);
                }
            }
        }
    }

    #[test]
    fn null_has_header_only() {
        let f = build_wire(&BasebandPacket::null(LAP, 1), 9, UAP).unwrap();
        assert_eq!(f.len(), LAP_BITS + HEADER_BITS);
        assert!(f.payload_region().is_empty());
        assert_eq!(f.lap(), Some(LAP));
    }

    #[test]
    fn lap_is_not_whitened_and_clock_changes_bits() {
        let p = BasebandPacket::data(LAP, 1, PacketType::Dh1, vec![7; 10], Modulation::BasicRate);
        let a = build_wire(&p, 3, UAP).unwrap();
        let b = build_wire(&p, 4, UAP).unwrap();
        assert_eq!(a.bits[..LAP_BITS], b.bits[..LAP_BITS]);
        assert_ne!(a.bits, b.bits);
    }

    #[test]
    fn exactly_one_uap_decodes() {
        let p = BasebandPacket::data(LAP, 1, PacketType::Dh1, vec![7; 10], Modulation::BasicRate);
        let f = build_wire(&p, 12, UAP).unwrap();
        let mut decoded = 0;
        for u in 0..=255u8 {
            match parse_wire(&f, 12, u) {
                ParseResult::Decoded(_) => decoded += 1,
                ParseResult::HecMismatch => {}
                other => panic!("uap {u}: {other:?}"),
            }
        }
        assert_eq!(decoded, 1);
    }

    #[test]
    fn build_rejects_invalid() {
        let mut p = BasebandPacket::null(LAP, 1);
        p.payload = vec![0];
        assert!(build_wire(&p, 0, 0).is_err());
    }

    #[test]
    fn header_decode_and_edr_header_visible() {
        let p = BasebandPacket::data(LAP, 5, PacketType::Dh3, vec![1; 200], Modulation::Edr);
        let f = build_wire(&p, 33, UAP).unwrap();
        let (h, hec) = decode_header(&f, 33).unwrap();
        assert_eq!(Some(h), p.header_bits());
        assert_eq!(compute_hec(h, UAP), hec);
        assert_eq!(parse_wire(&f, 33, UAP ^ 1), ParseResult::HecMismatch);
    }
}
