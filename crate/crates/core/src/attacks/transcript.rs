//! Captured legacy pairing exchanges.
//!
//! Text form, one record per line, `#` starts a comment:
//!
//! ```text
//! <index> <src> <dst> <hex value>
//! ```
//!
//! `index` is 1..7 in exchange order, `src`/`dst` are `A` (initiator) or `B`.
//! Values are 16 bytes except the two SRES records (4 bytes).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::suite::{derive_session, xor, CipherSuite, Key128, Pin, SessionKeys, SessionRandoms};
use crate::baseband::{BdAddr, PairingKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "A" | "a" => Some(Side::A),
            "B" | "b" => Some(Side::B),
            _ => None,
        }
    }

    fn other(self) -> Self {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptPacket {
    pub kind: PairingKind,
    pub src: Side,
    pub value: Vec<u8>,
}

impl TranscriptPacket {
    pub fn dst(&self) -> Side {
        self.src.other()
    }

    pub fn bits(&self) -> usize {
        self.value.len() * 8
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("packet {0} appears twice")]
    Duplicate(u8),
    #[error("packet {index}: expected {expected} bytes, got {len}")]
    Length { index: u8, expected: usize, len: usize },
    #[error("packet {index}: wrong direction")]
    Direction { index: u8 },
}

/// Up to seven packets of one exchange, slot `i` holding message `i + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairingTranscript {
    packets: [Option<TranscriptPacket>; 7],
}

impl PairingTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Expected direction per message: A sends 1, 2, 4, 7.
    fn expected_src(kind: PairingKind) -> Side {
        if kind.from_initiator() {
            Side::A
        } else {
            Side::B
        }
    }

    pub fn insert(&mut self, kind: PairingKind, value: Vec<u8>) -> Result<(), TranscriptError> {
        let index = kind.index();
        if value.len() != kind.value_len() {
            return Err(TranscriptError::Length {
                index,
                expected: kind.value_len(),
                len: value.len(),
            });
        }
        let slot = &mut self.packets[index as usize - 1];
        if slot.is_some() {
            return Err(TranscriptError::Duplicate(index));
        }
        *slot = Some(TranscriptPacket {
            kind,
            src: Self::expected_src(kind),
            value,
        });
        Ok(())
    }

    pub fn remove(&mut self, kind: PairingKind) -> Option<TranscriptPacket> {
        self.packets[kind.index() as usize - 1].take()
    }

    pub fn get(&self, kind: PairingKind) -> Option<&TranscriptPacket> {
        self.packets[kind.index() as usize - 1].as_ref()
    }

    pub fn is_complete(&self) -> bool {
        self.packets.iter().all(Option::is_some)
    }

    pub fn missing(&self) -> Vec<PairingKind> {
        PairingKind::ALL
            .into_iter()
            .filter(|k| self.get(*k).is_none())
            .collect()
    }

    pub fn packets(&self) -> impl Iterator<Item = &TranscriptPacket> {
        self.packets.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.packets().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn key(&self, kind: PairingKind) -> Option<Key128> {
        let v = &self.get(kind)?.value;
        v.as_slice().try_into().ok()
    }

    pub(crate) fn sres(&self, kind: PairingKind) -> Option<u32> {
        let v = &self.get(kind)?.value;
        Some(u32::from_be_bytes(v.as_slice().try_into().ok()?))
    }

    /// The seven values A and B would put on air for this session.
    pub fn from_session<S: CipherSuite + ?Sized>(
        suite: &S,
        pin: &Pin,
        addr_a: BdAddr,
        addr_b: BdAddr,
        r: &SessionRandoms,
    ) -> (Self, SessionKeys) {
        let keys = derive_session(suite, pin, addr_a, addr_b, r);
        let mut t = Self::new();
        let values: [Vec<u8>; 7] = [
            r.in_rand.to_vec(),
            xor(&r.lk_rand_a, &keys.k_init).to_vec(),
            xor(&r.lk_rand_b, &keys.k_init).to_vec(),
            r.au_rand_a.to_vec(),
            keys.sres_b.to_be_bytes().to_vec(),
            r.au_rand_b.to_vec(),
            keys.sres_a.to_be_bytes().to_vec(),
        ];
        for (k, v) in PairingKind::ALL.into_iter().zip(values) {
            t.insert(k, v).expect("lengths fixed above");
        }
        (t, keys)
    }
}

impl fmt::Display for PairingTranscript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.packets() {
            write!(f, "{} {} {} ", p.kind.index(), p.src, p.dst())?;
            for b in &p.value {
                write!(f, "{b:02x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn parse_hex(s: &str) -> Option<Vec<u8>> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}

impl FromStr for PairingTranscript {
    type Err = TranscriptError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut t = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: &str| TranscriptError::Syntax {
                line: n + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [idx, src, dst, hex] = fields[..] else {
                return Err(syntax("expected 4 fields"));
            };
            let kind = idx
                .parse::<u8>()
                .ok()
                .and_then(PairingKind::from_index)
                .ok_or_else(|| syntax("index must be 1..7"))?;
            let src = Side::parse(src).ok_or_else(|| syntax("source must be A or B"))?;
            let dst = Side::parse(dst).ok_or_else(|| syntax("destination must be A or B"))?;
            if src == dst || src != Self::expected_src(kind) {
                return Err(TranscriptError::Direction { index: kind.index() });
            }
            let value = parse_hex(hex).ok_or_else(|| syntax("bad hex value"))?;
            t.insert(kind, value)?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::ReferenceStandIn;

    fn randoms() -> SessionRandoms {
        SessionRandoms {
            in_rand: [1; 16],
            lk_rand_a: [2; 16],
            lk_rand_b: [3; 16],
            au_rand_a: [4; 16],
            au_rand_b: [5; 16],
        }
    }

    #[test]
    fn sizes_and_directions() {
        let a = BdAddr::new(0, 0x11, 0x223344);
        let b = BdAddr::new(0, 0x55, 0x667788);
        let (t, _) = PairingTranscript::from_session(&ReferenceStandIn, &Pin::new("0000").unwrap(), a, b, &randoms());
        let bits: Vec<usize> = t.packets().map(|p| p.bits()).collect();
        assert_eq!(bits, vec![128, 128, 128, 128, 32, 128, 32]);
        let srcs: String = t.packets().map(|p| p.src.to_string()).collect();
        assert_eq!(srcs, "AABABBA");
    }

    #[test]
    fn text_roundtrip() {
        let a = BdAddr::new(0, 0x11, 0x223344);
        let b = BdAddr::new(0, 0x55, 0x667788);
        let (t, _) = PairingTranscript::from_session(&ReferenceStandIn, &Pin::new("1234").unwrap(), a, b, &randoms());
        let text = format!("# captured\n{t}");
        assert_eq!(text.parse::<PairingTranscript>().unwrap(), t);
    }

    #[test]
    fn rejects_bad_records() {
        let ok = "1 A B 00000000000000000000000000000000\n";
        assert!(ok.parse::<PairingTranscript>().is_ok());
        assert!(matches!(
            "1 B A 00000000000000000000000000000000".parse::<PairingTranscript>(),
            Err(TranscriptError::Direction { index: 1 })
        ));
        assert!(matches!(
            "5 B A 0000".parse::<PairingTranscript>(),
            Err(TranscriptError::Length { index: 5, .. })
        ));
        assert!(matches!(
            "8 A B 00".parse::<PairingTranscript>(),
            Err(TranscriptError::Syntax { line: 1, .. })
        ));
        let dup = format!("{ok}{ok}");
        assert_eq!(dup.parse::<PairingTranscript>(), Err(TranscriptError::Duplicate(1)));
    }
}
