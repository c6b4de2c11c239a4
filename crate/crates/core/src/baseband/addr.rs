use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// 48-bit device address, NAP(16) | UAP(8) | LAP(24).
///
/// Only the LAP is ever put on the air. The UAP seeds the HEC and CRC and,
/// through its low nibble, the hop kernel. The NAP plays no part in any
/// baseband operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BdAddr {
    pub nap: u16,
    pub uap: u8,
    pub lap: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddrParseError {
    #[error("address must be 12 hex digits, got {0:?}")]
    BadLength(String),
    #[error("invalid hex digit in address {0:?}")]
    BadDigit(String),
}

impl BdAddr {
    pub const fn new(nap: u16, uap: u8, lap: u32) -> Self {
        Self {
            nap,
            uap,
            lap: lap & 0x00ff_ffff,
        }
    }

    pub const fn from_u64(v: u64) -> Self {
        Self::new((v >> 32) as u16, (v >> 24) as u8, v as u32)
    }

    pub const fn to_u64(self) -> u64 {
        ((self.nap as u64) << 32) | ((self.uap as u64) << 24) | self.lap as u64
    }

    /// Big-endian byte form, NAP first.
    pub fn to_bytes(self) -> [u8; 6] {
        let v = self.to_u64().to_be_bytes();
        [v[2], v[3], v[4], v[5], v[6], v[7]]
    }

    pub fn from_bytes(b: [u8; 6]) -> Self {
        Self::from_u64(u64::from_be_bytes([0, 0, b[0], b[1], b[2], b[3], b[4], b[5]]))
    }
}

impl fmt::Display for BdAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.to_bytes();
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

/// Accepts `00:00:fb:fd:7f:d1`, `0000fbfd7fd1` or `0x0000fbfd7fd1`.
impl FromStr for BdAddr {
    type Err = AddrParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
        let digits: String = t.chars().filter(|c| *c != ':' && *c != '-').collect();
        if digits.len() != 12 {
            return Err(AddrParseError::BadLength(s.to_string()));
        }
        u64::from_str_radix(&digits, 16)
            .map(Self::from_u64)
            .map_err(|_| AddrParseError::BadDigit(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_and_display() {
        let a = BdAddr::new(0x0000, 0xfb, 0xfd7fd1);
        assert_eq!(a.to_u64(), 0x0000_fbfd_7fd1);
        assert_eq!(a.to_string(), "00:00:fb:fd:7f:d1");
        assert_eq!("00:00:fb:fd:7f:d1".parse::<BdAddr>().unwrap(), a);
        assert_eq!("0x0000FBFD7FD1".parse::<BdAddr>().unwrap(), a);
        assert_eq!(BdAddr::from_bytes(a.to_bytes()), a);
    }

    #[test]
    fn lap_is_masked_to_24_bits() {
        assert_eq!(BdAddr::new(0, 0, 0x1ff_ffff).lap, 0xff_ffff);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!("12:34".parse::<BdAddr>(), Err(AddrParseError::BadLength(_))));
        assert!(matches!(
            "zz0000fbfd7f".parse::<BdAddr>(),
            Err(AddrParseError::BadDigit(_))
        ));
    }
}
