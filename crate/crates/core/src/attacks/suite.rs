//! Key derivation with the arities of E22, E21 and E1.
//!
//! The shipped suite is a keyed-hash stand-in, not SAFER+. Each function is
//! SHA-256 over a domain tag and its inputs, truncated to 128 bits:
//!
//! * `E22(pin, addr, in_rand)  = H("simbt/e22" | len(pin) | pin | addr | in_rand)[..16]`
//! * `E21(lk_rand, addr)       = H("simbt/e21" | lk_rand | addr)[..16]`
//! * `E1(key, addr, au_rand)   = H("simbt/e1"  | key | addr | au_rand)[..16]`
//!
//! PIN digits enter as ASCII, addresses as six bytes NAP first. E1's first
//! four bytes are SRES (big endian) and the remaining twelve are the ACO.
//! Link keys combine the two E21 contributions by XOR.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::baseband::BdAddr;

pub type Key128 = [u8; 16];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PinError {
    #[error("PIN must be 4 to 6 decimal digits, got {0:?}")]
    Malformed(String),
}

/// 4 to 6 decimal digits. Leading zeros are significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pin {
    len: u8,
    digits: [u8; 6],
}

impl Pin {
    pub const MIN_DIGITS: usize = 4;
    pub const MAX_DIGITS: usize = 6;

    pub fn new(digits: &str) -> Result<Self, PinError> {
        let ok =
            (Self::MIN_DIGITS..=Self::MAX_DIGITS).contains(&digits.len()) && digits.bytes().all(|b| b.is_ascii_digit());
        if !ok {
            return Err(PinError::Malformed(digits.to_string()));
        }
        let mut d = [0u8; 6];
        d[..digits.len()].copy_from_slice(digits.as_bytes());
        Ok(Self {
            len: digits.len() as u8,
            digits: d,
        })
    }

    /// Zero-padded PIN of `digits` digits with numeric value `value`.
    pub fn from_value(value: u32, digits: usize) -> Result<Self, PinError> {
        if !(Self::MIN_DIGITS..=Self::MAX_DIGITS).contains(&digits) || value >= 10u32.pow(digits as u32) {
            return Err(PinError::Malformed(format!("{value}/{digits}")));
        }
        let mut d = [0u8; 6];
        let mut v = value;
        for i in (0..digits).rev() {
            d[i] = b'0' + (v % 10) as u8;
            v /= 10;
        }
        Ok(Self {
            len: digits as u8,
            digits: d,
        })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.digits[..self.len as usize]
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(self.as_bytes()).expect("ASCII digits")
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl fmt::Display for Pin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pin {
    type Err = PinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s.trim())
    }
}

pub trait CipherSuite: Sync {
    fn e22(&self, pin: &Pin, addr: BdAddr, in_rand: &Key128) -> Key128;
    fn e21(&self, lk_rand: &Key128, addr: BdAddr) -> Key128;
    fn e1(&self, key: &Key128, addr: BdAddr, au_rand: &Key128) -> Key128;

    /// Link key from the two E21 contributions.
    fn combine(&self, a: &Key128, b: &Key128) -> Key128 {
        xor(a, b)
    }

    /// (SRES, ACO) halves of an E1 output.
    fn split_e1(&self, out: &Key128) -> (u32, [u8; 12]) {
        let sres = u32::from_be_bytes([out[0], out[1], out[2], out[3]]);
        let mut aco = [0u8; 12];
        aco.copy_from_slice(&out[4..]);
        (sres, aco)
    }

    fn sres(&self, key: &Key128, addr: BdAddr, au_rand: &Key128) -> u32 {
        self.split_e1(&self.e1(key, addr, au_rand)).0
    }
}

pub fn xor(a: &Key128, b: &Key128) -> Key128 {
    std::array::from_fn(|i| a[i] ^ b[i])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReferenceStandIn;

fn truncate(d: &[u8]) -> Key128 {
    let mut k = [0u8; 16];
    k.copy_from_slice(&d[..16]);
    k
}

impl CipherSuite for ReferenceStandIn {
    fn e22(&self, pin: &Pin, addr: BdAddr, in_rand: &Key128) -> Key128 {
        let mut h = Sha256::new();
        h.update(b"simbt/e22");
        h.update([pin.len() as u8]);
        h.update(pin.as_bytes());
        h.update(addr.to_bytes());
        h.update(in_rand);
        truncate(&h.finalize())
    }

    fn e21(&self, lk_rand: &Key128, addr: BdAddr) -> Key128 {
        let mut h = Sha256::new();
        h.update(b"simbt/e21");
        h.update(lk_rand);
        h.update(addr.to_bytes());
        truncate(&h.finalize())
    }

    fn e1(&self, key: &Key128, addr: BdAddr, au_rand: &Key128) -> Key128 {
        let mut h = Sha256::new();
        h.update(b"simbt/e1");
        h.update(key);
        h.update(addr.to_bytes());
        h.update(au_rand);
        truncate(&h.finalize())
    }
}

/// The random values exchanged during one pairing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionRandoms {
    pub in_rand: Key128,
    pub lk_rand_a: Key128,
    pub lk_rand_b: Key128,
    pub au_rand_a: Key128,
    pub au_rand_b: Key128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionKeys {
    pub k_init: Key128,
    pub k_ab: Key128,
    /// Response of B to A's challenge.
    pub sres_b: u32,
    /// Response of A to B's challenge.
    pub sres_a: u32,
    /// From the first authentication (A verifying B).
    pub aco: [u8; 12],
}

/// Full derivation chain for one side's view of a pairing. A is the
/// initiator. K_init is bound to A's address.
pub fn derive_session<S: CipherSuite + ?Sized>(
    suite: &S,
    pin: &Pin,
    addr_a: BdAddr,
    addr_b: BdAddr,
    r: &SessionRandoms,
) -> SessionKeys {
    let k_init = suite.e22(pin, addr_a, &r.in_rand);
    let k_ab = suite.combine(&suite.e21(&r.lk_rand_a, addr_a), &suite.e21(&r.lk_rand_b, addr_b));
    let (sres_b, aco) = suite.split_e1(&suite.e1(&k_ab, addr_b, &r.au_rand_a));
    let sres_a = suite.sres(&k_ab, addr_a, &r.au_rand_b);
    SessionKeys {
        k_init,
        k_ab,
        sres_b,
        sres_a,
        aco,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pin_validation() {
        assert!(Pin::new("0000").is_ok());
        assert!(Pin::new("123456").is_ok());
        assert!(Pin::new("123").is_err());
        assert!(Pin::new("1234567").is_err());
        assert!(Pin::new("12a4").is_err());
        assert_eq!(Pin::from_value(42, 4).unwrap().as_str(), "0042");
        assert_eq!("0042".parse::<Pin>().unwrap(), Pin::from_value(42, 4).unwrap());
    }

    #[test]
    fn one_digit_changes_k_init() {
        let s = ReferenceStandIn;
        let a = BdAddr::new(0, 0xfb, 0xfd7fd1);
        let r = [7u8; 16];
        for v in 0..500u32 {
            let p = Pin::from_value(v, 4).unwrap();
            let q = Pin::from_value(v + 1, 4).unwrap();
            assert_ne!(s.e22(&p, a, &r), s.e22(&q, a, &r));
        }
        // Same digits at a different length are a different PIN.
        assert_ne!(
            s.e22(&Pin::new("0000").unwrap(), a, &r),
            s.e22(&Pin::new("00000").unwrap(), a, &r)
        );
    }
}
