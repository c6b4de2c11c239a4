use std::sync::OnceLock;

use thiserror::Error;

use crate::baseband::{AfhMap, BdAddr, MIN_USABLE_CHANNELS, NUM_CHANNELS};

/// 28-bit hop address: low nibble of the UAP above the 24-bit LAP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HopAddress(u32);

impl HopAddress {
    pub const fn new(uap: u8, lap: u32) -> Self {
        Self((((uap & 0x0f) as u32) << 24) | (lap & 0xff_ffff))
    }

    /// Keeps only the low 28 bits.
    pub const fn from_raw(v: u32) -> Self {
        Self(v & 0x0fff_ffff)
    }

    pub const fn value(self) -> u32 {
        self.0
    }
}

impl From<BdAddr> for HopAddress {
    fn from(a: BdAddr) -> Self {
        Self::new(a.uap, a.lap)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum HopKernel {
    /// The standard XOR/permute/add kernel.
    #[default]
    BasicSpec,
    /// Keyed hash reduced onto the hop set. Only for exercising surrounding
    /// machinery; nothing real hops this way.
    ReferenceHash,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HopError {
    #[error("hop set of {0} channels is below the minimum of 20")]
    HopSetTooSmall(usize),
    #[error("sequence length {0} outside 1..=2^27")]
    BadLength(u64),
}

/// Longest sequence `predict_sequence` will produce: one full clock period.
pub const MAX_SEQUENCE_LEN: u64 = 1 << 27;

/// Address-derived kernel inputs, before any clock bits are mixed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddressParts {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub e: u32,
}

fn bit(v: u32, i: u32) -> u32 {
    (v >> i) & 1
}

impl AddressParts {
    pub fn new(addr: HopAddress) -> Self {
        let v = addr.value();
        let c = (0..5).fold(0, |acc, i| acc | (bit(v, 2 * i) << i));
        let e = (0..7).fold(0, |acc, i| acc | (bit(v, 2 * i + 1) << i));
        Self {
            a: (v >> 23) & 0x1f,
            b: (v >> 19) & 0x0f,
            c,
            d: (v >> 10) & 0x1ff,
            e,
        }
    }
}

const INDEX1: [u8; 14] = [0, 2, 1, 3, 0, 1, 0, 3, 1, 0, 2, 1, 0, 1];
const INDEX2: [u8; 14] = [1, 3, 2, 4, 4, 3, 2, 4, 4, 3, 4, 3, 3, 2];

/// Butterfly permutation of a 5-bit value. Control bits P0..P8 come from
/// `d`, P9..P13 from `c`; stage P13 is applied first.
pub(crate) fn perm5_slow(z: u32, c: u32, d: u32) -> u32 {
    let p = (d & 0x1ff) | ((c & 0x1f) << 9);
    let mut z = z & 0x1f;
    for i in (0..14).rev() {
        if (p >> i) & 1 == 1 {
            let (x, y) = (INDEX1[i] as u32, INDEX2[i] as u32);
            let bx = (z >> x) & 1;
            let by = (z >> y) & 1;
            if bx != by {
                z ^= (1 << x) | (1 << y);
            }
        }
    }
    z
}

fn perm_table() -> &'static [u8] {
    static TABLE: OnceLock<Vec<u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0u8; 32 * 512 * 32];
        for c in 0..32u32 {
            for d in 0..512u32 {
                for z in 0..32u32 {
                    t[((c as usize * 512 + d as usize) << 5) | z as usize] = perm5_slow(z, c, d) as u8;
                }
            }
        }
        t
    })
}

#[inline]
pub(crate) fn perm5(table: &[u8], z: u32, c: u32, d: u32) -> u32 {
    table[((c as usize * 512 + d as usize) << 5) | z as usize] as u32
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Precomputed hop selection for one address and (optionally) one AFH map.
#[derive(Clone, Debug)]
pub struct HopSelector {
    kernel: HopKernel,
    addr: HopAddress,
    parts: AddressParts,
    table: &'static [u8],
    /// Sorted usable channels, present only in adaptive mode.
    used: Option<Vec<u8>>,
    usable: [bool; NUM_CHANNELS],
}

impl HopSelector {
    pub fn new(kernel: HopKernel, addr: HopAddress, map: Option<&AfhMap>) -> Result<Self, HopError> {
        let mut usable = [true; NUM_CHANNELS];
        let used = match map {
            Some(m) => {
                let u = m.used_channels();
                if u.len() < MIN_USABLE_CHANNELS {
                    return Err(HopError::HopSetTooSmall(u.len()));
                }
                for (ch, slot) in usable.iter_mut().enumerate() {
                    *slot = m.is_usable(ch as u8);
                }
                // A map with nothing excluded hops exactly like basic mode.
                (u.len() < NUM_CHANNELS).then_some(u)
            }
            None => None,
        };
        Ok(Self {
            kernel,
            addr,
            parts: AddressParts::new(addr),
            table: perm_table(),
            used,
            usable,
        })
    }

    pub fn addr(&self) -> HopAddress {
        self.addr
    }

    pub fn is_adaptive(&self) -> bool {
        self.used.is_some()
    }

    /// Channel for the slot whose CLK27..1 is `clock27`.
    #[inline]
    pub fn channel(&self, clock27: u32) -> u8 {
        let clock27 = clock27 & 0x7ff_ffff;
        match self.kernel {
            HopKernel::BasicSpec => self.spec_channel(clock27),
            HopKernel::ReferenceHash => self.hash_channel(clock27),
        }
    }

    #[inline]
    fn spec_channel(&self, k: u32) -> u8 {
        let p = &self.parts;
        let y1 = k & 1;
        let x = (k >> 1) & 0x1f;
        let a = p.a ^ ((k >> 20) & 0x1f);
        let c = p.c ^ ((k >> 15) & 0x1f);
        let d = p.d ^ ((k >> 6) & 0x1ff);
        let upper = k >> 6;
        let f = (16 * upper) % 79;
        let z = ((x + a) & 0x1f) ^ p.b;
        let ctl = if y1 == 1 { c ^ 0x1f } else { c };
        let perm = perm5(self.table, z, ctl, d);
        let idx = (perm + p.e + f + 32 * y1) % 79;
        let ch = ((2 * idx) % 79) as u8;
        match &self.used {
            Some(used) if !self.usable[ch as usize] => {
                let n = used.len() as u32;
                let f2 = (16 * upper) % n;
                used[((perm + p.e + f2 + 32 * y1) % n) as usize]
            }
            _ => ch,
        }
    }

    fn hash_channel(&self, k: u32) -> u8 {
        let h = splitmix(((self.addr.value() as u64) << 27) | k as u64);
        let ch = (h % 79) as u8;
        match &self.used {
            Some(used) if !self.usable[ch as usize] => used[((h >> 32) % used.len() as u64) as usize],
            _ => ch,
        }
    }

    /// The channel a scanner listens on, or an inquirer/pager transmits
    /// on, for train position `x` (0..32): the kernel with no clock mixed in
    /// and Y1 = 0.
    pub(crate) fn wakeup_channel(&self, x: u32) -> u8 {
        let p = &self.parts;
        let z = ((x + p.a) & 0x1f) ^ p.b;
        let perm = perm5(self.table, z, p.c, p.d);
        ((2 * ((perm + p.e) % 79)) % 79) as u8
    }
}

pub fn basic_hop(kernel: HopKernel, addr: HopAddress, clock27: u32) -> u8 {
    HopSelector::new(kernel, addr, None)
        .expect("basic mode has no map")
        .channel(clock27)
}

pub fn adaptive_hop(kernel: HopKernel, addr: HopAddress, clock27: u32, map: &AfhMap) -> Result<u8, HopError> {
    Ok(HopSelector::new(kernel, addr, Some(map))?.channel(clock27))
}

/// Channels for `length` consecutive slots starting at `start_clock27`.
pub fn predict_sequence(
    kernel: HopKernel,
    addr: HopAddress,
    start_clock27: u32,
    map: Option<&AfhMap>,
    length: u64,
) -> Result<Vec<u8>, HopError> {
    if length == 0 || length > MAX_SEQUENCE_LEN {
        return Err(HopError::BadLength(length));
    }
    let sel = HopSelector::new(kernel, addr, map)?;
    Ok((0..length as u32)
        .map(|i| sel.channel(start_clock27.wrapping_add(i)))
        .collect())
}
