//! 8-bit header error check, generator D^8 + D^7 + D^5 + D^2 + D + 1.
//!
//! The register is preloaded with the UAP and the ten header bits are fed
//! LSB first. Because every step is invertible, running the register
//! backwards from a received HEC over the same header bits lands on the UAP.

/// Generator without the implicit D^8 term.
pub const HEC_POLY: u8 = 0xa7;

pub fn compute_hec(header: u16, uap: u8) -> u8 {
    let mut reg = uap;
    for i in 0..10 {
        let d = ((header >> i) & 1) as u8;
        if ((reg >> 7) ^ d) & 1 == 1 {
            reg = (reg << 1) ^ HEC_POLY;
        } else {
            reg <<= 1;
        }
    }
    reg
}

/// Recovers the register preload (the UAP) from a header and its HEC.
pub fn reverse_hec(header: u16, hec: u8) -> u8 {
    let mut reg = hec;
    for i in (0..10).rev() {
        let d = ((header >> i) & 1) as u8;
        // The low bit is 1 exactly when the step fed back, since the
        // shifted-in bit is always 0 and the generator has a D^0 term.
        let fb = reg & 1;
        let low = if fb == 1 { reg ^ HEC_POLY } else { reg } >> 1;
        reg = low | ((fb ^ d) << 7);
    }
    reg
}
