//! Payload CRC-16, generator D^16 + D^12 + D^5 + 1, register preloaded with
//! the UAP in its upper byte. Payload bytes are fed LSB first.

use thiserror::Error;

pub const CRC_POLY: u16 = 0x1021;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CrcError {
    #[error("CRC requested over an empty payload")]
    EmptyPayload,
}

pub fn compute_crc(payload: &[u8], uap: u8) -> Result<u16, CrcError> {
    if payload.is_empty() {
        return Err(CrcError::EmptyPayload);
    }
    let mut reg = (uap as u16) << 8;
    for byte in payload {
        for i in 0..8 {
            let d = ((byte >> i) & 1) as u16;
            let fb = (reg >> 15) ^ d;
            reg <<= 1;
            if fb == 1 {
                reg ^= CRC_POLY;
            }
        }
    }
    Ok(reg)
}
