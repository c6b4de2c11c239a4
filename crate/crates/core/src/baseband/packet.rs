use thiserror::Error;

use super::addr::BdAddr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Modulation {
    #[default]
    BasicRate,
    /// Enhanced Data Rate: PSK payload, GFSK access code and header.
    Edr,
}

/// The seven legacy pairing messages, in exchange order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairingKind {
    InRand,
    CombKeyA,
    CombKeyB,
    AuRandA,
    SresB,
    AuRandB,
    SresA,
}

impl PairingKind {
    pub const ALL: [PairingKind; 7] = [
        PairingKind::InRand,
        PairingKind::CombKeyA,
        PairingKind::CombKeyB,
        PairingKind::AuRandA,
        PairingKind::SresB,
        PairingKind::AuRandB,
        PairingKind::SresA,
    ];

    /// 1-based position in the exchange.
    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get((i as usize).checked_sub(1)?).copied()
    }

    /// Payload size in bytes: 16 for random/masked values, 4 for SRES.
    pub fn value_len(self) -> usize {
        match self {
            PairingKind::SresA | PairingKind::SresB => 4,
            _ => 16,
        }
    }

    /// True when the initiator (device A, the master) sends this message.
    pub fn from_initiator(self) -> bool {
        matches!(
            self,
            PairingKind::InRand | PairingKind::CombKeyA | PairingKind::AuRandA | PairingKind::SresA
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PacketType {
    /// Access code only.
    Id,
    Fhs,
    Poll,
    Null,
    Dm1,
    Dh1,
    Dh3,
    Dh5,
    /// Link manager PDU carried in a DM1.
    Lmp,
    /// Legacy pairing PDU carried in a DM1.
    Pairing(PairingKind),
}

/// Link manager opcodes used by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmpOpcode {
    SetAfh,
    HostConnectionReq,
    Accepted,
    SetupComplete,
}

impl LmpOpcode {
    pub const fn code(self) -> u8 {
        match self {
            LmpOpcode::Accepted => 3,
            LmpOpcode::HostConnectionReq => 51,
            LmpOpcode::SetupComplete => 49,
            LmpOpcode::SetAfh => 60,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [
            LmpOpcode::SetAfh,
            LmpOpcode::HostConnectionReq,
            LmpOpcode::Accepted,
            LmpOpcode::SetupComplete,
        ]
        .into_iter()
        .find(|o| o.code() == c)
    }
}

impl PacketType {
    /// 4-bit TYPE header field. `None` for ID, which has no header.
    pub fn type_code(self) -> Option<u8> {
        Some(match self {
            PacketType::Id => return None,
            PacketType::Null => 0x0,
            PacketType::Poll => 0x1,
            PacketType::Fhs => 0x2,
            PacketType::Dm1 | PacketType::Lmp | PacketType::Pairing(_) => 0x3,
            PacketType::Dh1 => 0x4,
            PacketType::Dh3 => 0xb,
            PacketType::Dh5 => 0xf,
        })
    }

    pub fn has_payload(self) -> bool {
        !matches!(self, PacketType::Id | PacketType::Poll | PacketType::Null)
    }

    pub fn slots(self) -> u8 {
        match self {
            PacketType::Dh3 => 3,
            PacketType::Dh5 => 5,
            _ => 1,
        }
    }

    pub fn is_user_data(self) -> bool {
        matches!(
            self,
            PacketType::Dm1 | PacketType::Dh1 | PacketType::Dh3 | PacketType::Dh5
        )
    }

    pub fn supports_edr(self) -> bool {
        matches!(self, PacketType::Dh1 | PacketType::Dh3 | PacketType::Dh5)
    }

    /// Largest payload body in bytes, excluding the payload header.
    pub fn max_payload(self, modulation: Modulation) -> usize {
        let edr = modulation == Modulation::Edr;
        match self {
            PacketType::Id | PacketType::Poll | PacketType::Null => 0,
            PacketType::Fhs => FHS_PAYLOAD_LEN,
            PacketType::Dm1 | PacketType::Lmp => 17,
            PacketType::Pairing(k) => k.value_len(),
            PacketType::Dh1 if edr => 54,
            PacketType::Dh1 => 27,
            PacketType::Dh3 if edr => 367,
            PacketType::Dh3 => 183,
            PacketType::Dh5 if edr => 679,
            PacketType::Dh5 => 339,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PacketType::Id => "ID",
            PacketType::Fhs => "FHS",
            PacketType::Poll => "POLL",
            PacketType::Null => "NULL",
            PacketType::Dm1 => "DM1",
            PacketType::Dh1 => "DH1",
            PacketType::Dh3 => "DH3",
            PacketType::Dh5 => "DH5",
            PacketType::Lmp => "LMP",
            PacketType::Pairing(_) => "PAIRING",
        }
    }
}

/// FHS body: BD_ADDR (6 bytes, NAP first), CLK27..1 (4 bytes, little
/// endian), LT_ADDR (1 byte).
pub const FHS_PAYLOAD_LEN: usize = 11;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct HeaderFlags {
    pub flow: bool,
    pub arqn: bool,
    pub seqn: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("{0} packets carry no payload")]
    UnexpectedPayload(&'static str),
    #[error("{0} packets need a payload")]
    MissingPayload(&'static str),
    #[error("{ptype} payload of {len} bytes exceeds {max}")]
    PayloadTooLong {
        ptype: &'static str,
        len: usize,
        max: usize,
    },
    #[error("pairing message needs exactly {expected} bytes, got {len}")]
    PairingLength { expected: usize, len: usize },
    #[error("{0} cannot be EDR modulated")]
    EdrNotSupported(&'static str),
    #[error("LT_ADDR {0} does not fit in 3 bits")]
    LtAddr(u8),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasebandPacket {
    pub sync_lap: u32,
    pub lt_addr: u8,
    pub ptype: PacketType,
    pub flags: HeaderFlags,
    pub payload: Vec<u8>,
    pub modulation: Modulation,
}

impl BasebandPacket {
    fn bare(sync_lap: u32, lt_addr: u8, ptype: PacketType) -> Self {
        Self {
            sync_lap: sync_lap & 0xff_ffff,
            lt_addr,
            ptype,
            flags: HeaderFlags::default(),
            payload: Vec::new(),
            modulation: Modulation::BasicRate,
        }
    }

    pub fn id(lap: u32) -> Self {
        Self::bare(lap, 0, PacketType::Id)
    }

    pub fn poll(lap: u32, lt_addr: u8) -> Self {
        Self::bare(lap, lt_addr, PacketType::Poll)
    }

    pub fn null(lap: u32, lt_addr: u8) -> Self {
        Self::bare(lap, lt_addr, PacketType::Null)
    }

    pub fn data(lap: u32, lt_addr: u8, ptype: PacketType, payload: Vec<u8>, modulation: Modulation) -> Self {
        Self {
            payload,
            modulation,
            ..Self::bare(lap, lt_addr, ptype)
        }
    }

    pub fn lmp(lap: u32, lt_addr: u8, opcode: LmpOpcode, params: &[u8]) -> Self {
        let mut payload = vec![opcode.code()];
        payload.extend_from_slice(params);
        Self {
            payload,
            ..Self::bare(lap, lt_addr, PacketType::Lmp)
        }
    }

    pub fn pairing(lap: u32, lt_addr: u8, kind: PairingKind, value: Vec<u8>) -> Self {
        Self {
            payload: value,
            ..Self::bare(lap, lt_addr, PacketType::Pairing(kind))
        }
    }

    /// FHS as sent on the access code of `lap` (the inquiry or device access
    /// code), advertising `addr` and its clock.
    pub fn fhs(lap: u32, addr: BdAddr, clock27: u32, lt_addr: u8) -> Self {
        let mut payload = addr.to_bytes().to_vec();
        payload.extend_from_slice(&clock27.to_le_bytes());
        payload.push(lt_addr);
        Self {
            payload,
            ..Self::bare(lap, 0, PacketType::Fhs)
        }
    }

    /// Address, CLK27..1 and assigned LT_ADDR of an FHS packet.
    pub fn fhs_contents(&self) -> Option<(BdAddr, u32, u8)> {
        if self.ptype != PacketType::Fhs || self.payload.len() != FHS_PAYLOAD_LEN {
            return None;
        }
        let mut a = [0u8; 6];
        a.copy_from_slice(&self.payload[..6]);
        let clk = u32::from_le_bytes([self.payload[6], self.payload[7], self.payload[8], self.payload[9]]);
        Some((BdAddr::from_bytes(a), clk & 0x7ff_ffff, self.payload[10]))
    }

    pub fn lmp_opcode(&self) -> Option<LmpOpcode> {
        match self.ptype {
            PacketType::Lmp => LmpOpcode::from_code(*self.payload.first()?),
            _ => None,
        }
    }

    pub fn slots(&self) -> u8 {
        self.ptype.slots()
    }

    pub fn with_flags(mut self, flags: HeaderFlags) -> Self {
        self.flags = flags;
        self
    }

    /// 10-bit header content: LT_ADDR, TYPE, FLOW, ARQN, SEQN from bit 0 up.
    pub fn header_bits(&self) -> Option<u16> {
        let t = self.ptype.type_code()? as u16;
        Some(
            (self.lt_addr as u16 & 0x7)
                | (t << 3)
                | ((self.flags.flow as u16) << 7)
                | ((self.flags.arqn as u16) << 8)
                | ((self.flags.seqn as u16) << 9),
        )
    }

    pub fn validate(&self) -> Result<(), PacketError> {
        let name = self.ptype.name();
        if self.lt_addr > 7 {
            return Err(PacketError::LtAddr(self.lt_addr));
        }
        if self.modulation == Modulation::Edr && !self.ptype.supports_edr() {
            return Err(PacketError::EdrNotSupported(name));
        }
        if !self.ptype.has_payload() {
            if !self.payload.is_empty() {
                return Err(PacketError::UnexpectedPayload(name));
            }
            return Ok(());
        }
        if let PacketType::Pairing(k) = self.ptype {
            if self.payload.len() != k.value_len() {
                return Err(PacketError::PairingLength {
                    expected: k.value_len(),
                    len: self.payload.len(),
                });
            }
        }
        if self.payload.is_empty() {
            return Err(PacketError::MissingPayload(name));
        }
        let max = self.ptype.max_payload(self.modulation);
        if self.payload.len() > max {
            return Err(PacketError::PayloadTooLong {
                ptype: name,
                len: self.payload.len(),
                max,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_counts() {
        assert_eq!(PacketType::Dh5.slots(), 5);
        assert_eq!(PacketType::Dh3.slots(), 3);
        for t in [PacketType::Poll, PacketType::Null, PacketType::Dm1, PacketType::Dh1] {
            assert_eq!(t.slots(), 1);
        }
    }

    #[test]
    fn validation() {
        let mut p = BasebandPacket::poll(0x9e8b33, 1);
        assert!(p.validate().is_ok());
        p.payload = vec![1];
        assert_eq!(p.validate(), Err(PacketError::UnexpectedPayload("POLL")));
        let d = BasebandPacket::data(1, 1, PacketType::Dh1, vec![0; 28], Modulation::BasicRate);
        assert!(matches!(d.validate(), Err(PacketError::PayloadTooLong { .. })));
        let d = BasebandPacket::data(1, 1, PacketType::Dh1, vec![0; 28], Modulation::Edr);
        assert!(d.validate().is_ok());
        let d = BasebandPacket::data(1, 1, PacketType::Dm1, vec![0; 3], Modulation::Edr);
        assert!(matches!(d.validate(), Err(PacketError::EdrNotSupported(_))));
        let s = BasebandPacket::pairing(1, 1, PairingKind::SresA, vec![0; 16]);
        assert!(matches!(s.validate(), Err(PacketError::PairingLength { .. })));
    }

    #[test]
    fn fhs_contents_roundtrip() {
        let a = BdAddr::new(0x1234, 0x56, 0x789abc);
        let p = BasebandPacket::fhs(0x9e8b33, a, 0x5ab_cdef, 2);
        assert_eq!(p.fhs_contents(), Some((a, 0x5ab_cdef, 2)));
    }

    #[test]
    fn pairing_kind_indices() {
        for (i, k) in PairingKind::ALL.iter().enumerate() {
            assert_eq!(k.index() as usize, i + 1);
            assert_eq!(PairingKind::from_index(k.index()), Some(*k));
        }
        assert_eq!(PairingKind::from_index(0), None);
        assert_eq!(PairingKind::from_index(8), None);
    }
}
