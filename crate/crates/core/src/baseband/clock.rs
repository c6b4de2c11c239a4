/// Number of distinct values of the 28-bit native clock.
pub const CLOCK_MODULUS: u32 = 1 << 28;
const CLOCK_MASK: u32 = CLOCK_MODULUS - 1;

/// 28-bit, 3200 Hz Bluetooth clock. Two ticks per 625 µs slot.
///
/// Bit `k` of the raw counter is CLKk. The named views drop CLK0:
/// `clock27` is CLK27..CLK1 and `clock6` is CLK6..CLK1, both with CLK1 in
/// the least significant position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockState(u32);

impl ClockState {
    pub const fn new(raw: u32) -> Self {
        Self(raw & CLOCK_MASK)
    }

    /// Clock positioned at the first tick of the slot with this CLK27..1.
    pub const fn from_clock27(clock27: u32) -> Self {
        Self::new(clock27 << 1)
    }

    pub const fn raw(self) -> u32 {
        self.0
    }

    pub const fn clock0(self) -> u32 {
        self.0 & 1
    }

    pub const fn clock1(self) -> u32 {
        (self.0 >> 1) & 1
    }

    pub const fn clock6(self) -> u8 {
        ((self.0 >> 1) & 0x3f) as u8
    }

    pub const fn clock27(self) -> u32 {
        self.0 >> 1
    }

    /// Bits `hi..=lo` of the raw counter, `lo` in the least significant place.
    pub const fn bits(self, hi: u32, lo: u32) -> u32 {
        (self.0 >> lo) & ((1 << (hi - lo + 1)) - 1)
    }

    pub const fn add_ticks(self, ticks: u32) -> Self {
        Self::new(self.0.wrapping_add(ticks))
    }

    pub const fn sub_ticks(self, ticks: u32) -> Self {
        Self::new(self.0.wrapping_sub(ticks))
    }

    pub const fn add_slots(self, slots: u32) -> Self {
        self.add_ticks(slots.wrapping_mul(2))
    }

    /// Signed distance `self - other` in ticks, taken modulo 2^28 into
    /// `[-2^27, 2^27)`.
    pub const fn offset_from(self, other: Self) -> i32 {
        let d = self.0.wrapping_sub(other.0) & CLOCK_MASK;
        if d >= CLOCK_MODULUS / 2 {
            d as i32 - CLOCK_MODULUS as i32
        } else {
            d as i32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views() {
        let c = ClockState::new(0b1_0110_1101);
        assert_eq!(c.clock0(), 1);
        assert_eq!(c.clock1(), 0);
        assert_eq!(c.clock6(), 0b11_0110);
        assert_eq!(c.clock27(), 0b1011_0110);
        assert_eq!(c.bits(4, 2), 0b011);
    }

    #[test]
    fn two_ticks_per_slot_and_wrap() {
        let c = ClockState::new(CLOCK_MODULUS - 2);
        assert_eq!(c.add_slots(1).raw(), 0);
        assert_eq!(c.add_ticks(3).raw(), 1);
        assert_eq!(ClockState::new(5).sub_ticks(7).raw(), CLOCK_MODULUS - 2);
    }

    #[test]
    fn offsets_wrap_symmetrically() {
        let a = ClockState::new(1);
        let b = ClockState::new(CLOCK_MODULUS - 1);
        assert_eq!(a.offset_from(b), 2);
        assert_eq!(b.offset_from(a), -2);
    }
}
