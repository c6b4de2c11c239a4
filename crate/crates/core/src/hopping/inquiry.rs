//! Inquiry and page hopping over the 32 wake-up channels.
//!
//! Inquirers and pagers step once per clock tick (3200 Hz), sending two ID
//! packets per transmit slot. Scanners hold one channel, selected by
//! CLKN16..12, for 1.28 s at a time.

use std::sync::OnceLock;

use super::kernel::{HopAddress, HopKernel, HopSelector};
use crate::baseband::ClockState;

/// General inquiry access code LAP. Inquiry hopping uses it with UAP 0.
pub const GIAC_LAP: u32 = 0x9e8b33;

/// One half of the 32 wake-up channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InquiryTrain {
    A,
    B,
}

impl InquiryTrain {
    fn koffset(self) -> u32 {
        match self {
            InquiryTrain::A => 24,
            InquiryTrain::B => 8,
        }
    }

    pub fn other(self) -> Self {
        match self {
            InquiryTrain::A => InquiryTrain::B,
            InquiryTrain::B => InquiryTrain::A,
        }
    }
}

fn giac_selector() -> &'static HopSelector {
    static SEL: OnceLock<HopSelector> = OnceLock::new();
    SEL.get_or_init(|| HopSelector::new(HopKernel::BasicSpec, HopAddress::new(0, GIAC_LAP), None).expect("no map"))
}

fn selector(addr: HopAddress) -> HopSelector {
    HopSelector::new(HopKernel::BasicSpec, addr, None).expect("no map")
}

/// Train position for a given train: X = (CLK16-12 + koffset +
/// ((CLK4-2,0 - CLK16-12) mod 16)) mod 32.
fn train_x(clock: ClockState, train: InquiryTrain) -> u32 {
    let hi = clock.bits(16, 12);
    let lo = (clock.bits(4, 2) << 1) | clock.clock0();
    (hi + train.koffset() + ((lo + 32 - (hi % 16)) % 16)) % 32
}

/// Train position when no train split is applied: a full sweep of all 32
/// positions every 32 transmit ticks.
fn rotating_x(clock: ClockState) -> u32 {
    (clock.bits(5, 2) << 1) | clock.clock0()
}

/// The 32 channels used for inquiry or paging of `addr`, in train order.
pub fn wakeup_channels(addr: HopAddress) -> [u8; 32] {
    let sel = selector(addr);
    std::array::from_fn(|x| sel.wakeup_channel(x as u32))
}

/// Inquirer transmit channel at this tick. `None` sweeps the whole set.
pub fn inquiry_hop(clock: ClockState, train: Option<InquiryTrain>) -> u8 {
    let x = match train {
        Some(t) => train_x(clock, t),
        None => rotating_x(clock),
    };
    giac_selector().wakeup_channel(x)
}

/// Channel an inquiry-scanning device listens on.
pub fn inquiry_scan_hop(clock: ClockState) -> u8 {
    giac_selector().wakeup_channel(clock.bits(16, 12))
}

/// Train a pager uses at this point of its estimate of the target clock;
/// trains alternate every 1.28 s.
pub fn page_train(clock_estimate: ClockState) -> InquiryTrain {
    if clock_estimate.bits(12, 12) == 0 {
        InquiryTrain::A
    } else {
        InquiryTrain::B
    }
}

/// Pager transmit channel, driven by the pager's estimate of the target's
/// native clock.
pub fn page_hop(clock_estimate: ClockState, target: HopAddress) -> u8 {
    selector(target).wakeup_channel(train_x(clock_estimate, page_train(clock_estimate)))
}

/// Channel a page-scanning device listens on, from its native clock.
pub fn page_scan_hop(clock: ClockState, own: HopAddress) -> u8 {
    selector(own).wakeup_channel(clock.bits(16, 12))
}
