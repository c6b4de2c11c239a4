//! Clock27 acquisition by hop-sequence matching.
//!
//! Candidates are values of the master's CLK27..1 at a reference slot. Each
//! observed (slot, channel) pair removes every candidate whose predicted
//! channel differs. The set only ever shrinks within one attempt.

use crate::hopping::HopSelector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClockSpace {
    /// All 2^27 values.
    Full,
    /// Clock values wrap at 2^bits; for fast exhaustive tests.
    Reduced(u32),
}

impl ClockSpace {
    pub fn bits(self) -> u32 {
        match self {
            ClockSpace::Full => 27,
            ClockSpace::Reduced(b) => b.clamp(6, 27),
        }
    }

    pub fn size(self) -> u64 {
        1 << self.bits()
    }

    pub fn wrap(self, v: i64) -> u32 {
        v.rem_euclid(self.size() as i64) as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelObservation {
    pub rel_slot: i64,
    pub channel: u8,
}

#[derive(Clone, Debug)]
pub struct Acquisition {
    space: ClockSpace,
    selector: HopSelector,
    ref_slot: i64,
    candidates: Vec<u32>,
    consistent_with_clock6: u64,
    after_first: usize,
    observations: u32,
}

impl Acquisition {
    /// Starts from every clock congruent to `clock6` (mod 64) at the slot of
    /// `first`, filtered by `first` itself.
    pub fn start(space: ClockSpace, selector: HopSelector, clock6: u8, first: ChannelObservation) -> Self {
        let size = space.size() as u32;
        let candidates: Vec<u32> = (clock6 as u32 & 63..size)
            .step_by(64)
            .filter(|c| selector.channel(*c) == first.channel)
            .collect();
        Self {
            space,
            ref_slot: first.rel_slot,
            after_first: candidates.len(),
            consistent_with_clock6: space.size() / 64,
            candidates,
            selector,
            observations: 1,
        }
    }

    pub fn space(&self) -> ClockSpace {
        self.space
    }

    pub fn ref_slot(&self) -> i64 {
        self.ref_slot
    }

    /// Clock values consistent with Clock6 alone.
    pub fn clock6_consistent(&self) -> u64 {
        self.consistent_with_clock6
    }

    /// Count left after the first observation.
    pub fn initial_count(&self) -> usize {
        self.after_first
    }

    pub fn candidates(&self) -> &[u32] {
        &self.candidates
    }

    pub fn remaining(&self) -> usize {
        self.candidates.len()
    }

    pub fn observations(&self) -> u32 {
        self.observations
    }

    pub fn set_selector(&mut self, sel: HopSelector) {
        self.selector = sel;
    }

    /// Clock at `rel_slot` for a candidate.
    pub fn clock_at(&self, candidate: u32, rel_slot: i64) -> u32 {
        self.space.wrap(candidate as i64 + rel_slot - self.ref_slot)
    }

    pub fn predict(&self, candidate: u32, rel_slot: i64) -> u8 {
        self.selector.channel(self.clock_at(candidate, rel_slot))
    }

    pub fn observe(&mut self, obs: ChannelObservation) -> usize {
        let d = obs.rel_slot - self.ref_slot;
        let (sel, space) = (&self.selector, self.space);
        self.candidates
            .retain(|c| sel.channel(space.wrap(*c as i64 + d)) == obs.channel);
        self.observations += 1;
        self.candidates.len()
    }

    pub fn unique(&self) -> Option<u32> {
        match self.candidates[..] {
            [c] => Some(c),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopping::{HopAddress, HopKernel};

    #[test]
    fn true_clock_survives() {
        let sel = HopSelector::new(HopKernel::BasicSpec, HopAddress::new(0xfb, 0xfd7fd1), None).unwrap();
        let space = ClockSpace::Full;
        let truth = 0x2a9_6ef2u32;
        let obs = |r: i64| ChannelObservation {
            rel_slot: r,
            channel: sel.channel(space.wrap(truth as i64 + r)),
        };
        let mut a = Acquisition::start(space, sel.clone(), (truth & 63) as u8, obs(0));
        assert_eq!(a.clock6_consistent(), 1 << 21);
        let init = a.initial_count();
        assert!((20_000..34_000).contains(&init), "{init}");
        let mut r = 0;
        while a.remaining() > 1 {
            r += 37;
            a.observe(obs(r));
        }
        assert_eq!(a.unique(), Some(truth));
    }
}
