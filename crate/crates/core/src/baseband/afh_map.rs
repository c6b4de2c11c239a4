use thiserror::Error;

pub const NUM_CHANNELS: usize = 79;
/// Smallest hop set an AFH map may leave usable.
pub const MIN_USABLE_CHANNELS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ChannelClass {
    Good,
    Bad,
    #[default]
    Unknown,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AfhError {
    #[error("channel {0} out of range 0..79")]
    BadChannel(u8),
    #[error("map would leave {usable} usable channels, minimum is 20")]
    BelowMinimum { usable: usize },
}

/// 79-entry channel classification. Good and Unknown channels are usable
/// for hopping; Bad channels are skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AfhMap {
    entries: [ChannelClass; NUM_CHANNELS],
}

impl Default for AfhMap {
    fn default() -> Self {
        Self::all_unknown()
    }
}

impl AfhMap {
    pub const fn all_unknown() -> Self {
        Self {
            entries: [ChannelClass::Unknown; NUM_CHANNELS],
        }
    }

    pub fn from_entries(entries: [ChannelClass; NUM_CHANNELS]) -> Result<Self, AfhError> {
        let m = Self { entries };
        let usable = m.usable_count();
        if usable < MIN_USABLE_CHANNELS {
            return Err(AfhError::BelowMinimum { usable });
        }
        Ok(m)
    }

    /// All-Unknown map with the given channels marked Bad.
    pub fn with_bad<I: IntoIterator<Item = u8>>(bad: I) -> Result<Self, AfhError> {
        let mut entries = [ChannelClass::Unknown; NUM_CHANNELS];
        for ch in bad {
            if ch as usize >= NUM_CHANNELS {
                return Err(AfhError::BadChannel(ch));
            }
            entries[ch as usize] = ChannelClass::Bad;
        }
        Self::from_entries(entries)
    }

    /// Map whose usable set is exactly `used`; everything else is Bad.
    pub fn with_used<I: IntoIterator<Item = u8>>(used: I) -> Result<Self, AfhError> {
        let mut entries = [ChannelClass::Bad; NUM_CHANNELS];
        for ch in used {
            if ch as usize >= NUM_CHANNELS {
                return Err(AfhError::BadChannel(ch));
            }
            entries[ch as usize] = ChannelClass::Unknown;
        }
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[ChannelClass; NUM_CHANNELS] {
        &self.entries
    }

    pub fn class(&self, ch: u8) -> ChannelClass {
        self.entries[ch as usize]
    }

    pub fn is_usable(&self, ch: u8) -> bool {
        self.entries[ch as usize] != ChannelClass::Bad
    }

    /// The `n` of the hop kernel.
    pub fn usable_count(&self) -> usize {
        self.entries.iter().filter(|c| **c != ChannelClass::Bad).count()
    }

    pub fn used_channels(&self) -> Vec<u8> {
        (0..NUM_CHANNELS as u8).filter(|c| self.is_usable(*c)).collect()
    }

    pub fn bad_channels(&self) -> Vec<u8> {
        (0..NUM_CHANNELS as u8).filter(|c| !self.is_usable(*c)).collect()
    }

    /// Reclassifies one channel, refusing to drop the usable count below 20.
    pub fn set(&mut self, ch: u8, class: ChannelClass) -> Result<(), AfhError> {
        if ch as usize >= NUM_CHANNELS {
            return Err(AfhError::BadChannel(ch));
        }
        if class == ChannelClass::Bad && self.is_usable(ch) {
            let usable = self.usable_count() - 1;
            if usable < MIN_USABLE_CHANNELS {
                return Err(AfhError::BelowMinimum { usable });
            }
        }
        self.entries[ch as usize] = class;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_of_twenty_is_enforced() {
        let mut m = AfhMap::with_bad(0..59).unwrap();
        assert_eq!(m.usable_count(), 20);
        assert_eq!(m.set(70, ChannelClass::Bad), Err(AfhError::BelowMinimum { usable: 19 }));
        assert_eq!(m.usable_count(), 20);
        // Re-marking an already Bad channel is fine.
        m.set(3, ChannelClass::Bad).unwrap();
        m.set(3, ChannelClass::Good).unwrap();
        assert_eq!(m.usable_count(), 21);
        assert!(AfhMap::with_bad(0..60).is_err());
        assert!(AfhMap::with_used(0..19).is_err());
    }

    #[test]
    fn used_and_bad_partition() {
        let m = AfhMap::with_bad(24..=45).unwrap();
        assert_eq!(m.usable_count(), 57);
        assert_eq!(m.bad_channels(), (24..=45).collect::<Vec<u8>>());
        assert_eq!(m.used_channels().len() + m.bad_channels().len(), 79);
        assert_eq!(m.class(10), ChannelClass::Unknown);
        assert!(AfhMap::with_bad([79]).is_err());
    }
}
