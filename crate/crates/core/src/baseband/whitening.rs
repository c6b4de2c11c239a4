//! Data whitening: a 7-bit LFSR with generator g(D) = D^7 + D^4 + 1, seeded
//! from CLK6..CLK1 of the clock at the start of the packet.
//!
//! Register layout: bit `i` of the word is cell `D^i`. Cells 0..=5 hold
//! CLK1..CLK6 and cell 6 is fixed to 1. Each step emits cell 6, shifts
//! towards higher cells and feeds the emitted bit back into cells 0 and 4.

/// Initial whitening register. Only the 64 words with bit 6 set exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WhiteningWord(u8);

impl WhiteningWord {
    pub const fn bits(self) -> u8 {
        self.0
    }

    /// The clock6 value this word was derived from.
    pub const fn clock6(self) -> u8 {
        self.0 & 0x3f
    }

    pub fn keystream(self) -> Keystream {
        Keystream { reg: self.0 }
    }
}

pub const fn derive_whitening_word(clock6: u8) -> WhiteningWord {
    WhiteningWord(0x40 | (clock6 & 0x3f))
}

/// Infinite whitening keystream, one bit (0 or 1) per item.
#[derive(Clone, Debug)]
pub struct Keystream {
    reg: u8,
}

impl Iterator for Keystream {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        let out = (self.reg >> 6) & 1;
        self.reg = ((self.reg << 1) & 0x7f) | out;
        if out == 1 {
            self.reg ^= 1 << 4;
        }
        Some(out)
    }
}

/// XORs a bit sequence (one bit per byte) with the keystream for `word`.
pub fn whiten(bits: &[u8], word: WhiteningWord) -> Vec<u8> {
    let mut v = bits.to_vec();
    whiten_in_place(&mut v, word);
    v
}

pub fn whiten_in_place(bits: &mut [u8], word: WhiteningWord) {
    for (b, k) in bits.iter_mut().zip(word.keystream()) {
        *b ^= k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal seven-cell shift register, written independently of the
    /// packed implementation above.
    fn oracle_keystream(clock6: u8, n: usize) -> Vec<u8> {
        let mut cells = [0u8; 7];
        for (i, cell) in cells.iter_mut().enumerate().take(6) {
            *cell = (clock6 >> i) & 1;
        }
        cells[6] = 1;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let o = cells[6];
            out.push(o);
            let mut next = [0u8; 7];
            next[0] = o;
            next[1] = cells[0];
            next[2] = cells[1];
            next[3] = cells[2];
            next[4] = cells[3] ^ o;
            next[5] = cells[4];
            next[6] = cells[5];
            cells = next;
        }
        out
    }

    #[test]
    fn word_layout() {
        assert_eq!(derive_whitening_word(0).bits(), 0b100_0000);
        let oracle = (0..6).fold(1u8 << 6, |acc, i| acc | (((0b101010 >> i) & 1) << i));
        assert_eq!(derive_whitening_word(0b101010).bits(), oracle);
        assert_eq!(oracle, 0b110_1010);
    }

    #[test]
    fn sixty_four_distinct_words() {
        let mut seen: Vec<u8> = (0..64).map(|c| derive_whitening_word(c).bits()).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn keystream_matches_cell_oracle() {
        for c6 in 0..64u8 {
            let k: Vec<u8> = derive_whitening_word(c6).keystream().take(300).collect();
            assert_eq!(k, oracle_keystream(c6, 300), "clock6={c6}");
        }
        let k17: Vec<u8> = derive_whitening_word(17).keystream().take(54).collect();
        assert_eq!(k17, oracle_keystream(17, 54));
    }

    #[test]
    fn keystream_is_maximal_length() {
        // x^7 + x^4 + 1 is primitive: period 127 from every non-zero state.
        let k: Vec<u8> = derive_whitening_word(17).keystream().take(400).collect();
        assert_eq!(&k[..127], &k[127..254]);
        assert!((1..127).all(|p| k[..127] != k[p..127 + p]));
        assert_eq!(k[..127].iter().filter(|b| **b == 1).count(), 64);
    }

    #[test]
    fn whitening_is_an_involution() {
        let data: Vec<u8> = (0..200u32).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let w = derive_whitening_word(41);
        assert_eq!(whiten(&whiten(&data, w), w), data);
        let zeros = vec![0u8; 54];
        let ks: Vec<u8> = w.keystream().take(54).collect();
        assert_eq!(whiten(&zeros, w), ks);
    }
}
