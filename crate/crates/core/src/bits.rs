//! Packed bit buffers.
//!
//! The on-disk and in-memory convention throughout the crate is MSB-first
//! within each byte: bit 0 of a stream is the most significant bit of byte 0.
//! Words are concatenated back to back without padding.

use crate::{Error, Result};

/// Growable bit buffer, MSB-first within each 64-bit limb.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitBuf {
    limbs: Vec<u64>,
    len: usize,
}

impl BitBuf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            limbs: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends the low `n` bits of `value`, most significant first.
    #[inline]
    pub fn push_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        debug_assert!(n == 64 || value >> n == 0);
        if n == 0 {
            return;
        }
        let off = (self.len & 63) as u32;
        if off == 0 {
            self.limbs.push(0);
        }
        let limb = self.limbs.len() - 1;
        let free = 64 - off;
        if n <= free {
            self.limbs[limb] |= value << (free - n);
        } else {
            let spill = n - free;
            self.limbs[limb] |= value >> spill;
            self.limbs.push(value << (64 - spill));
        }
        self.len += n as usize;
    }

    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        self.push_bits(bit as u64, 1);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.limbs[i >> 6] >> (63 - (i & 63))) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    /// Extracts bits `[start, start + n)` as one `0/1` byte per bit.
    pub fn unpack_range(&self, start: usize, n: usize) -> Vec<u8> {
        assert!(start + n <= self.len);
        let mut out = Vec::with_capacity(n);
        for i in start..start + n {
            out.push(self.get(i) as u8);
        }
        out
    }

    pub fn to_bit_bytes(&self) -> Vec<u8> {
        self.unpack_range(0, self.len)
    }

    /// Packed byte image, MSB-first per byte; trailing bits zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for limb in &self.limbs {
            out.extend_from_slice(&limb.to_be_bytes());
        }
        out.truncate(nbytes);
        out
    }

    pub fn from_bytes(bytes: &[u8], nbits: usize) -> Result<Self> {
        if nbits > bytes.len() * 8 {
            return Err(Error::MalformedInput(format!(
                "{nbits} bits do not fit in {} bytes",
                bytes.len()
            )));
        }
        let mut limbs = vec![0u64; nbits.div_ceil(64)];
        for (i, &b) in bytes.iter().enumerate().take(nbits.div_ceil(8)) {
            limbs[i / 8] |= (b as u64) << (56 - 8 * (i % 8));
        }
        // clear padding past nbits
        if nbits % 64 != 0 {
            if let Some(last) = limbs.last_mut() {
                *last &= !0u64 << (64 - (nbits % 64));
            }
        }
        Ok(Self { limbs, len: nbits })
    }

    /// Reads the `n`-bit word starting at bit offset `start`, MSB-first.
    pub fn read_word(&self, start: usize, n: u32) -> u64 {
        debug_assert!(n >= 1 && n <= 64 && start + n as usize <= self.len);
        let limb = start >> 6;
        let off = (start & 63) as u32;
        let avail = 64 - off;
        if n <= avail {
            (self.limbs[limb] << off) >> (64 - n)
        } else {
            let hi = (self.limbs[limb] << off) >> (64 - n);
            let lo = self.limbs[limb + 1] >> (64 - (n - avail));
            hi | lo
        }
    }
}

impl std::fmt::Debug for BitBuf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitBuf[{} bits]", self.len)
    }
}

/// Packs a slice of `n_bits`-wide words into a bit buffer, MSB-first per word.
pub fn pack_words(words: &[u16], n_bits: u32) -> BitBuf {
    let mut buf = BitBuf::with_capacity(words.len() * n_bits as usize);
    for &w in words {
        buf.push_bits(w as u64, n_bits);
    }
    buf
}

/// Inverse of [`pack_words`]; trailing bits that do not fill a word are dropped.
pub fn unpack_words(buf: &BitBuf, n_bits: u32) -> Vec<u16> {
    debug_assert!((1..=16).contains(&n_bits));
    let count = buf.len() / n_bits as usize;
    (0..count)
        .map(|i| buf.read_word(i * n_bits as usize, n_bits) as u16)
        .collect()
}
