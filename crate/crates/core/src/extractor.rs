//! Randomness extraction.
//!
//! Two routes are implemented. The XOR route buffers 2m words, views them as
//! an n x 2m bit matrix, XORs the two n x m halves element-wise, and
//! serializes the result column-major (per-pulse word order, MSB first),
//! halving the rate to n*R/2. The Toeplitz route hashes each 12-bit word down
//! to 6 bits through a seeded constant-diagonal GF(2) matrix, realized as a
//! per-seed lookup table on the fast path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitBuf;
use crate::digitizer::AdcWord;
use crate::{Error, Result};

/// Dense bit matrix with row-major storage; small, used for the
/// matrix-level operations (the streaming path works on packed words).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<u8>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.data[i * self.cols + j] = v & 1;
    }

    /// Column `j` read top to bottom.
    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Buffer of one extraction round: an n x 2m matrix whose column j holds the
/// bits of input word j, b1 (MSB) in row 0.
#[derive(Debug, Clone)]
pub struct RneBuffer {
    pub n_rows: usize,
    pub m: usize,
    cols: Vec<u16>,
}

impl RneBuffer {
    pub fn new(n_rows: usize, m: usize) -> Result<Self> {
        if n_rows == 0 || n_rows > 16 || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "RNE buffer needs 1 <= n <= 16 and m >= 1, got n={n_rows}, m={m}"
            )));
        }
        Ok(Self {
            n_rows,
            m,
            cols: Vec::with_capacity(2 * m),
        })
    }

    pub fn capacity(&self) -> usize {
        2 * self.m
    }

    pub fn is_full(&self) -> bool {
        self.cols.len() == 2 * self.m
    }

    pub fn push(&mut self, word: &AdcWord) -> Result<()> {
        if word.n_bits as usize != self.n_rows {
            return Err(Error::ShapeMismatch(format!(
                "word width {} does not match buffer rows {}",
                word.n_bits, self.n_rows
            )));
        }
        if self.is_full() {
            return Err(Error::InvalidParameter("RNE buffer already full".into()));
        }
        self.cols.push(word.bin);
        Ok(())
    }

    /// The buffered n x 2m matrix.
    pub fn matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.n_rows, self.cols.len());
        for (j, &w) in self.cols.iter().enumerate() {
            for i in 0..self.n_rows {
                m.set(i, j, ((w >> (self.n_rows - 1 - i)) & 1) as u8);
            }
        }
        m
    }
}

/// Splits a full 2m-column buffer into its first- and second-half matrices.
pub fn split_buffer(buf: &RneBuffer) -> Result<(BitMatrix, BitMatrix)> {
    if !buf.is_full() {
        return Err(Error::BufferNotFull {
            have: buf.cols.len(),
            want: buf.capacity(),
        });
    }
    let full = buf.matrix();
    let mut a = BitMatrix::zeros(buf.n_rows, buf.m);
    let mut b = BitMatrix::zeros(buf.n_rows, buf.m);
    for i in 0..buf.n_rows {
        for j in 0..buf.m {
            a.set(i, j, full.get(i, j));
            b.set(i, j, full.get(i, j + buf.m));
        }
    }
    Ok((a, b))
}

/// Element-wise XOR of two equal-shape bit matrices.
pub fn xor_extract(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = BitMatrix::zeros(a.rows, a.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.set(i, j, a.get(i, j) ^ b.get(i, j));
        }
    }
    Ok(out)
}

/// Parallel-to-serial conversion: column-major, rows top to bottom within
/// each column, so the output preserves per-pulse word order MSB first.
pub fn serialize(m: &BitMatrix) -> BitBuf {
    let mut out = BitBuf::with_capacity(m.rows * m.cols);
    for j in 0..m.cols {
        for i in 0..m.rows {
            out.push_bit(m.get(i, j) == 1);
        }
    }
    out
}

/// Statistics of one streaming extraction pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub words_in: u64,
    pub words_discarded: u64,
    pub bits_out: u64,
}

/// Streaming XOR extraction over packed bin words: consumes blocks of 2m
/// words, XORs word j with word j+m, and emits the n-bit results in order.
/// A trailing partial block is discarded and counted.
pub fn xor_pipeline(words: &[u16], n_bits: u32, m: usize, out: &mut BitBuf) -> Result<ExtractStats> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if !(1..=16).contains(&n_bits) {
        return Err(Error::InvalidParameter(format!(
            "n_bits must be in 1..=16, got {n_bits}"
        )));
    }
    let block = 2 * m;
    let blocks = words.len() / block;
    for b in 0..blocks {
        let w = &words[b * block..(b + 1) * block];
        for j in 0..m {
            out.push_bits((w[j] ^ w[j + m]) as u64, n_bits);
        }
    }
    Ok(ExtractStats {
        words_in: words.len() as u64,
        words_discarded: (words.len() - blocks * block) as u64,
        bits_out: (blocks * m) as u64 * n_bits as u64,
    })
}

/// Extraction mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMode {
    Xor,
    Toeplitz,
    None,
}

impl std::fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Xor => write!(f, "xor"),
            Self::Toeplitz => write!(f, "toeplitz"),
            Self::None => write!(f, "none"),
        }
    }
}

/// Average output bit rate for an input word rate `rate_r` (Hz):
/// the XOR route halves `n * R`, the Toeplitz route keeps `n_out` bits per
/// pulse, and no extraction keeps all `n` bits.
pub fn extraction_rate(n_bits: u32, rate_r: f64, mode: ExtractionMode, n_out: u32) -> f64 {
    match mode {
        ExtractionMode::Xor => n_bits as f64 * rate_r / 2.0,
        ExtractionMode::Toeplitz => n_out as f64 * rate_r,
        ExtractionMode::None => n_bits as f64 * rate_r,
    }
}

/// Seed of an `n_out x n_in` binary Toeplitz matrix: `n_in + n_out - 1` bits,
/// constant along diagonals, entry (i, j) = seed[i + (n_in - 1) - j].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    pub bits: Vec<u8>,
    pub n_in: u32,
    pub n_out: u32,
}

impl ToeplitzSeed {
    pub fn new(bits: Vec<u8>, n_in: u32, n_out: u32) -> Result<Self> {
        if n_in == 0 || n_in > 16 || n_out == 0 || n_out > 16 {
            return Err(Error::InvalidParameter(format!(
                "Toeplitz dimensions must be in 1..=16, got {n_out}x{n_in}"
            )));
        }
        if bits.len() != (n_in + n_out - 1) as usize {
            return Err(Error::ShapeMismatch(format!(
                "seed length {} != n_in + n_out - 1 = {}",
                bits.len(),
                n_in + n_out - 1
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::MalformedInput("seed bits must be 0 or 1".into()));
        }
        Ok(Self { bits, n_in, n_out })
    }

    /// Deterministic seed expansion from an integer, for configs that do not
    /// provide a seed file. The seed is a public parameter, not an entropy
    /// claim.
    pub fn from_rng_seed(seed: u64, n_in: u32, n_out: u32) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = (0..n_in + n_out - 1)
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        Self::new(bits, n_in, n_out)
    }

    #[inline]
    pub fn entry(&self, i: u32, j: u32) -> u8 {
        self.bits[(i + (self.n_in - 1) - j) as usize]
    }

    /// Row `i` of the matrix packed into the low `n_in` bits, bit j of the
    /// row in bit position `n_in - 1 - j` (matching the word layout).
    fn row_mask(&self, i: u32) -> u16 {
        let mut mask = 0u16;
        for j in 0..self.n_in {
            mask |= (self.entry(i, j) as u16) << (self.n_in - 1 - j);
        }
        mask
    }
}

/// GF(2) matrix-vector product `T x` for one input word.
pub fn toeplitz_hash(word: &AdcWord, seed: &ToeplitzSeed) -> Result<AdcWord> {
    if word.n_bits != seed.n_in {
        return Err(Error::ShapeMismatch(format!(
            "word width {} != seed n_in {}",
            word.n_bits, seed.n_in
        )));
    }
    let mut out = 0u16;
    for i in 0..seed.n_out {
        let parity = ((word.bin & seed.row_mask(i)).count_ones() & 1) as u16;
        out = (out << 1) | parity;
    }
    Ok(AdcWord::new(out, seed.n_out))
}

/// Precomputed table mapping every `n_in`-bit word through the seed's
/// Toeplitz matrix; the high-throughput route for `n_in <= 16`.
pub struct ToeplitzLut {
    pub n_in: u32,
    pub n_out: u32,
    table: Vec<u16>,
}

impl ToeplitzLut {
    pub fn build(seed: &ToeplitzSeed) -> Self {
        let table = (0..1u32 << seed.n_in)
            .map(|x| {
                toeplitz_hash(&AdcWord::new(x as u16, seed.n_in), seed)
                    .expect("widths match by construction")
                    .bin
            })
            .collect();
        Self {
            n_in: seed.n_in,
            n_out: seed.n_out,
            table,
        }
    }

    #[inline]
    pub fn map(&self, word: u16) -> u16 {
        self.table[word as usize]
    }

    /// Hashes a word stream, appending `n_out` bits per word.
    pub fn hash_stream(&self, words: &[u16], out: &mut BitBuf) -> ExtractStats {
        for &w in words {
            out.push_bits(self.map(w) as u64, self.n_out);
        }
        ExtractStats {
            words_in: words.len() as u64,
            words_discarded: 0,
            bits_out: words.len() as u64 * self.n_out as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::pack_words;
    use proptest::prelude::*;

    fn word(bin: u16, n: u32) -> AdcWord {
        AdcWord::new(bin, n)
    }

    fn buffer_from(words: &[u16], n: usize, m: usize) -> RneBuffer {
        let mut buf = RneBuffer::new(n, m).unwrap();
        for &w in words {
            buf.push(&word(w, n as u32)).unwrap();
        }
        buf
    }

    #[test]
    fn split_small_examples() {
        // n=1, m=1, B_F0 = [1 0]
        let buf = buffer_from(&[1, 0], 1, 1);
        let (a, b) = split_buffer(&buf).unwrap();
        assert_eq!(a.get(0, 0), 1);
        assert_eq!(b.get(0, 0), 0);

        // n=2, m=2, B_F0 = [[1,0,1,1],[0,1,1,0]] -> columns 10, 01, 11, 10
        let buf = buffer_from(&[0b10, 0b01, 0b11, 0b10], 2, 2);
        let (a, b) = split_buffer(&buf).unwrap();
        assert_eq!(a, BitMatrix::from_rows(&[vec![1, 0], vec![0, 1]]));
        assert_eq!(b, BitMatrix::from_rows(&[vec![1, 1], vec![1, 0]]));

        // partial buffer errors
        let buf = buffer_from(&[0b10], 2, 2);
        assert!(matches!(
            split_buffer(&buf),
            Err(Error::BufferNotFull { have: 1, want: 4 })
        ));
    }

    #[test]
    fn split_concat_reconstructs_original() {
        let words: Vec<u16> = (0..12).map(|i| (i * 37) % 16).collect();
        let buf = buffer_from(&words, 4, 6);
        let full = buf.matrix();
        let (a, b) = split_buffer(&buf).unwrap();
        for i in 0..4 {
            for j in 0..6 {
                assert_eq!(a.get(i, j), full.get(i, j));
                assert_eq!(b.get(i, j), full.get(i, j + 6));
            }
        }
    }

    #[test]
    fn xor_extract_small_example() {
        let a = BitMatrix::from_rows(&[vec![1, 0], vec![0, 1]]);
        let b = BitMatrix::from_rows(&[vec![1, 1], vec![1, 0]]);
        let c = xor_extract(&a, &b).unwrap();
        assert_eq!(c, BitMatrix::from_rows(&[vec![0, 1], vec![1, 1]]));

        // x ^ x = 0, x ^ 0 = x
        assert_eq!(xor_extract(&a, &a).unwrap(), BitMatrix::zeros(2, 2));
        let z = BitMatrix::zeros(2, 2);
        assert_eq!(xor_extract(&a, &z).unwrap(), a);

        let bad = BitMatrix::zeros(3, 2);
        assert!(xor_extract(&a, &bad).is_err());
    }

    #[test]
    fn xor_extract_is_involution_in_second_argument() {
        let words: Vec<u16> = (0..10).map(|i| (i * 157) % 256).collect();
        let buf = buffer_from(&words, 8, 5);
        let (a, b) = split_buffer(&buf).unwrap();
        let c = xor_extract(&a, &b).unwrap();
        assert_eq!(xor_extract(&c, &b).unwrap(), a);
    }

    #[test]
    fn serialize_ordering() {
        let m = BitMatrix::from_rows(&[vec![0, 1], vec![1, 1]]);
        let s = serialize(&m);
        assert_eq!(s.to_bit_bytes(), vec![0, 1, 1, 1]);

        let z = BitMatrix::zeros(3, 4);
        assert_eq!(serialize(&z).to_bit_bytes(), vec![0; 12]);
    }

    #[test]
    fn serialize_repack_round_trip() {
        let words: Vec<u16> = vec![0b101, 0b010, 0b111, 0b000, 0b110, 0b001];
        let buf = buffer_from(&words, 3, 3);
        let (a, b) = split_buffer(&buf).unwrap();
        let c = xor_extract(&a, &b).unwrap();
        let stream = serialize(&c);
        let repacked = crate::bits::unpack_words(&stream, 3);
        for (j, &w) in repacked.iter().enumerate() {
            let col = c.column(j);
            assert_eq!(AdcWord::from_bits(&col).unwrap().bin, w);
        }
    }

    /// Reference implementation: explicit buffer/split/XOR/serialize per block.
    fn xor_reference(words: &[u16], n: usize, m: usize) -> BitBuf {
        let mut out = BitBuf::new();
        for block in words.chunks_exact(2 * m) {
            let buf = buffer_from(block, n, m);
            let (a, b) = split_buffer(&buf).unwrap();
            let c = xor_extract(&a, &b).unwrap();
            let s = serialize(&c);
            for i in 0..s.len() {
                out.push_bit(s.get(i));
            }
        }
        out
    }

    #[test]
    fn xor_pipeline_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 4u32;
        let m = 3usize;
        let words: Vec<u16> = (0..1000).map(|_| rng.random::<u16>() & 0xF).collect();
        let mut fast = BitBuf::new();
        let stats = xor_pipeline(&words, n, m, &mut fast).unwrap();
        let reference = xor_reference(&words, n as usize, m);
        assert!(fast == reference);
        assert_eq!(stats.bits_out as usize, fast.len());
        assert_eq!(stats.words_discarded, (1000 % (2 * m)) as u64);
    }

    #[test]
    fn xor_pipeline_lanes_are_independent() {
        // Each output bit plane depends only on the matching input bit plane:
        // extracting plane i as a 1-bit stream reproduces row i of the output.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 12u32;
        let m = 7usize;
        let words: Vec<u16> = (0..2 * m * 40).map(|_| rng.random::<u16>() & 0xFFF).collect();
        let mut full = BitBuf::new();
        xor_pipeline(&words, n, m, &mut full).unwrap();
        for plane in 0..n {
            let lane: Vec<u16> = words.iter().map(|w| (w >> (n - 1 - plane)) & 1).collect();
            let mut lane_out = BitBuf::new();
            xor_pipeline(&lane, 1, m, &mut lane_out).unwrap();
            for j in 0..lane_out.len() {
                assert_eq!(lane_out.get(j), full.get(j * n as usize + plane as usize));
            }
        }
    }

    #[test]
    fn xor_pipeline_length_contract() {
        // 2m words in, n*m bits out.
        let mut out = BitBuf::new();
        let stats = xor_pipeline(&[1, 2, 3, 4, 5, 6], 3, 3, &mut out).unwrap();
        assert_eq!(stats.bits_out, 9);
        assert_eq!(out.len(), 9);
        assert_eq!(stats.words_discarded, 0);

        let mut out = BitBuf::new();
        let stats = xor_pipeline(&[1, 2, 3], 3, 3, &mut out).unwrap();
        assert_eq!(stats.bits_out, 0);
        assert_eq!(stats.words_discarded, 3);
        assert!(xor_pipeline(&[1], 3, 0, &mut BitBuf::new()).is_err());
    }

    #[test]
    fn extraction_rate_values() {
        assert_eq!(
            extraction_rate(12, 250e6, ExtractionMode::Xor, 6),
            1.5e9
        );
        assert_eq!(
            extraction_rate(12, 250e6, ExtractionMode::None, 6),
            3.0e9
        );
        assert_eq!(
            extraction_rate(12, 250e6, ExtractionMode::Toeplitz, 6),
            1.5e9
        );
        assert_eq!(extraction_rate(2, 2.0, ExtractionMode::Xor, 1), 2.0);
    }

    #[test]
    fn toeplitz_identity_and_zero() {
        let seed = ToeplitzSeed::new(vec![1], 1, 1).unwrap();
        assert_eq!(toeplitz_hash(&word(0, 1), &seed).unwrap().bin, 0);
        assert_eq!(toeplitz_hash(&word(1, 1), &seed).unwrap().bin, 1);

        let seed = ToeplitzSeed::from_rng_seed(3, 12, 6).unwrap();
        assert_eq!(toeplitz_hash(&word(0, 12), &seed).unwrap().bin, 0);
        assert!(toeplitz_hash(&word(0, 8), &seed).is_err());
        assert!(ToeplitzSeed::new(vec![1, 0], 12, 6).is_err());
    }

    /// Naive GF(2) matrix-vector product straight off the matrix entries.
    fn toeplitz_naive(word_bits: &[u8], seed: &ToeplitzSeed) -> Vec<u8> {
        (0..seed.n_out)
            .map(|i| {
                (0..seed.n_in)
                    .map(|j| seed.entry(i, j) & word_bits[j as usize])
                    .fold(0, |acc, b| acc ^ b)
            })
            .collect()
    }

    #[test]
    fn toeplitz_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let seed = ToeplitzSeed::from_rng_seed(rng.random(), 12, 6).unwrap();
            let w = word(rng.random::<u16>() & 0xFFF, 12);
            let got = toeplitz_hash(&w, &seed).unwrap();
            assert_eq!(got.bits(), toeplitz_naive(&w.bits(), &seed));
        }
    }

    #[test]
    fn toeplitz_lut_matches_direct_exhaustively() {
        let seed = ToeplitzSeed::from_rng_seed(1234, 12, 6).unwrap();
        let lut = ToeplitzLut::build(&seed);
        for x in 0..(1u32 << 12) {
            let w = word(x as u16, 12);
            assert_eq!(lut.map(w.bin), toeplitz_hash(&w, &seed).unwrap().bin);
        }
    }

    #[test]
    fn toeplitz_linearity_exhaustive_small() {
        // h(x ^ y) = h(x) ^ h(y) for all pairs at n_in <= 8.
        for n_in in [4u32, 8] {
            let seed = ToeplitzSeed::from_rng_seed(55 + n_in as u64, n_in, 3).unwrap();
            let lut = ToeplitzLut::build(&seed);
            let size = 1u32 << n_in;
            for x in 0..size {
                for y in 0..size {
                    assert_eq!(
                        lut.map((x ^ y) as u16),
                        lut.map(x as u16) ^ lut.map(y as u16)
                    );
                }
            }
        }
    }

    #[test]
    fn toeplitz_stream_packing() {
        let seed = ToeplitzSeed::from_rng_seed(8, 12, 6).unwrap();
        let lut = ToeplitzLut::build(&seed);
        let words = [0u16, 4095, 123, 77];
        let mut out = BitBuf::new();
        let stats = lut.hash_stream(&words, &mut out);
        assert_eq!(stats.bits_out, 24);
        let expected: Vec<u16> = words.iter().map(|&w| lut.map(w)).collect();
        assert!(out == pack_words(&expected, 6));
    }

    proptest! {
        #[test]
        fn pipeline_output_length_exact(
            count in 0usize..500,
            n in 1u32..=12,
            m in 1usize..20,
            seed in any::<u64>()
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = ((1u32 << n) - 1) as u16;
            let words: Vec<u16> = (0..count).map(|_| rng.random::<u16>() & mask).collect();
            let mut out = BitBuf::new();
            let stats = xor_pipeline(&words, n, m, &mut out).unwrap();
            prop_assert_eq!(out.len() as u64, n as u64 * m as u64 * (count / (2 * m)) as u64);
            prop_assert_eq!(stats.bits_out as usize, out.len());
        }

        #[test]
        fn toeplitz_linearity_random_pairs(seed in any::<u64>(), x in 0u16..4096, y in 0u16..4096) {
            let s = ToeplitzSeed::from_rng_seed(seed, 12, 6).unwrap();
            let hx = toeplitz_hash(&word(x, 12), &s).unwrap().bin;
            let hy = toeplitz_hash(&word(y, 12), &s).unwrap().bin;
            let hxy = toeplitz_hash(&word(x ^ y, 12), &s).unwrap().bin;
            prop_assert_eq!(hxy, hx ^ hy);
        }
    }
}
