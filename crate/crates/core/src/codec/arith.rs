//! Integer range arithmetic coder with adaptive frequency models.

use thiserror::Error;

const TOP: u64 = (1 << 32) - 1;
const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;

/// Counts are halved once a model's total reaches this value.
pub const MAX_TOTAL: u32 = 1 << 13;

/// Zero bits the decoder may read past the end before giving up.
const MAX_PADDING_BITS: u32 = 64;

/// Errors raised while decoding an arithmetic-coded bitstream.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ArithError {
    /// Input ran out before the end symbol was decoded
    #[error("bitstream exhausted before end of message")]
    Exhausted,

    /// The decoded code value falls outside every symbol interval
    #[error("code value outside the model's range")]
    Corrupt,
}

/// Frequency model shared by encoder and decoder.
pub trait Model {
    fn total(&self) -> u32;
    /// Cumulative range `[lo, hi)` of `symbol`.
    fn interval(&self, symbol: usize) -> (u32, u32);
    /// Symbol whose interval contains `count`, with that interval.
    fn find(&self, count: u32) -> Option<(usize, u32, u32)>;
    fn update(&mut self, _symbol: usize) {}
}

/// Adaptive counts, Laplace-1 initialized, halved at [`MAX_TOTAL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveModel {
    counts: Vec<u32>,
    total: u32,
    increment: u32,
}

impl AdaptiveModel {
    pub fn new(symbols: usize) -> Self {
        Self::with_increment(symbols, 1)
    }

    pub fn with_increment(symbols: usize, increment: u32) -> Self {
        assert!(symbols > 0);
        Self { counts: vec![1; symbols], total: symbols as u32, increment }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

impl Model for AdaptiveModel {
    fn total(&self) -> u32 {
        self.total
    }

    fn interval(&self, symbol: usize) -> (u32, u32) {
        let lo: u32 = self.counts[..symbol].iter().sum();
        (lo, lo + self.counts[symbol])
    }

    fn find(&self, count: u32) -> Option<(usize, u32, u32)> {
        let mut lo = 0;
        for (s, &c) in self.counts.iter().enumerate() {
            if count < lo + c {
                return Some((s, lo, lo + c));
            }
            lo += c;
        }
        None
    }

    fn update(&mut self, symbol: usize) {
        self.counts[symbol] += self.increment;
        self.total += self.increment;
        if self.total >= MAX_TOTAL {
            self.total = 0;
            for c in &mut self.counts {
                *c = (*c).div_ceil(2);
                self.total += *c;
            }
        }
    }
}

/// Static model from integer frequencies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedModel {
    cum: Vec<u32>,
}

impl FixedModel {
    pub fn new(freqs: &[u32]) -> Self {
        let mut cum = vec![0];
        for f in freqs {
            assert!(*f > 0, "every symbol needs nonzero frequency");
            cum.push(cum.last().unwrap() + f);
        }
        Self { cum }
    }
}

impl Model for FixedModel {
    fn total(&self) -> u32 {
        *self.cum.last().unwrap()
    }

    fn interval(&self, symbol: usize) -> (u32, u32) {
        (self.cum[symbol], self.cum[symbol + 1])
    }

    fn find(&self, count: u32) -> Option<(usize, u32, u32)> {
        (0..self.cum.len() - 1)
            .find(|&s| count < self.cum[s + 1])
            .map(|s| (s, self.cum[s], self.cum[s + 1]))
    }
}

/// Binary context: an adaptive two-symbol model with faster adaptation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinContext(AdaptiveModel);

impl BinContext {
    pub const INCREMENT: u32 = 16;
}

impl Default for BinContext {
    fn default() -> Self {
        Self(AdaptiveModel::with_increment(2, Self::INCREMENT))
    }
}

/// MSB-first bit sink.
#[derive(Default, Debug)]
pub struct BitWriter {
    bytes: Vec<u8>,
    cur: u8,
    nbits: u8,
}

impl BitWriter {
    pub fn put(&mut self, bit: bool) {
        self.cur = (self.cur << 1) | bit as u8;
        self.nbits += 1;
        if self.nbits == 8 {
            self.bytes.push(self.cur);
            self.cur = 0;
            self.nbits = 0;
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.cur <<= 8 - self.nbits;
            self.bytes.push(self.cur);
        }
        self.bytes
    }
}

/// MSB-first bit source that pads with zeros past the end.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    padding: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0, padding: 0 }
    }

    pub fn get(&mut self) -> bool {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            self.padding += 1;
            self.pos += 1;
            return false;
        }
        let bit = (self.bytes[byte] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        bit
    }

    pub fn padding(&self) -> u32 {
        self.padding
    }
}

/// Arithmetic encoder.
#[derive(Debug)]
pub struct Encoder {
    low: u64,
    high: u64,
    pending: u32,
    out: BitWriter,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self { low: 0, high: TOP, pending: 0, out: BitWriter::default() }
    }

    fn emit(&mut self, bit: bool) {
        self.out.put(bit);
        for _ in 0..self.pending {
            self.out.put(!bit);
        }
        self.pending = 0;
    }

    /// Narrows the interval to `[lo, hi)` out of `total`.
    pub fn encode_range(&mut self, lo: u32, hi: u32, total: u32) {
        debug_assert!(lo < hi && hi <= total);
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi as u64 / total as u64 - 1;
        self.low += range * lo as u64 / total as u64;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < 3 * QUARTER {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    pub fn encode<M: Model>(&mut self, model: &mut M, symbol: usize) {
        let (lo, hi) = model.interval(symbol);
        self.encode_range(lo, hi, model.total());
        model.update(symbol);
    }

    pub fn encode_bin(&mut self, ctx: &mut BinContext, bit: bool) {
        self.encode(&mut ctx.0, bit as usize);
    }

    /// Equiprobable bit without a context.
    pub fn encode_bypass(&mut self, bit: bool) {
        self.encode_range(bit as u32, bit as u32 + 1, 2);
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit);
        self.out.finish()
    }
}

/// Arithmetic decoder mirroring [`Encoder`].
#[derive(Debug)]
pub struct Decoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    input: BitReader<'a>,
}

impl<'a> Decoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        let mut input = BitReader::new(bytes);
        let mut value = 0u64;
        for _ in 0..32 {
            value = (value << 1) | input.get() as u64;
        }
        Self { low: 0, high: TOP, value, input }
    }

    fn check(&self) -> Result<(), ArithError> {
        if self.input.padding() > MAX_PADDING_BITS {
            Err(ArithError::Exhausted)
        } else {
            Ok(())
        }
    }

    fn narrow(&mut self, lo: u32, hi: u32, total: u32) {
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi as u64 / total as u64 - 1;
        self.low += range * lo as u64 / total as u64;
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.value -= HALF;
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < 3 * QUARTER {
                self.value -= QUARTER;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.input.get() as u64;
        }
    }

    pub fn decode<M: Model>(&mut self, model: &mut M) -> Result<usize, ArithError> {
        self.check()?;
        let total = model.total() as u64;
        let range = self.high - self.low + 1;
        if self.value < self.low || self.value > self.high {
            return Err(ArithError::Corrupt);
        }
        let count = (((self.value - self.low + 1) * total - 1) / range) as u32;
        let (symbol, lo, hi) = model.find(count).ok_or(ArithError::Corrupt)?;
        self.narrow(lo, hi, model.total());
        model.update(symbol);
        Ok(symbol)
    }

    pub fn decode_bin(&mut self, ctx: &mut BinContext) -> Result<bool, ArithError> {
        Ok(self.decode(&mut ctx.0)? == 1)
    }

    pub fn decode_bypass(&mut self) -> Result<bool, ArithError> {
        self.check()?;
        let range = self.high - self.low + 1;
        let count = ((self.value - self.low + 1) * 2 - 1) / range;
        let bit = count >= 1;
        self.narrow(bit as u32, bit as u32 + 1, 2);
        Ok(bit)
    }
}

/// Encodes `symbols` followed by `eof` under `model`.
pub fn encode_message<M: Model>(symbols: &[usize], mut model: M, eof: usize) -> Vec<u8> {
    let mut enc = Encoder::new();
    for &s in symbols {
        debug_assert_ne!(s, eof);
        enc.encode(&mut model, s);
    }
    enc.encode(&mut model, eof);
    enc.finish()
}

/// Decodes symbols until `eof`.
pub fn decode_message<M: Model>(bytes: &[u8], mut model: M, eof: usize) -> Result<Vec<usize>, ArithError> {
    let mut dec = Decoder::new(bytes);
    let mut out = Vec::new();
    loop {
        let s = dec.decode(&mut model)?;
        if s == eof {
            return Ok(out);
        }
        out.push(s);
    }
}
