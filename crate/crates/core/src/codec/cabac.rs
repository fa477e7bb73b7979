//! Binarization and context sets for the event-cube coder.

use super::arith::{ArithError, BinContext, Decoder, Encoder};

const PREFIX_CTX: usize = 24;
const SUFFIX_CTX: usize = 32;
const SHIFT_CTX: usize = 32;
pub const MAX_SHIFT: u8 = 31;

/// Reserved symbols sharing the D-residual context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    /// Cube holds no events in this ADU
    SkipCube = 0,
    /// Pixel channel holds no events in this ADU
    EmptyPixel = 1,
    /// No further events for this pixel channel
    EndPixel = 2,
    /// End of the ADU
    Eos = 3,
}

impl Control {
    fn from_index(i: usize) -> Self {
        match i {
            0 => Self::SkipCube,
            1 => Self::EmptyPixel,
            2 => Self::EndPixel,
            _ => Self::Eos,
        }
    }
}

/// One coded element of the D context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DSymbol {
    Control(Control),
    Residual(i32),
}

pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// Exp-Golomb order-0 binarization with one context per prefix index and per suffix bit.
#[derive(Clone, Debug)]
pub struct EgCoder {
    prefix: Vec<BinContext>,
    suffix: Vec<BinContext>,
}

impl Default for EgCoder {
    fn default() -> Self {
        Self { prefix: vec![BinContext::default(); PREFIX_CTX], suffix: vec![BinContext::default(); SUFFIX_CTX] }
    }
}

impl EgCoder {
    pub fn encode(&mut self, enc: &mut Encoder, n: u64) {
        let v = n + 1;
        let m = 63 - v.leading_zeros() as usize;
        for i in 0..m {
            enc.encode_bin(&mut self.prefix[i.min(PREFIX_CTX - 1)], true);
        }
        enc.encode_bin(&mut self.prefix[m.min(PREFIX_CTX - 1)], false);
        for b in (0..m).rev() {
            enc.encode_bin(&mut self.suffix[b.min(SUFFIX_CTX - 1)], (v >> b) & 1 == 1);
        }
    }

    pub fn decode(&mut self, dec: &mut Decoder) -> Result<u64, ArithError> {
        let mut m = 0usize;
        while dec.decode_bin(&mut self.prefix[m.min(PREFIX_CTX - 1)])? {
            m += 1;
            if m > 63 {
                return Err(ArithError::Corrupt);
            }
        }
        let mut v = 1u64;
        for b in (0..m).rev() {
            v = (v << 1) | dec.decode_bin(&mut self.suffix[b.min(SUFFIX_CTX - 1)])? as u64;
        }
        Ok(v - 1)
    }

    pub fn encode_signed(&mut self, enc: &mut Encoder, v: i64) {
        self.encode(enc, zigzag(v));
    }

    pub fn decode_signed(&mut self, dec: &mut Decoder) -> Result<i64, ArithError> {
        Ok(unzigzag(self.decode(dec)?))
    }
}

/// D residuals with the control symbols folded in behind a flag bin.
#[derive(Clone, Debug, Default)]
pub struct DCoder {
    flag: BinContext,
    ctl: [BinContext; 3],
    value: EgCoder,
}

impl DCoder {
    pub fn encode(&mut self, enc: &mut Encoder, sym: DSymbol) {
        match sym {
            DSymbol::Control(c) => {
                enc.encode_bin(&mut self.flag, true);
                let i = c as usize;
                let hi = i >> 1;
                enc.encode_bin(&mut self.ctl[0], hi == 1);
                enc.encode_bin(&mut self.ctl[1 + hi], i & 1 == 1);
            }
            DSymbol::Residual(r) => {
                enc.encode_bin(&mut self.flag, false);
                self.value.encode_signed(enc, r as i64);
            }
        }
    }

    pub fn decode(&mut self, dec: &mut Decoder) -> Result<DSymbol, ArithError> {
        if dec.decode_bin(&mut self.flag)? {
            let hi = dec.decode_bin(&mut self.ctl[0])? as usize;
            let lo = dec.decode_bin(&mut self.ctl[1 + hi])? as usize;
            Ok(DSymbol::Control(Control::from_index(hi * 2 + lo)))
        } else {
            let r = self.value.decode_signed(dec)?;
            i32::try_from(r).map(DSymbol::Residual).map_err(|_| ArithError::Corrupt)
        }
    }
}

/// Truncated-unary shift amounts.
#[derive(Clone, Debug)]
pub struct ShiftCoder {
    bins: Vec<BinContext>,
}

impl Default for ShiftCoder {
    fn default() -> Self {
        Self { bins: vec![BinContext::default(); SHIFT_CTX] }
    }
}

impl ShiftCoder {
    pub fn encode(&mut self, enc: &mut Encoder, s: u8) {
        debug_assert!(s <= MAX_SHIFT);
        for i in 0..s as usize {
            enc.encode_bin(&mut self.bins[i], true);
        }
        if s < MAX_SHIFT {
            enc.encode_bin(&mut self.bins[s as usize], false);
        }
    }

    pub fn decode(&mut self, dec: &mut Decoder) -> Result<u8, ArithError> {
        let mut s = 0u8;
        while s < MAX_SHIFT && dec.decode_bin(&mut self.bins[s as usize])? {
            s += 1;
        }
        Ok(s)
    }
}

/// Every adaptive context used inside one ADU.
#[derive(Clone, Debug, Default)]
pub struct CoderContexts {
    pub d_intra: DCoder,
    pub t_intra: EgCoder,
    pub d_inter: DCoder,
    pub t_inter: EgCoder,
    pub shift: ShiftCoder,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_round_trip() {
        for v in [-5i64, -1, 0, 1, 2, 1 << 40, -(1 << 40), i32::MIN as i64] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
        assert_eq!(zigzag(0), 0);
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
    }

    #[test]
    fn element_round_trip() {
        let syms = [
            DSymbol::Control(Control::SkipCube),
            DSymbol::Residual(0),
            DSymbol::Residual(-3),
            DSymbol::Control(Control::EndPixel),
            DSymbol::Residual(129),
            DSymbol::Control(Control::EmptyPixel),
            DSymbol::Control(Control::Eos),
        ];
        let ts = [0i64, 1, -1, 70000, -4_000_000_000, 12];
        let mut enc = Encoder::new();
        let mut ctx = CoderContexts::default();
        for s in syms {
            ctx.d_intra.encode(&mut enc, s);
        }
        for t in ts {
            ctx.t_inter.encode_signed(&mut enc, t);
        }
        for s in 0..=MAX_SHIFT {
            ctx.shift.encode(&mut enc, s);
        }
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        let mut ctx = CoderContexts::default();
        for s in syms {
            assert_eq!(ctx.d_intra.decode(&mut dec).unwrap(), s);
        }
        for t in ts {
            assert_eq!(ctx.t_inter.decode_signed(&mut dec).unwrap(), t);
        }
        for s in 0..=MAX_SHIFT {
            assert_eq!(ctx.shift.decode(&mut dec).unwrap(), s);
        }
    }
}
