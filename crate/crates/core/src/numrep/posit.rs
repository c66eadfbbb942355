//! Posit codec for arbitrary `(n, es)` with `n <= 32`.
//!
//! Codes are carried in the low `n` bits of a `u32`. Decoding is exact in
//! `f64` (at most 29 fraction bits). Encoding rounds to nearest with ties to
//! the even code, and saturates at `maxpos`/`minpos` instead of rounding to
//! zero or NaR.

use serde::{Deserialize, Serialize};

use super::NumRepError;

/// Layout of an `n`-bit posit with up to `es` exponent bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositFormat {
    n: u32,
    es: u32,
}

impl PositFormat {
    pub const MAX_BITS: u32 = 32;
    pub const MAX_ES: u32 = 3;

    pub fn new(n: u32, es: u32) -> Result<Self, NumRepError> {
        if !(2..=Self::MAX_BITS).contains(&n) || es > Self::MAX_ES {
            return Err(NumRepError::InvalidPosit { n, es });
        }
        Ok(Self { n, es })
    }

    pub fn bits(&self) -> u32 {
        self.n
    }

    pub fn es(&self) -> u32 {
        self.es
    }

    /// `useed = 2^(2^es)`, the base of the regime.
    pub fn useed(&self) -> u64 {
        1u64 << (1u32 << self.es)
    }

    fn mask(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    /// The not-a-real pattern `10...0`.
    pub fn nar(&self) -> u32 {
        1u32 << (self.n - 1)
    }

    pub fn maxpos(&self) -> u32 {
        self.nar() - 1
    }

    pub fn minpos(&self) -> u32 {
        1
    }

    /// Number of distinct codes, `2^n`.
    pub fn code_count(&self) -> u64 {
        1u64 << self.n
    }

    /// Interprets `code` as an `n`-bit two's complement integer. Posits are
    /// ordered like their signed integer patterns.
    pub fn signed(&self, code: u32) -> i64 {
        let code = (code & self.mask()) as i64;
        if code >= (1i64 << (self.n - 1)) {
            code - (1i64 << self.n)
        } else {
            code
        }
    }

    /// Decodes a code. Returns `None` for NaR.
    pub fn decode(&self, code: u32) -> Option<f64> {
        let mask = self.mask();
        let mut code = code & mask;
        if code == 0 {
            return Some(0.0);
        }
        if code == self.nar() {
            return None;
        }
        let negative = code & self.nar() != 0;
        if negative {
            code = code.wrapping_neg() & mask;
        }

        let body_len = self.n - 1;
        let first = (code >> (body_len - 1)) & 1;
        let mut run = 0;
        while run < body_len && (code >> (body_len - 1 - run)) & 1 == first {
            run += 1;
        }
        let k = if first == 1 { run as i32 - 1 } else { -(run as i32) };
        // the terminating bit is absent when the run fills the body
        let consumed = if run < body_len { run + 1 } else { run };
        let remaining = body_len - consumed;

        let exp_len = remaining.min(self.es);
        let frac_len = remaining - exp_len;
        let low = code & low_mask(remaining);
        let exp = (low >> frac_len) << (self.es - exp_len);
        let frac = low & low_mask(frac_len);

        let scale = k * (1i32 << self.es) + exp as i32;
        let significand = 1.0 + libm::ldexp(frac as f64, -(frac_len as i32));
        let magnitude = libm::ldexp(significand, scale);
        Some(if negative { -magnitude } else { magnitude })
    }

    /// Encodes `x`, rounding to the nearest code (ties to even code).
    /// Non-finite input maps to NaR.
    pub fn encode(&self, x: f64) -> u32 {
        if !x.is_finite() {
            return self.nar();
        }
        if x == 0.0 {
            return 0;
        }
        let negative = x < 0.0;
        let magnitude = if negative { -x } else { x };
        let positive = self.encode_magnitude(magnitude);
        if negative {
            positive.wrapping_neg() & self.mask()
        } else {
            positive
        }
    }

    fn encode_magnitude(&self, a: f64) -> u32 {
        let (mant, exp) = libm::frexp(a);
        // a = 1.f * 2^scale
        let scale = exp - 1;
        let fraction = libm::ldexp(2.0 * mant - 1.0, 52) as u64;

        let step = 1i32 << self.es;
        let k = scale.div_euclid(step);
        let e = scale.rem_euclid(step) as u128;
        let max_k = self.n as i32 - 2;
        if k > max_k {
            return self.maxpos();
        }
        if k < -max_k {
            return self.minpos();
        }

        // Unrounded body: regime, exponent, 52 fraction bits.
        let (regime, regime_len) = if k >= 0 {
            let ones = (k + 1) as u32;
            (((1u128 << ones) - 1) << 1, ones + 1)
        } else {
            (1u128, (-k) as u32 + 1)
        };
        let len = regime_len + self.es + 52;
        let bits = (((regime << self.es) | e) << 52) | fraction as u128;

        let keep_len = self.n - 1;
        let mut body = if len <= keep_len {
            (bits << (keep_len - len)) as u64
        } else {
            let drop = len - keep_len;
            let kept = (bits >> drop) as u64;
            let round = (bits >> (drop - 1)) & 1 == 1;
            let sticky = bits & ((1u128 << (drop - 1)) - 1) != 0;
            if round && (sticky || kept & 1 == 1) {
                kept + 1
            } else {
                kept
            }
        };
        if body >= self.nar() as u64 {
            body = self.maxpos() as u64;
        }
        if body == 0 {
            body = self.minpos() as u64;
        }
        body as u32
    }

    pub fn quantize(&self, x: f64) -> Option<f64> {
        self.decode(self.encode(x))
    }
}

fn low_mask(len: u32) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, es: u32) -> PositFormat {
        PositFormat::new(n, es).unwrap()
    }

    #[test]
    fn decodes_worked_example() {
        assert_eq!(p(8, 2).decode(0b0110_1101), Some(160.0));
        assert_eq!(p(8, 2).encode(160.0), 0b0110_1101);
    }

    #[test]
    fn special_codes() {
        let f = p(8, 2);
        assert_eq!(f.decode(0), Some(0.0));
        assert_eq!(f.decode(0b1000_0000), None);
        assert_eq!(f.decode(0b0100_0000), Some(1.0));
        assert_eq!(f.encode(1.0), 0b0100_0000);
        assert_eq!(f.encode(f64::NAN), f.nar());
        assert_eq!(f.encode(f64::INFINITY), f.nar());
        assert_eq!(f.useed(), 16);
        assert_eq!(p(16, 1).useed(), 4);
    }

    #[test]
    fn saturates_instead_of_overflowing() {
        let f = p(8, 2);
        let maxpos = f.decode(f.maxpos()).unwrap();
        assert_eq!(maxpos, libm::ldexp(1.0, 24));
        assert_eq!(f.encode(1e300), f.maxpos());
        assert_eq!(f.encode(1e-300), f.minpos());
        assert_eq!(f.encode(-1e-300), f.minpos().wrapping_neg() & 0xff);
    }

    #[test]
    fn rounds_negative_example_to_nearest() {
        let f = p(8, 2);
        assert_eq!(f.quantize(-6.54965), Some(-6.5));
        assert_eq!(f.quantize(-2.206466), Some(-2.25));
        // tie between 6.5 (..101) and 7 (..110) goes to the even code
        assert_eq!(f.quantize(6.75), Some(7.0));
    }

    #[test]
    fn rejects_bad_formats() {
        assert!(PositFormat::new(1, 0).is_err());
        assert!(PositFormat::new(33, 0).is_err());
        assert!(PositFormat::new(8, 4).is_err());
        assert!(PositFormat::new(32, 3).is_ok());
    }

    #[test]
    fn wide_formats_round_trip_extremes() {
        let f = p(32, 3);
        for code in [1u32, 2, 0x4000_0000, 0x7fff_ffff, 0x8000_0001, 0xffff_ffff] {
            let v = f.decode(code).unwrap();
            assert_eq!(f.encode(v), code, "code {code:#x}");
        }
    }
}
