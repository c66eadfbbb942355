use serde::{Deserialize, Serialize};

use super::NumRepError;

/// The top `bits` bits of an IEEE-754 binary32 (sign, 8 exponent bits and
/// `bits - 9` mantissa bits). `bits = 16` is bfloat16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncFloatFormat {
    bits: u32,
}

impl TruncFloatFormat {
    pub const BFLOAT16: Self = Self { bits: 16 };

    pub fn new(bits: u32) -> Result<Self, NumRepError> {
        if !(9..=32).contains(&bits) {
            return Err(NumRepError::InvalidBitwidth(bits));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.bits - 9
    }

    /// Rounds through binary32, then drops the low mantissa bits with
    /// round-to-nearest-even.
    pub fn encode(&self, x: f64) -> u32 {
        let word = (x as f32).to_bits();
        let drop = 32 - self.bits;
        if drop == 0 {
            return word;
        }
        if (x as f32).is_nan() {
            // quiet NaN with the top mantissa bit kept
            return (word >> drop) | (1 << (self.mantissa_bits().max(1) - 1));
        }
        let lsb = (word >> drop) & 1;
        let bias = (1u32 << (drop - 1)) - 1 + lsb;
        ((word as u64 + bias as u64) >> drop) as u32
    }

    pub fn decode(&self, code: u32) -> f64 {
        f32::from_bits(code << (32 - self.bits)) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfloat16_known_values() {
        let f = TruncFloatFormat::BFLOAT16;
        assert_eq!(f.encode(1.0), 0x3f80);
        assert_eq!(f.decode(0x3f80), 1.0);
        assert_eq!(f.encode(-2.0), 0xc000);
        // 1 + 2^-8 is a tie between 1 and 1 + 2^-7: goes to even (1.0)
        assert_eq!(f.decode(f.encode(1.0 + 1.0 / 256.0)), 1.0);
        assert_eq!(f.decode(f.encode(1.0 + 3.0 / 256.0)), 1.0 + 4.0 / 256.0);
    }

    #[test]
    fn relative_error_bound() {
        let f = TruncFloatFormat::BFLOAT16;
        let mut x = 1.0e-30f64;
        while x < 1.0e30 {
            for v in [x, -x, x * 1.37, x * 1.999] {
                let q = f.decode(f.encode(v));
                assert!(((q - v) / v).abs() <= 1.0 / 256.0, "{v} -> {q}");
            }
            x *= 3.1;
        }
    }

    #[test]
    fn nan_stays_nan() {
        let f = TruncFloatFormat::BFLOAT16;
        assert!(f.decode(f.encode(f64::NAN)).is_nan());
        assert!(TruncFloatFormat::new(8).is_err());
    }
}
