use serde::{Deserialize, Serialize};

use super::NumRepError;

/// Signed `bits`-wide integer `q` standing for `q * 2^-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedFormat {
    bits: u32,
    scale: i32,
}

impl FixedFormat {
    pub fn new(bits: u32, scale: i32) -> Result<Self, NumRepError> {
        if !(2..=32).contains(&bits) {
            return Err(NumRepError::InvalidBitwidth(bits));
        }
        Ok(Self { bits, scale })
    }

    /// Format with the largest scale that keeps `maxabs` from overflowing.
    pub fn for_maxabs(maxabs: f64, bits: u32) -> Result<Self, NumRepError> {
        Self::new(bits, fixed_scale_for(maxabs, bits)?)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn min_int(&self) -> i64 {
        -(1i64 << (self.bits - 1))
    }

    pub fn max_int(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }

    pub fn saturate(&self, v: i64) -> i64 {
        v.clamp(self.min_int(), self.max_int())
    }

    /// `floor(r * 2^scale)`, saturated. NaN encodes as zero.
    pub fn encode(&self, r: f64) -> i64 {
        if r.is_nan() {
            return 0;
        }
        let scaled = libm::floor(libm::ldexp(r, self.scale));
        if scaled >= self.max_int() as f64 {
            self.max_int()
        } else if scaled <= self.min_int() as f64 {
            self.min_int()
        } else {
            scaled as i64
        }
    }

    pub fn decode(&self, q: i64) -> f64 {
        libm::ldexp(q as f64, -self.scale)
    }

    /// True when `r` lies outside the representable range.
    pub fn overflows(&self, r: f64) -> bool {
        let scaled = libm::floor(libm::ldexp(r, self.scale));
        scaled > self.max_int() as f64 || scaled < self.min_int() as f64
    }
}

/// Largest scale `s` with `maxabs * 2^s < 2^(bits-1)`: `(bits - 2) - floor(log2 maxabs)`.
/// A zero (or non-finite) range gets `bits - 2`.
pub fn fixed_scale_for(maxabs: f64, bits: u32) -> Result<i32, NumRepError> {
    if bits < 2 {
        return Err(NumRepError::InvalidBitwidth(bits));
    }
    let headroom = bits as i32 - 2;
    let maxabs = if maxabs < 0.0 { -maxabs } else { maxabs };
    if maxabs == 0.0 || !maxabs.is_finite() {
        return Ok(headroom);
    }
    // frexp gives maxabs = m * 2^e with m in [0.5, 1), so floor(log2) = e - 1
    let (_, e) = libm::frexp(maxabs);
    Ok(headroom - (e - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_scale_and_encoding() {
        assert_eq!(fixed_scale_for(1.6181, 16).unwrap(), 14);
        assert_eq!(fixed_scale_for(0.0, 16).unwrap(), 14);
        assert_eq!(fixed_scale_for(0.9, 8).unwrap(), 7);

        let f = FixedFormat::new(16, 14).unwrap();
        assert_eq!(f.encode(1.6181), 26510);
        assert!((f.decode(26510) - 1.61804).abs() < 1e-5);
        assert_eq!(f.encode(0.0), 0);

        let g = FixedFormat::new(16, 13).unwrap();
        assert_eq!(g.encode(-2.139562), -17528);
    }

    #[test]
    fn scale_is_optimal() {
        // one more bit of scale would overflow, for exact powers of two too
        for &(m, b) in &[(1.6181, 16u32), (0.9, 8), (1.0, 8), (2.0, 16), (0.015, 12), (300.0, 16)] {
            let s = fixed_scale_for(m, b).unwrap();
            let f = FixedFormat::new(b, s).unwrap();
            assert!(!f.overflows(m) && !f.overflows(-m), "{m} at {b}");
            let tighter = FixedFormat::new(b, s + 1).unwrap();
            assert!(tighter.overflows(m), "{m} at {b} not tight");
        }
    }

    #[test]
    fn saturates() {
        let f = FixedFormat::new(8, 7).unwrap();
        assert_eq!(f.encode(5.0), 127);
        assert_eq!(f.encode(-5.0), -128);
        assert_eq!(f.encode(-1.0), -128);
        assert_eq!(f.encode(f64::INFINITY), 127);
        assert!(FixedFormat::new(1, 0).is_err());
    }
}
