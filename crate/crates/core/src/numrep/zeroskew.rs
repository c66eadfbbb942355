use serde::{Deserialize, Serialize};

use super::{floor_snapped, NumRepError};

/// Affine unsigned quantization `r = skew * (q - zero_point)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroSkewFormat {
    bits: u32,
    skew: f64,
    zero_point: u32,
}

impl ZeroSkewFormat {
    pub fn new(bits: u32, skew: f64, zero_point: u32) -> Result<Self, NumRepError> {
        if !(1..=32).contains(&bits) {
            return Err(NumRepError::InvalidBitwidth(bits));
        }
        if !(skew > 0.0 && skew.is_finite()) {
            return Err(NumRepError::InvalidSkew(skew));
        }
        let fmt = Self { bits, skew, zero_point };
        if zero_point as u64 > fmt.qmax() {
            return Err(NumRepError::InvalidZeroPoint(zero_point));
        }
        Ok(fmt)
    }

    /// Parameters covering `[lo, hi]` widened to contain zero.
    pub fn from_range(lo: f64, hi: f64, bits: u32) -> Result<Self, NumRepError> {
        if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
            return Err(NumRepError::InvalidRange { lo, hi });
        }
        if !(1..=32).contains(&bits) {
            return Err(NumRepError::InvalidBitwidth(bits));
        }
        let lo = lo.min(0.0);
        let hi = hi.max(0.0);
        let qmax = ((1u64 << bits) - 1) as f64;
        if hi == lo {
            // both zero after widening
            let z = libm::round(-lo).clamp(0.0, qmax);
            return Self::new(bits, 1.0, z as u32);
        }
        let skew = (hi - lo) / qmax;
        let z = libm::round(-lo / skew).clamp(0.0, qmax);
        Self::new(bits, skew, z as u32)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    pub fn zero_point(&self) -> u32 {
        self.zero_point
    }

    pub fn qmax(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// `floor(r / skew) + zero_point`, clamped to `[0, 2^bits - 1]`.
    pub fn encode(&self, r: f64) -> u32 {
        if r.is_nan() {
            return self.zero_point;
        }
        let q = floor_snapped(r / self.skew) + self.zero_point as f64;
        q.clamp(0.0, self.qmax() as f64) as u32
    }

    pub fn decode(&self, q: u32) -> f64 {
        self.skew * (q as f64 - self.zero_point as f64)
    }
}
