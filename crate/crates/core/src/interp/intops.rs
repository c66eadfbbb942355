//! Integer fixed-point kernels shared by the interpreter's integer mode and
//! the C emitter. The emitted helpers in `codegen` are line-for-line
//! transcriptions of these; keep them in sync.

/// Moves `v` from scale `from` to scale `to`. Narrowing is an arithmetic
/// right shift (floor); widening saturates at the `i64` range.
pub fn rescale(v: i64, from: i32, to: i32) -> i64 {
    if from >= to {
        let sh = from as i64 - to as i64;
        if sh >= 63 {
            return if v < 0 { -1 } else { 0 };
        }
        v >> sh
    } else {
        let sh = to as i64 - from as i64;
        if v == 0 {
            return 0;
        }
        if sh >= 63 {
            return if v < 0 { i64::MIN } else { i64::MAX };
        }
        if v > (i64::MAX >> sh) {
            return i64::MAX;
        }
        if v < (i64::MIN >> sh) {
            return i64::MIN;
        }
        v * (1i64 << sh)
    }
}

/// Clamps to the signed `bits`-wide range.
pub fn saturate(v: i64, bits: u32) -> i64 {
    let hi = (1i64 << (bits - 1)) - 1;
    let lo = -(1i64 << (bits - 1));
    v.clamp(lo, hi)
}

/// `floor(y * 2^scale)`, saturated; NaN becomes 0.
pub fn from_real(y: f64, scale: i32, bits: u32) -> i64 {
    let t = libm::floor(libm::ldexp(y, scale));
    if t.is_nan() {
        return 0;
    }
    let hi = (1i64 << (bits - 1)) - 1;
    let lo = -(1i64 << (bits - 1));
    if t >= hi as f64 {
        hi
    } else if t <= lo as f64 {
        lo
    } else {
        t as i64
    }
}

pub fn to_real(v: i64, scale: i32) -> f64 {
    libm::ldexp(v as f64, -scale)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_floors_and_saturates() {
        assert_eq!(rescale(7, 3, 1), 1);
        assert_eq!(rescale(-7, 3, 1), -2);
        assert_eq!(rescale(-7, 100, 0), -1);
        assert_eq!(rescale(7, 100, 0), 0);
        assert_eq!(rescale(3, 1, 4), 24);
        assert_eq!(rescale(3, 0, 70), i64::MAX);
        assert_eq!(rescale(-3, 0, 62), i64::MIN);
        assert_eq!(rescale(0, 0, 70), 0);
    }

    #[test]
    fn saturation_bounds() {
        assert_eq!(saturate(300, 8), 127);
        assert_eq!(saturate(-300, 8), -128);
        assert_eq!(saturate(-5, 16), -5);
        assert_eq!(from_real(1.6181, 14, 16), 26510);
        assert_eq!(from_real(f64::NAN, 3, 8), 0);
        assert_eq!(from_real(1e300, 3, 8), 127);
    }
}
