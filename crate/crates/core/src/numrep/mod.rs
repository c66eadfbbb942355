//! Number representations.
//!
//! Every representation exposes the same round-trip: encode a real into its
//! integer code and decode it back. The interpreter only ever sees
//! [`Format::quantize`], which is how the rest of the compiler stays
//! parametric in the representation.

mod fixed;
mod posit;
mod truncfloat;
mod zeroskew;

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fixed::{fixed_scale_for, FixedFormat};
pub use posit::PositFormat;
pub use truncfloat::TruncFloatFormat;
pub use zeroskew::ZeroSkewFormat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumRepError {
    #[error("unsupported posit format n={n}, es={es}")]
    InvalidPosit { n: u32, es: u32 },
    #[error("unsupported bitwidth {0}")]
    InvalidBitwidth(u32),
    #[error("skew must be a positive finite real, got {0}")]
    InvalidSkew(f64),
    #[error("zero-point {0} does not fit the bitwidth")]
    InvalidZeroPoint(u32),
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("no profiled range for tensor `{0}`")]
    MissingRange(String),
    #[error("no posit es configured for bitwidth {0}")]
    MissingEs(u32),
    #[error("unknown representation `{0}`")]
    UnknownRepresentation(String),
}

/// Quantization produced a value outside the reals (posit NaR, NaN, infinity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("not a real")]
pub struct NotAReal;

/// Floor that snaps to the nearest integer when within a relative 1e-9.
/// Divisions like `S * (q - Z) / S` land a hair below `q - Z`; without the
/// snap re-encoding a decoded value could step down one code.
pub(crate) fn floor_snapped(t: f64) -> f64 {
    let nearest = libm::round(t);
    let tol = 1e-9 * if t.abs() > 1.0 { t.abs() } else { 1.0 };
    if (t - nearest).abs() <= tol {
        nearest
    } else {
        libm::floor(t)
    }
}

/// A concrete codec for one tensor at one bitwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Format {
    /// Double precision pass-through; the lossless reference.
    Float,
    Posit(PositFormat),
    Fixed(FixedFormat),
    ZeroSkew(ZeroSkewFormat),
    TruncFloat(TruncFloatFormat),
}

impl Format {
    /// `decode(encode(x))`. Idempotent for every format.
    pub fn quantize(&self, x: f64) -> Result<f64, NotAReal> {
        if !x.is_finite() {
            return Err(NotAReal);
        }
        let q = match self {
            Format::Float => x,
            Format::Posit(p) => p.quantize(x).ok_or(NotAReal)?,
            Format::Fixed(f) => f.decode(f.encode(x)),
            Format::ZeroSkew(z) => z.decode(z.encode(x)),
            Format::TruncFloat(t) => t.decode(t.encode(x)),
        };
        if q.is_finite() {
            Ok(q)
        } else {
            Err(NotAReal)
        }
    }

    pub fn bits(&self) -> Option<u32> {
        match self {
            Format::Float => None,
            Format::Posit(p) => Some(p.bits()),
            Format::Fixed(f) => Some(f.bits()),
            Format::ZeroSkew(z) => Some(z.bits()),
            Format::TruncFloat(t) => Some(t.bits()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Float,
    Posit,
    Fixed,
    ZeroSkew,
    TruncFloat,
}

impl Representation {
    pub const ALL: [Representation; 5] = [
        Representation::Float,
        Representation::Posit,
        Representation::Fixed,
        Representation::ZeroSkew,
        Representation::TruncFloat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Representation::Float => "float",
            Representation::Posit => "posit",
            Representation::Fixed => "fixed",
            Representation::ZeroSkew => "zeroskew",
            Representation::TruncFloat => "truncfloat",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = NumRepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Representation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| NumRepError::UnknownRepresentation(s.into()))
    }
}

/// Observed `[min, max]` of a tensor over a profiling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub const EMPTY: ValueRange = ValueRange { min: f64::INFINITY, max: f64::NEG_INFINITY };

    pub fn include(&mut self, v: f64) {
        if v.is_finite() {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min > self.max
    }

    pub fn maxabs(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.min.abs().max(self.max.abs())
        }
    }
}

/// Data-dependent parameters of a representation, resolved per tensor and
/// bitwidth by [`RepParams::format_for`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rep", rename_all = "lowercase")]
pub enum RepParams {
    Float,
    /// es per bitwidth, serialized as `[bits, es]` pairs.
    Posit {
        #[serde(with = "es_pairs")]
        es: BTreeMap<u32, u32>,
    },
    /// Profiled range per tensor; the scale follows from the bitwidth.
    Fixed {
        ranges: BTreeMap<String, ValueRange>,
    },
    #[serde(rename = "zeroskew")]
    ZeroSkew {
        ranges: BTreeMap<String, ValueRange>,
    },
    #[serde(rename = "truncfloat")]
    TruncFloat,
}

mod es_pairs {
    use alloc::collections::BTreeMap;
    use alloc::vec::Vec;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(es: &BTreeMap<u32, u32>, s: S) -> Result<S::Ok, S::Error> {
        es.iter().map(|(&b, &e)| (b, e)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, u32>, D::Error> {
        Ok(Vec::<(u32, u32)>::deserialize(d)?.into_iter().collect())
    }
}

impl RepParams {
    pub fn representation(&self) -> Representation {
        match self {
            RepParams::Float => Representation::Float,
            RepParams::Posit { .. } => Representation::Posit,
            RepParams::Fixed { .. } => Representation::Fixed,
            RepParams::ZeroSkew { .. } => Representation::ZeroSkew,
            RepParams::TruncFloat => Representation::TruncFloat,
        }
    }

    pub fn format_for(&self, tensor: &str, bits: u32) -> Result<Format, NumRepError> {
        Ok(match self {
            RepParams::Float => Format::Float,
            RepParams::Posit { es } => {
                let es = *es.get(&bits).ok_or(NumRepError::MissingEs(bits))?;
                Format::Posit(PositFormat::new(bits, es)?)
            }
            RepParams::Fixed { ranges } => {
                let range = ranges.get(tensor).ok_or_else(|| NumRepError::MissingRange(tensor.into()))?;
                Format::Fixed(FixedFormat::for_maxabs(range.maxabs(), bits)?)
            }
            RepParams::ZeroSkew { ranges } => {
                let range = ranges.get(tensor).ok_or_else(|| NumRepError::MissingRange(tensor.into()))?;
                let (lo, hi) = if range.is_empty() { (0.0, 0.0) } else { (range.min, range.max) };
                Format::ZeroSkew(ZeroSkewFormat::from_range(lo, hi, bits)?)
            }
            RepParams::TruncFloat => Format::TruncFloat(TruncFloatFormat::new(bits)?),
        })
    }

    /// Fixed-point format of a tensor, if this is a fixed-point parameter set.
    pub fn fixed_format(&self, tensor: &str, bits: u32) -> Result<Option<FixedFormat>, NumRepError> {
        match self.format_for(tensor, bits)? {
            Format::Fixed(f) => Ok(Some(f)),
            _ => Ok(None),
        }
    }
}

/// `decode(encode(r))` under `params` for `tensor` at `bits`.
pub fn quantize(r: f64, params: &RepParams, tensor: &str, bits: u32) -> Result<f64, QuantizeError> {
    let format = params.format_for(tensor, bits)?;
    Ok(format.quantize(r)?)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantizeError {
    #[error(transparent)]
    Params(#[from] NumRepError),
    #[error(transparent)]
    NotAReal(#[from] NotAReal),
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn posit_params() -> RepParams {
        RepParams::Posit { es: [(8, 2), (16, 2)].into_iter().collect() }
    }

    #[test]
    fn quantize_facade_golden_values() {
        let p = posit_params();
        let q = quantize(1.185109, &p, "X1", 16).unwrap();
        assert!((q - 1.18506).abs() < 5e-6, "{q}");
        assert_eq!(quantize(-2.206466, &p, "X1", 8).unwrap(), -2.25);

        let fixed =
            RepParams::Fixed { ranges: [("t".into(), ValueRange { min: -1.0, max: 1.0 })].into_iter().collect() };
        assert_eq!(quantize(0.0, &fixed, "t", 8).unwrap(), 0.0);
        assert!(matches!(quantize(0.0, &fixed, "u", 8), Err(QuantizeError::Params(NumRepError::MissingRange(_)))));
        assert!(matches!(quantize(1.0, &p, "t", 12), Err(QuantizeError::Params(NumRepError::MissingEs(12)))));
    }

    #[test]
    fn non_finite_is_not_a_real() {
        for f in [Format::Float, Format::Posit(PositFormat::new(8, 0).unwrap())] {
            assert_eq!(f.quantize(f64::NAN), Err(NotAReal));
        }
    }

    #[test]
    fn representation_names_round_trip() {
        for r in Representation::ALL {
            assert_eq!(r.name().parse::<Representation>().unwrap(), r);
        }
        assert!("bfloat".parse::<Representation>().is_err());
    }

    #[test]
    fn zeroskew_quantize_is_idempotent_on_awkward_skews() {
        let z = ZeroSkewFormat::from_range(-0.37, 1.91, 8).unwrap();
        for q in 0..=255u32 {
            let v = z.decode(q);
            assert_eq!(z.encode(v), q);
        }
        let values = vec![-0.37, 0.0, 0.5, 1.91];
        for v in values {
            let once = Format::ZeroSkew(z).quantize(v).unwrap();
            assert_eq!(Format::ZeroSkew(z).quantize(once).unwrap(), once);
        }
    }
}
