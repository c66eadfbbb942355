//! C emission for fixed-point programs and memory-map reports.
//!
//! The emitted translation unit has one entry point,
//! `void predict(const int32_t *input, int32_t *output)`. Weights are
//! `static const` arrays; every RAM tensor lives in the single mutable
//! global `scratch` at its planned offset. The arithmetic is the integer
//! pipeline of [`crate::interp::intops`], so the interpreter's integer mode
//! reproduces the emitted code's outputs exactly.

mod report;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::haunter::BitwidthAssignment;
use crate::interp::{fixed_formats, scalar_format, InterpError};
use crate::ir::{Model, OpKind, TensorId, TensorKind};
use crate::memplan::{live_ranges, validate, MemoryMap, PlanError};
use crate::numrep::{FixedFormat, RepParams, Representation};

pub use report::{emit_memory_map, memory_map_json};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodegenError {
    #[error("C emission supports fixed-point only, not {0}")]
    Unsupported(Representation),
    #[error(transparent)]
    Formats(#[from] InterpError),
    #[error("memory map does not fit the assignment: {0}")]
    Map(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmittedProgram {
    pub source: String,
    pub scratch_bytes: u64,
    /// RAM tensor offsets into `scratch`
    pub offsets: BTreeMap<String, u64>,
    /// `(bits, scale)` per quantized tensor
    pub formats: BTreeMap<String, (u32, i32)>,
}

/// Integer helpers; transcriptions of `interp::intops`.
const PRELUDE: &str = r#"static inline int64_t tq_sat(int64_t v, int bits) {
    int64_t hi = ((int64_t)1 << (bits - 1)) - 1;
    int64_t lo = -((int64_t)1 << (bits - 1));
    return v > hi ? hi : (v < lo ? lo : v);
}

static inline int64_t tq_rescale(int64_t v, int from, int to) {
    if (from >= to) {
        int sh = from - to;
        if (sh >= 63) return v < 0 ? -1 : 0;
        return v >= 0 ? (v >> sh) : ~((~v) >> sh);
    } else {
        int sh = to - from;
        if (v == 0) return 0;
        if (sh >= 63) return v < 0 ? INT64_MIN : INT64_MAX;
        if (v > (INT64_MAX >> sh)) return INT64_MAX;
        if (v < -((int64_t)1 << (63 - sh))) return INT64_MIN;
        return v * ((int64_t)1 << sh);
    }
}

static inline int64_t tq_from_real(double y, int scale, int bits) {
    double t = floor(ldexp(y, scale));
    int64_t hi = ((int64_t)1 << (bits - 1)) - 1;
    int64_t lo = -((int64_t)1 << (bits - 1));
    if (isnan(t)) return 0;
    if (t >= (double)hi) return hi;
    if (t <= (double)lo) return lo;
    return (int64_t)t;
}

static inline double tq_to_real(int64_t v, int scale) {
    return ldexp((double)v, -scale);
}

static inline double tq_sigmoid(double x) {
    return 1.0 / (1.0 + exp(-x));
}

static inline int64_t tq_ld8(const uint8_t *p) {
    int8_t v;
    memcpy(&v, p, 1);
    return v;
}

static inline int64_t tq_ld16(const uint8_t *p) {
    int16_t v;
    memcpy(&v, p, 2);
    return v;
}

static inline void tq_st8(uint8_t *p, int64_t v) {
    int8_t t = (int8_t)v;
    memcpy(p, &t, 1);
}

static inline void tq_st16(uint8_t *p, int64_t v) {
    int16_t t = (int16_t)v;
    memcpy(p, &t, 2);
}
"#;

struct Emitter<'a> {
    model: &'a Model,
    formats: Vec<Option<FixedFormat>>,
    offsets: &'a MemoryMap,
}

impl Emitter<'_> {
    fn fmt(&self, id: TensorId) -> FixedFormat {
        self.formats[id].expect("quantized tensor")
    }

    fn ident(&self, id: TensorId) -> String {
        format!("w_{}", self.model.tensor(id).name)
    }

    fn offset(&self, id: TensorId) -> u64 {
        self.offsets.offset(&self.model.tensor(id).name).expect("offsets checked before emission")
    }

    fn width(&self, id: TensorId) -> u32 {
        self.fmt(id).bits()
    }

    /// C expression reading element `idx` of `id` as `int64_t`.
    fn load(&self, id: TensorId, idx: &str) -> String {
        match self.model.tensor(id).kind {
            TensorKind::Param => format!("(int64_t){}[{idx}]", self.ident(id)),
            _ => {
                let w = self.width(id);
                format!("tq_ld{w}(scratch + {} + ({idx}) * {})", self.offset(id), w / 8)
            }
        }
    }

    fn store(&self, id: TensorId, idx: &str, value: &str) -> String {
        let w = self.width(id);
        format!("tq_st{w}(scratch + {} + ({idx}) * {}, {value});", self.offset(id), w / 8)
    }
}

/// Emits C for `model` under fixed-point `params` and assignment `rho`,
/// with RAM tensors placed per `map`.
pub fn emit_c(
    model: &Model,
    params: &RepParams,
    rho: &BitwidthAssignment,
    map: &MemoryMap,
) -> Result<EmittedProgram, CodegenError> {
    if !matches!(params, RepParams::Fixed { .. }) {
        return Err(CodegenError::Unsupported(params.representation()));
    }
    let formats = fixed_formats(model, params, rho)?;
    let ranges = live_ranges(model, rho)?;
    validate(&ranges, map)?;
    let e = Emitter { model, formats, offsets: map };

    let mut src = String::new();
    let name = |id: TensorId| model.tensor(id).name.as_str();
    src.push_str("#include <math.h>\n#include <stdint.h>\n#include <string.h>\n\n");

    for (id, t) in model.tensors().iter().enumerate() {
        if t.kind != TensorKind::Param {
            continue;
        }
        let f = e.fmt(id);
        let words: Vec<String> = model.weights(id).unwrap_or(&[]).iter().map(|&w| format!("{}", f.encode(w))).collect();
        let _ = writeln!(
            src,
            "/* {} {}: {} bits, scale {} */\nstatic const int{}_t {}[{}] = {{{}}};\n",
            t.name,
            t.shape,
            f.bits(),
            f.scale(),
            f.bits(),
            e.ident(id),
            words.len().max(1),
            if words.is_empty() { String::from("0") } else { words.join(", ") },
        );
    }
    if map.peak_bytes > 0 {
        let _ = writeln!(src, "static uint8_t scratch[{}];\n", map.peak_bytes);
    }
    src.push_str(PRELUDE);
    src.push_str("\nvoid predict(const int32_t *input, int32_t *output) {\n");
    src.push_str("    (void)input;\n");

    if let Some(x) = model.input() {
        let card = model.tensor(x).cardinality();
        let _ = writeln!(
            src,
            "    for (int i = 0; i < {card}; i++) {{\n        {}\n    }}",
            e.store(x, "i", &format!("tq_sat((int64_t)input[i], {})", e.width(x)))
        );
    }

    for ins in model.instructions() {
        let Some(dest) = ins.dest else { continue };
        let srcs: Vec<&str> = ins.srcs.iter().map(|&s| name(s)).collect();
        let _ = writeln!(src, "    /* {} = {}({}) */", name(dest), ins.op.name(), srcs.join(", "));
        let a = ins.srcs[0];
        let sa = e.formats[a].map_or(0, |f| f.scale());
        if ins.op == OpKind::ArgMax {
            let card = model.tensor(a).cardinality();
            let _ = writeln!(
                src,
                "    int32_t label_{} = 0;\n    {{\n        int64_t best = {};\n        for (int i = 1; i < {card}; i++) {{\n            int64_t v = {};\n            if (v > best) {{\n                best = v;\n                label_{} = i;\n            }}\n        }}\n    }}",
                name(dest),
                e.load(a, "0"),
                e.load(a, "i"),
                name(dest)
            );
            continue;
        }
        let fd = e.fmt(dest);
        let (sd, bd) = (fd.scale(), fd.bits());
        let card = model.tensor(dest).cardinality();
        let body = match ins.op {
            OpKind::MatMul => {
                let b = ins.srcs[1];
                let sb = e.fmt(b).scale();
                let (ta, tb) = (model.tensor(a).shape, model.tensor(b).shape);
                let _ = writeln!(
                    src,
                    "    for (int i = 0; i < {}; i++) {{\n        for (int j = 0; j < {}; j++) {{\n            int64_t acc = 0;\n            for (int k = 0; k < {}; k++) {{\n                acc += {} * {};\n            }}\n            {}\n        }}\n    }}",
                    ta.rows,
                    tb.cols,
                    ta.cols,
                    e.load(a, &format!("i * {} + k", ta.cols)),
                    e.load(b, &format!("k * {} + j", tb.cols)),
                    e.store(dest, &format!("i * {} + j", tb.cols), &format!("tq_sat(tq_rescale(acc, {}, {sd}), {bd})", sa + sb)),
                );
                continue;
            }
            OpKind::Add | OpKind::Sub => {
                let b = ins.srcs[1];
                let sb = e.fmt(b).scale();
                let common = sa.min(sb);
                let op = if ins.op == OpKind::Add { '+' } else { '-' };
                format!(
                    "tq_sat(tq_rescale(tq_rescale({}, {sa}, {common}) {op} tq_rescale({}, {sb}, {common}), {common}, {sd}), {bd})",
                    e.load(a, "i"),
                    e.load(b, "i")
                )
            }
            OpKind::Hadamard => {
                let b = ins.srcs[1];
                let sb = e.fmt(b).scale();
                format!("tq_sat(tq_rescale({} * {}, {}, {sd}), {bd})", e.load(a, "i"), e.load(b, "i"), sa + sb)
            }
            OpKind::ScalarMul(c) => {
                let cf = scalar_format(c);
                format!(
                    "tq_sat(tq_rescale({} * (int64_t){}, {}, {sd}), {bd})",
                    e.load(a, "i"),
                    cf.encode(c),
                    sa + cf.scale()
                )
            }
            OpKind::Relu => {
                format!("tq_sat(tq_rescale(x > 0 ? x : 0, {sa}, {sd}), {bd})")
            }
            OpKind::Reshape(_) => format!("tq_sat(tq_rescale({}, {sa}, {sd}), {bd})", e.load(a, "i")),
            OpKind::Sigmoid => format!("tq_from_real(tq_sigmoid(tq_to_real({}, {sa})), {sd}, {bd})", e.load(a, "i")),
            OpKind::Tanh => format!("tq_from_real(tanh(tq_to_real({}, {sa})), {sd}, {bd})", e.load(a, "i")),
            OpKind::Exp => format!("tq_from_real(exp(tq_to_real({}, {sa})), {sd}, {bd})", e.load(a, "i")),
            OpKind::ArgMax | OpKind::Return => unreachable!(),
        };
        let pre =
            if ins.op == OpKind::Relu { format!("int64_t x = {};\n        ", e.load(a, "i")) } else { String::new() };
        let _ = writeln!(
            src,
            "    for (int i = 0; i < {card}; i++) {{\n        {pre}{}\n    }}",
            e.store(dest, "i", &body)
        );
    }

    let out = model.output();
    if model.is_classifier() {
        let _ = writeln!(src, "    output[0] = label_{};", name(out));
    } else {
        let card = model.tensor(out).cardinality();
        let _ = writeln!(
            src,
            "    for (int i = 0; i < {card}; i++) {{\n        output[i] = (int32_t){};\n    }}",
            e.load(out, "i")
        );
    }
    src.push_str("}\n");

    let formats_table = model
        .tensors()
        .iter()
        .enumerate()
        .filter_map(|(id, t)| e.formats[id].map(|f| (t.name.clone(), (f.bits(), f.scale()))))
        .collect();
    let offsets = ranges.iter().map(|r| (r.name.clone(), map.offset(&r.name).expect("validated"))).collect();
    Ok(EmittedProgram { source: src, scratch_bytes: map.peak_bytes, offsets, formats: formats_table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::memplan::{solve_exact, Unlimited};
    use crate::numrep::ValueRange;

    fn demo_fixed() -> (Model, RepParams, BitwidthAssignment) {
        let m = demo::model();
        let ranges = [
            ("W1", -2.139562, 1.885351),
            ("X1", -2.206466, 1.185109),
            ("B1", 0.146048, 0.146048),
            ("t1", -6.7, -6.7),
            ("t2", -6.55, -6.55),
        ]
        .into_iter()
        .map(|(n, lo, hi)| (String::from(n), ValueRange { min: lo, max: hi }))
        .collect();
        let mut rho = BitwidthAssignment::uniform(&m, 16);
        rho.set("t2", 8);
        (m, RepParams::Fixed { ranges }, rho)
    }

    #[test]
    fn demo_scratch_is_three_bytes() {
        let (m, params, rho) = demo_fixed();
        let map = solve_exact(&live_ranges(&m, &rho).unwrap(), 1, &mut Unlimited).unwrap();
        let out = emit_c(&m, &params, &rho, &map).unwrap();
        assert_eq!(out.scratch_bytes, 3);
        assert!(out.source.contains("static uint8_t scratch[3];"));
        assert_eq!(out.source.matches("static uint8_t").count(), 1);
        for banned in ["malloc", "calloc", "realloc", "free("] {
            assert!(!out.source.contains(banned));
        }
        assert_eq!(out.formats["t2"].0, 8);
    }

    #[test]
    fn no_intermediates_no_scratch() {
        let p = crate::ir::parse("param W : R[1][2] = w\nreturn W\n").unwrap();
        let w = [("w".into(), alloc::vec![0.5, -0.25])].into_iter().collect();
        let m = Model::new(p, &w).unwrap();
        let ranges = [(String::from("W"), ValueRange { min: -0.25, max: 0.5 })].into_iter().collect();
        let rho = BitwidthAssignment::uniform(&m, 8);
        let out = emit_c(&m, &RepParams::Fixed { ranges }, &rho, &MemoryMap::default()).unwrap();
        assert_eq!(out.scratch_bytes, 0);
        assert!(!out.source.contains("scratch["));
    }

    #[test]
    fn rejects_other_representations_and_bad_maps() {
        let (m, params, rho) = demo_fixed();
        let posit = RepParams::Posit { es: [(8, 2), (16, 2)].into_iter().collect() };
        assert_eq!(
            emit_c(&m, &posit, &rho, &MemoryMap::default()),
            Err(CodegenError::Unsupported(Representation::Posit))
        );
        assert!(matches!(emit_c(&m, &params, &rho, &MemoryMap::default()), Err(CodegenError::Map(_))));
    }
}
