use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::memplan::{LiveRange, MemoryMap};

/// Tallest canvas drawn, in rows.
const MAX_ROWS: u64 = 48;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// `{"peak_bytes": N, "offsets": {"name": offset, ...}}` with names sorted.
pub fn memory_map_json(map: &MemoryMap) -> String {
    let body: Vec<String> = map.offsets.iter().map(|(n, o)| alloc::format!("\"{}\": {o}", escape(n))).collect();
    alloc::format!("{{\"peak_bytes\": {}, \"offsets\": {{{}}}}}", map.peak_bytes, body.join(", "))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn glyph(i: usize) -> char {
    const GLYPHS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    GLYPHS.get(i).map_or('#', |&g| g as char)
}

/// Text report: the JSON map, a table of placements and an occupancy canvas
/// (byte offset upward, instruction rightward; `.` is free). With no
/// tensors only the header is written.
pub fn emit_memory_map(ranges: &[LiveRange], map: &MemoryMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "memory map: peak {} bytes{}", map.peak_bytes, if map.optimal { " (optimal)" } else { "" });
    let _ = writeln!(out, "{}", memory_map_json(map));
    if ranges.is_empty() {
        return out;
    }

    let _ = writeln!(out, "\n{:<3} {:<16} {:>8} {:>8}  live", "", "tensor", "offset", "bytes");
    for (i, r) in ranges.iter().enumerate() {
        let off = map.offset(&r.name).map_or(String::from("-"), |o| alloc::format!("{o}"));
        let _ = writeln!(out, "{:<3} {:<16} {:>8} {:>8}  [{}, {}]", glyph(i), r.name, off, r.size, r.start, r.end);
    }

    let mut unit = ranges.iter().fold(map.peak_bytes, |g, r| gcd(gcd(g, r.size), map.offset(&r.name).unwrap_or(0)));
    if unit == 0 {
        unit = 1;
    }
    if map.peak_bytes / unit > MAX_ROWS {
        unit = map.peak_bytes.div_ceil(MAX_ROWS);
    }
    let rows = map.peak_bytes.div_ceil(unit);
    let width = ranges.iter().map(|r| r.end + 1).max().unwrap_or(0);
    let _ = writeln!(out, "\ncanvas: {unit} byte(s) per row, {width} instruction(s)");
    for row in (0..rows).rev() {
        let byte = row * unit;
        let mut line = alloc::format!("{byte:>8} |");
        for i in 0..width {
            let owner = ranges
                .iter()
                .position(|r| r.is_live_at(i) && map.offset(&r.name).is_some_and(|o| o <= byte && byte < o + r.size));
            line.push(owner.map_or('.', glyph));
        }
        let _ = writeln!(out, "{line}");
    }
    let mut axis = String::from("         +");
    axis.extend(core::iter::repeat_n('-', width));
    let _ = writeln!(out, "{axis}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memplan::{solve_exact, Unlimited};
    use alloc::vec;

    #[test]
    fn json_and_empty_header() {
        let m = MemoryMap::default();
        assert_eq!(memory_map_json(&m), "{\"peak_bytes\": 0, \"offsets\": {}}");
        assert_eq!(emit_memory_map(&[], &m).lines().count(), 2);
    }

    #[test]
    fn fragmentation_canvas() {
        let ranges = vec![
            LiveRange::new("A", 64, 0, 2),
            LiveRange::new("B", 64, 0, 4),
            LiveRange::new("C", 64, 0, 2),
            LiveRange::new("D", 64, 0, 4),
            LiveRange::new("E", 128, 3, 4),
        ];
        let map = solve_exact(&ranges, 1, &mut Unlimited).unwrap();
        let text = emit_memory_map(&ranges, &map);
        assert!(text.contains("peak 256 bytes (optimal)"));
        let canvas: Vec<&str> = text.lines().filter(|l| l.contains(" |")).collect();
        assert_eq!(canvas.len(), 4);
        // every row is full: E takes over the rows A and C leave
        assert!(canvas.iter().all(|l| !l.contains('.')));
        let e_rows = canvas.iter().filter(|l| l.ends_with("EE")).count();
        assert_eq!(e_rows, 2);
    }

    #[test]
    fn demo_map_rows() {
        let ranges = vec![LiveRange::new("t1", 2, 0, 1), LiveRange::new("t2", 1, 1, 2)];
        let map = solve_exact(&ranges, 1, &mut Unlimited).unwrap();
        let text = emit_memory_map(&ranges, &map);
        assert_eq!(text.lines().filter(|l| l.contains("  [")).count(), 2);
        assert!(text.contains("peak 3 bytes"));
        assert_eq!(escape("a\"b"), "a\\\"b");
    }
}
