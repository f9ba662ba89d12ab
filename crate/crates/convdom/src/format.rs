//! File formats.
//!
//! # Kernel block (binary)
//!
//! All numbers little-endian.
//!
//! | offset | type | field |
//! |--------|------|-------|
//! | 0 | `[u8; 4]` | magic `CDKB` |
//! | 4 | `u32` | `m`, points per tile |
//! | 8 | `f64` | `w`, Haar weight of one point (`1/m`) |
//! | 16 | `2·m²` × `f64` | row-major entries as `re, im` pairs |
//!
//! # Matrix (text)
//!
//! ```text
//! convdom-matrix 1
//! group Z^d d=1
//! window box 6
//! diagonals 2
//! diagonal 0 columns 13
//! -6 1 0
//! ...
//! diagonal 1 columns 12
//! -6 -0.5 0
//! ...
//! ```
//!
//! Each column line is the column label followed by the `m²` block entries
//! as `re im` pairs, row-major. Numbers use the shortest representation
//! that parses back to the same `f64`.
//!
//! # Twisted element (text)
//!
//! Header `convdom-twisted 1`, the same `group` and `window` lines, then a
//! label table `labels K` followed by `K` label lines, then one `diagonal`
//! record per table entry in table order.

use std::fmt::Write as _;
use std::sync::Arc;

use convdom_core::{CdMatrix, KernelBlock, Label, TiledGroup, TwistedElement, Window, WindowShape, C64};

use crate::config::GroupSpec;
use crate::error::{RunError, RunResult};

const MAGIC: &[u8; 4] = b"CDKB";
const MATRIX_HEADER: &str = "convdom-matrix 1";
const TWISTED_HEADER: &str = "convdom-twisted 1";

fn parse_err(s: impl Into<String>) -> RunError {
    RunError::Parse(s.into())
}

pub fn write_block(b: &KernelBlock) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 16 * b.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(b.m() as u32).to_le_bytes());
    out.extend_from_slice(&b.weight().to_le_bytes());
    for z in b.as_slice() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn read_block(bytes: &[u8]) -> RunResult<KernelBlock> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(parse_err("not a kernel block file"));
    }
    let q = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if q == 0 {
        return Err(parse_err("block with q = 0"));
    }
    if w != 1.0 / q as f64 {
        return Err(parse_err(format!("block weight {w} does not match q = {q}")));
    }
    let body = &bytes[16..];
    if body.len() != 16 * q * q {
        return Err(parse_err(format!("block body has {} bytes, expected {}", body.len(), 16 * q * q)));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap()))
        })
        .collect();
    Ok(KernelBlock::from_row_major(q, data)?)
}

fn window_line(w: &Window) -> RunResult<String> {
    let shape = match w.shape() {
        Some(WindowShape::Box) => "box",
        Some(WindowShape::Ball) => "ball",
        None => return Err(RunError::Validation("only box and ball windows can be written".into())),
    };
    Ok(format!("window {shape} {}", w.radius()))
}

fn write_header(out: &mut String, header: &str, group: &TiledGroup, window: &Window) -> RunResult<()> {
    writeln!(out, "{header}").unwrap();
    writeln!(out, "group {}", GroupSpec::of(group)).unwrap();
    writeln!(out, "{}", window_line(window)?).unwrap();
    Ok(())
}

/// Writes one diagonal record; `blocks` yields `(column label, block)`.
fn write_diagonal(out: &mut String, group: &TiledGroup, l: Label, blocks: &[(Label, KernelBlock)]) {
    writeln!(out, "diagonal {} columns {}", group.format_label(l), blocks.len()).unwrap();
    for (j, b) in blocks {
        out.push_str(&group.format_label(*j));
        for z in b.as_slice() {
            write!(out, " {} {}", z.re, z.im).unwrap();
        }
        out.push('\n');
    }
}

fn diagonal_blocks(a: &CdMatrix, l: Label) -> Vec<(Label, KernelBlock)> {
    let w = a.window();
    let Some(d) = a.diagonal(l) else { return Vec::new() };
    d.cols()
        .iter()
        .enumerate()
        .map(|(k, &j)| (w.labels()[j], KernelBlock::from_row_major(a.m(), d.block(k, a.m()).to_vec()).unwrap()))
        .collect()
}

pub fn write_matrix(a: &CdMatrix) -> RunResult<String> {
    let mut out = String::new();
    write_header(&mut out, MATRIX_HEADER, a.group(), a.window())?;
    let labels: Vec<Label> = a.labels().collect();
    writeln!(out, "diagonals {}", labels.len()).unwrap();
    for l in labels {
        write_diagonal(&mut out, a.group(), l, &diagonal_blocks(a, l));
    }
    Ok(out)
}

pub fn write_twisted(f: &TwistedElement) -> RunResult<String> {
    let mut out = String::new();
    write_header(&mut out, TWISTED_HEADER, f.group(), f.window())?;
    let support: Vec<Label> = f.support().collect();
    writeln!(out, "labels {}", support.len()).unwrap();
    for &h in &support {
        writeln!(out, "{}", f.group().format_label(h)).unwrap();
    }
    for h in support {
        write_diagonal(&mut out, f.group(), h, &f.fiber(h));
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate() }
    }

    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> RunResult<(usize, &'a str)> {
        loop {
            match self.inner.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((n, l)) => return Ok((n + 1, l.trim())),
                None => return Err(parse_err("unexpected end of file")),
            }
        }
    }

    fn keyword(&mut self, key: &str) -> RunResult<(usize, &'a str)> {
        let (n, l) = self.next()?;
        match l.strip_prefix(key).filter(|r| r.is_empty() || r.starts_with(' ')) {
            Some(rest) => Ok((n, rest.trim())),
            None => Err(parse_err(format!("line {n}: expected {key:?}, found {l:?}"))),
        }
    }

    fn count(&mut self, key: &str) -> RunResult<usize> {
        let (n, rest) = self.keyword(key)?;
        rest.parse().map_err(|_| parse_err(format!("line {n}: bad count {rest:?}")))
    }

    fn finish(&mut self) -> RunResult<()> {
        match self.inner.find(|(_, l)| !l.trim().is_empty()) {
            Some((n, _)) => Err(parse_err(format!("line {}: trailing content", n + 1))),
            None => Ok(()),
        }
    }
}

fn read_header(lines: &mut Lines<'_>, header: &str) -> RunResult<(TiledGroup, Arc<Window>)> {
    let (n, h) = lines.next()?;
    if h != header {
        return Err(parse_err(format!("line {n}: expected {header:?}")));
    }
    let (_, g) = lines.keyword("group")?;
    let group = g.parse::<GroupSpec>()?.build()?;
    let (n, w) = lines.keyword("window")?;
    let bad = || parse_err(format!("line {n}: bad window {w:?}"));
    let (shape, radius) = w.split_once(' ').ok_or_else(bad)?;
    let shape = match shape {
        "box" => WindowShape::Box,
        "ball" => WindowShape::Ball,
        _ => return Err(bad()),
    };
    let radius = radius.trim().parse().map_err(|_| bad())?;
    Ok((group, Arc::new(Window::new(&group, shape, radius))))
}

type Record = (Label, Vec<(Label, KernelBlock)>);

fn read_diagonal(lines: &mut Lines<'_>, group: &TiledGroup) -> RunResult<Record> {
    let (n, rest) = lines.keyword("diagonal")?;
    let bad = || parse_err(format!("line {n}: bad diagonal record {rest:?}"));
    let mut words = rest.split_whitespace();
    let l = group.parse_label(words.next().ok_or_else(bad)?)?;
    if words.next() != Some("columns") {
        return Err(bad());
    }
    let cols: usize = words.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let m = group.tile_len();
    let mut blocks = Vec::with_capacity(cols);
    for _ in 0..cols {
        let (n, line) = lines.next()?;
        let mut words = line.split_whitespace();
        let j = group.parse_label(words.next().unwrap_or(""))?;
        let nums: Vec<f64> = words
            .map(|w| w.parse::<f64>().map_err(|_| parse_err(format!("line {n}: bad number {w:?}"))))
            .collect::<RunResult<_>>()?;
        if nums.len() != 2 * m * m {
            return Err(parse_err(format!("line {n}: expected {} numbers, found {}", 2 * m * m, nums.len())));
        }
        let data = nums.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        blocks.push((j, KernelBlock::from_row_major(m, data)?));
    }
    Ok((l, blocks))
}

/// Collects records into a lookup, rejecting columns outside the window or
/// whose row leaves it.
fn check_records(group: &TiledGroup, window: &Window, records: &[Record]) -> RunResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for (l, blocks) in records {
        if !seen.insert(*l) {
            return Err(parse_err(format!("diagonal {} appears twice", group.format_label(*l))));
        }
        let mut cols = std::collections::BTreeSet::new();
        for (j, _) in blocks {
            if !window.contains(*j) || !window.contains(group.label_mul(*l, *j)) || !cols.insert(*j) {
                return Err(parse_err(format!(
                    "diagonal {} column {} is repeated or not in the window",
                    group.format_label(*l),
                    group.format_label(*j)
                )));
            }
        }
    }
    Ok(())
}

fn lookup(records: &[Record], l: Label, j: Label) -> Option<KernelBlock> {
    let (_, blocks) = records.iter().find(|(k, _)| *k == l)?;
    blocks.iter().find(|(c, _)| *c == j).map(|(_, b)| b.clone())
}

pub fn read_matrix(text: &str) -> RunResult<CdMatrix> {
    let mut lines = Lines::new(text);
    let (group, window) = read_header(&mut lines, MATRIX_HEADER)?;
    let count = lines.count("diagonals")?;
    let records: Vec<Record> = (0..count).map(|_| read_diagonal(&mut lines, &group)).collect::<RunResult<_>>()?;
    lines.finish()?;
    check_records(&group, &window, &records)?;
    let labels: Vec<Label> = records.iter().map(|r| r.0).collect();
    Ok(CdMatrix::from_fn(group, window, &labels, |l, j| lookup(&records, l, j))?)
}

pub fn read_twisted(text: &str) -> RunResult<TwistedElement> {
    let mut lines = Lines::new(text);
    let (group, window) = read_header(&mut lines, TWISTED_HEADER)?;
    let count = lines.count("labels")?;
    let table: Vec<Label> =
        (0..count).map(|_| lines.next().and_then(|(_, l)| Ok(group.parse_label(l)?))).collect::<RunResult<_>>()?;
    let records: Vec<Record> = (0..count).map(|_| read_diagonal(&mut lines, &group)).collect::<RunResult<_>>()?;
    lines.finish()?;
    if records.iter().map(|r| r.0).ne(table.iter().copied()) {
        return Err(parse_err("diagonal records do not follow the label table"));
    }
    check_records(&group, &window, &records)?;
    Ok(TwistedElement::from_fn(group, window, &table, |h, j| lookup(&records, h, j))?)
}
