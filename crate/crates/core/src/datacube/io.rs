use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{HyperCube, LabelMap};
use crate::error::{Error, Result};

fn header(line: Option<&str>, what: &str) -> Result<[usize; 3]> {
    let line = line.ok_or_else(|| Error::Format(format!("missing {what} header")))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Format(format!("{what} header must have 3 fields, got {:?}", line)));
    }
    let mut out = [0usize; 3];
    for (slot, f) in out.iter_mut().zip(&fields) {
        *slot = f
            .parse()
            .map_err(|_| Error::Format(format!("bad {what} header field {f:?}")))?;
    }
    Ok(out)
}

/// Parse the cube text format: `H W B` then `H*W` lines of `B` floats.
pub fn parse_cube(text: &str) -> Result<HyperCube> {
    let mut lines = text.lines();
    let [h, w, b] = header(lines.next(), "cube")?;
    let mut values = Vec::with_capacity(h * w * b);
    let mut rows = 0;
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad float {tok:?}", n + 2)))?;
            if !v.is_finite() {
                return Err(Error::Format(format!("line {}: non-finite value {tok}", n + 2)));
            }
            values.push(v);
        }
        if values.len() - before != b {
            return Err(Error::Format(format!(
                "line {}: expected {b} values, got {}",
                n + 2,
                values.len() - before
            )));
        }
    }
    if rows != h * w {
        return Err(Error::Format(format!("expected {} pixel lines, got {rows}", h * w)));
    }
    HyperCube::new(h, w, b, values)
}

pub fn write_cube(cube: &HyperCube) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {}", cube.height(), cube.width(), cube.bands()).unwrap();
    for p in 0..cube.pixels() {
        let line: Vec<String> = cube.pixel(p).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    parse_cube(&fs::read_to_string(path)?)
}

pub fn save_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_cube(cube))?;
    Ok(())
}

/// Parse the label text format: `H W K` then `H` lines of `W` integers.
pub fn parse_labels(text: &str) -> Result<LabelMap> {
    let mut lines = text.lines();
    let [h, w, k] = header(lines.next(), "label")?;
    let mut labels = Vec::with_capacity(h * w);
    let mut rows = 0;
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let before = labels.len();
        for tok in line.split_whitespace() {
            labels.push(
                tok.parse::<usize>()
                    .map_err(|_| Error::Format(format!("line {}: bad label {tok:?}", n + 2)))?,
            );
        }
        if labels.len() - before != w {
            return Err(Error::Format(format!(
                "line {}: expected {w} labels, got {}",
                n + 2,
                labels.len() - before
            )));
        }
    }
    if rows != h {
        return Err(Error::Format(format!("expected {h} label rows, got {rows}")));
    }
    LabelMap::new(h, w, k, labels)
}

pub fn write_labels(map: &LabelMap) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {}", map.height(), map.width(), map.num_classes()).unwrap();
    for row in map.labels().chunks(map.width()) {
        let line: Vec<String> = row.iter().map(|l| l.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    parse_labels(&fs::read_to_string(path)?)
}

pub fn save_labels(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_labels(map))?;
    Ok(())
}
