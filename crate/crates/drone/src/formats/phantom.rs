//! Phantom inputs.
//!
//! Geometric spec: `key=value` lines (`width`, `height`) followed by a
//! region table; later rows paint over earlier ones.
//!
//! ```text
//! width=128
//! height=128
//! label,t1_ms,t2_ms,shape,a,b,c,d
//! csf,3799,870,ellipse,63.5,63.5,56.3,60.2
//! wm,663,83,rect,40,40,80,90
//! ```
//!
//! Ellipse parameters are `cx,cy,rx,ry`, rectangles `x0,y0,x1,y1`
//! (inclusive), all in pixels.
//!
//! Label maps are binary PGM (`P5`, maxval 255) rasters paired with a CSV
//! table `label,name,t1_ms,t2_ms`.

use std::fmt::Write;
use std::path::Path;

use drone_core::phantom::{LabelMap, PhantomSpec, Region, Shape};
use drone_core::TissueParams;

use super::{key_value, parse_f64, read_bytes, read_text, strip_comment, write_bytes};
use crate::error::{Error, Result};

const HEADER: &str = "label,t1_ms,t2_ms,shape,a,b,c,d";

pub fn spec_to_string(spec: &PhantomSpec) -> String {
    let mut out = String::new();
    writeln!(out, "width={}", spec.width).unwrap();
    writeln!(out, "height={}", spec.height).unwrap();
    writeln!(out, "{HEADER}").unwrap();
    for r in &spec.regions {
        let (kind, [a, b, c, d]) = match r.shape {
            Shape::Ellipse { cx, cy, rx, ry } => ("ellipse", [cx, cy, rx, ry]),
            Shape::Rect { x0, y0, x1, y1 } => ("rect", [x0, y0, x1, y1]),
        };
        writeln!(out, "{},{},{},{kind},{a},{b},{c},{d}", r.label, r.params.t1_ms, r.params.t2_ms).unwrap();
    }
    out
}

pub fn parse_spec(text: &str) -> Result<PhantomSpec, String> {
    let (mut width, mut height) = (None, None);
    let mut regions = Vec::new();
    let mut in_table = false;
    for (no, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        let at = |m: String| format!("line {}: {m}", no + 1);
        if line.is_empty() {
            continue;
        }
        if !in_table {
            if line.replace(' ', "") == HEADER {
                in_table = true;
                continue;
            }
            let (k, v) = key_value(line).ok_or_else(|| at(format!("expected key=value or {HEADER:?}")))?;
            let n: usize = v.parse().map_err(|_| at(format!("{k}: expected a positive integer")))?;
            match k {
                "width" => width = Some(n),
                "height" => height = Some(n),
                _ => return Err(at(format!("unknown key {k:?}"))),
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(at(format!("expected 8 columns, found {}", f.len())));
        }
        let num = |i: usize| parse_f64(f[i], HEADER.split(',').nth(i).unwrap()).map_err(at);
        let (a, b, c, d) = (num(4)?, num(5)?, num(6)?, num(7)?);
        let shape = match f[3] {
            "ellipse" => Shape::Ellipse { cx: a, cy: b, rx: c, ry: d },
            "rect" => Shape::Rect { x0: a, y0: b, x1: c, y1: d },
            s => return Err(at(format!("unknown shape {s:?}"))),
        };
        regions.push(Region { label: f[0].to_string(), params: TissueParams::new(num(1)?, num(2)?), shape });
    }
    if !in_table {
        return Err(format!("missing {HEADER:?} table header"));
    }
    let spec = PhantomSpec { width: width.ok_or("missing width")?, height: height.ok_or("missing height")?, regions };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn read_spec(path: &Path) -> Result<PhantomSpec> {
    parse_spec(&read_text(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_spec(path: &Path, spec: &PhantomSpec) -> Result<()> {
    write_bytes(path, spec_to_string(spec).as_bytes())
}

pub fn pgm_to_bytes(width: usize, height: usize, labels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(labels);
    out
}

/// Parses a binary PGM with maxval 255 and `#` header comments.
pub fn parse_pgm(buf: &[u8]) -> Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0;
    let mut token = || -> Result<String, String> {
        loop {
            while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < buf.len() && buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        Ok(String::from_utf8_lossy(&buf[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("label raster must be a binary PGM (P5)".into());
    }
    let w: usize = token()?.parse().map_err(|_| "bad PGM width")?;
    let h: usize = token()?.parse().map_err(|_| "bad PGM height")?;
    if token()? != "255" {
        return Err("label raster must have maxval 255".into());
    }
    // exactly one whitespace byte separates the header from the raster
    let data = buf.get(pos + 1..).ok_or("truncated PGM")?;
    if data.len() != w * h {
        return Err(format!("PGM raster has {} bytes, expected {}", data.len(), w * h));
    }
    Ok((w, h, data.to_vec()))
}

pub fn table_to_bytes(table: &[(u8, String, TissueParams)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "name", "t1_ms", "t2_ms"]).unwrap();
    for (label, name, p) in table {
        w.write_record([label.to_string(), name.clone(), p.t1_ms.to_string(), p.t2_ms.to_string()]).unwrap();
    }
    w.into_inner().unwrap()
}

pub fn parse_table(buf: &[u8]) -> Result<Vec<(u8, String, TissueParams)>, String> {
    let mut r = csv::Reader::from_reader(buf);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let at = |m: &str| format!("row {}: {m}", i + 1);
        if rec.len() != 4 {
            return Err(at("expected label,name,t1_ms,t2_ms"));
        }
        let label: u8 = rec[0].trim().parse().map_err(|_| at("label must be 0..=255"))?;
        let t1 = parse_f64(&rec[2], "t1_ms").map_err(|m| at(&m))?;
        let t2 = parse_f64(&rec[3], "t2_ms").map_err(|m| at(&m))?;
        out.push((label, rec[1].trim().to_string(), TissueParams::new(t1, t2)));
    }
    Ok(out)
}

pub fn read_label_map(raster: &Path, table: &Path) -> Result<LabelMap> {
    let (width, height, labels) = parse_pgm(&read_bytes(raster)?).map_err(|m| Error::format(raster, m))?;
    let table = parse_table(&read_bytes(table)?).map_err(|m| Error::format(table, m))?;
    Ok(LabelMap { width, height, labels, table })
}
