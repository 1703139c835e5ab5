//! Schedule text format:
//!
//! ```text
//! # comment
//! name=stand-in-25
//! ti_ms=19
//! te_ms=23
//! inversion_prep=true
//! fa_deg,tr_ms
//! 10,30
//! 18,42
//! ```

use std::fmt::Write;
use std::path::Path;

use drone_core::{Frame, Schedule};

use super::{key_value, parse_bool, parse_f64, read_text, strip_comment, write_bytes};
use crate::error::{Error, Result};

const HEADER: &str = "fa_deg,tr_ms";

pub fn to_string(s: &Schedule) -> String {
    let mut out = String::new();
    writeln!(out, "name={}", s.name).unwrap();
    writeln!(out, "ti_ms={}", s.ti_ms).unwrap();
    writeln!(out, "te_ms={}", s.te_ms).unwrap();
    writeln!(out, "inversion_prep={}", s.inversion_prep).unwrap();
    writeln!(out, "{HEADER}").unwrap();
    for f in &s.frames {
        writeln!(out, "{},{}", f.fa_deg, f.tr_ms).unwrap();
    }
    out
}

pub fn parse(text: &str) -> Result<Schedule, String> {
    let mut s =
        Schedule { name: String::from("unnamed"), frames: Vec::new(), ti_ms: 0.0, te_ms: 0.0, inversion_prep: false };
    let (mut ti, mut te, mut inv) = (None, None, None);
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
            match k {
                "name" => s.name = v.to_string(),
                "ti_ms" => ti = Some(parse_f64(v, k).map_err(at)?),
                "te_ms" => te = Some(parse_f64(v, k).map_err(at)?),
                "inversion_prep" => inv = Some(parse_bool(v, k).map_err(at)?),
                _ => return Err(at(format!("unknown key {k:?}"))),
            }
        } else {
            let (fa, tr) = line.split_once(',').ok_or_else(|| at("expected fa_deg,tr_ms".into()))?;
            s.frames.push(Frame {
                fa_deg: parse_f64(fa, "fa_deg").map_err(at)?,
                tr_ms: parse_f64(tr, "tr_ms").map_err(at)?,
            });
        }
    }
    if !in_table {
        return Err(format!("missing {HEADER:?} table header"));
    }
    s.te_ms = te.ok_or("missing te_ms")?;
    s.inversion_prep = inv.ok_or("missing inversion_prep")?;
    s.ti_ms = match (s.inversion_prep, ti) {
        (_, Some(t)) => t,
        (false, None) => 0.0,
        (true, None) => return Err("inversion_prep=true requires ti_ms".into()),
    };
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

pub fn read(path: &Path) -> Result<Schedule> {
    parse(&read_text(path)?).map_err(|m| Error::format(path, m))
}

pub fn write(path: &Path, s: &Schedule) -> Result<()> {
    write_bytes(path, to_string(s).as_bytes())
}
