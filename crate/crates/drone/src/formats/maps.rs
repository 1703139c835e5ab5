//! Parameter maps as CSV: `x,y,mask,t1_ms,t2_ms`, one row per pixel in
//! row-major order. Masked-out pixels carry zeros.

use std::path::Path;

use drone_core::{Mask, ParamMap, TissueParams};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};

pub fn to_bytes(map: &ParamMap) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "mask", "t1_ms", "t2_ms"]).unwrap();
    let width = map.width();
    for (i, &m) in map.mask.bits().iter().enumerate() {
        let p = map.get(i);
        w.write_record([
            (i % width).to_string(),
            (i / width).to_string(),
            (m as u8).to_string(),
            p.t1_ms.to_string(),
            p.t2_ms.to_string(),
        ])
        .unwrap();
    }
    w.into_inner().unwrap()
}

pub fn from_bytes(buf: &[u8]) -> Result<ParamMap, String> {
    let mut r = csv::Reader::from_reader(buf);
    let mut rows: Vec<(usize, usize, bool, TissueParams)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let at = |m: &str| format!("row {}: {m}", i + 1);
        if rec.len() != 5 {
            return Err(at("expected 5 columns"));
        }
        let int = |k: usize| rec[k].trim().parse::<usize>().map_err(|_| at("bad integer"));
        let num = |k: usize| rec[k].trim().parse::<f64>().map_err(|_| at("bad number"));
        let mask = match int(2)? {
            0 => false,
            1 => true,
            _ => return Err(at("mask must be 0 or 1")),
        };
        rows.push((int(0)?, int(1)?, mask, TissueParams::new(num(3)?, num(4)?)));
    }
    let width = rows.iter().map(|r| r.0 + 1).max().ok_or("empty map")?;
    let height = rows.len() / width;
    if width * height != rows.len() {
        return Err("row count is not a full rectangle".into());
    }
    for (i, r) in rows.iter().enumerate() {
        if (r.0, r.1) != (i % width, i / width) {
            return Err(format!("row {}: pixels must be listed in row-major order", i + 1));
        }
    }
    let mask = Mask::new(width, height, rows.iter().map(|r| r.2).collect()).map_err(|e| e.to_string())?;
    let mut map = ParamMap::empty(mask);
    for (i, r) in rows.iter().enumerate() {
        map.set(i, r.3);
    }
    Ok(map)
}

pub fn read(path: &Path) -> Result<ParamMap> {
    from_bytes(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}

pub fn write(path: &Path, map: &ParamMap) -> Result<()> {
    write_bytes(path, &to_bytes(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut map = ParamMap::empty(Mask::new(3, 2, vec![true, false, true, true, true, false]).unwrap());
        map.set(0, TissueParams::new(663.0, 83.0));
        map.set(3, TissueParams::new(1110.25, 96.125));
        let b = to_bytes(&map);
        assert!(b.starts_with(b"x,y,mask,t1_ms,t2_ms\n0,0,1,663,83\n"));
        assert_eq!(from_bytes(&b).unwrap(), map);
    }
}
