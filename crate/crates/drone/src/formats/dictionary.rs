//! `MRFD` binary dictionary, little-endian:
//!
//! | field       | type                     |
//! |-------------|--------------------------|
//! | magic       | `b"MRFD"`                |
//! | version     | u32 (= 1)                |
//! | entries N   | u64                      |
//! | frames L    | u32                      |
//! | normalized  | u8 (0 or 1)              |
//! | digest      | 32 bytes                 |
//! | params      | N x (t1_ms f64, t2_ms f64) |
//! | atoms       | N x L f64, row-major     |

use std::path::Path;

use drone_core::{Dictionary, TissueParams};

use super::{read_bytes, write_bytes, Reader};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MRFD";
pub const VERSION: u32 = 1;

pub fn to_bytes(d: &Dictionary) -> Vec<u8> {
    let mut out = Vec::with_capacity(53 + 16 * d.len() + 8 * d.atoms().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d.len() as u64).to_le_bytes());
    out.extend_from_slice(&(d.frames() as u32).to_le_bytes());
    out.push(d.is_normalized() as u8);
    out.extend_from_slice(d.schedule_digest());
    for p in d.params() {
        out.extend_from_slice(&p.t1_ms.to_le_bytes());
        out.extend_from_slice(&p.t2_ms.to_le_bytes());
    }
    for v in d.atoms() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(buf: &[u8]) -> Result<Dictionary, String> {
    let mut r = Reader::new(buf);
    if r.take(4)? != MAGIC {
        return Err("not an MRFD dictionary (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported MRFD version {version}"));
    }
    let n = usize::try_from(r.u64()?).map_err(|_| "entry count too large")?;
    let frames = r.u32()? as usize;
    let normalized = match r.u8()? {
        0 => false,
        1 => true,
        f => return Err(format!("bad normalized flag {f}")),
    };
    let digest: [u8; 32] = r.take(32)?.try_into().unwrap();
    let raw = r.f64s(n.checked_mul(2).ok_or("entry count too large")?)?;
    let params = raw.chunks_exact(2).map(|c| TissueParams::new(c[0], c[1])).collect();
    let atoms = r.f64s(n.checked_mul(frames).ok_or("dictionary too large")?)?;
    r.finish()?;
    Dictionary::from_parts(params, atoms, frames, digest, normalized).map_err(|e| e.to_string())
}

pub fn read(path: &Path) -> Result<Dictionary> {
    from_bytes(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}

pub fn write(path: &Path, d: &Dictionary) -> Result<()> {
    write_bytes(path, &to_bytes(d))
}
