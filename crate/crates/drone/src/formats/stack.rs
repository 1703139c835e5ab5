//! `MRFS` binary image stack with its mask, little-endian:
//!
//! magic `b"MRFS"`, version u32 (= 1), width u32, height u32, frames u32,
//! `width * height` mask bytes (0 or 1, row-major), then
//! `width * height * frames` f64 magnitudes, voxel-major (all frames of
//! voxel 0, then voxel 1, ...).

use std::path::Path;

use drone_core::{ImageStack, Mask};

use super::{read_bytes, write_bytes, Reader};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MRFS";
pub const VERSION: u32 = 1;

pub fn to_bytes(stack: &ImageStack, mask: &Mask) -> Result<Vec<u8>> {
    if (mask.width(), mask.height()) != (stack.width(), stack.height()) {
        return Err(drone_core::Error::MaskMismatch.into());
    }
    let mut out = Vec::with_capacity(20 + mask.bits().len() + 8 * stack.data().len());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, stack.width() as u32, stack.height() as u32, stack.frames() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(mask.bits().iter().map(|&b| b as u8));
    for v in stack.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn from_bytes(buf: &[u8]) -> Result<(ImageStack, Mask), String> {
    let mut r = Reader::new(buf);
    if r.take(4)? != MAGIC {
        return Err("not an MRFS stack (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported MRFS version {version}"));
    }
    let (w, h, l) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let voxels = w.checked_mul(h).ok_or("image too large")?;
    let bits = r
        .take(voxels)?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(format!("bad mask byte {b}")),
        })
        .collect::<Result<Vec<bool>, String>>()?;
    let data = r.f64s(voxels.checked_mul(l).ok_or("image too large")?)?;
    r.finish()?;
    let mask = Mask::new(w, h, bits).map_err(|e| e.to_string())?;
    let stack = ImageStack::new(w, h, l, data).map_err(|e| e.to_string())?;
    Ok((stack, mask))
}

pub fn read(path: &Path) -> Result<(ImageStack, Mask)> {
    from_bytes(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}

pub fn write(path: &Path, stack: &ImageStack, mask: &Mask) -> Result<()> {
    write_bytes(path, &to_bytes(stack, mask)?)
}
