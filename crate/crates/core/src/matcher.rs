//! Conventional MRF reconstruction: normalized inner-product template
//! matching against a dictionary.

use crate::dictionary::Dictionary;
use crate::epg::TissueParams;
use crate::error::{Error, Result};
use crate::image::{ImageStack, Mask, ParamMap};
use crate::linalg::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub index: usize,
    pub params: TissueParams,
    /// Cosine similarity between the signal and the winning atom.
    pub score: f64,
}

/// Finds the atom with the largest inner product against the unit-normalized
/// `signal`. Ties resolve to the lowest index. Returns the winning entry's
/// grid parameters as-is.
pub fn match_one(dict: &Dictionary, signal: &[f64]) -> Result<Match> {
    if !dict.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if signal.len() != dict.frames() {
        return Err(Error::DimensionMismatch { expected: dict.frames(), actual: signal.len() });
    }
    let n = norm(signal);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroSignal);
    }
    let mut best = 0;
    let mut best_ip = f64::NEG_INFINITY;
    for (i, atom) in dict.rows().enumerate() {
        let ip = dot(atom, signal);
        if ip > best_ip {
            best_ip = ip;
            best = i;
        }
    }
    Ok(Match { index: best, params: dict.params()[best], score: best_ip / n })
}

/// Voxelwise [`match_one`] over masked-in voxels. A masked-in voxel with
/// zero signal is an error naming the voxel.
pub fn match_map(dict: &Dictionary, stack: &ImageStack, mask: &Mask) -> Result<ParamMap> {
    stack.check_mask(mask)?;
    if stack.frames() != dict.frames() {
        return Err(Error::DimensionMismatch { expected: dict.frames(), actual: stack.frames() });
    }
    let mut map = ParamMap::empty(mask.clone());
    for i in mask.indices() {
        let m = match_one(dict, stack.voxel(i)).map_err(|e| match e {
            Error::ZeroSignal => Error::ZeroVoxel { x: i % stack.width(), y: i / stack.width() },
            e => e,
        })?;
        map.set(i, m.params);
    }
    Ok(map)
}
