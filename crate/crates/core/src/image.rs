//! Image stacks, masks, and parameter maps.
//!
//! All rasters are row-major with index `y * width + x`. An [`ImageStack`]
//! is stored voxel-major: the `frames` samples of one voxel are contiguous,
//! so each voxel's fingerprint is a slice.

use alloc::vec;
use alloc::vec::Vec;

use crate::epg::TissueParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, actual: bits.len() });
        }
        Ok(Mask { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Mask { width, height, bits: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of masked-in voxels in raster order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    width: usize,
    height: usize,
    frames: usize,
    data: Vec<f64>,
}

impl ImageStack {
    pub fn new(width: usize, height: usize, frames: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 || data.len() != width * height * frames {
            return Err(Error::DimensionMismatch { expected: width * height * frames.max(1), actual: data.len() });
        }
        Ok(ImageStack { width, height, frames, data })
    }

    pub fn zeros(width: usize, height: usize, frames: usize) -> Self {
        ImageStack { width, height, frames, data: vec![0.0; width * height * frames] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn voxel(&self, index: usize) -> &[f64] {
        &self.data[index * self.frames..(index + 1) * self.frames]
    }

    pub fn voxel_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.data[index * self.frames..(index + 1) * self.frames]
    }

    /// Errors unless `mask` has the stack's width and height.
    pub fn check_mask(&self, mask: &Mask) -> Result<()> {
        if mask.width != self.width || mask.height != self.height {
            return Err(Error::DimensionMismatch {
                expected: self.width * self.height,
                actual: mask.width * mask.height,
            });
        }
        Ok(())
    }
}

/// T1 and T2 maps in milliseconds. Masked-out voxels hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMap {
    pub t1_ms: Vec<f64>,
    pub t2_ms: Vec<f64>,
    pub mask: Mask,
}

impl ParamMap {
    pub fn empty(mask: Mask) -> Self {
        let n = mask.width * mask.height;
        ParamMap { t1_ms: vec![0.0; n], t2_ms: vec![0.0; n], mask }
    }

    pub fn width(&self) -> usize {
        self.mask.width
    }

    pub fn height(&self) -> usize {
        self.mask.height
    }

    pub fn set(&mut self, index: usize, p: TissueParams) {
        self.t1_ms[index] = p.t1_ms;
        self.t2_ms[index] = p.t2_ms;
    }

    pub fn get(&self, index: usize) -> TissueParams {
        TissueParams::new(self.t1_ms[index], self.t2_ms[index])
    }

    /// `|truth - self|` per voxel, zero outside the mask.
    pub fn abs_error(&self, truth: &ParamMap) -> Result<ParamMap> {
        if self.mask != truth.mask {
            return Err(Error::MaskMismatch);
        }
        let mut out = ParamMap::empty(self.mask.clone());
        for i in self.mask.indices() {
            out.t1_ms[i] = libm::fabs(truth.t1_ms[i] - self.t1_ms[i]);
            out.t2_ms[i] = libm::fabs(truth.t2_ms[i] - self.t2_ms[i]);
        }
        Ok(out)
    }
}
