//! Acquisition schedules.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One excitation: flip angle and the repetition time that follows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub fa_deg: f64,
    pub tr_ms: f64,
}

/// The timing and flip-angle program that drives a simulation.
///
/// `ti_ms` is only used when `inversion_prep` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub name: String,
    pub frames: Vec<Frame>,
    pub ti_ms: f64,
    pub te_ms: f64,
    pub inversion_prep: bool,
}

// Stand-in 25-frame program: flip angles sweep 10..70 degrees and TRs
// 30..80 ms in staggered, out-of-phase ramps so that neighbouring frames
// sample different mixtures of T1 and T2 weighting.
const STAND_IN_FA_DEG: [f64; 25] = [
    10.0, 18.0, 27.0, 36.0, 45.0, 54.0, 63.0, 70.0, 62.0, 50.0, 38.0, 26.0, 14.0, 22.0, 35.0, 48.0, 60.0, 68.0, 55.0,
    40.0, 28.0, 16.0, 30.0, 46.0, 65.0,
];
const STAND_IN_TR_MS: [f64; 25] = [
    30.0, 42.0, 55.0, 68.0, 80.0, 72.0, 60.0, 48.0, 36.0, 32.0, 45.0, 58.0, 71.0, 78.0, 64.0, 50.0, 38.0, 33.0, 47.0,
    62.0, 75.0, 66.0, 52.0, 40.0, 35.0,
];

impl Schedule {
    /// The shipped 25-frame default: inversion-prepared, TI = 19 ms,
    /// TE = 23 ms. This is a documented stand-in; the optimized program the
    /// method was originally demonstrated with is not public.
    pub fn stand_in() -> Self {
        let frames = STAND_IN_FA_DEG
            .iter()
            .zip(STAND_IN_TR_MS.iter())
            .map(|(&fa_deg, &tr_ms)| Frame { fa_deg, tr_ms })
            .collect();
        Schedule { name: String::from("stand-in-25"), frames, ti_ms: 19.0, te_ms: 23.0, inversion_prep: true }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::InvalidSchedule("no frames".into()));
        }
        if !(self.te_ms.is_finite() && self.te_ms >= 0.0) {
            return Err(Error::InvalidSchedule(format!("te_ms {} must be finite and >= 0", self.te_ms)));
        }
        if !(self.ti_ms.is_finite() && self.ti_ms >= 0.0) {
            return Err(Error::InvalidSchedule(format!("ti_ms {} must be finite and >= 0", self.ti_ms)));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if !(f.fa_deg.is_finite() && (0.0..=180.0).contains(&f.fa_deg)) {
                return Err(Error::InvalidSchedule(format!("frame {i}: flip angle {} outside [0, 180]", f.fa_deg)));
            }
            if !(f.tr_ms.is_finite() && f.tr_ms > self.te_ms) {
                return Err(Error::InvalidSchedule(format!(
                    "frame {i}: tr_ms {} must exceed te_ms {}",
                    f.tr_ms, self.te_ms
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 over the physical content of the schedule (the name is a
    /// label and does not participate). `ti_ms` is hashed as zero when the
    /// inversion is disabled, since it has no effect then.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"drone-schedule-v1");
        h.update((self.frames.len() as u64).to_le_bytes());
        for f in &self.frames {
            h.update(f.fa_deg.to_le_bytes());
            h.update(f.tr_ms.to_le_bytes());
        }
        let ti = if self.inversion_prep { self.ti_ms } else { 0.0 };
        h.update(ti.to_le_bytes());
        h.update(self.te_ms.to_le_bytes());
        h.update([self.inversion_prep as u8]);
        h.finalize().into()
    }
}
