//! Additive Gaussian corruption of fingerprints.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// What the noise standard deviation is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScale {
    /// `sigma` times the largest magnitude of the fingerprint being
    /// corrupted.
    AtomMax,
    /// `sigma` times the equilibrium magnetization (1).
    Absolute,
}

impl NoiseScale {
    pub fn name(self) -> &'static str {
        match self {
            NoiseScale::AtomMax => "atom_max",
            NoiseScale::Absolute => "absolute",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "atom_max" => Some(NoiseScale::AtomMax),
            "absolute" => Some(NoiseScale::Absolute),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub scale: NoiseScale,
}

impl NoiseModel {
    pub const fn new(sigma: f64, scale: NoiseScale) -> Self {
        NoiseModel { sigma, scale }
    }

    pub const fn none() -> Self {
        NoiseModel { sigma: 0.0, scale: NoiseScale::AtomMax }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_finite() && self.sigma >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("noise sigma {} must be >= 0", self.sigma)))
        }
    }

    /// Standard deviation applied to `atom`.
    pub fn std_dev(&self, atom: &[f64]) -> f64 {
        match self.scale {
            NoiseScale::Absolute => self.sigma,
            NoiseScale::AtomMax => self.sigma * atom.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    /// Adds i.i.d. zero-mean Gaussian noise in place, drawing one normal
    /// deviate per element in order. Results are not clipped. A zero sigma
    /// leaves `atom` untouched and consumes no randomness.
    pub fn corrupt<R: Rng + ?Sized>(&self, atom: &mut [f64], rng: &mut R) {
        if self.sigma == 0.0 {
            return;
        }
        let sd = self.std_dev(atom);
        for v in atom.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
    }
}
