//! Fingerprint dictionaries over a (T1, T2) grid.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::epg::{self, TissueParams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::noise::NoiseModel;
use crate::schedule::Schedule;

/// Arithmetic progression `min, min + step, ...` up to and including `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub step: f64,
    pub max: f64,
}

impl GridAxis {
    pub const fn new(min: f64, step: f64, max: f64) -> Self {
        GridAxis { min, step, max }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let finite = self.min.is_finite() && self.step.is_finite() && self.max.is_finite();
        if !finite || self.step <= 0.0 || self.min > self.max || self.min <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "{name} axis {}:{}:{} needs 0 < min <= max and step > 0",
                self.min, self.step, self.max
            )));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        // Tolerates round-off in (max - min) / step for decimal steps.
        libm::floor((self.max - self.min) / self.step + 1e-9) as usize + 1
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count()).map(move |i| self.min + i as f64 * self.step)
    }
}

/// Which (T1, T2) pairs are dropped from the Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// Drop `t1 <= t2`; keeps only `t1 > t2`.
    T1AtMostT2,
    /// Drop `t1 < t2`; keeps `t1 == t2`.
    T1BelowT2,
    None,
}

impl Exclusion {
    pub fn keeps(&self, t1: f64, t2: f64) -> bool {
        match self {
            Exclusion::T1AtMostT2 => t1 > t2,
            Exclusion::T1BelowT2 => t1 >= t2,
            Exclusion::None => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Exclusion::T1AtMostT2 => "t1_le_t2",
            Exclusion::T1BelowT2 => "t1_lt_t2",
            Exclusion::None => "none",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "t1_le_t2" => Some(Exclusion::T1AtMostT2),
            "t1_lt_t2" => Some(Exclusion::T1BelowT2),
            "none" => Some(Exclusion::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t1: GridAxis,
    pub t2: GridAxis,
    pub exclusion: Exclusion,
}

impl GridSpec {
    /// T1 1:10:5000 ms, T2 1:10:2000 ms, keep only T1 > T2.
    pub const fn paper() -> Self {
        GridSpec {
            t1: GridAxis::new(1.0, 10.0, 5000.0),
            t2: GridAxis::new(1.0, 10.0, 2000.0),
            exclusion: Exclusion::T1AtMostT2,
        }
    }

    /// The 50 ms-step grid used for laptop-scale runs.
    pub const fn desk() -> Self {
        GridSpec {
            t1: GridAxis::new(1.0, 50.0, 5000.0),
            t2: GridAxis::new(1.0, 50.0, 2000.0),
            exclusion: Exclusion::T1AtMostT2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.t1.validate("t1")?;
        self.t2.validate("t2")
    }

    /// Grid points in row-major order (T1 outer, T2 inner) after exclusion.
    pub fn entries(&self) -> Result<Vec<TissueParams>> {
        self.validate()?;
        let mut out = Vec::new();
        for t1 in self.t1.values() {
            for t2 in self.t2.values() {
                if self.exclusion.keeps(t1, t2) {
                    out.push(TissueParams::new(t1, t2));
                }
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(out)
    }
}

/// Parameter table paired with a row-major `N x L` atom matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    params: Vec<TissueParams>,
    atoms: Vec<f64>,
    frames: usize,
    schedule_digest: [u8; 32],
    normalized: bool,
}

impl Dictionary {
    /// Assembles a dictionary from parts, checking shape and the unit-norm
    /// claim when `normalized` is set.
    pub fn from_parts(
        params: Vec<TissueParams>,
        atoms: Vec<f64>,
        frames: usize,
        schedule_digest: [u8; 32],
        normalized: bool,
    ) -> Result<Self> {
        if frames == 0 {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        }
        if atoms.len() != params.len() * frames {
            return Err(Error::DimensionMismatch { expected: params.len() * frames, actual: atoms.len() });
        }
        let d = Dictionary { params, atoms, frames, schedule_digest, normalized };
        if normalized && d.rows().any(|row| libm::fabs(linalg::norm(row) - 1.0) > 1e-9) {
            return Err(Error::NotNormalized);
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Fingerprint length `L`.
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn params(&self) -> &[TissueParams] {
        &self.params
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.frames..(i + 1) * self.frames]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.atoms.chunks_exact(self.frames)
    }

    pub fn schedule_digest(&self) -> &[u8; 32] {
        &self.schedule_digest
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Each element gets zero-mean Gaussian noise per `noise`; the stream
    /// is a ChaCha8 generator seeded with `seed`, consumed row by row.
    pub fn add_noise(&self, noise: NoiseModel, seed: u64) -> Result<Self> {
        noise.validate()?;
        let mut out = self.clone();
        if noise.sigma == 0.0 {
            return Ok(out);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frames = self.frames;
        for row in out.atoms.chunks_exact_mut(frames) {
            noise.corrupt(row, &mut rng);
        }
        // Noise breaks unit norm.
        out.normalized = false;
        Ok(out)
    }

    /// Keeps entries `0, factor, 2 * factor, ...`; size `ceil(N / factor)`.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidConfig("subsampling factor must be >= 1".into()));
        }
        let mut params = Vec::with_capacity(self.len().div_ceil(factor));
        let mut atoms = Vec::with_capacity(params.capacity() * self.frames);
        for i in (0..self.len()).step_by(factor) {
            params.push(self.params[i]);
            atoms.extend_from_slice(self.atom(i));
        }
        Ok(Dictionary {
            params,
            atoms,
            frames: self.frames,
            schedule_digest: self.schedule_digest,
            normalized: self.normalized,
        })
    }

    /// Scales every row to unit Euclidean norm.
    pub fn normalize(&self) -> Result<Self> {
        let mut out = self.clone();
        for (index, row) in out.atoms.chunks_exact_mut(self.frames).enumerate() {
            let n = linalg::norm(row);
            if n == 0.0 || !n.is_finite() {
                return Err(Error::ZeroNorm { index });
            }
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        out.normalized = true;
        Ok(out)
    }
}

/// Simulates every grid entry in order. See [`GridSpec::entries`].
pub fn build(spec: &GridSpec, schedule: &Schedule) -> Result<Dictionary> {
    let params = spec.entries()?;
    build_from_params(params, schedule)
}

/// Simulates the given parameter list in order.
pub fn build_from_params(params: Vec<TissueParams>, schedule: &Schedule) -> Result<Dictionary> {
    schedule.validate()?;
    let k_max = epg::default_k_max(schedule);
    let mut atoms = Vec::with_capacity(params.len() * schedule.len());
    for p in &params {
        atoms.extend_from_slice(epg::simulate(*p, schedule, k_max)?.magnitudes());
    }
    Dictionary::from_parts(params, atoms, schedule.len(), schedule.digest(), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseScale;

    fn toy(rows: &[&[f64]]) -> Dictionary {
        let params = (0..rows.len()).map(|i| TissueParams::new(100.0 + i as f64, 10.0)).collect();
        let atoms = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Dictionary::from_parts(params, atoms, rows[0].len(), [0; 32], false).unwrap()
    }

    #[test]
    fn paper_grid_count() {
        assert_eq!(GridSpec::paper().entries().unwrap().len(), 79_900);
    }

    #[test]
    fn inclusive_exclusion_gives_larger_grid() {
        let mut g = GridSpec::paper();
        g.exclusion = Exclusion::T1BelowT2;
        assert_eq!(g.entries().unwrap().len(), 80_100);
    }

    #[test]
    fn single_point_and_fully_excluded_grids() {
        let g = GridSpec {
            t1: GridAxis::new(1000.0, 1.0, 1000.0),
            t2: GridAxis::new(100.0, 1.0, 100.0),
            exclusion: Exclusion::T1AtMostT2,
        };
        assert_eq!(g.entries().unwrap(), alloc::vec![TissueParams::new(1000.0, 100.0)]);

        let g = GridSpec {
            t1: GridAxis::new(100.0, 100.0, 100.0),
            t2: GridAxis::new(100.0, 100.0, 200.0),
            exclusion: Exclusion::T1AtMostT2,
        };
        assert_eq!(g.entries(), Err(Error::EmptyGrid));
    }

    #[test]
    fn entries_are_row_major() {
        let e = GridSpec::desk().entries().unwrap();
        assert_eq!(e[0], TissueParams::new(51.0, 1.0));
        assert_eq!(e[1], TissueParams::new(101.0, 1.0));
        assert_eq!(e[2], TissueParams::new(101.0, 51.0));
        assert_eq!(e.len(), 3180);
    }

    #[test]
    fn invalid_axes_rejected() {
        let mut g = GridSpec::desk();
        g.t1.step = 0.0;
        assert!(matches!(g.entries(), Err(Error::InvalidGrid(_))));
        let mut g = GridSpec::desk();
        g.t2.min = 3000.0;
        assert!(g.entries().is_err());
    }

    #[test]
    fn single_entry_build_matches_simulation() {
        let g = GridSpec {
            t1: GridAxis::new(1000.0, 1.0, 1000.0),
            t2: GridAxis::new(100.0, 1.0, 100.0),
            exclusion: Exclusion::T1AtMostT2,
        };
        let s = Schedule::stand_in();
        let d = build(&g, &s).unwrap();
        let fp = epg::simulate(TissueParams::new(1000.0, 100.0), &s, epg::default_k_max(&s)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.atom(0), fp.magnitudes());
        assert!(!d.is_normalized());
        assert_eq!(d.schedule_digest(), &s.digest());
    }

    #[test]
    fn zero_noise_is_identity_and_seed_is_deterministic() {
        let d = toy(&[&[1.0, 2.0, 3.0], &[0.5, 0.1, 0.0]]);
        assert_eq!(d.add_noise(NoiseModel::new(0.0, NoiseScale::AtomMax), 3).unwrap(), d);
        let m = NoiseModel::new(0.02, NoiseScale::AtomMax);
        assert_eq!(d.add_noise(m, 9).unwrap(), d.add_noise(m, 9).unwrap());
        assert_ne!(d.add_noise(m, 9).unwrap(), d.add_noise(m, 10).unwrap());
        assert!(d.add_noise(NoiseModel::new(-0.1, NoiseScale::AtomMax), 1).is_err());
    }

    #[test]
    fn subsample_strides() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64 + 1.0, 1.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| &r[..]).collect();
        let d = toy(&refs);
        assert_eq!(d.subsample(1).unwrap(), d);
        let s = d.subsample(3).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.atom(1), &[4.0, 1.0]);
        assert_eq!(d.subsample(100).unwrap().len(), 1);
        assert!(d.subsample(0).is_err());
    }

    #[test]
    fn subsample_counts_on_paper_sized_list() {
        // Only the count matters here, so skip simulation.
        let n = 79_900;
        let params = alloc::vec![TissueParams::new(2.0, 1.0); n];
        let atoms = alloc::vec![1.0; n];
        let d = Dictionary::from_parts(params, atoms, 1, [0; 32], false).unwrap();
        assert_eq!(d.subsample(2).unwrap().len(), 39_950);
        assert_eq!(d.subsample(60).unwrap().len(), 1_332);
    }

    #[test]
    fn normalize_rows() {
        let d = toy(&[&[3.0, 4.0, 0.0]]).normalize().unwrap();
        assert!((d.atom(0)[0] - 0.6).abs() < 1e-15);
        assert!((d.atom(0)[1] - 0.8).abs() < 1e-15);
        assert!(d.is_normalized());
        let again = d.normalize().unwrap();
        for (a, b) in again.atoms().iter().zip(d.atoms()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(toy(&[&[1.0, 1.0], &[0.0, 0.0]]).normalize(), Err(Error::ZeroNorm { index: 1 }));
    }

    #[test]
    fn from_parts_checks_shape_and_norm_claim() {
        let p = alloc::vec![TissueParams::new(2.0, 1.0)];
        assert!(Dictionary::from_parts(p.clone(), alloc::vec![1.0, 2.0, 3.0], 2, [0; 32], false).is_err());
        assert_eq!(Dictionary::from_parts(p, alloc::vec![1.0, 2.0], 2, [0; 32], true), Err(Error::NotNormalized));
    }
}
