//! Dictionary density versus reconstruction error.
//!
//! For each subsampling factor the full dictionary is thinned, a network is
//! trained on the thinned copy, and the thinned copy is also used directly
//! for matching. Both reconstructors are scored on every entry of the full
//! dictionary after fresh test noise. Each `(factor, repetition)` pair is an
//! independent, internally seeded job.

use alloc::vec::Vec;

use crate::dictionary::Dictionary;
use crate::epg::TissueParams;
use crate::error::{Error, Result};
use crate::matcher::match_one;
use crate::metrics::{linear_fit, LinearFit, Metrics};
use crate::noise::NoiseModel;
use crate::train::{train, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Nn,
    Match,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nn => "nn",
            Method::Match => "match",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub factors: Vec<usize>,
    pub test_noise: NoiseModel,
    pub repetitions: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() || self.factors.contains(&0) {
            return Err(Error::InvalidConfig("factors must be non-empty and >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        self.test_noise.validate()?;
        self.train.validate()
    }

    /// All `(factor, repetition)` jobs in output order.
    pub fn jobs(&self) -> Vec<(usize, usize)> {
        self.factors.iter().flat_map(|&f| (0..self.repetitions).map(move |r| (f, r))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRecord {
    pub factor: usize,
    pub method: Method,
    pub rep: usize,
    pub rmse_t1: f64,
    pub rmse_t2: f64,
}

/// Mixes the base seed with a factor and repetition index (SplitMix64
/// finalizer over the xor of odd-constant multiples).
pub fn derive_seed(base: u64, factor: usize, rep: usize) -> u64 {
    let mut z = base
        ^ (factor as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (rep as u64).wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noisy copy of the full dictionary for repetition `rep`. Shared by every
/// factor so that methods and factors are compared on the same data.
pub fn test_set(full: &Dictionary, cfg: &StudyConfig, rep: usize) -> Result<Dictionary> {
    full.add_noise(cfg.test_noise, derive_seed(cfg.seed, 0, rep))
}

/// Runs one job against a precomputed [`test_set`]; returns the network
/// record followed by the matching record.
pub fn run_job(
    full: &Dictionary,
    test: &Dictionary,
    cfg: &StudyConfig,
    factor: usize,
    rep: usize,
) -> Result<[StudyRecord; 2]> {
    let sparse = full.subsample(factor)?;
    let truth = full.params();

    let mut tc = cfg.train.clone();
    tc.seed = derive_seed(cfg.seed, factor, rep);
    let (net, _) = train(&sparse, &tc)?;
    let nn = net.forward_batch(test.atoms())?;
    let nn_m = Metrics::from_pairs(truth, &nn)?;

    let unit = sparse.normalize()?;
    let matched: Vec<TissueParams> =
        test.rows().map(|s| match_one(&unit, s).map(|m| m.params)).collect::<Result<_>>()?;
    let match_m = Metrics::from_pairs(truth, &matched)?;

    let rec = |method, m: Metrics| StudyRecord { factor, method, rep, rmse_t1: m.rmse_t1_ms, rmse_t2: m.rmse_t2_ms };
    Ok([rec(Method::Nn, nn_m), rec(Method::Match, match_m)])
}

/// Runs every job sequentially.
pub fn density_study(full: &Dictionary, cfg: &StudyConfig) -> Result<Vec<StudyRecord>> {
    cfg.validate()?;
    let tests: Vec<Dictionary> = (0..cfg.repetitions).map(|r| test_set(full, cfg, r)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(2 * cfg.factors.len() * cfg.repetitions);
    for (factor, rep) in cfg.jobs() {
        out.extend(run_job(full, &tests[rep], cfg, factor, rep)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub factor: usize,
    pub method: Method,
    pub mean_t1: f64,
    pub std_t1: f64,
    pub mean_t2: f64,
    pub std_t2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    /// One row per (factor, method), factors in input order, network first.
    pub rows: Vec<SummaryRow>,
    /// Least-squares line through the network's mean RMSE against factor.
    /// `None` with fewer than two distinct factors.
    pub nn_fit_t1: Option<LinearFit>,
    pub nn_fit_t2: Option<LinearFit>,
}

impl StudySummary {
    pub fn row(&self, factor: usize, method: Method) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.factor == factor && r.method == method)
    }
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one
/// sample).
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

pub fn summarize(factors: &[usize], records: &[StudyRecord]) -> Result<StudySummary> {
    let mut rows = Vec::new();
    for &factor in factors {
        for method in [Method::Nn, Method::Match] {
            let sel: Vec<&StudyRecord> = records.iter().filter(|r| r.factor == factor && r.method == method).collect();
            if sel.is_empty() {
                return Err(Error::InvalidConfig(alloc::format!("no {} records for factor {factor}", method.name())));
            }
            let t1: Vec<f64> = sel.iter().map(|r| r.rmse_t1).collect();
            let t2: Vec<f64> = sel.iter().map(|r| r.rmse_t2).collect();
            let (mean_t1, std_t1) = mean_std(&t1);
            let (mean_t2, std_t2) = mean_std(&t2);
            rows.push(SummaryRow { factor, method, mean_t1, std_t1, mean_t2, std_t2 });
        }
    }
    let nn: Vec<&SummaryRow> = rows.iter().filter(|r| r.method == Method::Nn).collect();
    let x: Vec<f64> = nn.iter().map(|r| r.factor as f64).collect();
    let fit = |y: Vec<f64>| linear_fit(&x, &y).ok();
    let nn_fit_t1 = fit(nn.iter().map(|r| r.mean_t1).collect());
    let nn_fit_t2 = fit(nn.iter().map(|r| r.mean_t2).collect());
    Ok(StudySummary { rows, nn_fit_t1, nn_fit_t2 })
}

/// Lower bound on any discrete reconstructor's RMSE per axis: each true
/// entry is charged its distance to the nearest kept value on that axis.
pub fn quantization_floor(truth: &[TissueParams], kept: &[TissueParams]) -> (f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for t in truth {
        let d1 = kept.iter().map(|k| libm::fabs(k.t1_ms - t.t1_ms)).fold(f64::INFINITY, f64::min);
        let d2 = kept.iter().map(|k| libm::fabs(k.t2_ms - t.t2_ms)).fold(f64::INFINITY, f64::min);
        s1 += d1 * d1;
        s2 += d2 * d2;
    }
    let n = truth.len() as f64;
    (libm::sqrt(s1 / n), libm::sqrt(s2 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn derived_seeds_differ_across_jobs() {
        let mut seen = Vec::new();
        for f in [0, 1, 2, 5, 60] {
            for r in 0..4 {
                seen.push(derive_seed(7, f, r));
            }
        }
        let mut dedup = seen.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), seen.len());
    }

    #[test]
    fn summary_statistics() {
        let recs = [
            StudyRecord { factor: 2, method: Method::Nn, rep: 0, rmse_t1: 1.0, rmse_t2: 4.0 },
            StudyRecord { factor: 2, method: Method::Nn, rep: 1, rmse_t1: 3.0, rmse_t2: 4.0 },
            StudyRecord { factor: 2, method: Method::Match, rep: 0, rmse_t1: 10.0, rmse_t2: 8.0 },
            StudyRecord { factor: 4, method: Method::Nn, rep: 0, rmse_t1: 4.0, rmse_t2: 6.0 },
            StudyRecord { factor: 4, method: Method::Match, rep: 0, rmse_t1: 10.0, rmse_t2: 8.0 },
        ];
        let s = summarize(&[2, 4], &recs).unwrap();
        let r = s.row(2, Method::Nn).unwrap();
        assert_eq!((r.mean_t1, r.mean_t2, r.std_t2), (2.0, 4.0, 0.0));
        assert!((r.std_t1 - 2f64.sqrt()).abs() < 1e-15);
        let fit = s.nn_fit_t1.unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && (fit.intercept - 0.0).abs() < 1e-12);
        assert!(summarize(&[3], &recs).is_err());
    }

    #[test]
    fn quantization_floor_of_exact_and_coarse_sets() {
        let truth = vec![TissueParams::new(100.0, 10.0), TissueParams::new(200.0, 30.0)];
        assert_eq!(quantization_floor(&truth, &truth), (0.0, 0.0));
        let kept = vec![TissueParams::new(100.0, 10.0)];
        let (a, b) = quantization_floor(&truth, &kept);
        assert!((a - (10000.0f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!((b - (400.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }
}
