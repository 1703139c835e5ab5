//! Wall-clock comparison of network inference and dictionary matching on
//! the same image stack. Runs on the calling thread only.

use std::time::Instant;

use drone_core::matcher::match_map;
use drone_core::{Dictionary, ImageStack, Mask, Mlp};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Nn,
    Match,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Nn => "nn",
            BenchMethod::Match => "match",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub method: BenchMethod,
    pub voxel_count: usize,
    pub dict_entries: usize,
    pub wall_ms: f64,
    pub per_voxel_us: f64,
}

impl BenchReport {
    fn new(method: BenchMethod, voxel_count: usize, dict_entries: usize, wall_ms: f64) -> Self {
        // keep the report well-formed even for sub-resolution timings
        let wall_ms = wall_ms.max(1e-6);
        BenchReport {
            method,
            voxel_count,
            dict_entries,
            wall_ms,
            per_voxel_us: 1000.0 * wall_ms / voxel_count.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub nn: BenchReport,
    pub matching: BenchReport,
    /// Matching time over network time.
    pub ratio: f64,
    /// Set when model and dictionary were built from different schedules.
    pub digest_mismatch: bool,
}

/// One untimed warm-up call, then the median of `runs` timed calls, in ms.
pub fn median_ms<T>(runs: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    f()?;
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        let t = Instant::now();
        std::hint::black_box(f()?);
        times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    let n = times.len();
    Ok(if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) })
}

/// Times [`Mlp::reconstruct_map`] against [`match_map`] on identical input.
/// `dict` is normalized here if needed (outside the timed region).
/// `model_schedule_digest` is compared with the dictionary's; a mismatch is
/// reported, not fatal.
pub fn bench(
    net: &Mlp,
    model_schedule_digest: &[u8; 32],
    dict: &Dictionary,
    stack: &ImageStack,
    mask: &Mask,
    runs: usize,
) -> Result<BenchOutcome> {
    if mask.count() == 0 {
        return Err(Error::Core(drone_core::Error::EmptyMask));
    }
    let unit;
    let dict = if dict.is_normalized() {
        dict
    } else {
        unit = dict.normalize()?;
        &unit
    };
    let nn_ms = median_ms(runs, || Ok(net.reconstruct_map(stack, mask)?))?;
    let match_ms = median_ms(runs, || Ok(match_map(dict, stack, mask)?))?;
    let voxels = mask.count();
    let nn = BenchReport::new(BenchMethod::Nn, voxels, dict.len(), nn_ms);
    let matching = BenchReport::new(BenchMethod::Match, voxels, dict.len(), match_ms);
    Ok(BenchOutcome {
        ratio: matching.wall_ms / nn.wall_ms,
        nn,
        matching,
        digest_mismatch: model_schedule_digest != dict.schedule_digest(),
    })
}

/// CSV with one row per report.
pub fn reports_to_bytes(reports: &[BenchReport]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "voxel_count", "dict_entries", "wall_ms", "per_voxel_us"]).unwrap();
    for r in reports {
        w.write_record([
            r.method.name().to_string(),
            r.voxel_count.to_string(),
            r.dict_entries.to_string(),
            format!("{:.3}", r.wall_ms),
            format!("{:.3}", r.per_voxel_us),
        ])
        .unwrap();
    }
    w.into_inner().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use drone_core::dictionary::build_from_params;
    use drone_core::phantom::{render_phantom, PhantomSpec};
    use drone_core::{InputNormalization, OutputScaler, Schedule, TissueParams};

    #[test]
    fn report_invariants_and_mismatch_flag() {
        let s = Schedule::stand_in();
        let params = (1..40).map(|i| TissueParams::new(100.0 * i as f64, 10.0 * i as f64)).collect();
        let dict = build_from_params(params, &s).unwrap();
        let (truth, stack) = render_phantom(&PhantomSpec::brain(12, 12), &s).unwrap();
        let net = Mlp::init(&[25, 6, 2], OutputScaler::default(), InputNormalization::None, 1).unwrap();
        let out = bench(&net, &s.digest(), &dict, &stack, &truth.mask, 3).unwrap();
        for r in [out.nn, out.matching] {
            assert!(r.wall_ms > 0.0);
            assert_eq!(r.voxel_count, truth.mask.count());
            assert!((r.per_voxel_us - 1000.0 * r.wall_ms / r.voxel_count as f64).abs() < 1e-9);
        }
        assert!(!out.digest_mismatch);
        assert!(bench(&net, &[0; 32], &dict, &stack, &truth.mask, 1).unwrap().digest_mismatch);
    }

    #[test]
    fn median_of_odd_and_even_runs() {
        let mut calls = 0;
        median_ms(4, || {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 5);
    }
}
