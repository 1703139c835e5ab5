//! Rayon-parallel versions of the embarrassingly parallel core loops.
//! Every result is assembled in input order, so output is identical to the
//! sequential path regardless of thread count.

use rayon::prelude::*;

use drone_core::epg::{self, TissueParams};
use drone_core::matcher::match_one;
use drone_core::study::{run_job, test_set, StudyConfig, StudyRecord};
use drone_core::{Dictionary, GridSpec, ImageStack, Mask, ParamMap, Schedule};

use crate::error::Result;

pub fn build_dictionary(spec: &GridSpec, schedule: &Schedule) -> Result<Dictionary> {
    build_from_params(spec.entries()?, schedule)
}

pub fn build_from_params(params: Vec<TissueParams>, schedule: &Schedule) -> Result<Dictionary> {
    schedule.validate()?;
    let k_max = epg::default_k_max(schedule);
    let rows: Vec<Vec<f64>> =
        params.par_iter().map(|p| epg::simulate(*p, schedule, k_max).map(|f| f.0)).collect::<Result<_, _>>()?;
    Ok(Dictionary::from_parts(params, rows.concat(), schedule.len(), schedule.digest(), false)?)
}

/// Voxel-parallel [`drone_core::matcher::match_map`].
pub fn match_map(dict: &Dictionary, stack: &ImageStack, mask: &Mask) -> Result<ParamMap> {
    stack.check_mask(mask)?;
    let idx: Vec<usize> = mask.indices().collect();
    let found: Vec<TissueParams> = idx
        .par_iter()
        .map(|&i| {
            match_one(dict, stack.voxel(i)).map(|m| m.params).map_err(|e| match e {
                drone_core::Error::ZeroSignal => {
                    drone_core::Error::ZeroVoxel { x: i % stack.width(), y: i / stack.width() }
                }
                e => e,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut map = ParamMap::empty(mask.clone());
    for (&i, p) in idx.iter().zip(found) {
        map.set(i, p);
    }
    Ok(map)
}

/// Job-parallel [`drone_core::study::density_study`].
pub fn density_study(full: &Dictionary, cfg: &StudyConfig) -> Result<Vec<StudyRecord>> {
    cfg.validate()?;
    let tests: Vec<Dictionary> =
        (0..cfg.repetitions).into_par_iter().map(|r| test_set(full, cfg, r)).collect::<Result<_, _>>()?;
    let jobs = cfg.jobs();
    let recs: Vec<[StudyRecord; 2]> =
        jobs.par_iter().map(|&(f, r)| run_job(full, &tests[r], cfg, f, r)).collect::<Result<_, _>>()?;
    Ok(recs.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use drone_core::{dictionary, Exclusion, GridAxis};

    #[test]
    fn parallel_build_equals_sequential() {
        let spec = GridSpec {
            t1: GridAxis::new(1.0, 400.0, 5000.0),
            t2: GridAxis::new(1.0, 300.0, 2000.0),
            exclusion: Exclusion::T1AtMostT2,
        };
        let s = Schedule::stand_in();
        assert_eq!(build_dictionary(&spec, &s).unwrap(), dictionary::build(&spec, &s).unwrap());
    }
}
