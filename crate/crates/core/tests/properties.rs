//! Property tests for simulation, dictionaries, noise and matching.

use drone_core::dictionary::{build, build_from_params};
use drone_core::epg::{default_k_max, simulate};
use drone_core::matcher::match_one;
use drone_core::study::quantization_floor;
use drone_core::{
    Dictionary, EpgState, Exclusion, Frame, GridAxis, GridSpec, Metrics, NoiseModel, NoiseScale, Schedule, TissueParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod oracles;

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    (proptest::collection::vec((0.0f64..=180.0, 0.0f64..100.0), 1..20), 0.0f64..10.0, 0.0f64..1000.0, any::<bool>())
        .prop_map(|(frames, te_ms, ti_ms, inversion_prep)| Schedule {
            name: "random".into(),
            frames: frames.into_iter().map(|(fa_deg, extra)| Frame { fa_deg, tr_ms: te_ms + 0.5 + extra }).collect(),
            ti_ms,
            te_ms,
            inversion_prep,
        })
}

fn tissue_strategy() -> impl Strategy<Value = TissueParams> {
    (1.0f64..5000.0, 0.0f64..1.0).prop_map(|(t1, f)| TissueParams::new(t1, 1.0 + f * (t1 - 1.0)))
}

fn small_dictionary(n: usize) -> Dictionary {
    let params: Vec<TissueParams> =
        (0..n).map(|i| TissueParams::new(200.0 + 37.0 * i as f64, 20.0 + 11.0 * (i % 13) as f64)).collect();
    build_from_params(params, &Schedule::stand_in()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn magnitudes_lie_in_unit_interval(s in schedule_strategy(), p in tissue_strategy()) {
        let fp = simulate(p, &s, default_k_max(&s)).unwrap();
        prop_assert_eq!(fp.len(), s.len());
        for &m in fp.magnitudes() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m), "{}", m);
        }
    }

    #[test]
    fn simulation_is_bit_deterministic(s in schedule_strategy(), p in tissue_strategy()) {
        let a = simulate(p, &s, default_k_max(&s)).unwrap();
        let b = simulate(p, &s, default_k_max(&s)).unwrap();
        prop_assert_eq!(a.magnitudes().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.magnitudes().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn relaxation_never_increases_transverse_energy(
        pulses in proptest::collection::vec(0.0f64..180.0, 1..6),
        dt in 0.0f64..500.0,
        p in tissue_strategy(),
    ) {
        let mut st = EpgState::equilibrium(8);
        for fa in pulses {
            st.rf(fa, 0.0);
            st.shift();
        }
        let before = st.transverse_energy();
        st.relax(dt, p);
        prop_assert!(st.transverse_energy() <= before * (1.0 + 1e-12));
    }

    #[test]
    fn grid_count_matches_double_loop(
        t1 in (1u32..50, 1u32..40, 0u32..30),
        t2 in (1u32..50, 1u32..40, 0u32..30),
        excl in 0usize..3,
    ) {
        let axis = |(min, step, n): (u32, u32, u32)| GridAxis::new(min as f64, step as f64, (min + step * n) as f64);
        let exclusion = [Exclusion::T1AtMostT2, Exclusion::T1BelowT2, Exclusion::None][excl];
        let spec = GridSpec { t1: axis(t1), t2: axis(t2), exclusion };
        let keep = |a: f64, b: f64| match exclusion {
            Exclusion::T1AtMostT2 => a > b,
            Exclusion::T1BelowT2 => a >= b,
            Exclusion::None => true,
        };
        let tuple = |a: GridAxis| (a.min, a.step, a.max);
        let expected = oracles::grid_count(tuple(spec.t1), tuple(spec.t2), keep);
        match spec.entries() {
            Ok(e) => prop_assert_eq!(e.len(), expected),
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }

    #[test]
    fn subsampling_composes(a in 1usize..8, b in 1usize..8) {
        let d = small_dictionary(97);
        let twice = d.subsample(a).unwrap().subsample(b).unwrap();
        let once = d.subsample(a * b).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert!(once.params().iter().all(|p| d.params().contains(p)));
    }

    #[test]
    fn positive_scaling_never_changes_the_match(i in 0usize..97, c in 1e-6f64..1e6, seed in any::<u64>()) {
        let d = small_dictionary(97);
        let unit = d.normalize().unwrap();
        let noisy = d.add_noise(NoiseModel::new(0.05, NoiseScale::AtomMax), seed).unwrap();
        let s = noisy.atom(i);
        let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
        prop_assert_eq!(match_one(&unit, s).unwrap().index, match_one(&unit, &scaled).unwrap().index);
    }
}

#[test]
fn paper_grid_counts() {
    let strict = GridSpec::paper();
    let keep = |a: f64, b: f64| a > b;
    let n = oracles::grid_count((1.0, 10.0, 5000.0), (1.0, 10.0, 2000.0), keep);
    assert_eq!(n, 79_900);
    assert_eq!(strict.entries().unwrap().len(), n);
    // closed form: sum over the 200 T2 rows of the T1 values strictly above
    assert_eq!((0..200).map(|k| 499 - k).sum::<usize>(), 79_900);
    let inclusive = GridSpec { exclusion: Exclusion::T1BelowT2, ..strict };
    assert_eq!(inclusive.entries().unwrap().len(), 80_100);
}

#[test]
fn matcher_agrees_with_brute_force_scan() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let params: Vec<TissueParams> = (0..5000)
        .map(|_| {
            let t1 = rng.random_range(50.0..5000.0);
            TissueParams::new(t1, rng.random_range(5.0..t1.min(2000.0)))
        })
        .collect();
    let d = build_from_params(params, &Schedule::stand_in()).unwrap();
    let raw: Vec<Vec<f64>> = d.rows().map(|r| r.to_vec()).collect();
    let unit = d.normalize().unwrap();
    let queries = d.add_noise(NoiseModel::new(0.02, NoiseScale::AtomMax), 99).unwrap();
    for q in 0..1000 {
        let s = queries.atom(rng.random_range(0..5000));
        assert_eq!(match_one(&unit, s).unwrap().index, oracles::brute_force_match(&raw, s), "query {q}");
    }
}

#[test]
fn noise_matches_requested_standard_deviation() {
    let atom: Vec<f64> = (0..25).map(|i| 0.02 * i as f64).collect();
    let d = Dictionary::from_parts(vec![TissueParams::new(1000.0, 100.0); 4000], atom.repeat(4000), 25, [0; 32], false)
        .unwrap();
    for (noise, sd) in [
        (NoiseModel::new(0.02, NoiseScale::AtomMax), 0.02 * 0.48),
        (NoiseModel::new(0.005, NoiseScale::Absolute), 0.005),
    ] {
        let noisy = d.add_noise(noise, 1).unwrap();
        let resid: Vec<f64> = noisy.atoms().iter().zip(d.atoms()).map(|(a, b)| a - b).collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let std = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std / sd - 1.0).abs() < 0.05, "std {std} vs {sd}");
        assert!(mean.abs() < 5.0 * sd / n.sqrt());
    }
}

#[test]
fn noiseless_matching_is_bounded_below_by_quantization() {
    let spec = GridSpec {
        t1: GridAxis::new(1.0, 100.0, 3001.0),
        t2: GridAxis::new(1.0, 100.0, 1501.0),
        exclusion: Exclusion::T1AtMostT2,
    };
    let full = build(&spec, &Schedule::stand_in()).unwrap();
    for k in [1, 3, 7, 15] {
        let kept = full.subsample(k).unwrap();
        let unit = kept.normalize().unwrap();
        let recon: Vec<TissueParams> = full.rows().map(|s| match_one(&unit, s).unwrap().params).collect();
        let m = Metrics::from_pairs(full.params(), &recon).unwrap();
        let (f1, f2) = quantization_floor(full.params(), kept.params());
        assert!(m.rmse_t1_ms >= f1 - 1e-9 && m.rmse_t2_ms >= f2 - 1e-9, "factor {k}");
        if k == 1 {
            assert_eq!((m.rmse_t1_ms, m.rmse_t2_ms), (0.0, 0.0));
        }
    }
}

#[test]
fn noiseless_interior_match_is_within_one_step() {
    let spec = GridSpec {
        t1: GridAxis::new(100.0, 100.0, 3000.0),
        t2: GridAxis::new(20.0, 40.0, 1000.0),
        exclusion: Exclusion::T1AtMostT2,
    };
    let unit = build(&spec, &Schedule::stand_in()).unwrap().normalize().unwrap();
    let s = Schedule::stand_in();
    for p in [TissueParams::new(1234.0, 87.0), TissueParams::new(2610.0, 555.0), TissueParams::new(480.0, 41.0)] {
        let fp = simulate(p, &s, default_k_max(&s)).unwrap();
        let m = match_one(&unit, fp.magnitudes()).unwrap().params;
        assert!((m.t1_ms - p.t1_ms).abs() <= 100.0 && (m.t2_ms - p.t2_ms).abs() <= 40.0, "{p:?} -> {m:?}");
    }
}
