//! EPG simulation against a brute-force isochromat ensemble.

use drone_core::epg::{default_k_max, simulate};
use drone_core::{Frame, Schedule, TissueParams};

mod oracles;
use oracles::{bloch, max_dev};

#[test]
fn single_point_matches_ensemble() {
    let s = Schedule::stand_in();
    let p = TissueParams::new(1000.0, 100.0);
    let epg = simulate(p, &s, default_k_max(&s)).unwrap();
    let iso = bloch(p, &s, 2048);
    assert!(max_dev(epg.magnitudes(), &iso) < 1e-3);
}

#[test]
fn five_by_five_grid_matches_ensemble() {
    let s = Schedule::stand_in();
    let t1s = [100.0, 1075.0, 2050.0, 3025.0, 4000.0];
    let t2s = [20.0, 390.0, 760.0, 1130.0, 1500.0];
    let mut worst = 0.0f64;
    for &t1 in &t1s {
        for &t2 in &t2s {
            let p = TissueParams::new(t1, t2);
            let epg = simulate(p, &s, default_k_max(&s)).unwrap();
            worst = worst.max(max_dev(epg.magnitudes(), &bloch(p, &s, 2048)));
        }
    }
    assert!(worst < 1e-3, "worst deviation {worst}");
}

#[test]
fn matches_without_inversion_and_with_large_tips() {
    let s = Schedule {
        name: "steep".into(),
        frames: (0..12).map(|i| Frame { fa_deg: 15.0 * i as f64, tr_ms: 12.0 + i as f64 }).collect(),
        ti_ms: 0.0,
        te_ms: 4.0,
        inversion_prep: false,
    };
    let p = TissueParams::new(600.0, 250.0);
    let epg = simulate(p, &s, default_k_max(&s)).unwrap();
    assert!(max_dev(epg.magnitudes(), &bloch(p, &s, 4096)) < 1e-9);
}
