//! Extended Phase Graph simulation of an MRF acquisition.
//!
//! The magnetization is carried as three vectors of configuration states
//! indexed by dephasing order `k = 0..=k_max`: dephasing transverse `F+`,
//! rephasing transverse `F-` and longitudinal `Z`. Equilibrium magnetization
//! is 1.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Relaxation times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TissueParams {
    pub t1_ms: f64,
    pub t2_ms: f64,
}

impl TissueParams {
    pub const fn new(t1_ms: f64, t2_ms: f64) -> Self {
        TissueParams { t1_ms, t2_ms }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.t1_ms) && ok(self.t2_ms) {
            Ok(())
        } else {
            Err(Error::InvalidTissue { t1_ms: self.t1_ms, t2_ms: self.t2_ms })
        }
    }
}

/// Signal magnitude at each frame's echo time.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint(pub Vec<f64>);

impl Fingerprint {
    pub fn magnitudes(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpgState {
    pub f_plus: Vec<Complex64>,
    pub f_minus: Vec<Complex64>,
    pub z: Vec<Complex64>,
}

impl EpgState {
    /// Fully relaxed state: `Z[0] = 1`, everything else zero.
    pub fn equilibrium(k_max: usize) -> Self {
        let mut s = Self::zero(k_max);
        s.z[0] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn zero(k_max: usize) -> Self {
        let n = k_max + 1;
        EpgState {
            f_plus: vec![Complex64::new(0.0, 0.0); n],
            f_minus: vec![Complex64::new(0.0, 0.0); n],
            z: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn k_max(&self) -> usize {
        self.z.len() - 1
    }

    /// Instantaneous RF rotation by `fa_deg` about an axis at `phase_deg`
    /// in the transverse plane, applied to every order.
    pub fn rf(&mut self, fa_deg: f64, phase_deg: f64) {
        debug_assert!((0.0..=180.0).contains(&fa_deg));
        if fa_deg == 0.0 {
            return;
        }
        let rot = RfRotation::new(fa_deg, phase_deg);
        for k in 0..self.z.len() {
            let (fp, fm, z) = rot.apply(self.f_plus[k], self.f_minus[k], self.z[k]);
            self.f_plus[k] = fp;
            self.f_minus[k] = fm;
            self.z[k] = z;
        }
    }

    /// Free relaxation for `dt_ms`; `Z[0]` recovers toward 1.
    pub fn relax(&mut self, dt_ms: f64, params: TissueParams) {
        debug_assert!(dt_ms >= 0.0);
        if dt_ms == 0.0 {
            return;
        }
        let e1 = libm::exp(-dt_ms / params.t1_ms);
        let e2 = libm::exp(-dt_ms / params.t2_ms);
        for f in self.f_plus.iter_mut().chain(self.f_minus.iter_mut()) {
            *f *= e2;
        }
        for z in self.z.iter_mut() {
            *z *= e1;
        }
        self.z[0] += 1.0 - e1;
    }

    /// One unit of gradient dephasing. The top order of `F+` falls off the
    /// end of the retained window.
    pub fn shift(&mut self) {
        let n = self.z.len();
        self.f_plus.rotate_right(1);
        self.f_minus.rotate_left(1);
        self.f_minus[n - 1] = Complex64::new(0.0, 0.0);
        self.f_plus[0] = self.f_minus[0].conj();
    }

    /// `sum_k |F+_k|^2 + sum_{k>=1} |F-_k|^2`. `F-_0` is the conjugate of
    /// `F+_0` and is counted once.
    pub fn transverse_energy(&self) -> f64 {
        let plus: f64 = self.f_plus.iter().map(|c| c.norm_sqr()).sum();
        let minus: f64 = self.f_minus.iter().skip(1).map(|c| c.norm_sqr()).sum();
        plus + minus
    }

    /// Magnitude of the observable echo `F+_0`.
    pub fn signal(&self) -> f64 {
        self.f_plus[0].norm()
    }
}

/// EPG mixing matrix for one pulse.
#[derive(Debug, Clone, Copy)]
struct RfRotation {
    m: [[Complex64; 3]; 3],
}

impl RfRotation {
    fn new(fa_deg: f64, phase_deg: f64) -> Self {
        let (s2, c2) = sin_cos_deg(fa_deg / 2.0);
        let (cc, ss) = (c2 * c2, s2 * s2);
        let (sa, ca) = sin_cos_deg(fa_deg);
        let e = |deg: f64| {
            let (s, c) = sin_cos_deg(deg);
            Complex64::new(c, s)
        };
        let phi = phase_deg;
        let i = Complex64::new(0.0, 1.0);
        let m = [
            [Complex64::new(cc, 0.0), e(2.0 * phi) * ss, -i * e(phi) * sa],
            [e(-2.0 * phi) * ss, Complex64::new(cc, 0.0), i * e(-phi) * sa],
            [-i * e(-phi) * (sa / 2.0), i * e(phi) * (sa / 2.0), Complex64::new(ca, 0.0)],
        ];
        RfRotation { m }
    }

    #[inline]
    fn apply(&self, fp: Complex64, fm: Complex64, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let m = &self.m;
        (
            m[0][0] * fp + m[0][1] * fm + m[0][2] * z,
            m[1][0] * fp + m[1][1] * fm + m[1][2] * z,
            m[2][0] * fp + m[2][1] * fm + m[2][2] * z,
        )
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90 so
/// that inversions and full tips leave no round-off residue.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg % 360.0;
    let r = if r < 0.0 { r + 360.0 } else { r };
    match r {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        _ => {
            let rad = r.to_radians();
            (libm::sin(rad), libm::cos(rad))
        }
    }
}

/// Default number of retained orders: one more than the frame count, so
/// nothing is truncated within the simulated window.
pub fn default_k_max(schedule: &Schedule) -> usize {
    schedule.len() + 1
}

/// Simulates one fingerprint.
///
/// Event order: optional 180 degree inversion followed by `ti_ms` of
/// relaxation; then per frame an RF pulse (phase 0), relaxation to the echo
/// at `te_ms` where `|F+_0|` is sampled, relaxation for the rest of the TR,
/// and one unbalanced-gradient shift.
pub fn simulate(params: TissueParams, schedule: &Schedule, k_max: usize) -> Result<Fingerprint> {
    params.validate()?;
    if k_max == 0 {
        return Err(Error::ZeroOrder);
    }
    schedule.validate()?;

    let mut state = EpgState::equilibrium(k_max);
    if schedule.inversion_prep {
        state.rf(180.0, 0.0);
        state.relax(schedule.ti_ms, params);
    }
    let mut out = Vec::with_capacity(schedule.len());
    for frame in &schedule.frames {
        state.rf(frame.fa_deg, 0.0);
        state.relax(schedule.te_ms, params);
        out.push(state.signal());
        state.relax(frame.tr_ms - schedule.te_ms, params);
        state.shift();
    }
    Ok(Fingerprint(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Frame;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn populated_state() -> EpgState {
        let mut s = EpgState::equilibrium(6);
        let p = TissueParams::new(800.0, 90.0);
        for (fa, tr) in [(40.0, 20.0), (70.0, 35.0), (25.0, 15.0)] {
            s.rf(fa, 0.0);
            s.relax(tr, p);
            s.shift();
        }
        s
    }

    #[test]
    fn rf_zero_is_identity() {
        let s = populated_state();
        let mut t = s.clone();
        t.rf(0.0, 0.0);
        assert_eq!(s, t);
    }

    #[test]
    fn rf_full_tip() {
        let mut s = EpgState::equilibrium(3);
        s.rf(90.0, 0.0);
        assert!(close(s.f_plus[0].norm(), 1.0, 1e-12));
        assert!(close(s.z[0].norm(), 0.0, 1e-12));
    }

    #[test]
    fn rf_thirty_degrees_matches_closed_form() {
        let mut s = EpgState::equilibrium(3);
        s.rf(30.0, 0.0);
        let a = 30f64.to_radians();
        assert!(close(s.z[0].re, a.cos(), 1e-12));
        assert!(close(s.z[0].im, 0.0, 1e-12));
        assert!(close(s.f_plus[0].norm(), a.sin(), 1e-12));
        // F-_0 mirrors F+_0.
        assert!(close((s.f_minus[0] - s.f_plus[0].conj()).norm(), 0.0, 1e-12));
    }

    #[test]
    fn rf_preserves_total_magnetization_energy() {
        // RF is unitary on (F+, F-, Z) up to the 1/2 weighting of Z.
        let s = populated_state();
        let mut t = s.clone();
        t.rf(63.0, 17.0);
        let e = |s: &EpgState| -> f64 {
            (0..s.z.len()).map(|k| 0.5 * (s.f_plus[k].norm_sqr() + s.f_minus[k].norm_sqr()) + s.z[k].norm_sqr()).sum()
        };
        assert!(close(e(&s), e(&t), 1e-12));
    }

    #[test]
    fn relax_zero_is_identity() {
        let s = populated_state();
        let mut t = s.clone();
        t.relax(0.0, TissueParams::new(500.0, 50.0));
        assert_eq!(s, t);
    }

    #[test]
    fn relax_half_recovery_at_t1_ln2() {
        let p = TissueParams::new(1000.0, 100.0);
        let mut s = EpgState::zero(2);
        s.relax(p.t1_ms * core::f64::consts::LN_2, p);
        assert!(close(s.z[0].re, 0.5, 1e-12));
    }

    #[test]
    fn relax_is_a_semigroup() {
        let p = TissueParams::new(700.0, 60.0);
        let mut a = populated_state();
        let mut b = a.clone();
        a.relax(13.0, p);
        a.relax(29.0, p);
        b.relax(42.0, p);
        for k in 0..a.z.len() {
            assert!((a.f_plus[k] - b.f_plus[k]).norm() < 1e-12);
            assert!((a.f_minus[k] - b.f_minus[k]).norm() < 1e-12);
            assert!((a.z[k] - b.z[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_zero_and_longitudinal_states_are_fixed_points() {
        let mut s = EpgState::zero(4);
        s.shift();
        assert_eq!(s, EpgState::zero(4));

        let mut s = EpgState::zero(4);
        s.z[0] = Complex64::new(0.3, 0.0);
        s.z[2] = Complex64::new(0.1, -0.2);
        let before = s.clone();
        s.shift();
        assert_eq!(s, before);
    }

    #[test]
    fn shift_conserves_transverse_energy_when_not_saturated() {
        let s = populated_state();
        assert_eq!(s.f_plus[s.k_max()].norm(), 0.0);
        let before = s.transverse_energy();
        let mut t = s.clone();
        t.shift();
        assert!(close(before, t.transverse_energy(), 1e-14));
        // Orders moved up by one.
        assert_eq!(t.f_plus[2], s.f_plus[1]);
        assert_eq!(t.f_minus[1], s.f_minus[2]);
        assert_eq!(t.f_plus[0], s.f_minus[1].conj());
    }

    #[test]
    fn simulate_rejects_bad_inputs() {
        let sched = Schedule::stand_in();
        assert!(matches!(simulate(TissueParams::new(-1.0, 10.0), &sched, 26), Err(Error::InvalidTissue { .. })));
        assert!(simulate(TissueParams::new(f64::NAN, 10.0), &sched, 26).is_err());
        assert!(simulate(TissueParams::new(100.0, 0.0), &sched, 26).is_err());
        assert_eq!(simulate(TissueParams::new(100.0, 10.0), &sched, 0), Err(Error::ZeroOrder));
    }

    #[test]
    fn no_excitation_no_signal() {
        let mut sched = Schedule::stand_in();
        for f in &mut sched.frames {
            f.fa_deg = 0.0;
        }
        let fp = simulate(TissueParams::new(1000.0, 100.0), &sched, 26).unwrap();
        assert_eq!(fp.len(), 25);
        assert!(fp.magnitudes().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn lossless_ninety_degree_tip() {
        let sched = Schedule {
            name: "single".into(),
            frames: alloc::vec![Frame { fa_deg: 90.0, tr_ms: 10.0 }],
            ti_ms: 0.0,
            te_ms: 0.0,
            inversion_prep: false,
        };
        let fp = simulate(TissueParams::new(1e9, 1e9), &sched, 2).unwrap();
        assert!(close(fp.0[0], 1.0, 1e-9));
    }

    #[test]
    fn t1_sensitivity() {
        let sched = Schedule::stand_in();
        let k = default_k_max(&sched);
        let a = simulate(TissueParams::new(800.0, 80.0), &sched, k).unwrap();
        let b = simulate(TissueParams::new(1300.0, 80.0), &sched, k).unwrap();
        let d: f64 = a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!(d.sqrt() > 0.0);
    }
}
