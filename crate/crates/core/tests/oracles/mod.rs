//! Independent reference implementations shared by the integration and
//! acceptance tests. Deliberately naive.
#![allow(dead_code, clippy::needless_range_loop)]

use drone_core::{Activation, InputNormalization, Mlp, Schedule, TissueParams};

/// Ensemble of spins evenly dephased over one cycle. Each TR the spoiler
/// gradient advances spin `j` by `2*pi*j/n`.
pub struct Ensemble {
    mx: Vec<f64>,
    my: Vec<f64>,
    mz: Vec<f64>,
    step: Vec<(f64, f64)>,
}

impl Ensemble {
    fn new(n: usize) -> Self {
        let step = (0..n)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                (th.sin(), th.cos())
            })
            .collect();
        Ensemble { mx: vec![0.0; n], my: vec![0.0; n], mz: vec![1.0; n], step }
    }

    // Rotation about x.
    fn pulse(&mut self, fa_deg: f64) {
        let (s, c) = fa_deg.to_radians().sin_cos();
        for j in 0..self.mz.len() {
            let (y, z) = (self.my[j], self.mz[j]);
            self.my[j] = y * c - z * s;
            self.mz[j] = y * s + z * c;
        }
    }

    fn relax(&mut self, dt: f64, p: TissueParams) {
        let e1 = (-dt / p.t1_ms).exp();
        let e2 = (-dt / p.t2_ms).exp();
        for j in 0..self.mz.len() {
            self.mx[j] *= e2;
            self.my[j] *= e2;
            self.mz[j] = self.mz[j] * e1 + (1.0 - e1);
        }
    }

    fn spoil(&mut self) {
        for j in 0..self.mz.len() {
            let (s, c) = self.step[j];
            let (x, y) = (self.mx[j], self.my[j]);
            self.mx[j] = x * c - y * s;
            self.my[j] = x * s + y * c;
        }
    }

    fn magnitude(&self) -> f64 {
        let n = self.mz.len() as f64;
        let x: f64 = self.mx.iter().sum::<f64>() / n;
        let y: f64 = self.my.iter().sum::<f64>() / n;
        x.hypot(y)
    }
}

pub fn bloch(p: TissueParams, s: &Schedule, spins: usize) -> Vec<f64> {
    let mut e = Ensemble::new(spins);
    if s.inversion_prep {
        e.pulse(180.0);
        e.relax(s.ti_ms, p);
    }
    let mut out = Vec::new();
    for f in &s.frames {
        e.pulse(f.fa_deg);
        e.relax(s.te_ms, p);
        out.push(e.magnitude());
        e.relax(f.tr_ms - s.te_ms, p);
        e.spoil();
    }
    out
}

pub fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Counts grid points with a plain double loop over integer multiples.
pub fn grid_count(t1: (f64, f64, f64), t2: (f64, f64, f64), keep: impl Fn(f64, f64) -> bool) -> usize {
    let mut n = 0;
    let mut i = 0;
    loop {
        let a = t1.0 + i as f64 * t1.1;
        if a > t1.2 + 1e-9 {
            break;
        }
        let mut j = 0;
        loop {
            let b = t2.0 + j as f64 * t2.1;
            if b > t2.2 + 1e-9 {
                break;
            }
            if keep(a, b) {
                n += 1;
            }
            j += 1;
        }
        i += 1;
    }
    n
}

/// Exhaustive cosine-similarity scan over raw (unnormalized) atoms; the
/// first strict maximum wins.
pub fn brute_force_match(atoms: &[Vec<f64>], signal: &[f64]) -> usize {
    let sn: f64 = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best = 0;
    let mut best_cos = f64::NEG_INFINITY;
    for (i, a) in atoms.iter().enumerate() {
        let mut ip = 0.0;
        let mut an = 0.0;
        for k in 0..a.len() {
            ip += a[k] * signal[k];
            an += a[k] * a[k];
        }
        let c = ip / (an.sqrt() * sn);
        if c > best_cos {
            best_cos = c;
            best = i;
        }
    }
    best
}

/// Batch loss recomputed from scratch: plain loops over layers, mean of
/// squared encoded errors over samples and both outputs.
pub fn reference_loss(net: &Mlp, inputs: &[Vec<f64>], targets: &[[f64; 2]]) -> f64 {
    let mut sum = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let mut a = x.clone();
        if net.input_normalization() == InputNormalization::UnitNorm {
            let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            a.iter_mut().for_each(|v| *v /= n);
        }
        for l in net.layers() {
            let mut next = vec![0.0; l.outputs];
            for o in 0..l.outputs {
                let mut z = l.biases[o];
                for i in 0..l.inputs {
                    z += l.weights[o * l.inputs + i] * a[i];
                }
                next[o] = match l.activation {
                    Activation::Tanh => z.tanh(),
                    Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
                    Activation::Linear => z,
                };
            }
            a = next;
        }
        sum += (a[0] - t[0]).powi(2) + (a[1] - t[1]).powi(2);
    }
    sum / (2 * inputs.len()) as f64
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences of [`reference_loss`], over every weight and bias.
pub fn gradient_check(net: &Mlp, inputs: &[Vec<f64>], targets: &[[f64; 2]], h: f64) -> f64 {
    let flat: Vec<f64> = inputs.concat();
    let (_, grads) = net.loss_and_gradients(&flat, targets).unwrap();
    let mut worst = 0.0f64;
    for li in 0..net.layers().len() {
        for which in 0..2 {
            let len = if which == 0 { net.layers()[li].weights.len() } else { net.layers()[li].biases.len() };
            for k in 0..len {
                let eval = |delta: f64| {
                    let mut layers = net.layers().to_vec();
                    let p = if which == 0 { &mut layers[li].weights[k] } else { &mut layers[li].biases[k] };
                    *p += delta;
                    let n = Mlp::new(layers, net.scaler(), net.input_normalization()).unwrap();
                    reference_loss(&n, inputs, targets)
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let analytic = if which == 0 { grads.weights[li][k] } else { grads.biases[li][k] };
                let scale = analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / scale);
            }
        }
    }
    worst
}
