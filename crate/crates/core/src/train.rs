//! Mini-batch ADAM training on a fingerprint dictionary.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::adam::{Adam, AdamParams, Moments};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::net::{Gradients, InputNormalization, Mlp, OutputScaler, Workspace, HIDDEN_WIDTH};
use crate::noise::{NoiseModel, NoiseScale};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Clamped to the training-set size.
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Augmentation noise, redrawn for every sample in every epoch.
    pub noise: NoiseModel,
    pub seed: u64,
    pub input_normalization: InputNormalization,
    pub hidden: Vec<usize>,
    pub scaler: OutputScaler,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 1000,
            batch_size: 16,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            noise: NoiseModel::new(0.02, NoiseScale::AtomMax),
            seed: 0,
            input_normalization: InputNormalization::UnitNorm,
            hidden: vec![HIDDEN_WIDTH, HIDDEN_WIDTH],
            scaler: OutputScaler::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return bad("ADAM betas must lie in [0, 1)");
        }
        if !(self.adam_eps.is_finite() && self.adam_eps > 0.0) {
            return bad("adam_eps must be > 0");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be >= 1");
        }
        self.noise.validate()?;
        OutputScaler::new(self.scaler.t1_max_ms, self.scaler.t2_max_ms)?;
        Ok(())
    }

    /// SHA-256 over every field, in declaration order.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"drone-train-v1");
        h.update(self.learning_rate.to_le_bytes());
        h.update((self.epochs as u64).to_le_bytes());
        h.update((self.batch_size as u64).to_le_bytes());
        for v in [self.adam_beta1, self.adam_beta2, self.adam_eps, self.noise.sigma] {
            h.update(v.to_le_bytes());
        }
        h.update([self.noise.scale as u8]);
        h.update(self.seed.to_le_bytes());
        h.update(self.input_normalization.name().as_bytes());
        h.update((self.hidden.len() as u64).to_le_bytes());
        for w in &self.hidden {
            h.update((*w as u64).to_le_bytes());
        }
        h.update(self.scaler.t1_max_ms.to_le_bytes());
        h.update(self.scaler.t2_max_ms.to_le_bytes());
        h.finalize().into()
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Per-epoch training loss.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
}

/// Trains a fresh network. See [`train_observed`].
pub fn train(dict: &Dictionary, config: &TrainConfig) -> Result<(Mlp, TrainTrace)> {
    train_observed(dict, config, |_, _| {})
}

/// Trains a fresh network on every dictionary entry, calling `observe` with
/// `(epoch, loss)` after each epoch.
///
/// Each epoch reshuffles the entries, draws fresh augmentation noise for
/// every sample and takes one ADAM step per mini-batch. The recorded epoch
/// loss is the sample-weighted mean of the mini-batch losses seen during the
/// epoch, i.e. the loss on that epoch's noisy inputs.
///
/// Deterministic given `config.seed`: weight initialization uses stream 0
/// of a ChaCha8 generator and shuffling plus noise use stream 1.
pub fn train_observed<F>(dict: &Dictionary, config: &TrainConfig, mut observe: F) -> Result<(Mlp, TrainTrace)>
where
    F: FnMut(usize, f64),
{
    config.validate()?;
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let targets: Vec<[f64; 2]> = dict.params().iter().map(|p| config.scaler.encode(*p)).collect::<Result<_>>()?;

    let mut sizes = vec![dict.frames()];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(2);
    let mut net = Mlp::init(&sizes, config.scaler, config.input_normalization, config.seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let n = dict.len();
    let batch = config.batch_size.min(n);
    let mut adam = Adam::new(config.adam());
    let mut moments: Vec<(Moments, Moments)> =
        net.layers().iter().map(|l| (Moments::new(l.weights.len()), Moments::new(l.biases.len()))).collect();
    let mut grads = Gradients::zeros_like(&net);
    let mut ws = Workspace::new(&net);
    let mut order: Vec<usize> = (0..n).collect();
    let mut x = vec![0.0; dict.frames()];
    let mut trace = TrainTrace { losses: Vec::with_capacity(config.epochs) };

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sq = 0.0;
        for chunk in order.chunks(batch) {
            grads.clear();
            let weight = 1.0 / (2 * chunk.len()) as f64;
            for &i in chunk {
                x.copy_from_slice(dict.atom(i));
                config.noise.corrupt(&mut x, &mut rng);
                epoch_sq += net.accumulate_sample(&x, targets[i], weight, &mut ws, &mut grads)?;
            }
            adam.begin_step();
            for (li, layer) in net.layers_mut().iter_mut().enumerate() {
                let (mw, mb) = &mut moments[li];
                adam.update(mw, &mut layer.weights, &grads.weights[li]);
                adam.update(mb, &mut layer.biases, &grads.biases[li]);
            }
        }
        let loss = epoch_sq / (2 * n) as f64;
        let weights_finite = net.layers().iter().all(|l| l.weights.iter().all(|w| w.is_finite()));
        if !loss.is_finite() || !weights_finite {
            return Err(Error::Diverged { epoch, loss });
        }
        trace.losses.push(loss);
        observe(epoch, loss);
    }
    Ok((net, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epg::TissueParams;

    fn tiny_dict() -> Dictionary {
        let params = vec![
            TissueParams::new(500.0, 50.0),
            TissueParams::new(1500.0, 100.0),
            TissueParams::new(3000.0, 400.0),
            TissueParams::new(4000.0, 1200.0),
        ];
        let atoms = vec![
            0.9, 0.2, 0.1, //
            0.7, 0.4, 0.2, //
            0.4, 0.5, 0.4, //
            0.2, 0.6, 0.7,
        ];
        Dictionary::from_parts(params, atoms, 3, [0; 32], false).unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 30,
            batch_size: 2,
            hidden: vec![8, 8],
            learning_rate: 1e-2,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn trace_has_one_finite_loss_per_epoch_and_decreases() {
        let (_, trace) = train(&tiny_dict(), &small_config()).unwrap();
        assert_eq!(trace.losses.len(), 30);
        assert!(trace.losses.iter().all(|l| l.is_finite() && *l >= 0.0));
        assert!(trace.losses[29] < trace.losses[0]);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let a = train(&tiny_dict(), &small_config()).unwrap();
        let b = train(&tiny_dict(), &small_config()).unwrap();
        assert_eq!(a, b);
        let mut other = small_config();
        other.seed = 6;
        assert_ne!(a.0, train(&tiny_dict(), &other).unwrap().0);
    }

    #[test]
    fn oversized_batch_is_clamped() {
        let cfg = TrainConfig { batch_size: 1000, ..small_config() };
        assert!(train(&tiny_dict(), &cfg).is_ok());
    }

    #[test]
    fn rejects_bad_configs_and_targets() {
        let d = tiny_dict();
        for cfg in [
            TrainConfig { learning_rate: 0.0, ..small_config() },
            TrainConfig { epochs: 0, ..small_config() },
            TrainConfig { batch_size: 0, ..small_config() },
        ] {
            assert!(matches!(train(&d, &cfg), Err(Error::InvalidConfig(_))));
        }
        let cfg = TrainConfig { scaler: OutputScaler::new(1000.0, 2000.0).unwrap(), ..small_config() };
        assert!(matches!(train(&d, &cfg), Err(Error::TargetOutOfRange { .. })));
    }

    #[test]
    fn digest_tracks_every_field() {
        let a = small_config();
        assert_eq!(a.digest(), small_config().digest());
        let changed = [
            TrainConfig { epochs: 31, ..small_config() },
            TrainConfig { seed: 6, ..small_config() },
            TrainConfig { hidden: vec![8, 9], ..small_config() },
            TrainConfig { input_normalization: InputNormalization::None, ..small_config() },
            TrainConfig { noise: NoiseModel::new(0.02, NoiseScale::Absolute), ..small_config() },
        ];
        for c in changed {
            assert_ne!(a.digest(), c.digest());
        }
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = TrainConfig { learning_rate: f64::MAX / 2.0, ..small_config() };
        assert!(matches!(train(&tiny_dict(), &cfg), Err(Error::Diverged { .. })));
    }
}
