//! Backpropagation against central finite differences.

use drone_core::{InputNormalization, Mlp, OutputScaler};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod oracles;
use oracles::{gradient_check, reference_loss};

fn random_problem(
    sizes: &[usize],
    samples: usize,
    norm: InputNormalization,
    seed: u64,
) -> (Mlp, Vec<Vec<f64>>, Vec<[f64; 2]>) {
    let net = Mlp::init(sizes, OutputScaler::default(), norm, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let mut layers = net.layers().to_vec();
    for l in &mut layers {
        l.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
    let net = Mlp::new(layers, net.scaler(), norm).unwrap();
    let inputs = (0..samples).map(|_| (0..sizes[0]).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
    let targets = (0..samples).map(|_| [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)]).collect();
    (net, inputs, targets)
}

#[test]
fn toy_net_gradients_match_finite_differences() {
    for seed in 0..5 {
        let (net, x, t) = random_problem(&[3, 4, 4, 2], 3, InputNormalization::None, seed);
        let worst = gradient_check(&net, &x, &t, 1e-5);
        assert!(worst < 1e-5, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn gradients_include_input_normalization_path() {
    let (net, x, t) = random_problem(&[5, 6, 2], 4, InputNormalization::UnitNorm, 9);
    assert!(gradient_check(&net, &x, &t, 1e-5) < 1e-4);
}

#[test]
fn batch_loss_matches_reference() {
    let (net, x, t) = random_problem(&[6, 7, 3, 2], 5, InputNormalization::None, 2);
    let (loss, _) = net.loss_and_gradients(&x.concat(), &t).unwrap();
    assert!((loss - reference_loss(&net, &x, &t)).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_topologies_pass_gradient_check(
        input in 1usize..6,
        hidden in proptest::collection::vec(1usize..6, 1..3),
        samples in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut sizes = vec![input];
        sizes.extend(hidden);
        sizes.push(2);
        let (net, x, t) = random_problem(&sizes, samples, InputNormalization::None, seed);
        prop_assert!(gradient_check(&net, &x, &t, 1e-5) < 1e-4);
    }

    #[test]
    fn decoded_outputs_stay_in_scaler_range(seed in any::<u64>(), gain in 0.0f64..100.0) {
        let net = Mlp::init(&[4, 5, 2], OutputScaler::default(), InputNormalization::None, seed).unwrap();
        let p = net.forward(&[gain, -gain, 0.5 * gain, 1.0]).unwrap();
        prop_assert!((0.0..=5000.0).contains(&p.t1_ms) && (0.0..=2000.0).contains(&p.t2_ms));
    }
}
