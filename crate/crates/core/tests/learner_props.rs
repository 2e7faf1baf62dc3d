use navsieve::learner::{
    architecture, forward, init_params, loss_and_gradients, Example, HeadKind, HeadOutput,
    ModelParams, Target,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BEAMS: usize = 9;
const ANGLES: usize = 7;

fn batch(head: HeadKind, rng: &mut ChaCha8Rng, size: usize) -> Vec<Example> {
    (0..size)
        .map(|_| {
            let n = head.input_size(BEAMS);
            let features = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let target = match head {
                HeadKind::RegressAngle | HeadKind::RegressAngleGoal => {
                    Target::Angle(rng.gen_range(-0.4..0.4))
                }
                HeadKind::BestAngle => Target::Class(rng.gen_range(0..ANGLES)),
                HeadKind::CollisionFree => {
                    Target::Binary((0..ANGLES).map(|_| rng.gen_bool(0.5)).collect())
                }
            };
            Example { features, target }
        })
        .collect()
}

/// Batch-mean loss computed from the public forward pass alone.
fn reference_loss(params: &ModelParams, batch: &[Example], head: HeadKind) -> f64 {
    let total: f64 = batch
        .iter()
        .map(
            |ex| match (forward(params, &ex.features, head).unwrap(), &ex.target) {
                (HeadOutput::Angle(y), Target::Angle(t)) => 0.5 * (y - t) * (y - t),
                (HeadOutput::AngleProbabilities(p), Target::Class(c)) => -p[*c].ln(),
                (HeadOutput::CollisionFree(p), Target::Binary(b)) => {
                    p.iter()
                        .zip(b)
                        .map(|(&q, &clear)| -(if clear { q } else { 1.0 - q }).ln())
                        .sum::<f64>()
                        / p.len() as f64
                }
                other => panic!("mismatched output {other:?}"),
            },
        )
        .sum();
    total / batch.len() as f64
}

#[test]
fn gradients_match_central_differences() {
    let step = 1e-5;
    for head in HeadKind::ALL {
        for case in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 * case + head as u64);
            let sizes = architecture(head, BEAMS, &[8, 6], ANGLES);
            let mut params = init_params(&sizes, case);
            // nonzero biases so every code path carries gradient
            let mut flat = params.to_flat();
            for v in &mut flat {
                *v += rng.gen_range(-0.1..0.1);
            }
            params.set_flat(&flat);
            let data = batch(head, &mut rng, 1 + case as usize % 4);
            let (loss, grads) = loss_and_gradients(&params, &data, head).unwrap();
            assert!((loss - reference_loss(&params, &data, head)).abs() < 1e-12);
            let analytic = grads.to_flat();
            for i in 0..flat.len() {
                let mut plus = flat.clone();
                plus[i] += step;
                let mut minus = flat.clone();
                minus[i] -= step;
                let mut p = params.clone();
                p.set_flat(&plus);
                let lp = reference_loss(&p, &data, head);
                p.set_flat(&minus);
                let lm = reference_loss(&p, &data, head);
                let numeric = (lp - lm) / (2.0 * step);
                let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
                assert!(
                    (analytic[i] - numeric).abs() / scale < 1e-4,
                    "{head} case {case} param {i}: {} vs {numeric}",
                    analytic[i]
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn classification_outputs_are_probabilities(seed in 0u64..10_000, scale in 0.1f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for head in [HeadKind::BestAngle, HeadKind::CollisionFree] {
            let params = init_params(&architecture(head, BEAMS, &[8], ANGLES), seed);
            let x: Vec<f64> = (0..BEAMS).map(|_| rng.gen_range(-scale..scale)).collect();
            match forward(&params, &x, head).unwrap() {
                HeadOutput::AngleProbabilities(p) => {
                    prop_assert_eq!(p.len(), ANGLES);
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    prop_assert!(p.iter().all(|q| (0.0..=1.0).contains(q)));
                }
                HeadOutput::CollisionFree(p) => {
                    prop_assert_eq!(p.len(), ANGLES);
                    prop_assert!(p.iter().all(|q| (0.0..=1.0).contains(q)));
                }
                HeadOutput::Angle(_) => prop_assert!(false),
            }
        }
    }

    #[test]
    fn init_is_seeded_and_bounded(seed in 0u64..10_000) {
        let sizes = [BEAMS, 8, 2 * ANGLES];
        let a = init_params(&sizes, seed);
        prop_assert_eq!(&a, &init_params(&sizes, seed));
        for layer in &a.layers {
            let bound = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            prop_assert!(layer.weights.iter().all(|w| w.abs() <= bound));
            prop_assert!(layer.biases.iter().all(|&b| b == 0.0));
        }
    }
}
