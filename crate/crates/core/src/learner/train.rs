//! Minibatch training with a plateau stop, and held-out evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    adam_update, architecture, example_for, init_params, loss_and_gradients, raw_output,
    sample_loss, softmax, AdamState, Example, HeadKind, LearnerError, Model, Target,
};
use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop once the monitored loss has improved by less than
    /// `plateau_tolerance` (relative) over this many epochs.
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 60,
            plateau_window: 5,
            plateau_tolerance: 1e-3,
            hidden: vec![256, 128],
            seed: 0,
        }
    }
}

/// Held-out metrics. `accuracy` is per-angle for the collision-free head and
/// top-1 for the best-angle head; `rmse` (radians) is for regression heads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub held_out: Option<Evaluation>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochRecord>,
}

fn examples(
    dataset: &Dataset,
    head: HeadKind,
    model_stats: &crate::dataset::DatasetStats,
) -> Result<Vec<Example>, LearnerError> {
    dataset
        .samples
        .iter()
        .map(|s| example_for(head, s, model_stats, &dataset.trajectory))
        .collect()
}

/// Train a fresh network. The plateau is judged on the held-out loss when a
/// held-out set is given, otherwise on the training loss.
pub fn train(
    train_set: &Dataset,
    held_out: Option<&Dataset>,
    head: HeadKind,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome, LearnerError> {
    if train_set.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    let stats = train_set.stats.clone();
    let train_examples = examples(train_set, head, &stats)?;
    let test_examples = held_out.map(|d| examples(d, head, &stats)).transpose()?;

    let beams = train_set.sensor.beam_count;
    let angles = train_set.trajectory.angle_count;
    let sizes = architecture(head, beams, &config.hidden, angles);
    let mut model = Model {
        head,
        params: init_params(&sizes, config.seed),
        stats,
        angle_count: angles,
        angle_range: train_set.trajectory.angle_range,
    };
    let mut adam = AdamState::new(&model.params);
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    order_rng.set_stream(2);
    let mut order: Vec<usize> = (0..train_examples.len()).collect();
    let batch_size = config.batch_size.max(1);
    let mut history = Vec::new();
    let mut monitored = Vec::new();
    let mut batch = Vec::with_capacity(batch_size);

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_examples[i].clone()));
            let (loss, grads) = loss_and_gradients(&model.params, &batch, head)?;
            adam_update(&mut adam, &mut model.params, &grads, config.learning_rate);
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / train_examples.len() as f64;
        let eval = test_examples
            .as_deref()
            .map(|ex| evaluate_examples(&model, ex))
            .transpose()?;
        let record = EpochRecord {
            epoch,
            train_loss,
            held_out: eval,
        };
        on_epoch(&record);
        monitored.push(eval.map_or(train_loss, |e| e.loss));
        history.push(record);
        if plateaued(&monitored, config.plateau_window, config.plateau_tolerance) {
            break;
        }
    }
    Ok(TrainOutcome { model, history })
}

/// True when the best loss of the last `window` epochs improves on the best
/// loss before them by less than `tolerance`, relative.
pub(crate) fn plateaued(losses: &[f64], window: usize, tolerance: f64) -> bool {
    if window == 0 || losses.len() <= window {
        return false;
    }
    let (before, recent) = losses.split_at(losses.len() - window);
    let prev = before.iter().copied().fold(f64::INFINITY, f64::min);
    let best = recent.iter().copied().fold(f64::INFINITY, f64::min);
    (prev - best) < tolerance * prev.abs()
}

pub fn evaluate(model: &Model, dataset: &Dataset) -> Result<Evaluation, LearnerError> {
    if dataset.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    evaluate_examples(model, &examples(dataset, model.head, &model.stats)?)
}

fn evaluate_examples(model: &Model, examples: &[Example]) -> Result<Evaluation, LearnerError> {
    let head = model.head;
    // (loss, correct, graded, squared error) per example
    let per: Vec<(f64, usize, usize, f64)> = examples
        .par_iter()
        .map(|ex| {
            let out = raw_output(&model.params, &ex.features)?;
            let mut scratch = vec![0.0; out.len()];
            let loss = sample_loss(head, &out, &ex.target, &mut scratch)?;
            Ok(match &ex.target {
                Target::Angle(t) => (loss, 0, 0, (out[0] - t).powi(2)),
                Target::Class(c) => {
                    let mut p = out.clone();
                    softmax(&mut p);
                    let best = argmax(&p);
                    (loss, usize::from(best == *c), 1, 0.0)
                }
                Target::Binary(labels) => {
                    // positive wins exactly when its logit is the larger
                    let correct = out
                        .chunks_exact(2)
                        .zip(labels)
                        .filter(|(pair, &clear)| (pair[0] >= pair[1]) == clear)
                        .count();
                    (loss / labels.len() as f64, correct, labels.len(), 0.0)
                }
            })
        })
        .collect::<Result<_, LearnerError>>()?;
    let n = per.len() as f64;
    let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
    let correct: usize = per.iter().map(|p| p.1).sum();
    let graded: usize = per.iter().map(|p| p.2).sum();
    let sq: f64 = per.iter().map(|p| p.3).sum();
    Ok(Evaluation {
        loss,
        accuracy: (graded > 0).then(|| correct as f64 / graded as f64),
        rmse: head.is_regression().then(|| (sq / n).sqrt()),
    })
}

/// Index of the largest value, first one on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_dataset, Dataset};
    use crate::geometry::{SensorConfig, WorldSpec};
    use crate::trajectory::TrajectoryConfig;

    fn small_dataset(count: usize, seed: u64) -> Dataset {
        build_dataset(
            &WorldSpec::default(),
            &SensorConfig::default(),
            &TrajectoryConfig::default(),
            count,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn plateau_rule() {
        assert!(!plateaued(&[1.0, 0.9, 0.8], 5, 1e-3));
        assert!(!plateaued(&[1.0, 0.9, 0.8, 0.7, 0.6, 0.5], 5, 1e-3));
        assert!(plateaued(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 5, 1e-3));
        assert!(plateaued(&[1.0, 1.2, 1.1, 1.0005, 1.3, 1.0], 5, 1e-3));
        assert!(!plateaued(&[1.0, 1.2, 1.1, 0.998, 1.3, 1.0], 5, 1e-3));
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[0.1, 0.5, 0.5, 0.2]), 1);
    }

    #[test]
    fn memorises_a_single_sample() {
        // normalization statistics from a larger set keep the inputs non-degenerate
        let full = small_dataset(20, 11);
        let data = Dataset {
            samples: vec![full.samples[0].clone()],
            ..full
        };
        let config = TrainConfig {
            max_epochs: 400,
            plateau_window: 0,
            hidden: vec![32, 16],
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        for head in HeadKind::ALL {
            let out = train(&data, None, head, &config, |_| {}).unwrap();
            let last = out.history.last().unwrap().train_loss;
            assert!(last < 0.01, "{head}: loss {last}");
            assert_eq!(out.history.len(), 400);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = small_dataset(40, 3);
        let config = TrainConfig {
            max_epochs: 3,
            hidden: vec![16],
            ..TrainConfig::default()
        };
        let a = train(&data, Some(&data), HeadKind::CollisionFree, &config, |_| {}).unwrap();
        let b = train(&data, Some(&data), HeadKind::CollisionFree, &config, |_| {}).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
        let eval = a.history[2].held_out.unwrap();
        assert!((0.0..=1.0).contains(&eval.accuracy.unwrap()));
        assert_eq!(eval.rmse, None);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let data = small_dataset(2, 1);
        let empty = Dataset {
            samples: Vec::new(),
            ..data
        };
        assert!(matches!(
            train(
                &empty,
                None,
                HeadKind::BestAngle,
                &TrainConfig::default(),
                |_| {}
            ),
            Err(LearnerError::EmptyDataset)
        ));
    }
}
