//! Fully connected network over a normalized depth scan with four
//! interchangeable output heads, trained by backpropagation and Adam.
//!
//! Hidden layers are rectified; the output layer is always linear. The
//! classification heads turn their logits into probabilities with a softmax
//! (over all angles for [`HeadKind::BestAngle`], over each positive/negative
//! pair for [`HeadKind::CollisionFree`]).

mod adam;
mod model_file;
mod train;

pub use adam::{adam_update, AdamState};
pub use model_file::{load_model, save_model};
pub use train::{evaluate, train, EpochRecord, Evaluation, TrainConfig, TrainOutcome};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{normalize_scan, DatasetError, DatasetStats, Sample};
use crate::geometry::DepthScan;
use crate::trajectory::TrajectoryConfig;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model head is {found}, operation needs {expected}")]
    HeadMismatch {
        expected: &'static str,
        found: HeadKind,
    },
    #[error("goal-informed head needs a goal angle")]
    MissingGoal,
    #[error("unknown head `{0}`")]
    UnknownHead(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadKind {
    /// One linear output: the departure angle with the largest clear distance.
    RegressAngle,
    /// As `RegressAngle`, with the goal angle appended to the input.
    RegressAngleGoal,
    /// One logit per angle, softmax over all of them.
    BestAngle,
    /// A (positive, negative) logit pair per angle.
    CollisionFree,
}

impl HeadKind {
    pub const ALL: [HeadKind; 4] = [
        HeadKind::RegressAngle,
        HeadKind::RegressAngleGoal,
        HeadKind::BestAngle,
        HeadKind::CollisionFree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::RegressAngle => "regress-angle",
            HeadKind::RegressAngleGoal => "regress-angle-goal",
            HeadKind::BestAngle => "best-angle",
            HeadKind::CollisionFree => "collision-free",
        }
    }

    pub fn input_size(self, beam_count: usize) -> usize {
        match self {
            HeadKind::RegressAngleGoal => beam_count + 1,
            _ => beam_count,
        }
    }

    pub fn output_size(self, angle_count: usize) -> usize {
        match self {
            HeadKind::RegressAngle | HeadKind::RegressAngleGoal => 1,
            HeadKind::BestAngle => angle_count,
            HeadKind::CollisionFree => 2 * angle_count,
        }
    }

    pub fn is_regression(self) -> bool {
        matches!(self, HeadKind::RegressAngle | HeadKind::RegressAngleGoal)
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeadKind {
    type Err = LearnerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HeadKind::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| LearnerError::UnknownHead(s.to_string()))
    }
}

/// Dense layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// Network parameters; the same shape doubles as a gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
}

pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.sizes())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_size()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.buffers().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Weight and bias buffers in a fixed order.
    pub fn buffers(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.biases])
    }

    pub fn buffers_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.biases])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.buffers().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_params());
        let mut it = values.iter();
        for buf in self.buffers_mut() {
            for v in buf.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
    }
}

/// Scaled-uniform initialisation: weights from `U(-b, b)` with
/// `b = sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_params(sizes: &[usize], seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(sizes);
    for layer in &mut params.layers {
        let bound = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.gen_range(-bound..bound);
        }
    }
    params
}

/// Layer sizes for a head on top of the given hidden widths.
pub fn architecture(
    head: HeadKind,
    beam_count: usize,
    hidden: &[usize],
    angle_count: usize,
) -> Vec<usize> {
    let mut sizes = vec![head.input_size(beam_count)];
    sizes.extend_from_slice(hidden);
    sizes.push(head.output_size(angle_count));
    sizes
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadOutput {
    /// Regressed departure angle in radians.
    Angle(f64),
    /// Softmax over angles.
    AngleProbabilities(Vec<f64>),
    /// Probability that each angle is collision free.
    CollisionFree(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Angle(f64),
    Class(usize),
    Binary(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub target: Target,
}

/// Normalized scan features, plus the scaled goal angle for goal heads.
pub fn features_for(
    head: HeadKind,
    scan: &DepthScan,
    stats: &DatasetStats,
    goal_angle: Option<f64>,
    angle_range: f64,
) -> Result<Vec<f64>, LearnerError> {
    let mut features = normalize_scan(scan, stats)?;
    if head == HeadKind::RegressAngleGoal {
        let goal = goal_angle.ok_or(LearnerError::MissingGoal)?;
        features.push(goal / angle_range);
    }
    Ok(features)
}

/// Training target for one sample.
///
/// The goal-informed regressor learns the clear angle nearest the goal
/// (falling back to the longest-distance angle when nothing is clear);
/// the goal-agnostic one learns the longest-distance angle.
pub fn target_for(
    head: HeadKind,
    sample: &Sample,
    config: &TrajectoryConfig,
) -> Result<Target, LearnerError> {
    let labels = &sample.labels;
    Ok(match head {
        HeadKind::RegressAngle => Target::Angle(config.angle(labels.best_index())),
        HeadKind::RegressAngleGoal => {
            let goal = sample.goal_angle.ok_or(LearnerError::MissingGoal)?;
            let best = labels
                .binary()
                .iter()
                .enumerate()
                .filter(|(_, &clear)| clear)
                .map(|(i, _)| i)
                .min_by(|&a, &b| {
                    (config.angle(a) - goal)
                        .abs()
                        .total_cmp(&(config.angle(b) - goal).abs())
                })
                .unwrap_or_else(|| labels.best_index());
            Target::Angle(config.angle(best))
        }
        HeadKind::BestAngle => Target::Class(labels.best_index()),
        HeadKind::CollisionFree => Target::Binary(labels.binary()),
    })
}

pub fn example_for(
    head: HeadKind,
    sample: &Sample,
    stats: &DatasetStats,
    config: &TrajectoryConfig,
) -> Result<Example, LearnerError> {
    Ok(Example {
        features: features_for(
            head,
            &sample.scan,
            stats,
            sample.goal_angle,
            config.angle_range,
        )?,
        target: target_for(head, sample, config)?,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Activations of every layer for a row-major batch; index 0 is the input.
fn forward_batch(params: &ModelParams, input: &[f64], batch: usize) -> Vec<Vec<f64>> {
    let last = params.layers.len() - 1;
    let mut acts = Vec::with_capacity(params.layers.len() + 1);
    acts.push(input.to_vec());
    for (l, layer) in params.layers.iter().enumerate() {
        let prev = &acts[l];
        let mut out = vec![0.0; batch * layer.outputs];
        for s in 0..batch {
            let x = &prev[s * layer.inputs..(s + 1) * layer.inputs];
            let z = &mut out[s * layer.outputs..(s + 1) * layer.outputs];
            for (o, zo) in z.iter_mut().enumerate() {
                let v = layer.biases[o] + dot(layer.row(o), x);
                *zo = if l < last { v.max(0.0) } else { v };
            }
        }
        acts.push(out);
    }
    acts
}

/// Raw (linear) output layer values for one feature vector.
pub fn raw_output(params: &ModelParams, features: &[f64]) -> Result<Vec<f64>, LearnerError> {
    if features.len() != params.input_size() {
        return Err(LearnerError::ShapeMismatch {
            expected: params.input_size(),
            found: features.len(),
        });
    }
    Ok(forward_batch(params, features, 1).pop().unwrap_or_default())
}

/// Softmax in place, stabilised by subtracting the maximum.
pub fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
}

/// `-log softmax(logits)[target]`, with `logits` overwritten by the softmax.
fn softmax_cross_entropy(logits: &mut [f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let loss = max + sum.ln() - logits[target];
    softmax(logits);
    loss
}

pub fn forward(
    params: &ModelParams,
    features: &[f64],
    head: HeadKind,
) -> Result<HeadOutput, LearnerError> {
    let mut out = raw_output(params, features)?;
    Ok(match head {
        HeadKind::RegressAngle | HeadKind::RegressAngleGoal => {
            expect_len(1, out.len())?;
            HeadOutput::Angle(out[0])
        }
        HeadKind::BestAngle => {
            softmax(&mut out);
            HeadOutput::AngleProbabilities(out)
        }
        HeadKind::CollisionFree => {
            if out.len() % 2 != 0 {
                return Err(LearnerError::ShapeMismatch {
                    expected: out.len() + 1,
                    found: out.len(),
                });
            }
            HeadOutput::CollisionFree(
                out.chunks_exact_mut(2)
                    .map(|pair| {
                        softmax(pair);
                        pair[0]
                    })
                    .collect(),
            )
        }
    })
}

fn expect_len(expected: usize, found: usize) -> Result<(), LearnerError> {
    if expected == found {
        Ok(())
    } else {
        Err(LearnerError::ShapeMismatch { expected, found })
    }
}

/// Mean loss over the batch and its exact gradient.
///
/// Regression: `0.5 (y - t)^2`. Best angle: softmax cross-entropy over all
/// logits. Collision free: softmax cross-entropy per (positive, negative)
/// pair, averaged over angles.
pub fn loss_and_gradients(
    params: &ModelParams,
    batch: &[Example],
    head: HeadKind,
) -> Result<(f64, Gradients), LearnerError> {
    let b = batch.len();
    if b == 0 {
        return Err(LearnerError::EmptyBatch);
    }
    let n_in = params.input_size();
    let n_out = params.output_size();
    let mut input = Vec::with_capacity(b * n_in);
    for ex in batch {
        expect_len(n_in, ex.features.len())?;
        input.extend_from_slice(&ex.features);
    }
    let acts = forward_batch(params, &input, b);
    let outputs = acts.last().unwrap();

    let mut delta = vec![0.0; b * n_out];
    let mut total = 0.0;
    for (s, ex) in batch.iter().enumerate() {
        let out = &outputs[s * n_out..(s + 1) * n_out];
        let d = &mut delta[s * n_out..(s + 1) * n_out];
        total += sample_loss(head, out, &ex.target, d)?;
    }
    let scale = match head {
        HeadKind::CollisionFree => 1.0 / (b * n_out / 2) as f64,
        _ => 1.0 / b as f64,
    };
    for d in &mut delta {
        *d *= scale;
    }

    let mut grads = params.zeros_like();
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let x = &acts[l];
        let g = &mut grads.layers[l];
        for s in 0..b {
            let xs = &x[s * layer.inputs..(s + 1) * layer.inputs];
            let ds = &delta[s * layer.outputs..(s + 1) * layer.outputs];
            for (o, &d) in ds.iter().enumerate() {
                if d != 0.0 {
                    axpy(
                        &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs],
                        d,
                        xs,
                    );
                    g.biases[o] += d;
                }
            }
        }
        if l > 0 {
            let mut below = vec![0.0; b * layer.inputs];
            for s in 0..b {
                let ds = &delta[s * layer.outputs..(s + 1) * layer.outputs];
                let bs = &mut below[s * layer.inputs..(s + 1) * layer.inputs];
                for (o, &d) in ds.iter().enumerate() {
                    if d != 0.0 {
                        axpy(bs, d, layer.row(o));
                    }
                }
                // ReLU: pass gradient only where the activation was positive.
                for (bv, &a) in bs
                    .iter_mut()
                    .zip(&x[s * layer.inputs..(s + 1) * layer.inputs])
                {
                    if a <= 0.0 {
                        *bv = 0.0;
                    }
                }
            }
            delta = below;
        }
    }
    let loss = match head {
        HeadKind::CollisionFree => total / (b * n_out / 2) as f64,
        _ => total / b as f64,
    };
    Ok((loss, grads))
}

/// Unscaled loss of one sample; writes d(loss)/d(output) into `d`.
fn sample_loss(
    head: HeadKind,
    out: &[f64],
    target: &Target,
    d: &mut [f64],
) -> Result<f64, LearnerError> {
    match (head, target) {
        (HeadKind::RegressAngle | HeadKind::RegressAngleGoal, Target::Angle(t)) => {
            let err = out[0] - t;
            d[0] = err;
            Ok(0.5 * err * err)
        }
        (HeadKind::BestAngle, Target::Class(c)) => {
            if *c >= out.len() {
                return Err(LearnerError::ShapeMismatch {
                    expected: out.len(),
                    found: c + 1,
                });
            }
            d.copy_from_slice(out);
            let loss = softmax_cross_entropy(d, *c);
            d[*c] -= 1.0;
            Ok(loss)
        }
        (HeadKind::CollisionFree, Target::Binary(labels)) => {
            expect_len(out.len() / 2, labels.len())?;
            d.copy_from_slice(out);
            let mut loss = 0.0;
            for (pair, &clear) in d.chunks_exact_mut(2).zip(labels) {
                let class = usize::from(!clear);
                loss += softmax_cross_entropy(pair, class);
                pair[class] -= 1.0;
            }
            Ok(loss)
        }
        _ => Err(LearnerError::HeadMismatch {
            expected: "a target matching the head",
            found: head,
        }),
    }
}

/// A trained network with everything inference needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub head: HeadKind,
    pub params: ModelParams,
    pub stats: DatasetStats,
    pub angle_count: usize,
    pub angle_range: f64,
}

impl Model {
    pub fn features(
        &self,
        scan: &DepthScan,
        goal_angle: Option<f64>,
    ) -> Result<Vec<f64>, LearnerError> {
        features_for(self.head, scan, &self.stats, goal_angle, self.angle_range)
    }

    pub fn output(
        &self,
        scan: &DepthScan,
        goal_angle: Option<f64>,
    ) -> Result<HeadOutput, LearnerError> {
        forward(&self.params, &self.features(scan, goal_angle)?, self.head)
    }
}

/// Per-angle confidences in `[0, 1]`: the positive-class probability for the
/// collision-free head, the softmax for the best-angle head.
pub fn predict_confidences(model: &Model, scan: &DepthScan) -> Result<Vec<f64>, LearnerError> {
    match model.output(scan, None)? {
        HeadOutput::CollisionFree(p) | HeadOutput::AngleProbabilities(p) => Ok(p),
        HeadOutput::Angle(_) => Err(LearnerError::HeadMismatch {
            expected: "a classification head",
            found: model.head,
        }),
    }
}

/// Regressed departure angle (unclamped).
pub fn predict_angle(
    model: &Model,
    scan: &DepthScan,
    goal_angle: Option<f64>,
) -> Result<f64, LearnerError> {
    match model.output(scan, goal_angle)? {
        HeadOutput::Angle(a) => Ok(a),
        _ => Err(LearnerError::HeadMismatch {
            expected: "a regression head",
            found: model.head,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn examples(
        head: HeadKind,
        n_in: usize,
        angles: usize,
        count: usize,
        seed: u64,
    ) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| Example {
                features: (0..n_in).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                target: match head {
                    HeadKind::RegressAngle | HeadKind::RegressAngleGoal => {
                        Target::Angle(rng.gen_range(-0.4..0.4))
                    }
                    HeadKind::BestAngle => Target::Class(rng.gen_range(0..angles)),
                    HeadKind::CollisionFree => {
                        Target::Binary((0..angles).map(|_| rng.gen()).collect())
                    }
                },
            })
            .collect()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(&[140, 256, 128, 102], 3);
        assert_eq!(a, init_params(&[140, 256, 128, 102], 3));
        assert_ne!(a, init_params(&[140, 256, 128, 102], 4));
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let w = &init_params(&[140, 256], 9).layers[0].weights;
        let bound = (6.0f64 / 396.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        // U(-b, b) has standard deviation b / sqrt(3).
        let se = bound / 3f64.sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn zero_hidden_layers_is_affine() {
        let mut p = init_params(&[3, 2], 1);
        p.layers[0].biases = vec![0.5, -1.0];
        assert_eq!(p.layers.len(), 1);
        let x = [1.0, -2.0, 0.5];
        let out = raw_output(&p, &x).unwrap();
        for o in 0..2 {
            let expected: f64 = p.layers[0].biases[o]
                + (0..3)
                    .map(|i| p.layers[0].weights[o * 3 + i] * x[i])
                    .sum::<f64>();
            assert!((out[o] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_give_uniform_outputs() {
        let p = ModelParams::zeros(&[140, 16, 102]);
        let x = vec![0.3; 140];
        match forward(&p, &x, HeadKind::CollisionFree).unwrap() {
            HeadOutput::CollisionFree(v) => {
                assert_eq!(v.len(), 51);
                assert!(v.iter().all(|&c| c == 0.5));
            }
            other => panic!("{other:?}"),
        }
        let p = ModelParams::zeros(&[140, 16, 51]);
        match forward(&p, &x, HeadKind::BestAngle).unwrap() {
            HeadOutput::AngleProbabilities(v) => {
                assert!(v.iter().all(|&c| (c - 1.0 / 51.0).abs() < 1e-15));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probabilities_are_normalized() {
        let p = init_params(&[10, 8, 102], 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-50.0..50.0)).collect();
            if let HeadOutput::CollisionFree(v) = forward(&p, &x, HeadKind::CollisionFree).unwrap()
            {
                assert!(v.iter().all(|&c| (0.0..=1.0).contains(&c)));
            }
            let q = init_params(&[10, 8, 51], 6);
            if let HeadOutput::AngleProbabilities(v) = forward(&q, &x, HeadKind::BestAngle).unwrap()
            {
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let p = ModelParams::zeros(&[4, 2]);
        assert!(matches!(
            forward(&p, &[1.0; 3], HeadKind::BestAngle),
            Err(LearnerError::ShapeMismatch {
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn analytic_losses_at_zero_weights() {
        let p = ModelParams::zeros(&[6, 5, 102]);
        let batch = examples(HeadKind::CollisionFree, 6, 51, 7, 2);
        let (loss, _) = loss_and_gradients(&p, &batch, HeadKind::CollisionFree).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        let p = ModelParams::zeros(&[6, 5, 51]);
        let batch = examples(HeadKind::BestAngle, 6, 51, 7, 2);
        let (loss, _) = loss_and_gradients(&p, &batch, HeadKind::BestAngle).unwrap();
        assert!((loss - 51f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let p = ModelParams::zeros(&[6, 1]);
        assert!(matches!(
            loss_and_gradients(&p, &[], HeadKind::RegressAngle),
            Err(LearnerError::EmptyBatch)
        ));
    }

    #[test]
    fn stable_cross_entropy_with_huge_logits() {
        let mut logits = vec![1000.0, -1000.0, 999.0];
        let loss = softmax_cross_entropy(&mut logits, 2);
        assert!((loss - (1.0 + (-1.0f64).exp()).ln() - 1.0).abs() < 1e-12);
        assert!(logits.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn head_names_round_trip() {
        for h in HeadKind::ALL {
            assert_eq!(h.name().parse::<HeadKind>().unwrap(), h);
        }
        assert!("alexnet".parse::<HeadKind>().is_err());
    }
}
