//! Softmax readout trained with AdaGrad on mini-batches.

use crate::error::{QercError, Result};
use crate::linalg::real_gemm;
use crate::mlayer::FeatureMatrix;
use crate::rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// Lower bound applied to probabilities inside the logarithm.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
const EVAL_CHUNK: usize = 1024;

/// `y = softmax(W u + b)` with `W` stored row-major `classes x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    num_classes: usize,
    dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ClassifierParams {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Self {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            bias: vec![0.0; num_classes],
        }
    }

    /// Xavier-uniform weights on `[-sqrt(6/(dim+classes)), +...]`, zero bias.
    pub fn xavier(num_classes: usize, dim: usize, seed: u64) -> Self {
        let limit = (6.0 / (num_classes + dim) as f64).sqrt();
        let mut rng = rng::seeded(seed);
        let weights = (0..num_classes * dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            num_classes,
            dim,
            weights,
            bias: vec![0.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim {
            return Err(QercError::dims(self.dim, u.len()));
        }
        let mut y: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                self.bias[c]
                    + self.weights[c * self.dim..(c + 1) * self.dim]
                        .iter()
                        .zip(u)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect();
        softmax_in_place(&mut y);
        Ok(y)
    }

    /// Row-major `rows x classes` class probabilities.
    fn forward_batch(&self, u: &[f64], rows: usize) -> Vec<f64> {
        let (c, d) = (self.num_classes, self.dim);
        let mut y = Vec::with_capacity(rows * c);
        for _ in 0..rows {
            y.extend_from_slice(&self.bias);
        }
        real_gemm(rows, d, c, u, (d, 1), &self.weights, (1, d), 1.0, &mut y);
        y.chunks_exact_mut(c).for_each(softmax_in_place);
        y
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > y[best] { i } else { best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy `-(1/B) sum_a log y_{t_a}` over the batch and its gradient.
pub fn loss_and_gradient(
    params: &ClassifierParams,
    batch: &FeatureMatrix,
    labels: &[usize],
) -> Result<Gradient> {
    if batch.rows() == 0 {
        return Err(QercError::Empty("batch"));
    }
    if batch.cols() != params.dim {
        return Err(QercError::dims(params.dim, batch.cols()));
    }
    if labels.len() != batch.rows() {
        return Err(QercError::dims(batch.rows(), labels.len()));
    }
    check_labels(labels, params.num_classes)?;
    Ok(batch_gradient(params, batch.as_slice(), labels))
}

fn check_labels(labels: &[usize], num_classes: usize) -> Result<()> {
    match labels.iter().find(|&&l| l >= num_classes) {
        Some(l) => Err(QercError::InvalidParameter(format!(
            "label {l} out of range for {num_classes} classes"
        ))),
        None => Ok(()),
    }
}

fn batch_gradient(params: &ClassifierParams, u: &[f64], labels: &[usize]) -> Gradient {
    let (c, d, rows) = (params.num_classes, params.dim, labels.len());
    let mut g = params.forward_batch(u, rows);
    let inv = 1.0 / rows as f64;
    let mut loss = 0.0;
    for (row, &t) in g.chunks_exact_mut(c).zip(labels) {
        loss -= row[t].max(PROBABILITY_FLOOR).ln();
        row[t] -= 1.0;
        row.iter_mut().for_each(|v| *v *= inv);
    }
    let mut weights = vec![0.0; c * d];
    real_gemm(c, rows, d, &g, (1, c), u, (d, 1), 0.0, &mut weights);
    let mut bias = vec![0.0; c];
    for row in g.chunks_exact(c) {
        for (b, v) in bias.iter_mut().zip(row) {
            *b += v;
        }
    }
    Gradient {
        loss: loss * inv,
        weights,
        bias,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl AdagradState {
    pub fn new(params: &ClassifierParams) -> Self {
        Self {
            weights: vec![0.0; params.weights.len()],
            bias: vec![0.0; params.bias.len()],
        }
    }
}

/// `acc += g^2; p -= eta g / (sqrt(acc) + eps)`. Coordinates that have never
/// seen a nonzero gradient stay put, also when `eps = 0`.
pub fn adagrad_step(
    params: &mut ClassifierParams,
    grad: &Gradient,
    state: &mut AdagradState,
    learning_rate: f64,
    epsilon: f64,
) -> Result<()> {
    if grad.weights.len() != params.weights.len() || state.weights.len() != params.weights.len() {
        return Err(QercError::dims(params.weights.len(), grad.weights.len()));
    }
    if grad.bias.len() != params.bias.len() || state.bias.len() != params.bias.len() {
        return Err(QercError::dims(params.bias.len(), grad.bias.len()));
    }
    let step = |p: &mut [f64], g: &[f64], acc: &mut [f64]| {
        for ((p, g), a) in p.iter_mut().zip(g).zip(acc.iter_mut()) {
            *a += g * g;
            if *a > 0.0 {
                *p -= learning_rate * g / (a.sqrt() + epsilon);
            }
        }
    };
    step(&mut params.weights, &grad.weights, &mut state.weights);
    step(&mut params.bias, &grad.bias, &mut state.bias);
    if !params.is_finite() {
        return Err(QercError::NonFinite("classifier parameters"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Inclusive 1-based epoch range for the summary statistics; `None`
    /// means the last eleven epochs (`epochs - 10 ..= epochs`).
    pub window: Option<(usize, usize)>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epsilon: 1e-8,
            batch_size: 100,
            epochs: 50,
            seed: 0,
            window: None,
        }
    }
}

impl TrainConfig {
    pub fn stats_window(&self) -> (usize, usize) {
        self.window
            .unwrap_or((self.epochs.saturating_sub(10).max(1), self.epochs))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(QercError::InvalidParameter(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(QercError::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.batch_size == 0 {
            return Err(QercError::InvalidParameter(
                "batch size must be >= 1".into(),
            ));
        }
        let (first, last) = self.stats_window();
        if self.epochs > 0 && (first == 0 || first > last || last > self.epochs) {
            return Err(QercError::InvalidParameter(format!(
                "stats window {first}..={last} not within 1..={}",
                self.epochs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ClassifierParams,
    pub history: Vec<EpochRecord>,
}

/// Labeled feature rows.
#[derive(Debug, Clone, Copy)]
pub struct LabeledFeatures<'a> {
    pub features: &'a FeatureMatrix,
    pub labels: &'a [usize],
}

impl<'a> LabeledFeatures<'a> {
    pub fn new(features: &'a FeatureMatrix, labels: &'a [usize]) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(QercError::dims(features.rows(), labels.len()));
        }
        Ok(Self { features, labels })
    }
}

/// Mini-batch AdaGrad over `epochs` passes, reshuffled every epoch.
pub fn train(
    train_set: LabeledFeatures<'_>,
    test_set: Option<LabeledFeatures<'_>>,
    num_classes: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let (x, y) = (train_set.features, train_set.labels);
    if x.rows() == 0 {
        return Err(QercError::Empty("training set"));
    }
    check_labels(y, num_classes)?;
    let d = x.cols();
    let mut params = ClassifierParams::xavier(
        num_classes,
        d,
        rng::derive_seed(config.seed, rng::tag("init")),
    );
    let mut state = AdagradState::new(&params);
    let mut shuffle_rng = rng::substream(config.seed, 1);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut batch = vec![0.0; config.batch_size * d];
    let mut batch_labels = Vec::with_capacity(config.batch_size);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for idx in order.chunks(config.batch_size) {
            batch_labels.clear();
            for (r, &i) in idx.iter().enumerate() {
                batch[r * d..(r + 1) * d].copy_from_slice(x.row(i));
                batch_labels.push(y[i]);
            }
            let g = batch_gradient(&params, &batch[..idx.len() * d], &batch_labels);
            loss_sum += g.loss * idx.len() as f64;
            adagrad_step(
                &mut params,
                &g,
                &mut state,
                config.learning_rate,
                config.epsilon,
            )?;
        }
        let train_acc = evaluate(&params, x, y)?;
        let test_acc = test_set
            .map(|t| evaluate(&params, t.features, t.labels))
            .transpose()?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / x.rows() as f64,
            train_acc,
            test_acc,
        });
    }
    Ok(TrainOutcome { params, history })
}

/// Fraction of rows whose argmax class equals the label.
pub fn evaluate(
    params: &ClassifierParams,
    features: &FeatureMatrix,
    labels: &[usize],
) -> Result<f64> {
    if features.rows() == 0 {
        return Err(QercError::Empty("evaluation set"));
    }
    if features.cols() != params.dim {
        return Err(QercError::dims(params.dim, features.cols()));
    }
    if labels.len() != features.rows() {
        return Err(QercError::dims(features.rows(), labels.len()));
    }
    let d = params.dim;
    let correct: usize = features
        .as_slice()
        .par_chunks(EVAL_CHUNK * d)
        .zip(labels.par_chunks(EVAL_CHUNK))
        .map(|(u, t)| {
            let y = params.forward_batch(u, t.len());
            y.chunks_exact(params.num_classes)
                .zip(t)
                .filter(|(row, &l)| argmax(row) == l)
                .count()
        })
        .sum();
    Ok(correct as f64 / features.rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of `values[first-1..=last-1]`.
pub fn epoch_stats(values: &[f64], window: (usize, usize)) -> Result<WindowStats> {
    let (first, last) = window;
    if first == 0 || first > last {
        return Err(QercError::Empty("stats window"));
    }
    if last > values.len() {
        return Err(QercError::InvalidParameter(format!(
            "stats window ends at epoch {last} but history has {} epochs",
            values.len()
        )));
    }
    let slice = &values[first - 1..last];
    let n = slice.len() as f64;
    let mean = slice.iter().sum::<f64>() / n;
    let var = slice.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(WindowStats {
        mean,
        std: var.sqrt(),
    })
}
