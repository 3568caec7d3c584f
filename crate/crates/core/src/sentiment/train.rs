//! Full-batch gradient descent on mean binary cross-entropy, plus a
//! central-difference gradient check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dim, dot, head_logit, pool_with, softmax, AttentionParams, EmbeddingSequence, HeadParams, SentimentLabel, SentimentModel};
use crate::error::{Error, Result};

pub type Sample = (EmbeddingSequence, SentimentLabel);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainInit {
    /// Uniform draws in [-0.1, 0.1] from the config seed.
    Seeded,
    From(AttentionParams, HeadParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub attention: AttentionParams,
    pub head: HeadParams,
    /// Loss before the first step and after every epoch.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w_att: Vec<f64>,
    pub w: Vec<f64>,
    pub b: f64,
}

impl Gradient {
    fn zeros(dim: usize) -> Self {
        Gradient {
            w_att: vec![0.0; dim],
            w: vec![0.0; dim],
            b: 0.0,
        }
    }
}

/// Per-sample loss `softplus(z) - y z`, which equals the cross-entropy of
/// `sigmoid(z)` against `y` without ever forming `log(0)`.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Loss of one sample and its gradient with respect to every parameter.
fn sample_gradient(seq: &EmbeddingSequence, label: SentimentLabel, attention: &AttentionParams, head: &HeadParams) -> (f64, Gradient) {
    let scores: Vec<f64> = seq.rows().map(|h| dot(&attention.w_att, h)).collect();
    let weights = softmax(&scores);
    let pooled = pool_with(seq, &weights);
    let z = head_logit(&pooled, head);
    let y = label.target();
    let loss = bce_from_logit(z, y);
    let dz = super::sigmoid(z) - y;

    // dz/dalpha_t = e_t (g_t - sum_s e_s g_s) where g_t = w . h_t
    let g: Vec<f64> = seq.rows().map(|h| dot(&head.w, h)).collect();
    let g_bar: f64 = weights.iter().zip(&g).map(|(e, g)| e * g).sum();
    let mut grad = Gradient::zeros(seq.dim());
    for ((h, &e), &g_t) in seq.rows().zip(&weights).zip(&g) {
        let coeff = dz * e * (g_t - g_bar);
        for (acc, v) in grad.w_att.iter_mut().zip(h) {
            *acc += coeff * v;
        }
    }
    for (acc, v) in grad.w.iter_mut().zip(&pooled) {
        *acc = dz * v;
    }
    grad.b = dz;
    (loss, grad)
}

/// Mean loss and gradient over a dataset, accumulated in input order.
pub fn loss_and_gradient(samples: &[Sample], attention: &AttentionParams, head: &HeadParams) -> Result<(f64, Gradient)> {
    let dim = attention.w_att.len();
    check_dim(dim, head.w.len())?;
    let mut total = 0.0;
    let mut grad = Gradient::zeros(dim);
    for (seq, label) in samples {
        check_dim(dim, seq.dim())?;
        let (loss, g) = sample_gradient(seq, *label, attention, head);
        total += loss;
        for (a, b) in grad.w_att.iter_mut().zip(&g.w_att) {
            *a += b;
        }
        for (a, b) in grad.w.iter_mut().zip(&g.w) {
            *a += b;
        }
        grad.b += g.b;
    }
    let n = samples.len() as f64;
    grad.w_att.iter_mut().chain(grad.w.iter_mut()).for_each(|v| *v /= n);
    grad.b /= n;
    Ok((total / n, grad))
}

fn seeded_params(dim: usize, seed: u64) -> (AttentionParams, HeadParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || rng.random_range(-0.1..=0.1);
    let w_att = (0..dim).map(|_| draw()).collect();
    let w = (0..dim).map(|_| draw()).collect();
    let b = draw();
    (AttentionParams { w_att }, HeadParams { w, b })
}

fn dataset_dim(samples: &[Sample]) -> Result<usize> {
    let dim = samples.first().ok_or(Error::EmptyDataset)?.0.dim();
    for (seq, _) in samples {
        check_dim(dim, seq.dim())?;
    }
    Ok(dim)
}

fn step(params: &mut [f64], grad: &[f64], lr: f64) {
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
}

/// Trains the attention vector and one head on one dataset.
pub fn train_head(samples: &[Sample], init: TrainInit, config: &TrainConfig) -> Result<TrainOutcome> {
    let dim = dataset_dim(samples)?;
    let (mut attention, mut head) = match init {
        TrainInit::Seeded => seeded_params(dim, config.seed),
        TrainInit::From(a, h) => {
            check_dim(dim, a.w_att.len())?;
            check_dim(dim, h.w.len())?;
            (a, h)
        }
    };
    let mut loss_trace = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let (loss, grad) = loss_and_gradient(samples, &attention, &head)?;
        if !loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        loss_trace.push(loss);
        if epoch == config.epochs {
            break;
        }
        step(&mut attention.w_att, &grad.w_att, config.learning_rate);
        step(&mut head.w, &grad.w, config.learning_rate);
        head.b -= config.learning_rate * grad.b;
    }
    Ok(TrainOutcome {
        attention,
        head,
        loss_trace,
    })
}

/// Trains three heads, one per dataset, sharing a single attention vector.
/// The objective is the sum of the three mean losses.
pub fn train_ensemble(datasets: [&[Sample]; 3], config: &TrainConfig) -> Result<(SentimentModel, Vec<f64>)> {
    let dim = dataset_dim(datasets[0])?;
    for ds in &datasets[1..] {
        check_dim(dim, dataset_dim(ds)?)?;
    }
    let (mut attention, first) = seeded_params(dim, config.seed);
    let mut heads = [
        first,
        seeded_params(dim, config.seed.wrapping_add(1)).1,
        seeded_params(dim, config.seed.wrapping_add(2)).1,
    ];
    let mut trace = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let mut total = 0.0;
        let mut att_grad = vec![0.0; dim];
        let mut grads = Vec::with_capacity(3);
        for (ds, head) in datasets.iter().zip(&heads) {
            let (loss, g) = loss_and_gradient(ds, &attention, head)?;
            total += loss;
            for (a, b) in att_grad.iter_mut().zip(&g.w_att) {
                *a += b;
            }
            grads.push(g);
        }
        if !total.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        trace.push(total);
        if epoch == config.epochs {
            break;
        }
        step(&mut attention.w_att, &att_grad, config.learning_rate);
        for (head, g) in heads.iter_mut().zip(&grads) {
            step(&mut head.w, &g.w, config.learning_rate);
            head.b -= config.learning_rate * g.b;
        }
    }
    Ok((SentimentModel::new(attention, heads)?, trace))
}

/// Largest relative disagreement between analytic and central-difference
/// gradients over `w_att`, `w` and `b`. Where both magnitudes are below
/// 1e-8 the absolute difference is used instead.
pub fn gradient_check(attention: &AttentionParams, head: &HeadParams, sample: &Sample, step: f64) -> Result<f64> {
    let dim = attention.w_att.len();
    check_dim(dim, head.w.len())?;
    check_dim(dim, sample.0.dim())?;
    let (_, analytic) = sample_gradient(&sample.0, sample.1, attention, head);
    let loss = |a: &AttentionParams, h: &HeadParams| sample_gradient(&sample.0, sample.1, a, h).0;

    let mut worst: f64 = 0.0;
    let mut compare = |exact: f64, numeric: f64| {
        let denom = exact.abs().max(numeric.abs());
        let err = if denom < 1e-8 {
            (exact - numeric).abs()
        } else {
            (exact - numeric).abs() / denom
        };
        worst = worst.max(err);
    };

    for i in 0..dim {
        let (mut plus, mut minus) = (attention.clone(), attention.clone());
        plus.w_att[i] += step;
        minus.w_att[i] -= step;
        compare(analytic.w_att[i], (loss(&plus, head) - loss(&minus, head)) / (2.0 * step));
    }
    for i in 0..dim {
        let (mut plus, mut minus) = (head.clone(), head.clone());
        plus.w[i] += step;
        minus.w[i] -= step;
        compare(analytic.w[i], (loss(attention, &plus) - loss(attention, &minus)) / (2.0 * step));
    }
    let (mut plus, mut minus) = (head.clone(), head.clone());
    plus.b += step;
    minus.b -= step;
    compare(analytic.b, (loss(attention, &plus) - loss(attention, &minus)) / (2.0 * step));
    Ok(worst)
}
